from __future__ import annotations

import json
import statistics
from pathlib import Path

import pytest

from sliceq.cli import main
from sliceq.config import build_config, default_raw, load_raw, merge_raw, validate_raw

SHIPPED_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "scenario1.toml"

# A small but still valid run (4 x 30 s at 90 pkt/s = 10800 expected packets),
# used to keep CLI tests quick.
FAST_OVERRIDES = {"scenario.phase_duration": 30.0}


class TestValidateRaw:
    def test_defaults_are_valid(self):
        assert validate_raw(default_raw()) == []

    def test_shipped_config_is_valid(self):
        raw = merge_raw(load_raw(str(SHIPPED_CONFIG)))
        assert validate_raw(raw) == []

    def test_epsilon_out_of_range_names_field(self):
        raw = merge_raw({}, {"agent.epsilon": 1.5})
        errors = validate_raw(raw)
        assert len(errors) == 1
        assert "epsilon" in errors[0]

    def test_negative_link_capacity(self):
        raw = merge_raw({}, {"gateway.link_capacity": -1.0})
        errors = validate_raw(raw)
        assert any("link_capacity" in e for e in errors)

    def test_multipliers_out_of_order_names_schedule(self):
        raw = merge_raw({"scenario": {"multipliers": [1.5, 1.3]}})
        errors = validate_raw(raw)
        assert len(errors) == 1
        assert "schedule" in errors[0]
        assert "multipliers" in errors[0]

    def test_unknown_key_rejected(self):
        raw = merge_raw({"gateway": {"qeues": 3}})
        errors = validate_raw(raw)
        assert any("qeues" in e and "unknown" in e for e in errors)

    def test_weights_must_match_queue_count(self):
        raw = merge_raw({"agent": {"priority_weights": [1.0, 2.0]}})
        errors = validate_raw(raw)
        assert any("priority_weights" in e for e in errors)

    def test_undersized_process_cycle(self):
        raw = merge_raw({"scenario": {"phase_duration": 20.0}})
        errors = validate_raw(raw)
        assert any("process cycle too short" in e for e in errors)

    def test_collects_multiple_errors(self):
        raw = merge_raw({}, {"agent.epsilon": 2.0, "agent.alpha": 0.0, "seed": -1})
        errors = validate_raw(raw)
        assert len(errors) == 3

    def test_wrong_types_are_named(self):
        raw = merge_raw({"gateway": {"dt": "fast"}, "seed": "tomorrow"})
        errors = validate_raw(raw)
        assert any("gateway.dt" in e for e in errors)
        assert any("seed" in e for e in errors)


class TestBuildConfig:
    def test_defaults_resolve_to_spec(self):
        config = build_config(merge_raw({}))
        spec = config.spec
        assert spec.queue_count == 3
        assert spec.threshold == 500
        assert spec.min_rate == pytest.approx(3.0)
        assert spec.overloaded_queues == frozenset({0})
        assert spec.total_steps == 2400

    def test_scenario_override_sets_overloaded_queues(self):
        config = build_config(merge_raw({}, {"scenario.id": 3}))
        assert config.spec.overloaded_queues == frozenset({0, 1, 2})

    def test_explicit_overloaded_queues(self):
        config = build_config(merge_raw({"scenario": {"id": 2, "overloaded_queues": [1, 2]}}))
        assert config.spec.overloaded_queues == frozenset({1, 2})


class TestCliRun:
    def test_run_writes_two_files_and_exits_zero(self, tmp_path, capsys):
        code = main(
            ["run", "--config", str(SHIPPED_CONFIG), "--seed", "7",
             "--phase-duration", "30", "--out-dir", str(tmp_path)]
        )
        assert code == 0
        assert (tmp_path / "scenario1_seed7.csv").exists()
        assert (tmp_path / "scenario1_seed7.json").exists()
        out = capsys.readouterr().out
        assert "convergence rate" in out

    def test_run_is_deterministic_at_file_level(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["run", "--seed", "5", "--phase-duration", "30", "--out-dir", str(out)]) == 0
        assert (a / "scenario1_seed5.csv").read_bytes() == (b / "scenario1_seed5.csv").read_bytes()
        assert (a / "scenario1_seed5.json").read_bytes() == (b / "scenario1_seed5.json").read_bytes()

    def test_run_scenario_three_overloads_all(self, tmp_path):
        code = main(["run", "--scenario", "3", "--seed", "1", "--phase-duration", "30",
                     "--out-dir", str(tmp_path)])
        assert code == 0
        doc = json.loads((tmp_path / "scenario3_seed1.json").read_bytes())
        assert doc["config"]["scenario"]["overloaded_queues"] == [0, 1, 2]

    def test_invalid_epsilon_exits_two_naming_field(self, tmp_path, capsys):
        code = main(["run", "--epsilon", "1.5", "--out-dir", str(tmp_path)])
        assert code == 2
        assert "epsilon" in capsys.readouterr().err

    def test_undersized_config_exits_two(self, tmp_path, capsys):
        code = main(["run", "--phase-duration", "20", "--out-dir", str(tmp_path)])
        assert code == 2
        assert "process cycle too short" in capsys.readouterr().err

    def test_config_file_never_mutated(self, tmp_path):
        before = SHIPPED_CONFIG.read_bytes()
        main(["run", "--config", str(SHIPPED_CONFIG), "--seed", "3",
              "--phase-duration", "30", "--out-dir", str(tmp_path)])
        assert SHIPPED_CONFIG.read_bytes() == before

    def test_env_var_out_dir_fallback(self, tmp_path, monkeypatch):
        target = tmp_path / "from-env"
        monkeypatch.setenv("SLICEQ_OUT_DIR", str(target))
        monkeypatch.chdir(tmp_path)
        assert main(["run", "--seed", "2", "--phase-duration", "30"]) == 0
        assert (target / "scenario1_seed2.csv").exists()

    def test_missing_config_file_exits_two(self, tmp_path, capsys):
        code = main(["run", "--config", str(tmp_path / "nope.toml")])
        assert code == 2
        assert "cannot read config" in capsys.readouterr().err


class TestCliValidate:
    def test_shipped_config_valid(self, capsys):
        assert main(["validate", "--config", str(SHIPPED_CONFIG)]) == 0
        assert "configuration valid" in capsys.readouterr().out

    def test_defaults_valid(self):
        assert main(["validate"]) == 0

    def test_negative_link_capacity_invalid(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[gateway]\nlink_capacity = -5.0\n")
        assert main(["validate", "--config", str(bad)]) == 2
        assert "link_capacity" in capsys.readouterr().err

    def test_multiplier_order_invalid(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[scenario]\nmultipliers = [1.5, 1.3, 1.8, 2.0]\n")
        assert main(["validate", "--config", str(bad)]) == 2
        assert "schedule" in capsys.readouterr().err


class TestCliSweep:
    def test_identical_seeds_identical_outputs(self, tmp_path):
        code = main(["sweep", "--seeds", "9", "9", "--phase-duration", "30",
                     "--out-dir", str(tmp_path)])
        assert code == 0
        # Same seed twice writes the same file twice; content is one run's worth.
        assert (tmp_path / "scenario1_seed9.csv").exists()
        agg = json.loads((tmp_path / "sweep_aggregate.json").read_bytes())
        assert agg["global"]["convergence_rate"]["n"] == 2
        assert agg["global"]["convergence_rate"]["stddev"] == 0.0

    def test_aggregate_over_ten_seeds(self, tmp_path):
        seeds = [str(s) for s in range(10)]
        code = main(["sweep", "--seeds", *seeds, "--phase-duration", "30",
                     "--out-dir", str(tmp_path)])
        assert code == 0
        agg = json.loads((tmp_path / "sweep_aggregate.json").read_bytes())
        assert agg["seeds"] == list(range(10))
        assert agg["global"]["invocations"]["n"] == 10
        assert agg["per_queue"][0]["at_fraction"]["n"] == 10

    def test_aggregate_mean_matches_arithmetic_mean(self, tmp_path):
        seeds = [str(s) for s in (3, 4, 5)]
        main(["sweep", "--seeds", *seeds, "--phase-duration", "30", "--out-dir", str(tmp_path)])
        values = []
        for s in (3, 4, 5):
            doc = json.loads((tmp_path / f"scenario1_seed{s}.json").read_bytes())
            values.append(doc["summary"]["queues"][0]["at_fraction"])
        agg = json.loads((tmp_path / "sweep_aggregate.json").read_bytes())
        assert agg["per_queue"][0]["at_fraction"]["mean"] == pytest.approx(
            statistics.fmean(values), rel=1e-12
        )
