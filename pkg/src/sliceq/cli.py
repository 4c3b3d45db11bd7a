"""Command-line entry point: run a scenario, sweep seeds, or validate a config.

Exit codes: 0 success, 1 run failure, 2 invalid configuration.  Output paths
resolve as: --out-dir flag, then the config file, then $SLICEQ_OUT_DIR,
then ./out.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import statistics
import sys
from pathlib import Path
from typing import Any, Sequence

from .config import RunConfig, build_config, load_raw, merge_raw, validate_raw
from .metrics import export_csv, export_json
from .scenario import RunResult, run_scenario

EXIT_OK = 0
EXIT_RUN_FAILURE = 1
EXIT_CONFIG_INVALID = 2

OUT_DIR_ENV = "SLICEQ_OUT_DIR"


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    overrides = {
        "scenario.id": getattr(args, "scenario", None),
        "seed": getattr(args, "seed", None),
        "output.out_dir": getattr(args, "out_dir", None),
        "scenario.phase_duration": getattr(args, "phase_duration", None),
        "agent.epsilon": getattr(args, "epsilon", None),
        "agent.alpha": getattr(args, "alpha", None),
        "agent.gamma": getattr(args, "gamma", None),
    }
    try:
        raw = merge_raw(load_raw(args.config), overrides)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG_INVALID
    errors = validate_raw(raw)
    if errors:
        for message in errors:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CONFIG_INVALID
    config = build_config(raw)

    if args.command == "validate":
        print("configuration valid")
        return EXIT_OK
    if args.command == "run":
        return _cmd_run(config)
    return _cmd_sweep(config, args.seeds)


def _parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="TOML configuration file")
    shared.add_argument("--scenario", type=int, choices=(1, 2, 3), help="scenario id override")
    shared.add_argument("--out-dir", metavar="DIR", help="output directory")
    shared.add_argument("--phase-duration", type=float, metavar="SECONDS")
    shared.add_argument("--epsilon", type=float, help="exploration probability override")
    shared.add_argument("--alpha", type=float, help="learning rate override")
    shared.add_argument("--gamma", type=float, help="discount factor override")

    parser = argparse.ArgumentParser(prog="sliceq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[shared], help="run one scenario and write CSV + JSON")
    run.add_argument("--seed", type=int, help="random seed override")
    sweep = sub.add_parser("sweep", parents=[shared], help="run one scenario across several seeds")
    sweep.add_argument("--seeds", type=int, nargs="+", required=True, metavar="SEED")
    validate = sub.add_parser("validate", parents=[shared], help="check a configuration and exit")
    validate.add_argument("--seed", type=int, help="random seed override")
    return parser


def _resolve_out_dir(config: RunConfig) -> Path:
    path = config.out_dir or os.environ.get(OUT_DIR_ENV) or "out"
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_outputs(out_dir: Path, result: RunResult) -> tuple[Path, Path]:
    base = f"scenario{result.config['scenario']['id']}_seed{result.seed}"
    csv_path = out_dir / f"{base}.csv"
    json_path = out_dir / f"{base}.json"
    csv_path.write_bytes(export_csv(result.series))
    json_path.write_bytes(export_json(result.series, result.summary, result.config))
    return csv_path, json_path


def _print_summary(result: RunResult) -> None:
    s = result.summary
    sc = result.config["scenario"]
    print(
        f"scenario {sc['id']} seed {result.seed}: {len(result.series)} steps, "
        f"{s.invocations} agent invocations, mean attempts {s.mean_attempts:.1f}, "
        f"convergence rate {s.convergence_rate:.2f}"
    )
    for i, q in enumerate(s.queues):
        delay = "undefined" if q.params.delay is None else f"{q.params.delay:.3f} s"
        print(
            f"  queue {i}: AT fraction {q.at_fraction:.3f}  drops {q.total_drops}  "
            f"bandwidth {q.params.bandwidth:.1f} pkt/s  loss {q.params.loss:.4f}  delay {delay}"
        )


def _cmd_run(config: RunConfig) -> int:
    try:
        result = run_scenario(config.spec)
    except ValueError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    out_dir = _resolve_out_dir(config)
    csv_path, json_path = _write_outputs(out_dir, result)
    _print_summary(result)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    return EXIT_OK


def _cmd_sweep(config: RunConfig, seeds: Sequence[int]) -> int:
    out_dir = _resolve_out_dir(config)
    results: list[RunResult] = []
    failed: list[int] = []
    for seed in seeds:
        spec = dataclasses.replace(config.spec, seed=seed)
        try:
            result = run_scenario(spec)
        except ValueError as exc:
            print(f"seed {seed} failed: {exc}", file=sys.stderr)
            failed.append(seed)
            continue
        _write_outputs(out_dir, result)
        results.append(result)
        print(f"seed {seed}: convergence rate {result.summary.convergence_rate:.2f}")
    if results:
        aggregate = _aggregate(results, list(seeds), failed)
        path = out_dir / "sweep_aggregate.json"
        path.write_bytes((json.dumps(aggregate, sort_keys=True, indent=2) + "\n").encode())
        print(f"wrote {path}")
    return EXIT_RUN_FAILURE if failed else EXIT_OK


def _stat(values: Sequence[float]) -> dict[str, Any]:
    return {
        "mean": statistics.fmean(values),
        "stddev": statistics.pstdev(values),
        "n": len(values),
    }


def _aggregate(results: Sequence[RunResult], seeds: list[int], failed: list[int]) -> dict[str, Any]:
    queue_count = len(results[0].summary.queues)
    per_queue = []
    for i in range(queue_count):
        entry: dict[str, Any] = {}
        for name, pick in (
            ("at_fraction", lambda r: r.summary.queues[i].at_fraction),
            ("total_drops", lambda r: float(r.summary.queues[i].total_drops)),
            ("bandwidth", lambda r: r.summary.queues[i].params.bandwidth),
            ("loss", lambda r: r.summary.queues[i].params.loss),
        ):
            entry[name] = _stat([pick(r) for r in results])
        delays = [r.summary.queues[i].params.delay for r in results]
        defined = [d for d in delays if d is not None]
        entry["delay"] = _stat(defined) if defined else {"mean": None, "stddev": None, "n": 0}
        per_queue.append(entry)
    return {
        "seeds": seeds,
        "failed_seeds": failed,
        "per_queue": per_queue,
        "global": {
            "invocations": _stat([float(r.summary.invocations) for r in results]),
            "mean_attempts": _stat([r.summary.mean_attempts for r in results]),
            "convergence_rate": _stat([r.summary.convergence_rate for r in results]),
        },
    }


if __name__ == "__main__":
    sys.exit(main())
