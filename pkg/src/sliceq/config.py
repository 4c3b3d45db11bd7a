"""Run configuration: shipped defaults, TOML loading, invariant checking.

Validation is collect-all: every broken invariant is reported as one
message naming the offending field, and nothing is silently defaulted.
A configuration that validates cleanly always builds a runnable
:class:`~sliceq.scenario.ScenarioSpec`.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .agent import AgentConfig
from .scenario import PROCESS_CYCLE_MIN, OverloadSchedule, ScenarioSpec


def default_raw() -> dict[str, Any]:
    """The shipped defaults as a plain key-value tree."""
    return {
        "gateway": {
            "queues": 3,
            "capacity": 1000,
            "threshold_fraction": 0.5,
            "link_capacity": 300.0,
            "min_rate_fraction": 0.01,
            "dt": 0.1,
        },
        "agent": {
            "epsilon": 0.08,
            "alpha": 0.20,
            "gamma": 0.80,
            "adjust_fraction": 0.10,
            "adjust_base": "current",
            "max_attempts": 500,
            "priority_weights": [3.0, 2.0, 1.0],
        },
        "scenario": {
            "id": 1,
            "nominal_rate": 90.0,
            "phase_duration": 60.0,
            "multipliers": [1.3, 1.5, 1.8, 2.0],
        },
        "seed": 42,
        "output": {},
    }


_OPTIONAL_KEYS = {
    ("scenario", "overloaded_queues"),
    ("output", "out_dir"),
}


def load_raw(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def merge_raw(
    file_raw: Mapping[str, Any],
    overrides: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """Defaults <- config file <- dotted-key overrides (flags win)."""
    raw = copy.deepcopy(default_raw())
    for section, value in file_raw.items():
        if isinstance(value, Mapping) and isinstance(raw.get(section), dict):
            raw[section].update(value)
        else:
            raw[section] = copy.deepcopy(value) if isinstance(value, (dict, list)) else value
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = raw
        *heads, leaf = dotted.split(".")
        for head in heads:
            node = node.setdefault(head, {})
        node[leaf] = value
    return raw


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate_raw(raw: Mapping[str, Any]) -> list[str]:
    """All violated invariants, one message per offending field."""
    errors: list[str] = []
    defaults = default_raw()

    for section, value in raw.items():
        if section not in defaults:
            errors.append(f"{section}: unknown configuration key")
        elif isinstance(defaults[section], dict):
            if not isinstance(value, Mapping):
                errors.append(f"{section}: must be a table")
                continue
            for key in value:
                if key not in defaults[section] and (section, key) not in _OPTIONAL_KEYS:
                    errors.append(f"{section}.{key}: unknown configuration key")

    gw = raw.get("gateway", {})
    ag = raw.get("agent", {})
    sc = raw.get("scenario", {})
    if not isinstance(gw, Mapping) or not isinstance(ag, Mapping) or not isinstance(sc, Mapping):
        return errors

    queues = gw.get("queues")
    if not _is_int(queues) or queues < 1:
        errors.append(f"gateway.queues: must be an integer >= 1 (got {queues!r})")
        queues = None
    capacity = gw.get("capacity")
    if not _is_int(capacity) or capacity < 1:
        errors.append(f"gateway.capacity: must be an integer >= 1 (got {capacity!r})")
    tf = gw.get("threshold_fraction")
    if not _is_number(tf) or not 0 < tf <= 1:
        errors.append(f"gateway.threshold_fraction: must be in (0, 1] (got {tf!r})")
    link = gw.get("link_capacity")
    if not _is_number(link) or link <= 0:
        errors.append(f"gateway.link_capacity: must be positive (got {link!r})")
        link = None
    mrf = gw.get("min_rate_fraction")
    if not _is_number(mrf) or not 0 < mrf <= (1 / queues if queues else 1):
        errors.append(
            f"gateway.min_rate_fraction: must be in (0, 1/queues] so every queue can hold its floor (got {mrf!r})"
        )
    dt = gw.get("dt")
    if not _is_number(dt) or dt <= 0:
        errors.append(f"gateway.dt: must be positive (got {dt!r})")
        dt = None

    eps = ag.get("epsilon")
    if not _is_number(eps) or not 0 < eps <= 1:
        errors.append(f"agent.epsilon: must be in (0, 1] (got {eps!r})")
    alpha = ag.get("alpha")
    if not _is_number(alpha) or not 0 < alpha <= 1:
        errors.append(f"agent.alpha: must be in (0, 1] (got {alpha!r})")
    gamma = ag.get("gamma")
    if not _is_number(gamma) or not 0 <= gamma < 1:
        errors.append(f"agent.gamma: must be in [0, 1) (got {gamma!r})")
    frac = ag.get("adjust_fraction")
    if not _is_number(frac) or not 0 < frac < 1:
        errors.append(f"agent.adjust_fraction: must be in (0, 1) (got {frac!r})")
    base = ag.get("adjust_base")
    if base not in ("current", "capacity"):
        errors.append(f"agent.adjust_base: must be 'current' or 'capacity' (got {base!r})")
    attempts = ag.get("max_attempts")
    if not _is_int(attempts) or attempts < 1:
        errors.append(f"agent.max_attempts: must be an integer >= 1 (got {attempts!r})")
    weights = ag.get("priority_weights")
    if (
        not isinstance(weights, (list, tuple))
        or not weights
        or not all(_is_number(w) and w > 0 for w in weights)
    ):
        errors.append(f"agent.priority_weights: must be a list of positive numbers (got {weights!r})")
    elif queues is not None and len(weights) != queues:
        errors.append(
            f"agent.priority_weights: length {len(weights)} does not match gateway.queues = {queues}"
        )

    sid = sc.get("id")
    if sid not in (1, 2, 3):
        errors.append(f"scenario.id: must be 1, 2 or 3 (got {sid!r})")
        sid = None
    overloaded = sc.get("overloaded_queues")
    if overloaded is not None:
        if not isinstance(overloaded, (list, tuple)) or not all(_is_int(q) for q in overloaded):
            errors.append(f"scenario.overloaded_queues: must be a list of queue indices (got {overloaded!r})")
        else:
            if len(set(overloaded)) != len(overloaded):
                errors.append("scenario.overloaded_queues: indices must be distinct")
            if queues is not None and not set(overloaded) <= set(range(queues)):
                errors.append(f"scenario.overloaded_queues: indices must be in [0, {queues})")
            if sid is not None and len(overloaded) != sid:
                errors.append(
                    f"scenario.overloaded_queues: count {len(overloaded)} must equal scenario.id = {sid}"
                )
    nominal = sc.get("nominal_rate")
    if not _is_number(nominal) or nominal <= 0:
        errors.append(f"scenario.nominal_rate: must be positive (got {nominal!r})")
        nominal = None
    phase = sc.get("phase_duration")
    if not _is_number(phase) or phase <= 0:
        errors.append(f"scenario.phase_duration: must be positive (got {phase!r})")
        phase = None
    elif dt is not None:
        steps = phase / dt
        if abs(steps - round(steps)) > 1e-9:
            errors.append(f"scenario.phase_duration: must be a whole multiple of gateway.dt = {dt}")
    mults = sc.get("multipliers")
    if (
        not isinstance(mults, (list, tuple))
        or not mults
        or not all(_is_number(m) for m in mults)
        or any(m2 <= m1 for m1, m2 in zip((1.0, *mults), mults))
    ):
        errors.append(
            f"scenario.multipliers: schedule multipliers must exceed 1 and strictly increase (got {mults!r})"
        )
        mults = None

    seed = raw.get("seed")
    if not _is_int(seed) or seed < 0:
        errors.append(f"seed: must be a non-negative integer (got {seed!r})")

    out = raw.get("output", {})
    if isinstance(out, Mapping):
        od = out.get("out_dir")
        if od is not None and not isinstance(od, str):
            errors.append(f"output.out_dir: must be a string path (got {od!r})")

    if nominal is not None and phase is not None and mults is not None:
        expected = nominal * phase * len(mults)
        if expected < PROCESS_CYCLE_MIN:
            errors.append(
                f"scenario: process cycle too short (expected {expected:.0f} packets per queue, "
                f"need at least {PROCESS_CYCLE_MIN}); raise nominal_rate or phase_duration"
            )
    return errors


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration, ready to turn into a scenario spec."""

    spec: ScenarioSpec
    out_dir: str | None


def build_config(raw: Mapping[str, Any]) -> RunConfig:
    """Construct the typed configuration; call :func:`validate_raw` first."""
    gw = raw["gateway"]
    ag = raw["agent"]
    sc = raw["scenario"]
    queues = gw["queues"]
    threshold = max(1, round(gw["capacity"] * gw["threshold_fraction"]))
    overloaded = sc.get("overloaded_queues")
    if overloaded is None:
        overloaded = range(sc["id"])
    agent = AgentConfig(
        epsilon=float(ag["epsilon"]),
        alpha=float(ag["alpha"]),
        gamma=float(ag["gamma"]),
        adjust_fraction=float(ag["adjust_fraction"]),
        max_attempts=ag["max_attempts"],
        priority_weights=tuple(float(w) for w in ag["priority_weights"]),
        adjust_base=ag["adjust_base"],
    )
    spec = ScenarioSpec(
        id=sc["id"],
        queue_count=queues,
        capacity=gw["capacity"],
        threshold=threshold,
        link_capacity=float(gw["link_capacity"]),
        min_rate=float(gw["min_rate_fraction"]) * float(gw["link_capacity"]),
        dt=float(gw["dt"]),
        nominal_rate=float(sc["nominal_rate"]),
        overloaded_queues=frozenset(overloaded),
        schedule=OverloadSchedule(tuple((float(m), float(sc["phase_duration"])) for m in sc["multipliers"])),
        agent=agent,
        seed=raw["seed"],
    )
    out = raw.get("output", {})
    return RunConfig(spec=spec, out_dir=out.get("out_dir") if isinstance(out, Mapping) else None)
