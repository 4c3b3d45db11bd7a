"""Overload test scenarios: phased traffic schedules driving gateway and agent.

A scenario overloads a chosen subset of queues through an increasing
sequence of rate multipliers while the remaining queues stay at the
nominal rate.  The run loop steps the gateway on a fixed grid; whenever a
post-step state has any queue above threshold, a control episode takes
over and its steps are recorded in the same time series (episodes consume
schedule time, so the series always has exactly duration/dt rows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .agent import AgentConfig, EpisodeOutcome, SarsaAgent, all_below, control_episode, observe_state
from .gateway import StepReport, build_gateway, step
from .metrics import RunSummary, TimeSeriesRow, summarize

# Every run must offer at least this many expected packets per queue.
PROCESS_CYCLE_MIN = 10_000


@dataclass(frozen=True)
class OverloadSchedule:
    """Ordered (multiplier, duration-seconds) phases with rising multipliers."""

    phases: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        prev = 1.0
        for mult, dur in self.phases:
            if mult <= prev:
                raise ValueError("schedule multipliers must exceed 1 and strictly increase")
            if dur <= 0:
                raise ValueError("schedule phase durations must be positive")
            prev = mult

    @property
    def total_duration(self) -> float:
        return math.fsum(d for _, d in self.phases)

    def multiplier_at(self, t: float) -> float:
        """Right-continuous: a phase's multiplier applies from its start time."""
        start = 0.0
        for mult, dur in self.phases:
            if start <= t < start + dur:
                return mult
            start += dur
        return 1.0


def default_schedule(phase_duration: float) -> OverloadSchedule:
    return OverloadSchedule(tuple((m, phase_duration) for m in (1.3, 1.5, 1.8, 2.0)))


@dataclass(frozen=True)
class ScenarioSpec:
    """Fully resolved run description; scenario id = number of overloaded queues."""

    id: int
    queue_count: int
    capacity: int
    threshold: int
    link_capacity: float
    min_rate: float
    dt: float
    nominal_rate: float
    overloaded_queues: frozenset[int]
    schedule: OverloadSchedule
    agent: AgentConfig
    seed: int

    def __post_init__(self) -> None:
        if self.id not in (1, 2, 3):
            raise ValueError("scenario id must be 1, 2 or 3")
        if len(self.overloaded_queues) != self.id:
            raise ValueError("scenario id must equal the number of overloaded queues")
        if not self.overloaded_queues <= set(range(self.queue_count)):
            raise ValueError("overloaded queue indices out of range")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.nominal_rate <= 0:
            raise ValueError("nominal_rate must be positive")
        for _, dur in self.schedule.phases:
            steps = dur / self.dt
            if abs(steps - round(steps)) > 1e-9:
                raise ValueError("phase durations must be whole multiples of dt")

    @property
    def total_duration(self) -> float:
        return self.schedule.total_duration

    @property
    def total_steps(self) -> int:
        return round(self.total_duration / self.dt)


def arrival_rate_at(spec: ScenarioSpec, queue: int, t: float) -> float:
    """Offered rate for one queue at time ``t``; overloaded queues follow the
    phase multiplier in force (nominal before the first and after the last)."""
    if not 0 <= queue < spec.queue_count:
        raise ValueError(f"queue {queue} out of range")
    if not 0 <= t <= spec.total_duration:
        raise ValueError(f"t = {t} outside the run duration {spec.total_duration}")
    if queue not in spec.overloaded_queues:
        return spec.nominal_rate
    return spec.nominal_rate * spec.schedule.multiplier_at(t)


@dataclass
class RunResult:
    """Seeded, reproducible outcome of one scenario run."""

    series: list[TimeSeriesRow]
    summary: RunSummary
    config: dict[str, Any]
    seed: int
    episodes: tuple[EpisodeOutcome, ...]


def spec_echo(spec: ScenarioSpec) -> dict[str, Any]:
    """JSON-safe configuration echo embedded in every exported document."""
    return {
        "scenario": {
            "id": spec.id,
            "overloaded_queues": sorted(spec.overloaded_queues),
            "nominal_rate": spec.nominal_rate,
            "phases": [[m, d] for m, d in spec.schedule.phases],
        },
        "gateway": {
            "queues": spec.queue_count,
            "capacity": spec.capacity,
            "threshold": spec.threshold,
            "link_capacity": spec.link_capacity,
            "min_rate": spec.min_rate,
            "dt": spec.dt,
        },
        "agent": {
            "epsilon": spec.agent.epsilon,
            "alpha": spec.agent.alpha,
            "gamma": spec.agent.gamma,
            "adjust_fraction": spec.agent.adjust_fraction,
            "adjust_base": spec.agent.adjust_base,
            "max_attempts": spec.agent.max_attempts,
            "priority_weights": list(spec.agent.priority_weights),
        },
        "seed": spec.seed,
    }


def run_scenario(spec: ScenarioSpec) -> RunResult:
    """Execute the full schedule; deterministic for a fixed seed.

    Rejects configurations whose expected per-queue packet production over
    the run falls short of the minimum process cycle.
    """
    expected = spec.nominal_rate * spec.total_duration
    if expected < PROCESS_CYCLE_MIN:
        raise ValueError(
            f"process cycle too short: expected {expected:.0f} packets per queue, "
            f"need at least {PROCESS_CYCLE_MIN}"
        )

    gateway = build_gateway(
        queue_count=spec.queue_count,
        capacity=spec.capacity,
        threshold=spec.threshold,
        link_capacity=spec.link_capacity,
        min_rate=spec.min_rate,
    )
    agent = SarsaAgent(config=spec.agent, queue_count=spec.queue_count)
    rng = np.random.default_rng(spec.seed)

    total = spec.total_steps
    series: list[TimeSeriesRow] = []
    episodes: list[EpisodeOutcome] = []
    i = 0
    while i < total:
        # Sample the offered rates at the step midpoint: boundary-safe and
        # constant across the step since phases align to the dt grid.
        rates = [arrival_rate_at(spec, q, (i + 0.5) * spec.dt) for q in range(spec.queue_count)]
        if not all_below(observe_state(gateway)):
            outcome = control_episode(agent, gateway, rates, spec.dt, rng, attempt_budget=total - i)
            episodes.append(outcome)
            for k, report in enumerate(outcome.reports):
                series.append(_row(report, active=True, attempts=k + 1))
            i += outcome.attempts
        else:
            report = step(gateway, spec.dt, rates, rng)
            series.append(_row(report, active=False, attempts=0))
            i += 1

    summary = summarize(series, [spec.threshold] * spec.queue_count)
    return RunResult(
        series=series,
        summary=summary,
        config=spec_echo(spec),
        seed=spec.seed,
        episodes=tuple(episodes),
    )


def _row(report: StepReport, active: bool, attempts: int) -> TimeSeriesRow:
    return TimeSeriesRow(
        t=report.t,
        occupancy=report.occupancy,
        flush_rate=report.flush_rate,
        drops=report.drops,
        arrivals=report.arrivals,
        departures=report.departures,
        agent_active=active,
        attempts=attempts,
    )
