"""Run time series, summary statistics, and CSV/JSON export.

The CSV stream is the plotting interchange: one row per simulation step
with columns ``t,q0_occ,q0_rate,q0_drops,...,agent_active,attempts`` and
numbers rendered at full (round-trip) precision.  The JSON document keeps
the complete rows (including per-step arrivals and departures, which the
summary statistics need) under stable key ordering so identical runs
export byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .model import SliceParams


@dataclass(frozen=True)
class TimeSeriesRow:
    """One simulation step: post-step occupancies plus per-step flows."""

    t: float
    occupancy: tuple[int, ...]
    flush_rate: tuple[float, ...]
    drops: tuple[int, ...]
    arrivals: tuple[int, ...]
    departures: tuple[int, ...]
    agent_active: bool
    attempts: int

    @property
    def queue_count(self) -> int:
        return len(self.occupancy)


@dataclass(frozen=True)
class QueueSummary:
    at_fraction: float
    total_drops: int
    params: SliceParams


@dataclass(frozen=True)
class RunSummary:
    """Per-queue and agent-level statistics over a whole run."""

    queues: tuple[QueueSummary, ...]
    invocations: int
    mean_attempts: float
    convergence_rate: float


def summarize(series: Sequence[TimeSeriesRow], thresholds: Sequence[int]) -> RunSummary:
    """Recompute all summary statistics from a time series.

    ``thresholds`` supplies the per-queue BT/AT boundary (occupancy at the
    threshold counts as BT).  Episodes are recovered from the agent_active
    flag and the attempts counter; an episode converged if its last row has
    every queue at or below threshold.
    """
    if not series:
        raise ValueError("series is empty")
    n = series[0].queue_count
    if len(thresholds) != n:
        raise ValueError("thresholds length must match queue count")

    steps = len(series)
    dt = series[0].t if steps == 1 else (series[-1].t - series[0].t) / (steps - 1)
    duration = steps * dt

    queues: list[QueueSummary] = []
    for i in range(n):
        at_steps = sum(1 for row in series if row.occupancy[i] > thresholds[i])
        total_drops = sum(row.drops[i] for row in series)
        arr = sum(row.arrivals[i] for row in series)
        dep = sum(row.departures[i] for row in series)
        bandwidth = dep / duration
        loss = total_drops / arr if arr > 0 else 0.0
        mean_occ = math.fsum(row.occupancy[i] for row in series) / steps
        delay = mean_occ / bandwidth if dep > 0 else None
        queues.append(
            QueueSummary(
                at_fraction=at_steps / steps,
                total_drops=total_drops,
                params=SliceParams(bandwidth=bandwidth, loss=loss, delay=delay),
            )
        )

    episodes = _episode_spans(series)
    converged = 0
    attempts_total = 0
    for _, last in episodes:
        row = series[last]
        attempts_total += row.attempts
        if all(row.occupancy[i] <= thresholds[i] for i in range(n)):
            converged += 1
    count = len(episodes)
    return RunSummary(
        queues=tuple(queues),
        invocations=count,
        mean_attempts=attempts_total / count if count else 0.0,
        convergence_rate=converged / count if count else 1.0,
    )


def _episode_spans(series: Sequence[TimeSeriesRow]) -> list[tuple[int, int]]:
    """(first, last) row indices of each control episode.

    A new episode starts on an agent-active row whose attempts counter did
    not advance past the previous row's (episodes count attempts 1, 2, ...,
    so back-to-back episodes show a reset)."""
    spans: list[tuple[int, int]] = []
    start: int | None = None
    prev_attempts = 0
    for i, row in enumerate(series):
        if row.agent_active:
            if start is None or row.attempts <= prev_attempts:
                if start is not None:
                    spans.append((start, i - 1))
                start = i
            prev_attempts = row.attempts
        elif start is not None:
            spans.append((start, i - 1))
            start = None
    if start is not None:
        spans.append((start, len(series) - 1))
    return spans


# --- export ------------------------------------------------------------


def _num(x: float | int) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def csv_header(queue_count: int) -> str:
    cols = ["t"]
    for i in range(queue_count):
        cols += [f"q{i}_occ", f"q{i}_rate", f"q{i}_drops"]
    cols += ["agent_active", "attempts"]
    return ",".join(cols)


def export_csv(series: Sequence[TimeSeriesRow]) -> bytes:
    """Serialize the step series; header only when the series is empty."""
    queue_count = series[0].queue_count if series else 0
    lines = [csv_header(queue_count)]
    for row in series:
        fields = [_num(row.t)]
        for i in range(queue_count):
            fields += [str(row.occupancy[i]), _num(row.flush_rate[i]), str(row.drops[i])]
        fields += ["1" if row.agent_active else "0", str(row.attempts)]
        lines.append(",".join(fields))
    return ("\n".join(lines) + "\n").encode()


def row_to_dict(row: TimeSeriesRow) -> dict[str, Any]:
    return {
        "t": row.t,
        "occupancy": list(row.occupancy),
        "flush_rate": list(row.flush_rate),
        "drops": list(row.drops),
        "arrivals": list(row.arrivals),
        "departures": list(row.departures),
        "agent_active": row.agent_active,
        "attempts": row.attempts,
    }


def row_from_dict(d: Mapping[str, Any]) -> TimeSeriesRow:
    return TimeSeriesRow(
        t=float(d["t"]),
        occupancy=tuple(int(x) for x in d["occupancy"]),
        flush_rate=tuple(float(x) for x in d["flush_rate"]),
        drops=tuple(int(x) for x in d["drops"]),
        arrivals=tuple(int(x) for x in d["arrivals"]),
        departures=tuple(int(x) for x in d["departures"]),
        agent_active=bool(d["agent_active"]),
        attempts=int(d["attempts"]),
    )


def summary_to_dict(summary: RunSummary) -> dict[str, Any]:
    return {
        "queues": [
            {
                "at_fraction": q.at_fraction,
                "total_drops": q.total_drops,
                "bandwidth": q.params.bandwidth,
                "loss": q.params.loss,
                "delay": q.params.delay,
            }
            for q in summary.queues
        ],
        "invocations": summary.invocations,
        "mean_attempts": summary.mean_attempts,
        "convergence_rate": summary.convergence_rate,
    }


def export_json(
    series: Sequence[TimeSeriesRow],
    summary: RunSummary,
    config: Mapping[str, Any],
) -> bytes:
    doc = {
        "config": dict(config),
        "summary": summary_to_dict(summary),
        "series": [row_to_dict(row) for row in series],
    }
    return (json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n").encode()


def load_json_document(data: bytes) -> tuple[dict[str, Any], dict[str, Any], list[TimeSeriesRow]]:
    doc = json.loads(data.decode())
    return doc["config"], doc["summary"], [row_from_dict(d) for d in doc["series"]]
