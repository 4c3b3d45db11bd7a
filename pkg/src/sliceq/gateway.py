"""Discrete-time gateway simulation: N per-class queues sharing one link.

Each step of width ``dt`` draws Poisson arrivals per queue, serves packets
at the queue's allocated flush rate, then tail-drops whatever exceeds the
queue capacity.  Service is rate-accurate over time: the real-valued
``flush_rate * dt`` budget is carried between steps in a per-queue credit
accumulator so integer packet departures are unbiased.

Within one step the order is: serve (up to the accumulated credit, drawing
on backlog plus this step's arrivals), then admit, then drop overflow.
Equivalently, per queue::

    departures = min(occupancy + arrivals, whole service credit)
    drops      = max(0, occupancy + arrivals - departures - capacity)
    occupancy += arrivals - departures - drops

which makes the occupancy balance equation hold exactly at every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .model import SliceParams

# Relative tolerance on the flush-rate budget (sum of rates == link capacity).
BUDGET_RTOL = 1e-9


class QueueLabel(str, Enum):
    BT = "BT"  # at or below threshold
    AT = "AT"  # above threshold


@dataclass
class GatewayQueue:
    """One performance-class output queue.

    ``threshold`` is the occupancy trigger level; ``priority`` ranks queues
    with 1 as the highest.  ``drops`` accumulates over the queue's lifetime.
    """

    index: int
    capacity: int
    threshold: int
    flush_rate: float
    priority: int = 1
    occupancy: int = 0
    drops: int = 0
    service_credit: float = field(default=0.0, repr=False)

    def __post_init__(self) -> None:
        if self.capacity <= 0:
            raise ValueError(f"queue {self.index}: capacity must be positive")
        if not 0 < self.threshold <= self.capacity:
            raise ValueError(f"queue {self.index}: threshold must be in (0, capacity]")
        if not 0 <= self.occupancy <= self.capacity:
            raise ValueError(f"queue {self.index}: occupancy out of [0, capacity]")


@dataclass
class Gateway:
    """Mutable simulation state; one instance per run, single-threaded."""

    queues: list[GatewayQueue]
    link_capacity: float
    min_rate: float
    clock: float = 0.0

    @property
    def queue_count(self) -> int:
        return len(self.queues)

    def flush_rates(self) -> list[float]:
        return [q.flush_rate for q in self.queues]

    def occupancies(self) -> list[int]:
        return [q.occupancy for q in self.queues]


@dataclass(frozen=True)
class StepReport:
    """Per-queue accounting for one simulation step (post-step snapshot).

    ``flush_rate`` records the allocation in force during the step, which
    can change between steps while the agent is active.
    """

    t: float
    dt: float
    arrivals: tuple[int, ...]
    departures: tuple[int, ...]
    drops: tuple[int, ...]
    occupancy: tuple[int, ...]
    flush_rate: tuple[float, ...]


def build_gateway(
    queue_count: int,
    capacity: int,
    threshold: int,
    link_capacity: float,
    min_rate: float,
) -> Gateway:
    """Gateway with uniform sizing and an equal (fair-share) rate split.

    Queue priorities are assigned by index: queue 0 gets priority 1 (highest).
    """
    if queue_count < 1:
        raise ValueError("queue_count must be >= 1")
    if link_capacity <= 0:
        raise ValueError("link_capacity must be positive")
    if not 0 < min_rate <= link_capacity / queue_count:
        raise ValueError("min_rate must be positive and allow a feasible split")
    share = link_capacity / queue_count
    queues = [
        GatewayQueue(index=i, capacity=capacity, threshold=threshold, flush_rate=share, priority=i + 1)
        for i in range(queue_count)
    ]
    gw = Gateway(queues=queues, link_capacity=float(link_capacity), min_rate=float(min_rate))
    # Equal split can leave float residue; pin the sum exactly.
    queues[0].flush_rate += link_capacity - math.fsum(q.flush_rate for q in queues)
    return gw


def queue_label(queue: GatewayQueue) -> QueueLabel:
    """Occupancy exactly at the threshold counts as below (BT)."""
    return QueueLabel.BT if queue.occupancy <= queue.threshold else QueueLabel.AT


def step(
    gateway: Gateway,
    dt: float,
    arrival_rates: Sequence[float],
    rng: np.random.Generator,
) -> StepReport:
    """Advance the gateway by one step of width ``dt`` seconds.

    Draws one Poisson arrival count per queue from ``rng``; the per-queue
    scalar draws keep this hot path cheap enough for million-step runs.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if len(arrival_rates) != gateway.queue_count:
        raise ValueError("arrival_rates length must match queue count")

    arrivals: list[int] = []
    departures: list[int] = []
    dropped: list[int] = []
    occupancy: list[int] = []
    for q, rate in zip(gateway.queues, arrival_rates):
        if rate < 0:
            raise ValueError("arrival rates must be non-negative")
        a = int(rng.poisson(rate * dt))
        credit = q.service_credit + q.flush_rate * dt
        whole = int(credit)  # floor; credit is never negative
        backlog = q.occupancy + a
        if backlog <= whole:
            # Queue drains: idle service capacity is not banked.
            dep = backlog
            q.service_credit = 0.0
        else:
            dep = whole
            q.service_credit = credit - dep
        remaining = backlog - dep
        drop = remaining - q.capacity
        if drop > 0:
            remaining = q.capacity
            q.drops += drop
        else:
            drop = 0
        q.occupancy = remaining
        arrivals.append(a)
        departures.append(dep)
        dropped.append(drop)
        occupancy.append(remaining)

    gateway.clock += dt
    return StepReport(
        t=gateway.clock,
        dt=dt,
        arrivals=tuple(arrivals),
        departures=tuple(departures),
        drops=tuple(dropped),
        occupancy=tuple(occupancy),
        flush_rate=tuple(q.flush_rate for q in gateway.queues),
    )


def set_flush_rates(gateway: Gateway, rates: Sequence[float]) -> None:
    """Replace all flush rates atomically after checking the budget and floor."""
    if len(rates) != gateway.queue_count:
        raise ValueError("rates length must match queue count")
    for i, r in enumerate(rates):
        if r < gateway.min_rate:
            raise ValueError(
                f"starvation floor violated: rate[{i}] = {r} below min_rate {gateway.min_rate}"
            )
    total = math.fsum(rates)
    if abs(total - gateway.link_capacity) > BUDGET_RTOL * gateway.link_capacity:
        raise ValueError(
            f"bandwidth budget violated: rates sum to {total}, link capacity is {gateway.link_capacity}"
        )
    for q, r in zip(gateway.queues, rates):
        q.flush_rate = float(r)


def measured_params(window: Sequence[StepReport]) -> list[SliceParams]:
    """Per-queue achieved slice parameters over a window of step reports.

    Bandwidth is achieved departures per second, loss the drop fraction of
    arrivals, and delay a Little's-law estimate (mean occupancy over
    departure rate, ``None`` when nothing departed).
    """
    if not window:
        raise ValueError("measurement window is empty")
    n = len(window[0].arrivals)
    duration = math.fsum(r.dt for r in window)
    out: list[SliceParams] = []
    for i in range(n):
        arr = sum(r.arrivals[i] for r in window)
        dep = sum(r.departures[i] for r in window)
        drp = sum(r.drops[i] for r in window)
        bandwidth = dep / duration
        loss = drp / arr if arr > 0 else 0.0
        mean_occ = math.fsum(r.occupancy[i] for r in window) / len(window)
        delay = mean_occ / bandwidth if dep > 0 else None
        out.append(SliceParams(bandwidth=bandwidth, loss=loss, delay=delay))
    return out
