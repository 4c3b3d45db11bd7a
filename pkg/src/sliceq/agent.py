"""Tabular SARSA controller for gateway flush-rate reallocation.

The agent observes the global queue state as a tuple of below/above
threshold labels (2^N states for N queues), chooses among 2N+1 actions
(do nothing, or increase/decrease one queue's rate), and learns with the
on-policy temporal-difference update

    Q(s, a) += alpha * (r + gamma * Q(s', a') - Q(s, a))

where a' is the action actually selected for the next step.  Rate changes
always conserve the link budget: an increase is funded by the other queues
proportionally to their current rates (never below the starvation floor),
and a decrease donates the freed bandwidth the same way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .gateway import Gateway, QueueLabel, StepReport, queue_label, set_flush_rates, step

GlobalState = tuple[QueueLabel, ...]


class ActionKind(Enum):
    HOLD = "hold"
    INCREASE = "increase"
    DECREASE = "decrease"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    queue: int | None = None

    def __post_init__(self) -> None:
        if self.kind is ActionKind.HOLD:
            if self.queue is not None:
                raise ValueError("hold action takes no queue")
        elif self.queue is None or self.queue < 0:
            raise ValueError("increase/decrease action needs a queue index")


HOLD = Action(ActionKind.HOLD)


def action_count(queue_count: int) -> int:
    return 2 * queue_count + 1


def action_index(action: Action, queue_count: int) -> int:
    """Canonical ordering: [hold, (0, inc), (0, dec), (1, inc), (1, dec), ...]."""
    if action.kind is ActionKind.HOLD:
        return 0
    assert action.queue is not None
    if action.queue >= queue_count:
        raise ValueError(f"action queue {action.queue} out of range for {queue_count} queues")
    offset = 1 if action.kind is ActionKind.INCREASE else 2
    return 2 * action.queue + offset


def action_from_index(index: int, queue_count: int) -> Action:
    if not 0 <= index < action_count(queue_count):
        raise ValueError(f"action index {index} out of range")
    if index == 0:
        return HOLD
    q, offset = divmod(index - 1, 2)
    return Action(ActionKind.INCREASE if offset == 0 else ActionKind.DECREASE, q)


def state_index(state: GlobalState) -> int:
    idx = 0
    for i, label in enumerate(state):
        if label is QueueLabel.AT:
            idx |= 1 << i
    return idx


def observe_state(gateway: Gateway) -> GlobalState:
    return tuple(queue_label(q) for q in gateway.queues)


def all_below(state: GlobalState) -> bool:
    return all(label is QueueLabel.BT for label in state)


@dataclass(frozen=True)
class AgentConfig:
    """Learning and control parameters for the rate controller."""

    epsilon: float = 0.08
    alpha: float = 0.20
    gamma: float = 0.80
    adjust_fraction: float = 0.10
    max_attempts: int = 500
    priority_weights: tuple[float, ...] = (3.0, 2.0, 1.0)
    adjust_base: str = "current"  # "current": fraction of the queue's rate; "capacity": of the link

    def __post_init__(self) -> None:
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must be in (0, 1]")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must be in [0, 1)")
        if not 0 < self.adjust_fraction < 1:
            raise ValueError("adjust_fraction must be in (0, 1)")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if not self.priority_weights or any(w <= 0 for w in self.priority_weights):
            raise ValueError("priority_weights must be positive")
        if self.adjust_base not in ("current", "capacity"):
            raise ValueError("adjust_base must be 'current' or 'capacity'")


class QTable:
    """Dense Q-value table over (global state, action) pairs, zero-initialized."""

    def __init__(self, queue_count: int, values: np.ndarray | None = None):
        shape = (2**queue_count, action_count(queue_count))
        if values is None:
            values = np.zeros(shape)
        elif values.shape != shape:
            raise ValueError(f"expected table shape {shape}, got {values.shape}")
        self.queue_count = queue_count
        self.values = values

    def value(self, state: GlobalState, action: Action) -> float:
        return float(self.values[state_index(state), action_index(action, self.queue_count)])


def select_action(
    qtable: QTable,
    state: GlobalState,
    epsilon: float,
    rng: np.random.Generator,
) -> Action:
    """Epsilon-greedy: uniform over all actions with probability epsilon,
    otherwise the argmax with ties broken toward the lowest action index."""
    n_actions = action_count(qtable.queue_count)
    if rng.random() < epsilon:
        idx = int(rng.integers(n_actions))
    else:
        idx = int(np.argmax(qtable.values[state_index(state)]))
    return action_from_index(idx, qtable.queue_count)


def reward(state: GlobalState, priority_weights: Sequence[float]) -> float:
    """Priority-weighted occupancy score in [-1, 1]; +1 iff every queue is BT."""
    if len(priority_weights) != len(state):
        raise ValueError("priority_weights length must match queue count")
    total = sum(priority_weights)
    score = sum(w if label is QueueLabel.BT else -w for w, label in zip(priority_weights, state))
    return score / total


def sarsa_update(
    qtable: QTable,
    state: GlobalState,
    action: Action,
    r: float,
    next_state: GlobalState,
    next_action: Action,
    alpha: float,
    gamma: float,
) -> None:
    """In-place temporal-difference update of the single (state, action) entry."""
    si = state_index(state)
    ai = action_index(action, qtable.queue_count)
    target = r + gamma * qtable.values[state_index(next_state), action_index(next_action, qtable.queue_count)]
    qtable.values[si, ai] += alpha * (target - qtable.values[si, ai])


def apply_action(
    gateway: Gateway,
    action: Action,
    adjust_fraction: float,
    adjust_base: str = "current",
) -> list[float]:
    """Compute the rate vector that results from one action; no mutation.

    Infeasible adjustments degrade to the feasible maximum (possibly a
    no-op): donors never drop below the floor and the target of a decrease
    never falls below it either.  The returned vector sums to the link
    capacity exactly (float residue is absorbed by the largest rate).
    """
    rates = gateway.flush_rates()
    if action.kind is ActionKind.HOLD or gateway.queue_count == 1:
        return rates
    q = action.queue
    assert q is not None
    if q >= gateway.queue_count:
        raise ValueError(f"action targets queue {q}, gateway has {gateway.queue_count}")
    floor = gateway.min_rate
    base = rates[q] if adjust_base == "current" else gateway.link_capacity
    delta = adjust_fraction * base

    if action.kind is ActionKind.INCREASE:
        donors = [i for i in range(len(rates)) if i != q]
        headroom = {i: max(0.0, rates[i] - floor) for i in donors}
        take = min(delta, sum(headroom.values()))
        if take > 0:
            for i, amount in _proportional_capped(
                {i: rates[i] for i in donors}, headroom, take
            ).items():
                rates[i] -= amount
            rates[q] += take
    else:
        give = min(delta, max(0.0, rates[q] - floor))
        if give > 0:
            others = [i for i in range(len(rates)) if i != q]
            weight_sum = sum(rates[i] for i in others)
            for i in others:
                share = rates[i] / weight_sum if weight_sum > 0 else 1.0 / len(others)
                rates[i] += give * share
            rates[q] -= give

    # Pin the budget exactly; the residue is within a few ulps.
    residue = gateway.link_capacity - sum(rates)
    rates[max(range(len(rates)), key=rates.__getitem__)] += residue
    return rates


def _proportional_capped(
    weights: dict[int, float], caps: dict[int, float], total: float
) -> dict[int, float]:
    """Split ``total`` across keys proportionally to ``weights`` with per-key
    caps.  Requires total <= sum(caps); keys at their cap are pinned and the
    remainder is re-split among the rest."""
    alloc = {i: 0.0 for i in weights}
    active = [i for i in weights if caps[i] > 0]
    remaining = total
    for _ in range(len(weights)):
        if remaining <= 0 or not active:
            break
        wsum = sum(weights[i] for i in active)
        if wsum <= 0:
            share = remaining / len(active)
            proposal = {i: share for i in active}
        else:
            proposal = {i: remaining * weights[i] / wsum for i in active}
        pinned = [i for i in active if proposal[i] >= caps[i] - alloc[i]]
        if not pinned:
            for i in active:
                alloc[i] += proposal[i]
            remaining = 0.0
            break
        for i in pinned:
            remaining -= caps[i] - alloc[i]
            alloc[i] = caps[i]
        active = [i for i in active if i not in pinned]
    return alloc


@dataclass(frozen=True)
class EpisodeOutcome:
    """Result of one control episode, including the steps it simulated."""

    attempts: int
    final_state: GlobalState
    converged: bool
    reports: tuple[StepReport, ...]


@dataclass
class SarsaAgent:
    """Owns the Q-table, which persists across control episodes in a run."""

    config: AgentConfig
    qtable: QTable = field(init=False)
    queue_count: int = 3

    def __post_init__(self) -> None:
        if len(self.config.priority_weights) != self.queue_count:
            raise ValueError("priority_weights length must match queue count")
        self.qtable = QTable(self.queue_count)


def control_episode(
    agent: SarsaAgent,
    gateway: Gateway,
    arrival_rates: Sequence[float],
    dt: float,
    rng: np.random.Generator,
    attempt_budget: int | None = None,
) -> EpisodeOutcome:
    """Run one control episode against the live gateway.

    Each attempt selects an action, applies it, advances the gateway one
    step, and performs the SARSA update from the resulting state.  The
    episode ends as soon as every queue is below threshold, or after the
    attempt budget (``max_attempts``, optionally further capped) runs out.
    """
    cfg = agent.config
    budget = cfg.max_attempts if attempt_budget is None else min(cfg.max_attempts, attempt_budget)
    state = observe_state(gateway)
    if all_below(state):
        return EpisodeOutcome(0, state, True, ())

    action = select_action(agent.qtable, state, cfg.epsilon, rng)
    reports: list[StepReport] = []
    attempts = 0
    converged = False
    while attempts < budget:
        set_flush_rates(gateway, apply_action(gateway, action, cfg.adjust_fraction, cfg.adjust_base))
        reports.append(step(gateway, dt, arrival_rates, rng))
        attempts += 1
        next_state = observe_state(gateway)
        r = reward(next_state, cfg.priority_weights)
        next_action = select_action(agent.qtable, next_state, cfg.epsilon, rng)
        sarsa_update(agent.qtable, state, action, r, next_state, next_action, cfg.alpha, cfg.gamma)
        state, action = next_state, next_action
        if all_below(state):
            converged = True
            break
    return EpisodeOutcome(attempts, state, converged, tuple(reports))
