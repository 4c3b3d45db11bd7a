"""Gateway queue simulator with a SARSA bandwidth reallocation agent."""

from .agent import (
    Action,
    ActionKind,
    AgentConfig,
    EpisodeOutcome,
    QTable,
    SarsaAgent,
    apply_action,
    control_episode,
    observe_state,
    reward,
    sarsa_update,
    select_action,
)
from .gateway import (
    Gateway,
    GatewayQueue,
    QueueLabel,
    StepReport,
    build_gateway,
    measured_params,
    queue_label,
    set_flush_rates,
    step,
)
from .metrics import RunSummary, TimeSeriesRow, export_csv, export_json, summarize
from .model import (
    CommunicationSlice,
    Domain,
    GatewayPlan,
    Resource,
    ResourceKind,
    SliceParams,
    SlicedVirtualNetwork,
    Violation,
    build_gateway_plan,
    validate_model,
)
from .scenario import (
    OverloadSchedule,
    RunResult,
    ScenarioSpec,
    arrival_rate_at,
    run_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "AgentConfig",
    "CommunicationSlice",
    "Domain",
    "EpisodeOutcome",
    "Gateway",
    "GatewayPlan",
    "GatewayQueue",
    "OverloadSchedule",
    "QTable",
    "QueueLabel",
    "Resource",
    "ResourceKind",
    "RunResult",
    "RunSummary",
    "SarsaAgent",
    "ScenarioSpec",
    "SliceParams",
    "SlicedVirtualNetwork",
    "StepReport",
    "TimeSeriesRow",
    "Violation",
    "apply_action",
    "arrival_rate_at",
    "build_gateway",
    "build_gateway_plan",
    "control_episode",
    "export_csv",
    "export_json",
    "measured_params",
    "observe_state",
    "queue_label",
    "reward",
    "run_scenario",
    "sarsa_update",
    "select_action",
    "set_flush_rates",
    "step",
    "summarize",
    "validate_model",
]
