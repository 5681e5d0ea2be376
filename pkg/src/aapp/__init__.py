"""Affinity-aware serverless scheduling toolkit.

Exposes the policy-script parser, the cluster activity tracker, the
scheduler, a deterministic discrete-event cluster simulator, and a small
JSON-over-HTTP scheduling service.
"""

from .cluster import (
    ActivityState,
    CapacityExceeded,
    ClusterConfig,
    ClusterSnapshot,
    DuplicateActivation,
    FunctionMeta,
    Registry,
    StateError,
    UnknownActivation,
    UnknownFunction,
    UnknownWorker,
    WorkerSpec,
    WorkerView,
)
from .dsl import (
    ANY,
    BEST_FIRST,
    DEFAULT,
    DEFAULT_TAG,
    FAIL,
    AappScript,
    AffinityConstraint,
    Block,
    CapacityUsed,
    Diagnostic,
    MaxConcurrentInvocations,
    ParseError,
    TagPolicy,
    check_script,
    parse_script,
    serialize_script,
)
from .scheduler import (
    NotSchedulable,
    ScheduleDecision,
    SchedulingError,
    UnknownTag,
    explain_rejection,
    schedule,
    valid,
)
from .service import SchedulerService, make_server, replay_decision_log
from .simulator import (
    ConfigError,
    HeavyFunction,
    InvocationRecord,
    PolicyComparison,
    PolicyRow,
    SimConfig,
    SimEvent,
    SimMetrics,
    StorageModel,
    WorkloadSpec,
    compare_policies,
    load_sim_config,
    run_simulation,
)

__version__ = "0.1.0"

__all__ = [
    "ANY",
    "BEST_FIRST",
    "DEFAULT",
    "DEFAULT_TAG",
    "FAIL",
    "AappScript",
    "ActivityState",
    "AffinityConstraint",
    "Block",
    "CapacityExceeded",
    "CapacityUsed",
    "ClusterConfig",
    "ClusterSnapshot",
    "ConfigError",
    "Diagnostic",
    "DuplicateActivation",
    "FunctionMeta",
    "HeavyFunction",
    "InvocationRecord",
    "MaxConcurrentInvocations",
    "NotSchedulable",
    "ParseError",
    "PolicyComparison",
    "PolicyRow",
    "Registry",
    "ScheduleDecision",
    "SchedulerService",
    "SchedulingError",
    "SimConfig",
    "SimEvent",
    "SimMetrics",
    "StateError",
    "StorageModel",
    "TagPolicy",
    "UnknownActivation",
    "UnknownFunction",
    "UnknownTag",
    "UnknownWorker",
    "WorkerSpec",
    "WorkerView",
    "WorkloadSpec",
    "check_script",
    "compare_policies",
    "explain_rejection",
    "load_sim_config",
    "make_server",
    "parse_script",
    "replay_decision_log",
    "run_simulation",
    "schedule",
    "serialize_script",
    "valid",
]
