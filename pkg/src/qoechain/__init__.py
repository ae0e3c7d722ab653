"""Deterministic simulator for QoE-managed service function chains."""

from .controller import (
    Action,
    ActionKind,
    BreachAlert,
    Controller,
    Counters,
    OracleLimits,
    PolicyConfig,
    Rejected,
    RejectReason,
    predict_traffic,
)
from .errors import (
    InstanceTooLarge,
    InvariantViolation,
    IoFailure,
    ScenarioInvalid,
    SimulatorError,
    TimeTravel,
)
from .kernel import EventQueue, audit_conservation, run
from .network import (
    LinkQuality,
    LinkSpec,
    NetworkState,
    NodeKind,
    NodeSpec,
    build_network,
)
from .orchestrator import LifecycleStatus, Orchestrator, VnfDb, audit_lifecycle
from .qoe import (
    Ela,
    FlowSample,
    QoeSample,
    ela_breached,
    ela_compliance,
    estimate_mos,
    predict_mos,
)
from .report import SimReport, write_report
from .routing import enumerate_simple_paths, shortest_feasible_path
from .scenario import (
    Diagnostic,
    ScenarioDoc,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)
from .service import (
    AppProfile,
    ChainRequest,
    ForwardingGraph,
    PathMetrics,
    ServiceCatalog,
    VnfType,
    path_metrics,
    validate_forwarding_graph,
)

__all__ = [
    "Action",
    "ActionKind",
    "AppProfile",
    "BreachAlert",
    "ChainRequest",
    "Controller",
    "Counters",
    "Diagnostic",
    "Ela",
    "EventQueue",
    "FlowSample",
    "ForwardingGraph",
    "InstanceTooLarge",
    "InvariantViolation",
    "IoFailure",
    "LifecycleStatus",
    "LinkQuality",
    "LinkSpec",
    "NetworkState",
    "NodeKind",
    "NodeSpec",
    "OracleLimits",
    "Orchestrator",
    "PathMetrics",
    "PolicyConfig",
    "QoeSample",
    "RejectReason",
    "Rejected",
    "ScenarioDoc",
    "ScenarioInvalid",
    "ServiceCatalog",
    "SimReport",
    "SimulatorError",
    "TimeTravel",
    "VnfDb",
    "VnfType",
    "audit_conservation",
    "audit_lifecycle",
    "build_network",
    "ela_breached",
    "ela_compliance",
    "enumerate_simple_paths",
    "estimate_mos",
    "load_scenario",
    "parse_scenario",
    "path_metrics",
    "predict_mos",
    "predict_traffic",
    "run",
    "serialize_scenario",
    "shortest_feasible_path",
    "validate_forwarding_graph",
    "write_report",
]

__version__ = "0.1.0"
