"""Discrete-event simulator of serverless function scheduling on a
capacity-limited edge server: weight-based online scheduling, an offline
optimal sequencer with an exhaustive oracle, four baselines, and
trace-driven or synthetic workloads."""

from .core import (
    CapacityError,
    ContractViolationError,
    FunctionProfile,
    Instance,
    InstanceState,
    InstanceStateError,
    Request,
    ServerState,
    SimulationError,
    UnknownFunctionError,
    idle_count,
    total_slots,
)
from .engine import Engine, Event, EventKind, SimulationConfig, SimulationResult, run
from .schedulers import (
    SCHEDULERS,
    EsffScheduler,
    FaasCacheScheduler,
    FifoScheduler,
    OpenWhiskV2Scheduler,
    Scheduler,
    SffScheduler,
    make_scheduler,
)
from .ssfs import (
    SsfsFunction,
    SsfsSchedule,
    evaluate_schedule,
    ssfs_optimal,
    ssfs_oracle,
    ssfs_weight,
)
from .stats import MetricsReport, RuntimeStats, compute_metrics
from .trace import (
    SyntheticSpec,
    apply_intensity,
    bursty_preset,
    derive_rng,
    blocking_preset,
    generate_synthetic,
    parse_trace,
)

__version__ = "0.1.0"
