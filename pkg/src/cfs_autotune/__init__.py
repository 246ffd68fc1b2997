"""Deterministic CFS-style scheduler simulator and autotuning harness."""

from .simulator import (
    ConfigError,
    SchedParamError,
    SchedParams,
    SimConfig,
    SimResult,
    StateError,
    Status,
    RunQueue,
    TaskState,
    compute_nr_latency,
    compute_sched_period,
    compute_time_slice,
    pick_next,
    run_simulation,
    wake_task,
)
from .hackbench import (
    Channel,
    ReceiverFsm,
    SenderFsm,
    StepOutcome,
    Workload,
    WorkloadSpec,
    build_workload,
    receiver_step,
    sender_step,
)

__version__ = "0.1.0"
