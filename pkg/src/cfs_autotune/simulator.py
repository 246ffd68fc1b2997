"""CFS-style scheduler simulation core.

Tasks accumulate virtual runtime as they execute and the dispatcher always
runs the runnable task with the smallest (vruntime, id) key. Behaviour is
controlled by three nanosecond-valued tunables (latency, minimum
granularity, wakeup granularity). All internal arithmetic is integer
nanoseconds; jiffies are derived only at the reporting boundary
(1 jiffy = 1 ms by default).

The engine is event driven: the clock jumps between workload-step
completions, slice exhaustions and wakeups rather than ticking at a fixed
quantum, so sub-jiffy slices are handled exactly. A single global runqueue
feeds all simulated CPUs; there is no load balancing.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

PARAM_LO_NS = 100_000
PARAM_HI_NS = 1_000_000_000


class ConfigError(ValueError):
    """Unusable simulation or workload configuration."""


class SchedParamError(ValueError):
    """Scheduler parameters outside their documented ranges."""


class StateError(RuntimeError):
    """Illegal task status transition (e.g. waking a task that is not blocked)."""


@dataclass(frozen=True)
class SchedParams:
    """The three tunable scheduler parameters, in nanoseconds.

    Direct construction only checks non-negativity, because parameter
    discovery is allowed to produce values outside the user-facing ranges.
    Use :meth:`validated` for configuration supplied by humans.
    """

    latency_ns: int
    min_gran_ns: int
    wakeup_gran_ns: int = 0

    def __post_init__(self):
        for name in ("latency_ns", "min_gran_ns", "wakeup_gran_ns"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise SchedParamError(f"{name} must be a non-negative integer, got {v!r}")

    @classmethod
    def validated(cls, latency_ns: int, min_gran_ns: int, wakeup_gran_ns: int = 0) -> "SchedParams":
        """Range-checked constructor: latency and min_gran in [1e5, 1e9] ns, wakeup in [0, 1e9] ns."""
        p = cls(int(latency_ns), int(min_gran_ns), int(wakeup_gran_ns))
        if not PARAM_LO_NS <= p.latency_ns <= PARAM_HI_NS:
            raise SchedParamError(f"latency_ns {p.latency_ns} outside [{PARAM_LO_NS}, {PARAM_HI_NS}]")
        if not PARAM_LO_NS <= p.min_gran_ns <= PARAM_HI_NS:
            raise SchedParamError(f"min_gran_ns {p.min_gran_ns} outside [{PARAM_LO_NS}, {PARAM_HI_NS}]")
        if not 0 <= p.wakeup_gran_ns <= PARAM_HI_NS:
            raise SchedParamError(f"wakeup_gran_ns {p.wakeup_gran_ns} outside [0, {PARAM_HI_NS}]")
        return p

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.latency_ns, self.min_gran_ns, self.wakeup_gran_ns)


def compute_nr_latency(params: SchedParams) -> int:
    """Maximum number of tasks servable within the latency target, at least 1."""
    if params.min_gran_ns == 0:
        raise ZeroDivisionError("min_gran_ns must be positive")
    return max(1, params.latency_ns // params.min_gran_ns)


def compute_sched_period(params: SchedParams, num_tasks: int) -> int:
    """Period over which all `num_tasks` runnable tasks should run once.

    Equals the latency target while the task count fits within it, and
    stretches as min_gran * num_tasks beyond that. The stretched branch is
    computed directly from min_gran to keep integer arithmetic exact.
    """
    if num_tasks < 1:
        raise ConfigError(f"num_tasks must be >= 1, got {num_tasks}")
    if num_tasks <= compute_nr_latency(params):
        return params.latency_ns
    return params.min_gran_ns * num_tasks


def compute_time_slice(params: SchedParams, num_tasks: int) -> int:
    """Per-task CPU allowance: an equal share of the period plus the wakeup allowance."""
    return compute_sched_period(params, num_tasks) // num_tasks + params.wakeup_gran_ns


class Status(Enum):
    RUNNABLE = "runnable"
    RUNNING = "running"
    BLOCKED = "blocked"
    DONE = "done"


@dataclass(eq=False)
class TaskState:
    """A simulated task: identity, fairness accounting and its workload FSM.

    The fsm handle is opaque to the scheduler; it must provide
    ``next_action() -> (kind, cost_ns)`` with kind one of "work", "wait",
    "done", and ``complete_op() -> list[int]`` committing the last returned
    work action and returning ids of tasks that may need waking.
    """

    id: int
    vruntime_ns: int = 0
    status: Status = Status.RUNNABLE
    exec_total_ns: int = 0
    fsm: object = None


class RunQueue:
    """Ready tasks ordered by (vruntime, id); also tracks min_vruntime.

    min_vruntime_ns never decreases and is always >= the smallest vruntime
    ever dequeued; woken tasks are placed at least at min_vruntime so a
    long-blocked task cannot starve the rest of the queue.
    """

    def __init__(self):
        self._heap: list[tuple[int, int, TaskState]] = []
        self.min_vruntime_ns = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, task: TaskState) -> None:
        heapq.heappush(self._heap, (task.vruntime_ns, task.id, task))

    def pick_next(self) -> TaskState | None:
        """The runnable task with minimum (vruntime, id), without removing it."""
        if not self._heap:
            return None
        return self._heap[0][2]

    def pop(self) -> TaskState | None:
        """Remove and return the minimum task, advancing min_vruntime."""
        if not self._heap:
            return None
        vr, _, task = heapq.heappop(self._heap)
        if vr > self.min_vruntime_ns:
            self.min_vruntime_ns = vr
        return task

    def wake(self, task: TaskState) -> None:
        """Make a blocked task runnable at no less than the queue's min vruntime."""
        if task.status is not Status.BLOCKED:
            raise StateError(f"cannot wake task {task.id} in status {task.status.value}")
        task.status = Status.RUNNABLE
        if task.vruntime_ns < self.min_vruntime_ns:
            task.vruntime_ns = self.min_vruntime_ns
        self.push(task)


def pick_next(rq: RunQueue) -> TaskState | None:
    return rq.pick_next()


def wake_task(rq: RunQueue, task: TaskState) -> RunQueue:
    rq.wake(task)
    return rq


@dataclass(frozen=True)
class SimConfig:
    num_cpus: int = 1
    ns_per_jiffy: int = 1_000_000
    max_jiffies: int = 10_000_000
    switch_cost_ns: int = 10_000
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_cpus < 1 or self.ns_per_jiffy < 1 or self.max_jiffies < 1:
            raise ConfigError("num_cpus, ns_per_jiffy and max_jiffies must all be >= 1")
        if self.switch_cost_ns < 0:
            raise ConfigError("switch_cost_ns must be >= 0")


@dataclass(frozen=True)
class SimResult:
    turnaround_jiffies: int
    turnaround_ns: int
    messages_delivered: int
    context_switches: int
    completed: bool


class _Cpu:
    __slots__ = ("idx", "task", "last_task_id", "allowance", "consumed", "epoch",
                 "pending", "op_cost", "spin_started")

    def __init__(self, idx: int):
        self.idx = idx
        self.task: TaskState | None = None
        self.last_task_id: int | None = None
        self.allowance = 0
        self.consumed = 0
        self.epoch = 0
        self.pending = "dispatch"
        self.op_cost = 0
        self.spin_started = 0


DispatchHook = Callable[[TaskState, int, "TaskState | None"], None]


def run_simulation(params: SchedParams, workload, config: SimConfig = SimConfig(),
                   on_dispatch: DispatchHook | None = None) -> SimResult:
    """Run the workload to completion (or timeout) under the given parameters.

    Dispatch rules: the minimum-(vruntime, id) runnable task runs; its slice
    is an equal share of the scheduling period plus the wakeup allowance.
    Work is charged in the workload's own atomic step costs. The first step
    of a dispatch always executes even if it overruns the slice, so tiny
    slices slow a task down without wedging it. On slice exhaustion with
    another runnable task present the task is preempted; a task that runs
    out of work may hold its CPU for up to the wakeup allowance (within its
    slice) waiting for new messages before it blocks, and that holding time
    is charged to it like execution. Context-switch cost is charged to
    wall-clock whenever a CPU picks up a different task than it last ran.

    Deterministic: identical (params, workload spec, config) give identical
    results. The workload's runtime state is consumed; build a fresh one per
    run.
    """
    tasks: list[TaskState] = list(workload.tasks)
    if not tasks:
        raise ConfigError("workload has no tasks")
    by_id = {t.id: t for t in tasks}

    rq = RunQueue()
    for t in tasks:
        if t.status is Status.RUNNABLE:
            rq.push(t)

    max_ns = config.max_jiffies * config.ns_per_jiffy
    wakeup = params.wakeup_gran_ns
    switch_cost = config.switch_cost_ns

    cpus = [_Cpu(i) for i in range(config.num_cpus)]
    idle: list[int] = []
    spinning: dict[int, _Cpu] = {}  # task id -> cpu holding it in a wait
    events: list[tuple[int, int, int]] = []  # (time, cpu idx, epoch)

    n_tasks = len(tasks)
    done_count = sum(1 for t in tasks if t.status is Status.DONE)
    last_done = 0
    switches = 0
    running = 0  # tasks currently assigned to a cpu

    def schedule(cpu: _Cpu, when: int) -> None:
        heapq.heappush(events, (when, cpu.idx, cpu.epoch))

    def start_dispatch(cpu: _Cpu, now: int) -> None:
        nonlocal switches, running
        task = rq.pop()
        if task is None:
            cpu.task = None
            heapq.heappush(idle, cpu.idx)
            return
        if on_dispatch is not None:
            on_dispatch(task, now, rq.pick_next())
        start = now
        if cpu.last_task_id is not None and cpu.last_task_id != task.id:
            switches += 1
            start += switch_cost
        task.status = Status.RUNNING
        cpu.task = task
        cpu.last_task_id = task.id
        running += 1
        cpu.consumed = 0
        cpu.allowance = compute_time_slice(params, len(rq) + running)
        advance(cpu, start)

    def release(cpu: _Cpu, now: int) -> None:
        nonlocal running
        running -= 1
        cpu.task = None
        cpu.pending = "dispatch"
        cpu.epoch += 1
        schedule(cpu, now)

    def advance(cpu: _Cpu, now: int) -> None:
        """Decide what the cpu's current task does next, starting at `now`."""
        nonlocal done_count, last_done
        task = cpu.task
        while True:
            kind, cost = task.fsm.next_action()
            if kind == "done":
                task.status = Status.DONE
                done_count += 1
                if now > last_done:
                    last_done = now
                release(cpu, now)
                return
            if kind == "work":
                if cpu.consumed > 0 and cpu.consumed + cost > cpu.allowance:
                    if len(rq) > 0:
                        task.status = Status.RUNNABLE
                        rq.push(task)
                        release(cpu, now)
                        return
                    # Alone on the queue: grant a fresh slice and keep going.
                    cpu.consumed = 0
                    cpu.allowance = compute_time_slice(params, running)
                    continue
                cpu.pending = "op"
                cpu.op_cost = cost
                cpu.epoch += 1
                schedule(cpu, now + cost)
                return
            # kind == "wait": out of work for now.
            spin_cap = min(wakeup, cpu.allowance - cpu.consumed)
            if spin_cap <= 0:
                task.status = Status.BLOCKED
                release(cpu, now)
                return
            cpu.pending = "spin"
            cpu.spin_started = now
            cpu.epoch += 1
            spinning[task.id] = cpu
            schedule(cpu, now + spin_cap)
            return

    def charge(task: TaskState, delta: int) -> None:
        task.vruntime_ns += delta
        task.exec_total_ns += delta

    def maybe_wake(tid: int, now: int) -> None:
        target = by_id[tid]
        if target.status is Status.BLOCKED:
            if target.fsm.next_action()[0] == "wait":
                return  # still nothing for it to do
            rq.wake(target)
            if idle:
                ci = heapq.heappop(idle)
                cpu = cpus[ci]
                cpu.pending = "dispatch"
                cpu.epoch += 1
                schedule(cpu, now)
        elif target.id in spinning:
            if target.fsm.next_action()[0] == "wait":
                return  # delivery did not unblock it; keep spinning
            cpu = spinning.pop(target.id)
            elapsed = now - cpu.spin_started
            charge(target, elapsed)
            cpu.consumed += elapsed
            cpu.epoch += 1  # cancel the pending spin-end event
            advance(cpu, now)

    for cpu in cpus:
        schedule(cpu, 0)

    timed_out = False
    while events:
        now, ci, epoch = heapq.heappop(events)
        cpu = cpus[ci]
        if epoch != cpu.epoch:
            continue
        if now > max_ns:
            timed_out = True
            break
        if cpu.pending == "dispatch":
            start_dispatch(cpu, now)
        elif cpu.pending == "op":
            task = cpu.task
            charge(task, cpu.op_cost)
            cpu.consumed += cpu.op_cost
            for tid in task.fsm.complete_op():
                maybe_wake(tid, now)
            advance(cpu, now)
        else:  # spin ended with nothing delivered
            task = cpu.task
            elapsed = now - cpu.spin_started
            charge(task, elapsed)
            cpu.consumed += elapsed
            spinning.pop(task.id, None)
            task.status = Status.BLOCKED
            release(cpu, now)
        if done_count == n_tasks:
            break

    completed = done_count == n_tasks
    if completed:
        turnaround_ns = last_done
    else:
        # Timeout (or a wedged workload): report the cap as the penalty value.
        timed_out = True
        turnaround_ns = max_ns
    jiffies = -(-turnaround_ns // config.ns_per_jiffy)
    return SimResult(
        turnaround_jiffies=jiffies,
        turnaround_ns=turnaround_ns,
        messages_delivered=getattr(workload, "messages_delivered", 0),
        context_switches=switches,
        completed=completed,
    )
