"""Chat-benchmark workload: groups of senders and receivers over bounded FIFOs.

Each group has `fanout` senders and `fanout` receivers. Every sender sends
`msgs` messages to each receiver in its group, cycling through receivers in
id order; every receiver drains its per-sender FIFOs in round-robin id
order. Both sides are small resumable state machines so a task continues
exactly where it left off when it is next scheduled, and message work is
atomic: a send or receive never spans a slice boundary.

Within a group, receiver tasks get the lower ids (they are "spawned" first,
as in the real benchmark), so on a cold start receivers probe their empty
queues before any sender has run.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .simulator import ConfigError, Status, TaskState


@dataclass(frozen=True)
class WorkloadSpec:
    groups: int = 5
    fanout: int = 20
    msgs: int = 1
    msg_cost_send_ns: int = 750_000
    msg_cost_recv_ns: int = 750_000
    channel_capacity: int = 64

    def __post_init__(self):
        if self.groups < 1 or self.fanout < 1:
            raise ConfigError("groups and fanout must be >= 1")
        if self.msgs < 0:
            raise ConfigError("msgs must be >= 0")
        if self.msg_cost_send_ns < 0 or self.msg_cost_recv_ns < 0:
            raise ConfigError("message costs must be >= 0")
        if self.channel_capacity < 1:
            raise ConfigError("channel_capacity must be >= 1")

    @property
    def total_tasks(self) -> int:
        return self.groups * 2 * self.fanout

    @property
    def total_messages(self) -> int:
        return self.groups * self.fanout * self.fanout * self.msgs


class Channel:
    """Bounded FIFO from one sender to one receiver."""

    __slots__ = ("sender_id", "receiver_id", "capacity", "queue")

    def __init__(self, sender_id: int, receiver_id: int, capacity: int):
        self.sender_id = sender_id
        self.receiver_id = receiver_id
        self.capacity = capacity
        self.queue: deque[int] = deque()

    def full(self) -> bool:
        return len(self.queue) >= self.capacity


class SenderFsm:
    """Sends msg k of round r to receiver k, in receiver order, head-of-line blocking."""

    __slots__ = ("task_id", "spec", "channels", "sent", "total", "workload")

    def __init__(self, task_id: int, spec: WorkloadSpec, channels: list[Channel], workload: "Workload"):
        self.task_id = task_id
        self.spec = spec
        self.channels = channels  # one per receiver, receiver-id order
        self.sent = 0
        self.total = spec.fanout * spec.msgs
        self.workload = workload

    @property
    def next_receiver_index(self) -> int:
        return self.sent % self.spec.fanout

    @property
    def next_msg_index(self) -> int:
        return self.sent // self.spec.fanout

    def next_action(self) -> tuple[str, int]:
        if self.sent >= self.total:
            return ("done", 0)
        if self.channels[self.next_receiver_index].full():
            return ("wait", 0)
        return ("work", self.spec.msg_cost_send_ns)

    def complete_op(self) -> list[int]:
        ch = self.channels[self.next_receiver_index]
        ch.queue.append(self.next_msg_index)
        self.sent += 1
        return [ch.receiver_id]


class ReceiverFsm:
    """Drains one message at a time from its non-empty queues in sender order."""

    __slots__ = ("task_id", "spec", "channels", "received", "expected", "cursor", "workload")

    def __init__(self, task_id: int, spec: WorkloadSpec, channels: list[Channel], workload: "Workload"):
        self.task_id = task_id
        self.spec = spec
        self.channels = channels  # one per sender, sender-id order
        self.received = 0
        self.expected = spec.fanout * spec.msgs
        self.cursor = 0
        self.workload = workload

    def _next_nonempty(self) -> int | None:
        n = self.spec.fanout
        for step in range(n):
            i = (self.cursor + step) % n
            if self.channels[i].queue:
                return i
        return None

    def next_action(self) -> tuple[str, int]:
        if self.received >= self.expected:
            return ("done", 0)
        if self._next_nonempty() is None:
            return ("wait", 0)
        return ("work", self.spec.msg_cost_recv_ns)

    def complete_op(self) -> list[int]:
        i = self._next_nonempty()
        ch = self.channels[i]
        was_full = ch.full()
        ch.queue.popleft()
        self.received += 1
        self.cursor = (i + 1) % self.spec.fanout
        self.workload.messages_delivered += 1
        return [ch.sender_id] if was_full else []


class Workload:
    """Built task set plus channel fabric; consumed by one simulation run."""

    def __init__(self, spec: WorkloadSpec):
        self.spec = spec
        self.tasks: list[TaskState] = []
        self.channels: list[Channel] = []
        self.messages_delivered = 0
        fanout = spec.fanout
        for g in range(spec.groups):
            base = g * 2 * fanout
            recv_ids = [base + i for i in range(fanout)]
            send_ids = [base + fanout + i for i in range(fanout)]
            # channel grid for this group: grid[s][r]
            grid = [[Channel(send_ids[s], recv_ids[r], spec.channel_capacity)
                     for r in range(fanout)] for s in range(fanout)]
            for s in range(fanout):
                self.channels.extend(grid[s])
            for r in range(fanout):
                fsm = ReceiverFsm(recv_ids[r], spec, [grid[s][r] for s in range(fanout)], self)
                self.tasks.append(TaskState(id=recv_ids[r], fsm=fsm))
            for s in range(fanout):
                fsm = SenderFsm(send_ids[s], spec, grid[s], self)
                self.tasks.append(TaskState(id=send_ids[s], fsm=fsm))
        self.tasks.sort(key=lambda t: t.id)

    @property
    def expected_messages(self) -> int:
        return self.spec.total_messages

    def residual_messages(self) -> int:
        return sum(len(c.queue) for c in self.channels)


def build_workload(spec: WorkloadSpec) -> Workload:
    """Construct the full task/channel fabric; all tasks start runnable at vruntime 0."""
    return Workload(spec)


@dataclass(frozen=True)
class StepOutcome:
    consumed_ns: int
    status: Status
    woken: list[int] = field(default_factory=list)


def _drive(fsm, budget_ns: int, force_first: bool) -> StepOutcome:
    if budget_ns <= 0:
        raise ValueError("budget_ns must be positive")
    consumed = 0
    woken: list[int] = []
    while True:
        kind, cost = fsm.next_action()
        if kind == "done":
            return StepOutcome(consumed, Status.DONE, woken)
        if kind == "wait":
            return StepOutcome(consumed, Status.BLOCKED, woken)
        if consumed + cost > budget_ns and not (force_first and consumed == 0):
            return StepOutcome(consumed, Status.RUNNABLE, woken)
        woken.extend(fsm.complete_op())
        consumed += cost


def sender_step(fsm: SenderFsm, budget_ns: int, force_first: bool = False) -> StepOutcome:
    """Send messages while budget remains; atomic sends, head-of-line blocking.

    Returns RUNNABLE when the next send no longer fits the budget, BLOCKED
    when the target queue is full, DONE when everything has been sent. With
    force_first=True the first send executes even if it overruns the budget.
    """
    return _drive(fsm, budget_ns, force_first)


def receiver_step(fsm: ReceiverFsm, budget_ns: int, force_first: bool = False) -> StepOutcome:
    """Drain available messages while budget remains; see sender_step."""
    return _drive(fsm, budget_ns, force_first)
