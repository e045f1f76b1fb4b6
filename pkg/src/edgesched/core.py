"""Domain types shared by all modules: requests, function profiles, instances,
per-function wait queues, and the edge-server capacity ledger.

All timestamps are non-negative floats in milliseconds sharing one epoch per
simulation run.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

Time = float
FunctionId = int
RequestId = int
InstanceId = int


class SimulationError(Exception):
    """Base class for simulator errors."""


class UnknownFunctionError(SimulationError, LookupError):
    """Raised when a function id has no registered profile."""


class CapacityError(SimulationError):
    """Raised when an instance slot is requested on a full server."""


class InstanceStateError(SimulationError):
    """Raised on an operation that is invalid for the instance's current state."""


class ContractViolationError(SimulationError):
    """Raised when a scheduler emits an action that violates server state.

    The engine fails fast on these instead of clamping: it doubles as the
    test harness for scheduler contracts.
    """


@dataclass
class Request:
    """One function invocation.

    ``exec_time`` is ground truth: the engine uses it to schedule the
    completion event, but schedulers only ever learn it through the history
    estimators after the request completes.
    """

    id: RequestId
    function_id: FunctionId
    arrival: Time
    exec_time: Time
    start: Time | None = None
    completion: Time | None = None

    def __post_init__(self) -> None:
        if self.arrival < 0:
            raise ValueError(f"request {self.id}: negative arrival {self.arrival}")
        if self.exec_time <= 0:
            raise ValueError(f"request {self.id}: exec_time must be > 0, got {self.exec_time}")

    @property
    def response_time(self) -> Time:
        if self.completion is None:
            raise ValueError(f"request {self.id} has not completed")
        return self.completion - self.arrival

    @property
    def slowdown(self) -> float:
        return self.response_time / self.exec_time


@dataclass(frozen=True)
class FunctionProfile:
    """Ground-truth cold-start and eviction delay of one function."""

    id: FunctionId
    cold_start: Time
    eviction: Time

    def __post_init__(self) -> None:
        if self.cold_start < 0 or self.eviction < 0:
            raise ValueError(f"function {self.id}: delays must be >= 0")


class InstanceState(Enum):
    INITIALIZING = "initializing"
    IDLE = "idle"
    BUSY = "busy"
    EVICTING = "evicting"


# Initializing -> Busy is the immediate-dispatch shortcut: an instance whose
# function has queued work takes the head request in the same event step that
# finishes its cold start.
_VALID_TRANSITIONS: dict[InstanceState, set[InstanceState]] = {
    InstanceState.INITIALIZING: {InstanceState.IDLE, InstanceState.BUSY},
    InstanceState.IDLE: {InstanceState.BUSY, InstanceState.EVICTING},
    InstanceState.BUSY: {InstanceState.IDLE},
    InstanceState.EVICTING: set(),
}


@dataclass
class Instance:
    """One container slot of a function with a four-state lifecycle."""

    id: InstanceId
    function_id: FunctionId
    state: InstanceState
    state_entered_at: Time
    current_request: RequestId | None = None

    def transition(self, new_state: InstanceState, now: Time) -> None:
        if new_state not in _VALID_TRANSITIONS[self.state]:
            raise InstanceStateError(
                f"instance {self.id}: invalid transition {self.state.value} -> {new_state.value}"
            )
        self.state = new_state
        self.state_entered_at = now
        if new_state is not InstanceState.BUSY:
            self.current_request = None


class ServerState:
    """Capacity ledger of the edge server.

    Tracks every instance in any lifecycle state (all of them count against
    the slot capacity, including ones mid cold start or mid eviction), one
    FIFO wait queue per function, and the timestamp at which each queue's
    current head became the head (used by wait-threshold schedulers).
    """

    def __init__(self, capacity: int, function_ids: list[FunctionId]):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._functions = set(function_ids)
        self._instances: dict[InstanceId, Instance] = {}
        self._by_function: dict[FunctionId, set[InstanceId]] = {f: set() for f in function_ids}
        self._queues: dict[FunctionId, deque[RequestId]] = {f: deque() for f in function_ids}
        self._queued: set[RequestId] = set()
        self._head_since: dict[FunctionId, Time] = {}
        # evictions in flight whose freed slot is already promised to a function
        self._pending_arrivals: dict[FunctionId, int] = {f: 0 for f in function_ids}

    # -- functions ----------------------------------------------------------

    def check_function(self, f: FunctionId) -> None:
        if f not in self._functions:
            raise UnknownFunctionError(f"unknown function id {f}")

    @property
    def function_ids(self) -> list[FunctionId]:
        return sorted(self._functions)

    # -- instances ----------------------------------------------------------

    def add_instance(self, instance: Instance) -> None:
        if len(self._instances) >= self.capacity:
            raise CapacityError(f"server full: {len(self._instances)}/{self.capacity} slots")
        self.check_function(instance.function_id)
        self._instances[instance.id] = instance
        self._by_function[instance.function_id].add(instance.id)

    def remove_instance(self, instance_id: InstanceId) -> Instance:
        instance = self._instances.pop(instance_id)
        self._by_function[instance.function_id].discard(instance_id)
        return instance

    def instance(self, instance_id: InstanceId) -> Instance:
        try:
            return self._instances[instance_id]
        except KeyError:
            raise LookupError(f"unknown instance id {instance_id}") from None

    def instances_of(self, f: FunctionId) -> list[Instance]:
        self.check_function(f)
        return [self._instances[i] for i in sorted(self._by_function[f])]

    def all_instances(self) -> list[Instance]:
        return [self._instances[i] for i in sorted(self._instances)]

    def total_slots(self) -> int:
        """Occupied slots in any lifecycle state, including transitions."""
        return len(self._instances)

    def free_slots(self) -> int:
        return self.capacity - len(self._instances)

    def idle_count(self, f: FunctionId) -> int:
        """Number of instances of ``f`` currently in the Idle state."""
        self.check_function(f)
        return sum(
            1 for i in self._by_function[f]
            if self._instances[i].state is InstanceState.IDLE
        )

    def idle_instances(self, f: FunctionId) -> list[Instance]:
        """Idle instances of ``f``, least recently idle first."""
        self.check_function(f)
        idle = [
            self._instances[i] for i in self._by_function[f]
            if self._instances[i].state is InstanceState.IDLE
        ]
        idle.sort(key=lambda k: (k.state_entered_at, k.id))
        return idle

    def all_idle_instances(self) -> list[Instance]:
        """Every idle instance on the server, least recently idle first."""
        idle = [k for k in self._instances.values() if k.state is InstanceState.IDLE]
        idle.sort(key=lambda k: (k.state_entered_at, k.id))
        return idle

    def instance_count(self, f: FunctionId) -> int:
        """Instances dedicated to ``f``: Initializing, Idle, or Busy ones plus
        evictions in flight whose slot is promised to ``f``.

        Evicting instances of ``f`` itself are leaving and do not count.
        """
        self.check_function(f)
        owned = sum(
            1 for i in self._by_function[f]
            if self._instances[i].state is not InstanceState.EVICTING
        )
        return owned + self._pending_arrivals[f]

    def add_pending_arrival(self, f: FunctionId) -> None:
        self.check_function(f)
        self._pending_arrivals[f] += 1

    def remove_pending_arrival(self, f: FunctionId) -> None:
        self._pending_arrivals[f] -= 1
        assert self._pending_arrivals[f] >= 0

    def pending_arrivals(self, f: FunctionId) -> int:
        self.check_function(f)
        return self._pending_arrivals[f]

    # -- queues --------------------------------------------------------------

    def enqueue(self, f: FunctionId, request_id: RequestId, now: Time) -> None:
        self.check_function(f)
        q = self._queues[f]
        q.append(request_id)
        self._queued.add(request_id)
        if len(q) == 1:
            self._head_since[f] = now

    def pop_head(self, f: FunctionId, now: Time) -> RequestId:
        q = self._queues[f]
        if not q:
            raise LookupError(f"queue of function {f} is empty")
        rid = q.popleft()
        self._queued.discard(rid)
        if q:
            self._head_since[f] = now
        else:
            self._head_since.pop(f, None)
        return rid

    def remove_queued(self, f: FunctionId, request_id: RequestId, now: Time) -> None:
        """Remove a specific request from ``f``'s queue (priority-queue baselines
        may serve out of FIFO order)."""
        q = self._queues[f]
        if request_id not in q:
            raise LookupError(f"request {request_id} is not queued for function {f}")
        was_head = q[0] == request_id
        q.remove(request_id)
        self._queued.discard(request_id)
        if was_head:
            if q:
                self._head_since[f] = now
            else:
                self._head_since.pop(f, None)

    def waiting_count(self, f: FunctionId) -> int:
        self.check_function(f)
        return len(self._queues[f])

    def queue_head(self, f: FunctionId) -> RequestId | None:
        q = self._queues[f]
        return q[0] if q else None

    def queued_requests(self, f: FunctionId) -> list[RequestId]:
        return list(self._queues[f])

    def head_since(self, f: FunctionId) -> Time | None:
        """When the current head of ``f``'s queue became the head."""
        return self._head_since.get(f)

    def is_queued(self, request_id: RequestId) -> bool:
        return request_id in self._queued

    def functions_with_waiting(self) -> list[FunctionId]:
        return sorted(f for f, q in self._queues.items() if q)

    # -- invariants -----------------------------------------------------------

    def assert_quiescent(self, f: FunctionId) -> None:
        """No function may simultaneously hold an idle instance and queued work."""
        if self._queues[f] and self.idle_count(f) > 0:
            raise ContractViolationError(
                f"function {f} has an idle instance while {len(self._queues[f])} requests wait"
            )


def idle_count(server: ServerState, f: FunctionId) -> int:
    """Number of Idle instances of ``f`` on ``server``."""
    return server.idle_count(f)


def total_slots(server: ServerState) -> int:
    """Occupied slots on ``server``, counting every lifecycle state."""
    return server.total_slots()
