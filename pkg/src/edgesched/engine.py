"""Deterministic discrete-event simulation loop.

Events at equal timestamps are ordered completion < eviction-done <
cold-start-done < timer < arrival, then FIFO by insertion: capacity is freed
and queues drained before new work is admitted, so "there exists an idle
instance" is well-defined when the arrival hook runs. Identical inputs
produce identical results, bit for bit.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from enum import IntEnum

from .core import (
    CapacityError,
    ContractViolationError,
    FunctionId,
    FunctionProfile,
    Instance,
    InstanceId,
    InstanceState,
    Request,
    RequestId,
    ServerState,
    Time,
)
from .schedulers import (
    ArrivingRequest,
    DispatchToIdle,
    Enqueue,
    GoIdle,
    InitializeNew,
    Replace,
    Scheduler,
    SchedulerAction,
    TakeFromQueue,
    make_scheduler,
)
from .stats import RuntimeStats


class EventKind(IntEnum):
    """Event kinds; the integer value doubles as the equal-time priority."""

    EXECUTION_DONE = 0
    EVICTION_DONE = 1
    COLD_START_DONE = 2
    TIMER_FIRED = 3
    ARRIVAL = 4


_KIND_LABEL = {
    EventKind.EXECUTION_DONE: "execution_done",
    EventKind.EVICTION_DONE: "eviction_done",
    EventKind.COLD_START_DONE: "cold_start_done",
    EventKind.TIMER_FIRED: "timer",
    EventKind.ARRIVAL: "arrival",
}


@dataclass(frozen=True)
class Event:
    time: Time
    kind: EventKind
    seq: int
    request_id: RequestId | None = None
    instance_id: InstanceId | None = None
    function_id: FunctionId | None = None
    pending: FunctionId | None = None  # eviction-done: function promised the slot

    def sort_key(self) -> tuple[Time, int, int]:
        return (self.time, int(self.kind), self.seq)


@dataclass
class SimulationConfig:
    """Knobs of one simulation run."""

    capacity: int = 16
    rng_seed: int = 0
    cold_start_range: tuple[Time, Time] = (500.0, 1500.0)
    eviction_range: tuple[Time, Time] = (500.0, 1500.0)
    intensity_ratio: float = 1.0
    scheduler: str = "esff"
    v2_wait_threshold: Time = 100.0
    prior_mode: str = "global"
    exec_prior: Time = 1000.0
    cold_start_prior: Time | None = None  # default: midpoint of cold_start_range
    eviction_prior: Time | None = None
    count_source: str = "candidate"
    record_events: bool = False

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        for name, (lo, hi) in (("cold_start_range", self.cold_start_range),
                               ("eviction_range", self.eviction_range)):
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} must satisfy 0 <= lower <= upper, got {(lo, hi)}")
        if self.intensity_ratio <= 0:
            raise ValueError(f"intensity_ratio must be > 0, got {self.intensity_ratio}")
        if self.v2_wait_threshold < 0:
            raise ValueError("v2_wait_threshold must be >= 0")

    def effective_cold_start_prior(self) -> Time:
        if self.cold_start_prior is not None:
            return self.cold_start_prior
        lo, hi = self.cold_start_range
        return (lo + hi) / 2.0

    def effective_eviction_prior(self) -> Time:
        if self.eviction_prior is not None:
            return self.eviction_prior
        lo, hi = self.eviction_range
        return (lo + hi) / 2.0


@dataclass
class SimulationResult:
    """Raw material for the metrics: completed requests (in input order) and
    the transition events that occurred."""

    requests: list[Request]
    cold_start_events: list[tuple[FunctionId, Time, Time]]  # (function, start, duration)
    eviction_events: list[tuple[FunctionId, Time, Time]]
    replacement_count: int
    event_log: list[str] = field(default_factory=list)
    actions: list[tuple[Time, str, SchedulerAction]] = field(default_factory=list)


class Engine:
    """One simulation run: event queue, clock, instance lifecycle, scheduler
    hook dispatch, and scheduler contract enforcement."""

    def __init__(
        self,
        trace: list[Request],
        profiles: list[FunctionProfile],
        config: SimulationConfig,
        scheduler: Scheduler | None = None,
    ):
        self.config = config
        self.profiles: dict[FunctionId, FunctionProfile] = {}
        for p in profiles:
            if p.id in self.profiles:
                raise ValueError(f"duplicate profile for function {p.id}")
            self.profiles[p.id] = p

        self.requests: dict[RequestId, Request] = {}
        self._input_order: list[RequestId] = []
        last_arrival = 0.0
        for r in trace:
            if r.function_id not in self.profiles:
                raise ValueError(f"request {r.id} references unknown function {r.function_id}")
            if r.id in self.requests:
                raise ValueError(f"duplicate request id {r.id}")
            if r.arrival < last_arrival:
                raise ValueError("trace must be sorted by arrival time")
            last_arrival = r.arrival
            self.requests[r.id] = replace(r, start=None, completion=None)
            self._input_order.append(r.id)

        self.server = ServerState(config.capacity, sorted(self.profiles))
        self.stats = RuntimeStats(
            prior_mode=config.prior_mode,
            exec_prior=config.exec_prior,
            cold_start_prior=config.effective_cold_start_prior(),
            eviction_prior=config.effective_eviction_prior(),
        )
        self.scheduler = scheduler if scheduler is not None else make_scheduler(
            config.scheduler,
            v2_wait_threshold=config.v2_wait_threshold,
            count_source=config.count_source,
        )
        self.scheduler.bind(self)

        self.now: Time = 0.0
        self._heap: list[tuple[tuple[Time, int, int], Event]] = []
        self._seq = 0
        self._next_instance_id = 0
        self._completed = 0
        self._touched: set[FunctionId] = set()

        self.cold_start_events: list[tuple[FunctionId, Time, Time]] = []
        self.eviction_events: list[tuple[FunctionId, Time, Time]] = []
        self.replacement_count = 0
        self.event_log: list[str] = []
        self.action_log: list[tuple[Time, str, SchedulerAction]] = []

        for rid in self._input_order:
            r = self.requests[rid]
            self._push(Event(r.arrival, EventKind.ARRIVAL, self._bump(),
                             request_id=rid, function_id=r.function_id))

    # -- event queue ---------------------------------------------------------

    def _bump(self) -> int:
        self._seq += 1
        return self._seq

    def _push(self, event: Event) -> None:
        heapq.heappush(self._heap, (event.sort_key(), event))

    def arm_timer(self, function_id: FunctionId, at: Time) -> None:
        """Schedule a scheduler-owned timer check (wait-threshold policies)."""
        self.server.check_function(function_id)
        if at < self.now:
            raise ValueError(f"cannot arm a timer in the past ({at} < {self.now})")
        self._push(Event(at, EventKind.TIMER_FIRED, self._bump(), function_id=function_id))

    # -- lifecycle operations --------------------------------------------------

    def schedule_cold_start(self, f: FunctionId) -> InstanceId:
        """Occupy a slot with a new Initializing instance of ``f``; its
        cold-start-done event fires after the function's cold-start delay."""
        if self.server.free_slots() == 0:
            raise CapacityError(f"no free slot for a new instance of function {f}")
        self.server.check_function(f)
        instance = Instance(
            id=self._next_instance_id, function_id=f,
            state=InstanceState.INITIALIZING, state_entered_at=self.now,
        )
        self._next_instance_id += 1
        self.server.add_instance(instance)
        self._push(Event(self.now + self.profiles[f].cold_start, EventKind.COLD_START_DONE,
                         self._bump(), instance_id=instance.id, function_id=f))
        self._touched.add(f)
        return instance.id

    def schedule_replacement(self, victim_id: InstanceId, f: FunctionId) -> None:
        """Evict an idle instance and promise its slot to ``f``; the cold
        start begins when the eviction finishes, so the slot stays occupied
        for the whole transition."""
        victim = self.server.instance(victim_id)
        self.server.check_function(f)
        victim.transition(InstanceState.EVICTING, self.now)  # raises unless Idle
        self.server.add_pending_arrival(f)
        self._push(Event(self.now + self.profiles[victim.function_id].eviction,
                         EventKind.EVICTION_DONE, self._bump(),
                         instance_id=victim_id, function_id=victim.function_id, pending=f))
        self.replacement_count += 1
        self._touched.update((victim.function_id, f))

    def _start_execution(self, instance: Instance, request: Request) -> None:
        request.start = self.now
        instance.transition(InstanceState.BUSY, self.now)
        instance.current_request = request.id
        self._push(Event(self.now + request.exec_time, EventKind.EXECUTION_DONE,
                         self._bump(), instance_id=instance.id, request_id=request.id,
                         function_id=request.function_id))

    # -- scheduler actions ------------------------------------------------------

    def _apply(self, actions: list[SchedulerAction], hook: str) -> None:
        for action in actions:
            self.action_log.append((self.now, hook, action))
            if isinstance(action, DispatchToIdle):
                instance = self.server.instance(action.instance_id)
                request = self.requests[action.request_id]
                if instance.state is not InstanceState.IDLE:
                    raise ContractViolationError(
                        f"dispatch to non-idle instance {instance.id} ({instance.state.value})")
                if instance.function_id != request.function_id:
                    raise ContractViolationError(
                        f"dispatch of request {request.id} (function {request.function_id}) "
                        f"to instance of function {instance.function_id}")
                if request.start is not None:
                    raise ContractViolationError(f"request {request.id} already started")
                self._start_execution(instance, request)
                self._touched.add(request.function_id)
            elif isinstance(action, Enqueue):
                request = self.requests[action.request_id]
                if request.start is not None or self.server.is_queued(request.id):
                    raise ContractViolationError(f"request {request.id} cannot be enqueued twice")
                self.server.enqueue(request.function_id, request.id, self.now)
                self._touched.add(request.function_id)
            elif isinstance(action, InitializeNew):
                if self.server.free_slots() == 0:
                    raise ContractViolationError(
                        f"initialize of function {action.function_id} on a full server")
                self.schedule_cold_start(action.function_id)
            elif isinstance(action, Replace):
                victim = self.server.instance(action.victim_instance_id)
                if victim.state is not InstanceState.IDLE:
                    raise ContractViolationError(
                        f"replacement victim {victim.id} is {victim.state.value}, not idle")
                self.schedule_replacement(action.victim_instance_id, action.function_id)
            elif isinstance(action, TakeFromQueue):
                instance = self.server.instance(action.instance_id)
                request = self.requests[action.request_id]
                if instance.state is not InstanceState.IDLE:
                    raise ContractViolationError(
                        f"instance {instance.id} cannot take queued work while "
                        f"{instance.state.value}")
                if instance.function_id != request.function_id:
                    raise ContractViolationError(
                        f"instance of function {instance.function_id} cannot serve "
                        f"request {request.id} of function {request.function_id}")
                self.server.remove_queued(request.function_id, request.id, self.now)
                self._start_execution(instance, request)
                self._touched.add(request.function_id)
            elif isinstance(action, GoIdle):
                instance = self.server.instance(action.instance_id)
                if instance.state is not InstanceState.IDLE:
                    raise ContractViolationError(
                        f"go-idle on instance {instance.id} in state {instance.state.value}")
            else:
                raise ContractViolationError(f"unknown scheduler action {action!r}")

    # -- event handlers -----------------------------------------------------------

    def _handle_arrival(self, event: Event) -> None:
        request = self.requests[event.request_id]
        self._touched.add(request.function_id)
        view = ArrivingRequest(request.id, request.function_id, request.arrival)
        actions = self.scheduler.on_arrival(view, self.server, self.stats)
        resolvers = [
            a for a in actions
            if (isinstance(a, DispatchToIdle) and a.request_id == request.id)
            or (isinstance(a, Enqueue) and a.request_id == request.id)
        ]
        if len(resolvers) != 1:
            raise ContractViolationError(
                f"arrival of request {request.id} must be resolved by exactly one "
                f"dispatch or enqueue, got {actions!r}")
        self._apply(actions, "arrival")

    def _handle_execution_done(self, event: Event) -> None:
        instance = self.server.instance(event.instance_id)
        request = self.requests[event.request_id]
        assert instance.current_request == request.id
        request.completion = self.now
        self._completed += 1
        instance.transition(InstanceState.IDLE, self.now)
        self.stats.record_execution(request.function_id, request.exec_time)
        self._touched.add(request.function_id)
        actions = self.scheduler.on_completion(instance.id, self.server, self.stats)
        self._apply(actions, "completion")

    def _handle_cold_start_done(self, event: Event) -> None:
        instance = self.server.instance(event.instance_id)
        assert instance.state is InstanceState.INITIALIZING
        f = instance.function_id
        duration = self.profiles[f].cold_start
        self.stats.record_cold_start(f, duration)
        self.cold_start_events.append((f, self.now - duration, duration))
        self._touched.add(f)
        if self.server.waiting_count(f) > 0:
            # immediate dispatch: a fresh instance never idles past a queue
            rid = self.server.pop_head(f, self.now)
            self._start_execution(instance, self.requests[rid])
        else:
            instance.transition(InstanceState.IDLE, self.now)

    def _handle_eviction_done(self, event: Event) -> None:
        victim = self.server.remove_instance(event.instance_id)
        assert victim.state is InstanceState.EVICTING
        f = victim.function_id
        duration = self.profiles[f].eviction
        self.stats.record_eviction(f, duration)
        self.eviction_events.append((f, self.now - duration, duration))
        self._touched.add(f)
        if event.pending is not None:
            self.server.remove_pending_arrival(event.pending)
            self.schedule_cold_start(event.pending)

    def _handle_timer(self, event: Event) -> None:
        actions = self.scheduler.on_timer(event.function_id, self.server, self.stats)
        self._touched.add(event.function_id)
        self._apply(actions, "timer")

    # -- main loop ----------------------------------------------------------------

    def run(self) -> SimulationResult:
        handlers = {
            EventKind.ARRIVAL: self._handle_arrival,
            EventKind.EXECUTION_DONE: self._handle_execution_done,
            EventKind.COLD_START_DONE: self._handle_cold_start_done,
            EventKind.EVICTION_DONE: self._handle_eviction_done,
            EventKind.TIMER_FIRED: self._handle_timer,
        }
        while self._heap:
            _key, event = heapq.heappop(self._heap)
            self.now = event.time
            self._touched = set()
            handlers[event.kind](event)
            if self.config.record_events:
                self.event_log.append(self._format_event(event))
            if self.server.total_slots() > self.server.capacity:
                raise ContractViolationError(
                    f"capacity exceeded: {self.server.total_slots()} > {self.server.capacity}")
            for f in self._touched:
                self.server.assert_quiescent(f)

        if self._completed != len(self.requests):
            raise ContractViolationError(
                f"run ended with {len(self.requests) - self._completed} requests not completed")
        for rid in self._input_order:
            r = self.requests[rid]
            assert r.start is not None and r.start >= r.arrival
            assert abs(r.completion - (r.start + r.exec_time)) < 1e-9

        return SimulationResult(
            requests=[self.requests[rid] for rid in self._input_order],
            cold_start_events=self.cold_start_events,
            eviction_events=self.eviction_events,
            replacement_count=self.replacement_count,
            event_log=self.event_log,
            actions=self.action_log,
        )

    def _format_event(self, event: Event) -> str:
        fields = [
            f"{event.time:.6f}",
            _KIND_LABEL[event.kind],
            "" if event.function_id is None else str(event.function_id),
            "" if event.instance_id is None else str(event.instance_id),
            "" if event.request_id is None else str(event.request_id),
        ]
        return ",".join(fields)


def run(
    trace: list[Request],
    profiles: list[FunctionProfile],
    config: SimulationConfig,
    scheduler: Scheduler | None = None,
) -> SimulationResult:
    """Simulate ``trace`` on one edge server and return the completed run.

    ``trace`` must be sorted by arrival. When ``scheduler`` is omitted it is
    built from ``config.scheduler``.
    """
    return Engine(trace, profiles, config, scheduler).run()
