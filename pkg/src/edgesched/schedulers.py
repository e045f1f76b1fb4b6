"""Scheduler interface and the five policies.

A scheduler is driven by the engine through two hooks, one at request
arrival and one at request completion (plus an optional timer hook used by
the wait-threshold baseline). Hooks return a list of actions; the engine
validates and applies them, failing fast on anything that contradicts the
server state.

Policies:

* ``esff``         - weight-based creation and replacement policies (below).
* ``fifo``         - single central queue in arrival order, eager instance
                     creation, LRU-idle replacement (OpenWhisk-style).
* ``openwhisk-v2`` - per-function queues; a queue head waiting longer than a
                     threshold triggers instance creation.
* ``faascache``    - like ``fifo`` but victims are picked by a keep-alive
                     priority (recency + recreation cost).
* ``sff``          - like ``fifo`` but the central queue is ordered by the
                     function's estimated execution time.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

from .core import (
    FunctionId,
    Instance,
    InstanceId,
    InstanceState,
    RequestId,
    ServerState,
    Time,
)
from .stats import RuntimeStats

COUNT_SOURCE_CANDIDATE = "candidate"
COUNT_SOURCE_VICTIM = "victim"

_EPS = 1e-9


@dataclass(frozen=True)
class ArrivingRequest:
    """What a scheduler is allowed to see of a newly arrived request.

    Ground-truth execution time is deliberately absent: schedulers only
    learn durations through the history estimators.
    """

    id: RequestId
    function_id: FunctionId
    arrival: Time


@dataclass(frozen=True)
class DispatchToIdle:
    instance_id: InstanceId
    request_id: RequestId


@dataclass(frozen=True)
class Enqueue:
    request_id: RequestId


@dataclass(frozen=True)
class InitializeNew:
    function_id: FunctionId


@dataclass(frozen=True)
class Replace:
    victim_instance_id: InstanceId
    function_id: FunctionId


@dataclass(frozen=True)
class TakeFromQueue:
    instance_id: InstanceId
    request_id: RequestId


@dataclass(frozen=True)
class GoIdle:
    instance_id: InstanceId


SchedulerAction = (
    DispatchToIdle | Enqueue | InitializeNew | Replace | TakeFromQueue | GoIdle
)


class Scheduler:
    """Base scheduler. Subclasses implement the two decision hooks."""

    name = "base"

    def bind(self, services) -> None:
        """Called once before the run; ``services`` offers the current clock
        (``services.now``) and ``services.arm_timer(function_id, at)``."""
        self.services = services

    def on_arrival(
        self, request: ArrivingRequest, server: ServerState, stats: RuntimeStats
    ) -> list[SchedulerAction]:
        raise NotImplementedError

    def on_completion(
        self, instance_id: InstanceId, server: ServerState, stats: RuntimeStats
    ) -> list[SchedulerAction]:
        raise NotImplementedError

    def on_timer(
        self, function_id: FunctionId, server: ServerState, stats: RuntimeStats
    ) -> list[SchedulerAction]:
        return []


def _lru_idle_victim(server: ServerState, exclude: FunctionId) -> Instance | None:
    candidates = [k for k in server.all_idle_instances() if k.function_id != exclude]
    return candidates[0] if candidates else None  # already least-recently-idle first


# ---------------------------------------------------------------------------
# ESFF
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionSnapshot:
    """Per-function inputs captured at decision time, for replaying the
    weight formulas independently of the scheduler."""

    waiting: int
    instances: int
    idle: int
    avg_exec: Time
    avg_cold_start: Time
    avg_eviction: Time


@dataclass(frozen=True)
class EsffDecision:
    time: Time
    hook: str  # "arrival" | "completion"
    function_id: FunctionId
    actions: tuple[SchedulerAction, ...]
    snapshot: dict[FunctionId, FunctionSnapshot]
    total_slots: int
    capacity: int
    victim_function: FunctionId | None = None  # set when an action is Replace


def creation_estimate(waiting: int, avg_cold_start: Time, instances: int, avg_exec: Time) -> float:
    """Estimated number of waiting requests left for a new instance once its
    cold start finishes: existing instances drain cold_start/exec each."""
    return waiting + 1 - (avg_cold_start * instances) / avg_exec


def replacement_estimate(
    waiting: int,
    avg_cold_start: Time,
    victim_avg_eviction: Time,
    instances: int,
    avg_exec: Time,
) -> float:
    """Like :func:`creation_estimate`, but the transition also waits out the
    victim's eviction."""
    return waiting + 1 - ((avg_cold_start + victim_avg_eviction) * instances) / avg_exec


class EsffScheduler(Scheduler):
    """Enhanced shortest-function-first.

    On arrival, the creation policy initializes a new instance only when the
    estimate says at least one waiting request will still be there for it;
    at full capacity it may instead evict an idle instance of the candidate
    with the largest average execution time. On completion, the replacement
    policy compares function weights (scheduling urgency) and hands the slot
    to the most urgent waiting function when that strictly lowers the weight.
    """

    name = "esff"

    def __init__(self, count_source: str = COUNT_SOURCE_CANDIDATE, record_decisions: bool = False):
        if count_source not in (COUNT_SOURCE_CANDIDATE, COUNT_SOURCE_VICTIM):
            raise ValueError(f"unknown count_source {count_source!r}")
        self.count_source = count_source
        self.record_decisions = record_decisions
        self.decisions: list[EsffDecision] = []

    def _snapshot(self, server: ServerState, stats: RuntimeStats) -> dict[FunctionId, FunctionSnapshot]:
        return {
            f: FunctionSnapshot(
                waiting=server.waiting_count(f),
                instances=server.instance_count(f),
                idle=server.idle_count(f),
                avg_exec=stats.avg_exec(f),
                avg_cold_start=stats.avg_cold_start(f),
                avg_eviction=stats.avg_eviction(f),
            )
            for f in server.function_ids
        }

    def _record(self, hook: str, f: FunctionId, actions: list[SchedulerAction],
                server: ServerState, stats: RuntimeStats) -> None:
        if not self.record_decisions:
            return
        victim_function = None
        for a in actions:
            if isinstance(a, Replace):
                victim_function = server.instance(a.victim_instance_id).function_id
        self.decisions.append(EsffDecision(
            time=self.services.now,
            hook=hook,
            function_id=f,
            actions=tuple(actions),
            snapshot=self._snapshot(server, stats),
            total_slots=server.total_slots(),
            capacity=server.capacity,
            victim_function=victim_function,
        ))

    def on_arrival(self, request, server, stats):
        f = request.function_id
        waiting = server.waiting_count(f)
        idle = server.idle_instances(f)
        if waiting == 0 and idle:
            actions: list[SchedulerAction] = [DispatchToIdle(idle[0].id, request.id)]
            self._record("arrival", f, actions, server, stats)
            return actions
        # idle instances coexisting with a queue is unreachable: immediate
        # dispatch drains queues before an instance ever rests idle
        assert not idle, f"function {f} has idle instances and a non-empty queue"

        actions = []
        avg_exec_f = stats.avg_exec(f)
        avg_cold_f = stats.avg_cold_start(f)
        k_f = server.instance_count(f)
        if server.total_slots() < server.capacity:
            if creation_estimate(waiting, avg_cold_f, k_f, avg_exec_f) > 0:
                actions.append(InitializeNew(f))
        else:
            best: tuple[float, FunctionId] | None = None
            with_idle = sorted({k.function_id for k in server.all_idle_instances()})
            for g in with_idle:
                if g == f:
                    continue
                estimate = replacement_estimate(
                    waiting, avg_cold_f, stats.avg_eviction(g), k_f, avg_exec_f
                )
                if estimate <= 0:
                    continue
                key = (-stats.avg_exec(g), g)  # largest avg exec, ties by id
                if best is None or key < best:
                    best = key
            if best is not None:
                g = best[1]
                victim = server.idle_instances(g)[0]
                actions.append(Replace(victim.id, f))
        actions.append(Enqueue(request.id))
        self._record("arrival", f, actions, server, stats)
        return actions

    def on_completion(self, instance_id, server, stats):
        k = server.instance(instance_id)
        f = k.function_id
        waiting_f = server.waiting_count(f)
        k_count_f = server.instance_count(f)
        avg_evict_f = stats.avg_eviction(f)
        if waiting_f > 0:
            own_weight = stats.avg_exec(f) + (avg_evict_f * k_count_f) / waiting_f
        else:
            # nothing waiting here: any viable candidate should win the slot
            own_weight = float("inf")

        best_weight = own_weight
        best_fn: FunctionId | None = None
        for g in server.functions_with_waiting():
            if g == f:
                continue
            count_for_estimate = (
                server.instance_count(g)
                if self.count_source == COUNT_SOURCE_CANDIDATE
                else k_count_f
            )
            estimate = replacement_estimate(
                server.waiting_count(g), stats.avg_cold_start(g), avg_evict_f,
                count_for_estimate, stats.avg_exec(g),
            )
            if estimate <= 0:
                continue
            weight = stats.avg_exec(g) + (
                (stats.avg_cold_start(g) + stats.avg_eviction(g)) * (k_count_f + 1)
            ) / estimate
            if weight < best_weight:  # strict: equal weights keep the incumbent
                best_weight = weight
                best_fn = g

        if best_fn is not None:
            actions: list[SchedulerAction] = [Replace(instance_id, best_fn)]
        elif waiting_f > 0:
            actions = [TakeFromQueue(instance_id, server.queue_head(f))]
        else:
            actions = [GoIdle(instance_id)]
        self._record("completion", f, actions, server, stats)
        return actions


# ---------------------------------------------------------------------------
# Central-queue baselines (fifo, faascache, sff)
# ---------------------------------------------------------------------------

class _CentralQueueScheduler(Scheduler):
    """Shared mechanics of the arrival-ordered baselines.

    The conceptual central queue is realized as the engine's per-function
    FIFO queues plus lazy heaps kept here that define the serving order
    (arrival order for fifo/faascache, estimated-exec order for sff).
    """

    def __init__(self):
        self._seq = itertools.count()
        self._global: list[tuple] = []  # (key..., request_id, function_id)
        self._per_function: dict[FunctionId, list[tuple]] = {}

    def _order_key(self, request: ArrivingRequest, stats: RuntimeStats) -> tuple:
        raise NotImplementedError

    def _victim_key(self, instance: Instance, stats: RuntimeStats) -> tuple:
        """Lower key = evicted first. Default: least recently idle."""
        return (instance.state_entered_at, instance.id)

    def _pick_victim(self, server: ServerState, stats: RuntimeStats,
                     exclude: FunctionId) -> Instance | None:
        candidates = [k for k in server.all_idle_instances() if k.function_id != exclude]
        if not candidates:
            return None
        return min(candidates, key=lambda k: (self._victim_key(k, stats), k.id))

    def _remember(self, request: ArrivingRequest, stats: RuntimeStats) -> None:
        entry = (*self._order_key(request, stats), request.id, request.function_id)
        heapq.heappush(self._global, entry)
        heapq.heappush(self._per_function.setdefault(request.function_id, []), entry)

    def _head(self, heap: list[tuple], server: ServerState) -> tuple[RequestId, FunctionId] | None:
        while heap and not server.is_queued(heap[0][-2]):
            heapq.heappop(heap)
        if not heap:
            return None
        return heap[0][-2], heap[0][-1]

    def on_arrival(self, request, server, stats):
        f = request.function_id
        idle = server.idle_instances(f)
        if idle and server.waiting_count(f) == 0:
            return [DispatchToIdle(idle[0].id, request.id)]
        actions: list[SchedulerAction] = []
        if server.free_slots() > 0:
            actions.append(InitializeNew(f))
        else:
            victim = self._pick_victim(server, stats, exclude=f)
            if victim is not None:
                actions.append(Replace(victim.id, f))
        actions.append(Enqueue(request.id))
        self._remember(request, stats)
        return actions

    def on_completion(self, instance_id, server, stats):
        k = server.instance(instance_id)
        f = k.function_id
        if server.waiting_count(f) > 0:
            own = self._head(self._per_function.get(f, []), server)
            assert own is not None
            return [TakeFromQueue(instance_id, own[0])]
        head = self._head(self._global, server)
        if head is None:
            return [GoIdle(instance_id)]
        _rid, g = head
        victim = self._pick_victim(server, stats, exclude=g)
        if victim is None:
            return [GoIdle(instance_id)]
        return [Replace(victim.id, g)]


class FifoScheduler(_CentralQueueScheduler):
    """Arrival-ordered central queue with eager creation and LRU replacement."""

    name = "fifo"

    def _order_key(self, request, stats):
        return (next(self._seq),)


class FaasCacheScheduler(FifoScheduler):
    """Fifo dispatch, but idle instances carry a keep-alive priority of
    last-use time + estimated recreation value (exec + cold start); the
    lowest-priority idle instance is evicted first."""

    name = "faascache"

    def _victim_key(self, instance, stats):
        g = instance.function_id
        priority = instance.state_entered_at + stats.avg_exec(g) + stats.avg_cold_start(g)
        return (priority, instance.id)


class SffScheduler(_CentralQueueScheduler):
    """Central priority queue keyed by the function's average execution time
    estimate, snapshotted when the request is enqueued; ties in arrival order."""

    name = "sff"

    def _order_key(self, request, stats):
        return (stats.avg_exec(request.function_id), next(self._seq))


# ---------------------------------------------------------------------------
# OpenWhisk V2
# ---------------------------------------------------------------------------

class OpenWhiskV2Scheduler(Scheduler):
    """Per-function queues with a wait threshold on the queue head.

    A function with no instance at all gets one immediately on arrival (there
    is nothing the queue could wait for); otherwise a request waits in its
    function's queue, and the scheduler scales up only once the head has
    waited the threshold and no replacement instance is already on its way.
    Threshold checks run as timer events; the timer re-arms while the queue
    stays non-empty. A completing instance first drains its own queue and
    otherwise offers itself to the function whose head has been overdue
    the longest.
    """

    name = "openwhisk-v2"

    def __init__(self, wait_threshold: Time = 100.0):
        if wait_threshold < 0:
            raise ValueError("wait threshold must be >= 0")
        self.wait_threshold = wait_threshold
        self._live_timers: dict[FunctionId, int] = {}

    def _arm(self, f: FunctionId, at: Time) -> None:
        self._live_timers[f] = self._live_timers.get(f, 0) + 1
        self.services.arm_timer(f, at)

    @staticmethod
    def _creation_in_flight(server: ServerState, f: FunctionId) -> bool:
        if server.pending_arrivals(f) > 0:
            return True
        return any(
            k.state is InstanceState.INITIALIZING for k in server.instances_of(f)
        )

    def on_arrival(self, request, server, stats):
        f = request.function_id
        idle = server.idle_instances(f)
        if idle and server.waiting_count(f) == 0:
            return [DispatchToIdle(idle[0].id, request.id)]
        becomes_head = server.waiting_count(f) == 0

        actions: list[SchedulerAction] = []
        if server.instance_count(f) == 0:
            if server.free_slots() > 0:
                actions.append(InitializeNew(f))
            else:
                victim = _lru_idle_victim(server, exclude=f)
                if victim is not None:
                    actions.append(Replace(victim.id, f))
        actions.append(Enqueue(request.id))
        if becomes_head and self._live_timers.get(f, 0) == 0:
            self._arm(f, request.arrival + self.wait_threshold)
        return actions

    def on_timer(self, function_id, server, stats):
        f = function_id
        self._live_timers[f] -= 1
        if server.waiting_count(f) == 0:
            return []  # drained; the next enqueue re-arms
        now = self.services.now
        head_since = server.head_since(f)
        if now - head_since < self.wait_threshold - _EPS:
            self._arm(f, head_since + self.wait_threshold)
            return []
        self._arm(f, now + self.wait_threshold)
        if self._creation_in_flight(server, f):
            return []
        if server.free_slots() > 0:
            return [InitializeNew(f)]
        victim = _lru_idle_victim(server, exclude=f)
        if victim is not None:
            return [Replace(victim.id, f)]
        return []

    def on_completion(self, instance_id, server, stats):
        k = server.instance(instance_id)
        f = k.function_id
        if server.waiting_count(f) > 0:
            return [TakeFromQueue(instance_id, server.queue_head(f))]
        now = self.services.now
        overdue: list[tuple[Time, FunctionId]] = []
        for g in server.functions_with_waiting():
            if g == f or self._creation_in_flight(server, g):
                continue
            since = server.head_since(g)
            if now - since >= self.wait_threshold - _EPS:
                overdue.append((since, g))
        if overdue:
            _since, g = min(overdue)
            return [Replace(instance_id, g)]
        return [GoIdle(instance_id)]


SCHEDULERS: dict[str, type[Scheduler]] = {
    EsffScheduler.name: EsffScheduler,
    FifoScheduler.name: FifoScheduler,
    OpenWhiskV2Scheduler.name: OpenWhiskV2Scheduler,
    FaasCacheScheduler.name: FaasCacheScheduler,
    SffScheduler.name: SffScheduler,
}


def make_scheduler(name: str, *, v2_wait_threshold: Time = 100.0,
                   count_source: str = COUNT_SOURCE_CANDIDATE,
                   record_decisions: bool = False) -> Scheduler:
    """Build a scheduler by registry name: esff | fifo | openwhisk-v2 | faascache | sff."""
    try:
        cls = SCHEDULERS[name]
    except KeyError:
        raise ValueError(
            f"unknown scheduler {name!r}; choose from {sorted(SCHEDULERS)}"
        ) from None
    if cls is OpenWhiskV2Scheduler:
        return cls(wait_threshold=v2_wait_threshold)
    if cls is EsffScheduler:
        return cls(count_source=count_source, record_decisions=record_decisions)
    return cls()
