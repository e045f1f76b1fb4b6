"""Event loop: ordering, lifecycle operations, determinism, contracts."""

import numpy as np
import pytest

from edgesched.core import (
    CapacityError,
    ContractViolationError,
    FunctionProfile,
    Instance,
    InstanceState,
    InstanceStateError,
    Request,
)
from edgesched.engine import Engine, SimulationConfig, run
from edgesched.schedulers import (
    SCHEDULERS,
    DispatchToIdle,
    Enqueue,
    GoIdle,
    InitializeNew,
    Scheduler,
)
from helpers import random_workload, result_fingerprint

ALL_SCHEDULERS = sorted(SCHEDULERS)


def profile(f=0, cold=5.0, evict=1.0):
    return FunctionProfile(id=f, cold_start=cold, eviction=evict)


class TestRunBasics:
    def test_empty_trace(self):
        res = run([], [profile()], SimulationConfig(capacity=1))
        assert res.requests == []
        assert res.replacement_count == 0

    @pytest.mark.parametrize("name", ALL_SCHEDULERS)
    def test_single_cold_start_then_execution(self, name):
        reqs = [Request(id=0, function_id=0, arrival=0.0, exec_time=10.0)]
        res = run(reqs, [profile(cold=5.0, evict=1.0)],
                  SimulationConfig(capacity=1, scheduler=name))
        r = res.requests[0]
        assert r.start == 5.0
        assert r.completion == 15.0

    def test_unknown_function_rejected(self):
        reqs = [Request(id=0, function_id=9, arrival=0.0, exec_time=1.0)]
        with pytest.raises(ValueError, match="unknown function"):
            run(reqs, [profile(0)], SimulationConfig())

    def test_unsorted_trace_rejected(self):
        reqs = [Request(id=0, function_id=0, arrival=5.0, exec_time=1.0),
                Request(id=1, function_id=0, arrival=1.0, exec_time=1.0)]
        with pytest.raises(ValueError, match="sorted"):
            run(reqs, [profile()], SimulationConfig())

    def test_input_requests_not_mutated(self):
        reqs = [Request(id=0, function_id=0, arrival=0.0, exec_time=10.0)]
        run(reqs, [profile()], SimulationConfig(capacity=1))
        assert reqs[0].start is None and reqs[0].completion is None


class TestColdStartOp:
    def test_occupies_slot_and_schedules_completion(self):
        eng = Engine([], [profile(cold=7.0)], SimulationConfig(capacity=1))
        iid = eng.schedule_cold_start(0)
        assert eng.server.total_slots() == 1
        assert eng.server.instance(iid).state is InstanceState.INITIALIZING
        eng.run()
        assert eng.server.instance(iid).state is InstanceState.IDLE
        assert eng.server.instance(iid).state_entered_at == 7.0

    def test_capacity_error_when_full(self):
        eng = Engine([], [profile()], SimulationConfig(capacity=1))
        eng.schedule_cold_start(0)
        with pytest.raises(CapacityError):
            eng.schedule_cold_start(0)

    def test_two_slots_independent(self):
        eng = Engine([], [profile()], SimulationConfig(capacity=2))
        a = eng.schedule_cold_start(0)
        b = eng.schedule_cold_start(0)
        assert a != b
        assert eng.server.total_slots() == 2
        states = {k.state for k in eng.server.all_instances()}
        assert states == {InstanceState.INITIALIZING}


class TestReplacementOp:
    def test_sequential_delays(self):
        # idle f0 (eviction 1) replaced by f1 (cold start 2): new instance idle at 3
        eng = Engine([], [profile(0, cold=9.0, evict=1.0), profile(1, cold=2.0, evict=5.0)],
                     SimulationConfig(capacity=1))
        eng.server.add_instance(Instance(id=0, function_id=0,
                                         state=InstanceState.IDLE, state_entered_at=0.0))
        eng.schedule_replacement(0, 1)
        assert eng.server.instance(0).state is InstanceState.EVICTING
        assert eng.server.pending_arrivals(1) == 1
        eng.run()
        (k,) = eng.server.all_instances()
        assert k.function_id == 1
        assert k.state is InstanceState.IDLE
        assert k.state_entered_at == 3.0
        assert eng.replacement_count == 1
        assert eng.eviction_events == [(0, 0.0, 1.0)]

    def test_busy_victim_rejected(self):
        eng = Engine([], [profile(0), profile(1)], SimulationConfig(capacity=1))
        k = Instance(id=0, function_id=0, state=InstanceState.BUSY, state_entered_at=0.0)
        eng.server.add_instance(k)
        with pytest.raises(InstanceStateError):
            eng.schedule_replacement(0, 1)

    def test_permitted_with_free_slots(self):
        # whether to replace instead of using a free slot is policy, not mechanism
        eng = Engine([], [profile(0), profile(1)], SimulationConfig(capacity=2))
        eng.server.add_instance(Instance(id=0, function_id=0,
                                         state=InstanceState.IDLE, state_entered_at=0.0))
        eng.schedule_replacement(0, 1)
        assert eng.server.pending_arrivals(1) == 1


class TestOrderingAndCausality:
    def test_completion_processed_before_same_instant_arrival(self):
        # second request arrives exactly when the first completes: the slot is
        # already free, so it starts at its arrival timestamp
        reqs = [Request(id=0, function_id=0, arrival=0.0, exec_time=95.0),
                Request(id=1, function_id=0, arrival=100.0, exec_time=10.0)]
        res = run(reqs, [profile(cold=5.0)], SimulationConfig(capacity=1, scheduler="esff"))
        assert res.requests[0].completion == 100.0
        assert res.requests[1].start == 100.0

    @pytest.mark.parametrize("name", ALL_SCHEDULERS)
    def test_conservation_and_causality(self, name):
        rng = np.random.default_rng(123)
        reqs, profiles = random_workload(rng, n_functions=5, n_requests=200)
        res = run(reqs, profiles, SimulationConfig(capacity=4, scheduler=name))
        assert len(res.requests) == len(reqs)
        assert sorted(r.id for r in res.requests) == sorted(r.id for r in reqs)
        for r in res.requests:
            assert r.start is not None and r.start >= r.arrival
            assert r.completion == pytest.approx(r.start + r.exec_time, abs=1e-9)


class TestDeterminism:
    @pytest.mark.parametrize("name", ALL_SCHEDULERS)
    def test_identical_runs(self, name):
        rng1 = np.random.default_rng(7)
        rng2 = np.random.default_rng(7)
        cfg = SimulationConfig(capacity=3, scheduler=name)
        a = run(*random_workload(rng1, n_requests=150), cfg)
        b = run(*random_workload(rng2, n_requests=150), cfg)
        assert result_fingerprint(a) == result_fingerprint(b)


class TestEventLog:
    def test_format_and_presence(self):
        reqs = [Request(id=0, function_id=0, arrival=0.0, exec_time=10.0)]
        cfg = SimulationConfig(capacity=1, scheduler="fifo", record_events=True)
        res = run(reqs, [profile(cold=5.0)], cfg)
        assert res.event_log == [
            "0.000000,arrival,0,,0",
            "5.000000,cold_start_done,0,0,",
            "15.000000,execution_done,0,0,0",
        ]

    def test_disabled_by_default(self):
        reqs = [Request(id=0, function_id=0, arrival=0.0, exec_time=10.0)]
        res = run(reqs, [profile()], SimulationConfig(capacity=1))
        assert res.event_log == []


class _Hostile(Scheduler):
    """Configurable misbehaving scheduler for contract tests."""

    def __init__(self, arrival_actions=None, completion_actions=None):
        self._arrival = arrival_actions
        self._completion = completion_actions

    def on_arrival(self, request, server, stats):
        return self._arrival(request, server)

    def on_completion(self, instance_id, server, stats):
        return self._completion(instance_id, server)


class TestSchedulerContracts:
    def _trace(self, n=2, gap=1.0):
        return [Request(id=i, function_id=0, arrival=i * gap, exec_time=10.0)
                for i in range(n)]

    def test_unresolved_arrival(self):
        sched = _Hostile(arrival_actions=lambda r, s: [])
        with pytest.raises(ContractViolationError, match="exactly one"):
            run(self._trace(1), [profile()], SimulationConfig(capacity=1), sched)

    def test_double_resolution(self):
        sched = _Hostile(arrival_actions=lambda r, s: [Enqueue(r.id), Enqueue(r.id)])
        with pytest.raises(ContractViolationError, match="exactly one"):
            run(self._trace(1), [profile()], SimulationConfig(capacity=1), sched)

    def test_initialize_beyond_capacity(self):
        sched = _Hostile(
            arrival_actions=lambda r, s: [InitializeNew(0), InitializeNew(0), Enqueue(r.id)])
        with pytest.raises(ContractViolationError, match="full server"):
            run(self._trace(1), [profile()], SimulationConfig(capacity=1), sched)

    def test_dispatch_to_nonidle_instance(self):
        def arrival(r, server):
            if r.id == 0:
                return [InitializeNew(0), Enqueue(r.id)]
            return [DispatchToIdle(0, r.id)]  # instance 0 is busy with request 0
        sched = _Hostile(arrival_actions=arrival,
                         completion_actions=lambda k, s: [GoIdle(k)])
        with pytest.raises(ContractViolationError, match="non-idle"):
            run(self._trace(2), [profile(cold=0.5)], SimulationConfig(capacity=2), sched)

    def test_idle_instance_left_with_queued_work(self):
        def arrival(r, server):
            if r.id == 0:
                return [InitializeNew(0), Enqueue(r.id)]
            return [Enqueue(r.id)]
        sched = _Hostile(arrival_actions=arrival,
                         completion_actions=lambda k, s: [GoIdle(k)])
        with pytest.raises(ContractViolationError, match="idle instance while"):
            run(self._trace(2), [profile(cold=0.5)], SimulationConfig(capacity=2), sched)

    def test_timer_in_past_rejected(self):
        eng = Engine([], [profile()], SimulationConfig(capacity=1))
        eng.now = 50.0
        with pytest.raises(ValueError, match="past"):
            eng.arm_timer(0, 10.0)
