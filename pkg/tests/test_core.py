"""Domain types: lifecycle transitions, capacity ledger, queue bookkeeping."""

import pytest

from edgesched.core import (
    CapacityError,
    ContractViolationError,
    FunctionProfile,
    Instance,
    InstanceState,
    InstanceStateError,
    Request,
    ServerState,
    UnknownFunctionError,
    idle_count,
    total_slots,
)


def make_instance(iid, f, state, t=0.0):
    return Instance(id=iid, function_id=f, state=state, state_entered_at=t)


class TestRequest:
    def test_rejects_nonpositive_exec(self):
        with pytest.raises(ValueError):
            Request(id=0, function_id=0, arrival=0.0, exec_time=0.0)

    def test_rejects_negative_arrival(self):
        with pytest.raises(ValueError):
            Request(id=0, function_id=0, arrival=-1.0, exec_time=1.0)

    def test_response_and_slowdown(self):
        r = Request(id=0, function_id=0, arrival=10.0, exec_time=5.0,
                    start=12.0, completion=17.0)
        assert r.response_time == 7.0
        assert r.slowdown == pytest.approx(1.4)


class TestProfile:
    def test_rejects_negative_delays(self):
        with pytest.raises(ValueError):
            FunctionProfile(id=0, cold_start=-1.0, eviction=0.0)


class TestInstanceLifecycle:
    def test_legal_path(self):
        k = make_instance(0, 0, InstanceState.INITIALIZING)
        k.transition(InstanceState.IDLE, 1.0)
        k.transition(InstanceState.BUSY, 2.0)
        k.transition(InstanceState.IDLE, 3.0)
        k.transition(InstanceState.EVICTING, 4.0)
        assert k.state_entered_at == 4.0

    def test_immediate_dispatch_shortcut(self):
        k = make_instance(0, 0, InstanceState.INITIALIZING)
        k.transition(InstanceState.BUSY, 1.0)

    @pytest.mark.parametrize("src,dst", [
        (InstanceState.BUSY, InstanceState.EVICTING),
        (InstanceState.BUSY, InstanceState.BUSY),
        (InstanceState.EVICTING, InstanceState.IDLE),
        (InstanceState.IDLE, InstanceState.INITIALIZING),
    ])
    def test_illegal_transitions(self, src, dst):
        k = make_instance(0, 0, src)
        with pytest.raises(InstanceStateError):
            k.transition(dst, 1.0)

    def test_busy_clears_request_on_exit(self):
        k = make_instance(0, 0, InstanceState.BUSY)
        k.current_request = 7
        k.transition(InstanceState.IDLE, 1.0)
        assert k.current_request is None


class TestServerState:
    def test_idle_count_no_instances(self):
        s = ServerState(4, [0, 1])
        assert idle_count(s, 0) == 0

    def test_idle_count_mixed_states(self):
        s = ServerState(4, [0])
        s.add_instance(make_instance(0, 0, InstanceState.BUSY))
        s.add_instance(make_instance(1, 0, InstanceState.IDLE))
        assert idle_count(s, 0) == 1

    def test_initializing_is_not_idle(self):
        s = ServerState(4, [0])
        s.add_instance(make_instance(0, 0, InstanceState.INITIALIZING))
        s.add_instance(make_instance(1, 0, InstanceState.INITIALIZING))
        assert idle_count(s, 0) == 0

    def test_idle_count_unknown_function(self):
        s = ServerState(4, [0])
        with pytest.raises(UnknownFunctionError):
            s.idle_count(5)

    def test_total_slots_counts_every_state(self):
        s = ServerState(8, [0, 1])
        assert total_slots(s) == 0
        states = [InstanceState.IDLE] * 3 + [InstanceState.EVICTING] + \
                 [InstanceState.INITIALIZING] * 2
        for i, st in enumerate(states):
            s.add_instance(make_instance(i, i % 2, st))
        assert total_slots(s) == 6

    def test_total_slots_at_capacity(self):
        s = ServerState(16, [0])
        for i in range(16):
            s.add_instance(make_instance(i, 0, InstanceState.BUSY))
        assert total_slots(s) == 16
        with pytest.raises(CapacityError):
            s.add_instance(make_instance(16, 0, InstanceState.BUSY))

    def test_idle_instances_lru_order(self):
        s = ServerState(4, [0])
        s.add_instance(make_instance(0, 0, InstanceState.IDLE, t=5.0))
        s.add_instance(make_instance(1, 0, InstanceState.IDLE, t=2.0))
        assert [k.id for k in s.idle_instances(0)] == [1, 0]

    def test_queue_head_since_tracking(self):
        s = ServerState(4, [0])
        s.enqueue(0, 10, now=1.0)
        s.enqueue(0, 11, now=2.0)
        assert s.head_since(0) == 1.0
        assert s.pop_head(0, now=3.0) == 10
        assert s.head_since(0) == 3.0
        s.remove_queued(0, 11, now=4.0)
        assert s.head_since(0) is None
        assert s.waiting_count(0) == 0

    def test_remove_queued_mid_queue_keeps_head(self):
        s = ServerState(4, [0])
        s.enqueue(0, 10, now=1.0)
        s.enqueue(0, 11, now=2.0)
        s.remove_queued(0, 11, now=3.0)
        assert s.head_since(0) == 1.0
        assert s.queue_head(0) == 10

    def test_quiescent_violation_detected(self):
        s = ServerState(4, [0])
        s.add_instance(make_instance(0, 0, InstanceState.IDLE))
        s.enqueue(0, 10, now=1.0)
        with pytest.raises(ContractViolationError):
            s.assert_quiescent(0)

    def test_instance_count_excludes_evicting_includes_pending(self):
        s = ServerState(4, [0, 1])
        s.add_instance(make_instance(0, 0, InstanceState.EVICTING))
        s.add_instance(make_instance(1, 0, InstanceState.BUSY))
        assert s.instance_count(0) == 1
        s.add_pending_arrival(1)
        assert s.instance_count(1) == 1
        s.remove_pending_arrival(1)
        assert s.instance_count(1) == 0
