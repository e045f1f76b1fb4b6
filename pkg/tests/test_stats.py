"""Estimators and metrics: running means, priors, report recomputation."""

import numpy as np
import pytest

from edgesched.core import Request
from edgesched.engine import SimulationConfig, SimulationResult, run
from edgesched.stats import (
    MetricsReport,
    RuntimeStats,
    compute_metrics,
    nearest_rank_percentile,
)
from helpers import random_workload


class TestRunningMeans:
    def test_two_observations(self):
        st = RuntimeStats()
        st.record_execution(0, 2.0)
        st.record_execution(0, 4.0)
        assert st.avg_exec(0) == 3.0

    def test_single_observation_identity(self):
        st = RuntimeStats()
        st.record_cold_start(3, 123.0)
        assert st.avg_cold_start(3) == 123.0

    def test_incremental_matches_batch(self):
        rng = np.random.default_rng(0)
        xs = rng.uniform(1.0, 5000.0, 1000)
        st = RuntimeStats()
        for x in xs:
            st.record_execution(7, float(x))
        assert st.avg_exec(7) == pytest.approx(float(np.mean(xs)), rel=1e-9)

    def test_negative_observation_rejected(self):
        st = RuntimeStats()
        with pytest.raises(ValueError):
            st.record_eviction(0, -1.0)
        with pytest.raises(ValueError):
            st.record_execution(0, 0.0)


class TestPriors:
    def test_global_prior_uses_other_functions(self):
        st = RuntimeStats(prior_mode="global", exec_prior=1000.0)
        st.record_execution(0, 200.0)
        st.record_execution(1, 400.0)
        assert st.avg_exec(99) == 300.0

    def test_global_prior_falls_back_to_constant(self):
        st = RuntimeStats(prior_mode="global", exec_prior=1000.0)
        assert st.avg_exec(0) == 1000.0

    def test_constant_prior_ignores_other_functions(self):
        st = RuntimeStats(prior_mode="constant", exec_prior=1000.0)
        st.record_execution(0, 200.0)
        assert st.avg_exec(1) == 1000.0

    def test_own_history_wins_after_first_observation(self):
        st = RuntimeStats(prior_mode="global")
        st.record_execution(0, 9000.0)
        st.record_execution(1, 100.0)
        assert st.avg_exec(1) == 100.0

    def test_estimate_triple(self):
        st = RuntimeStats(exec_prior=10.0, cold_start_prior=20.0, eviction_prior=30.0)
        assert st.estimate(0) == (10.0, 20.0, 30.0)

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            RuntimeStats(prior_mode="magic")


class TestPercentile:
    def test_nearest_rank(self):
        vals = np.array([1.0, 2.0, 3.0, 4.0])
        assert nearest_rank_percentile(vals, 50) == 2.0
        assert nearest_rank_percentile(vals, 99) == 4.0
        assert nearest_rank_percentile(vals, 1) == 1.0


def completed(rid, f, arrival, start, exec_time):
    return Request(id=rid, function_id=f, arrival=arrival, exec_time=exec_time,
                   start=start, completion=start + exec_time)


class TestComputeMetrics:
    def test_single_request(self):
        res = SimulationResult(
            requests=[completed(0, 0, 0.0, 5.0, 10.0)],
            cold_start_events=[(0, 0.0, 5.0)],
            eviction_events=[], replacement_count=0)
        rep = compute_metrics(res)
        assert rep.avg_response_time == 15.0
        assert rep.avg_slowdown == 1.5
        assert rep.avg_cold_start_time == 5.0
        assert rep.response_time_percentiles[99] == 15.0

    def test_instant_service_slowdown_one(self):
        reqs = [completed(i, 0, float(i), float(i), 100.0 + i) for i in range(10)]
        res = SimulationResult(requests=reqs, cold_start_events=[],
                               eviction_events=[], replacement_count=0)
        rep = compute_metrics(res)
        assert rep.avg_slowdown == 1.0
        assert rep.response_time_percentiles[99] == 109.0  # max exec time

    def test_incomplete_request_rejected(self):
        res = SimulationResult(
            requests=[Request(id=0, function_id=0, arrival=0.0, exec_time=1.0)],
            cold_start_events=[], eviction_events=[], replacement_count=0)
        with pytest.raises(ValueError, match="did not complete"):
            compute_metrics(res)

    def test_report_matches_straight_line_recomputation(self):
        rng = np.random.default_rng(42)
        reqs, profiles = random_workload(rng, n_functions=5, n_requests=120)
        res = run(reqs, profiles, SimulationConfig(capacity=4, scheduler="fifo"))
        rep = compute_metrics(res)

        responses = sorted(r.completion - r.arrival for r in res.requests)
        slowdowns = sorted((r.completion - r.arrival) / r.exec_time for r in res.requests)
        n = len(responses)
        assert rep.avg_response_time == pytest.approx(sum(responses) / n, rel=1e-12)
        assert rep.avg_slowdown == pytest.approx(sum(slowdowns) / n, rel=1e-12)
        assert rep.avg_cold_start_time == pytest.approx(
            sum(d for _f, _t, d in res.cold_start_events) / n, rel=1e-12)
        assert list(rep.response_cdf) == responses
        assert list(rep.slowdown_cdf) == slowdowns
        import math
        for p in (50, 95, 99):
            assert rep.response_time_percentiles[p] == responses[math.ceil(p / 100 * n) - 1]

    def test_cdf_monotone_and_complete(self):
        rng = np.random.default_rng(5)
        reqs, profiles = random_workload(rng, n_requests=80)
        res = run(reqs, profiles, SimulationConfig(capacity=3, scheduler="esff"))
        rep = compute_metrics(res)
        assert len(rep.response_cdf) == len(reqs)
        assert all(a <= b for a, b in zip(rep.response_cdf, rep.response_cdf[1:]))
        assert all(s >= 1.0 - 1e-12 for s in rep.slowdown_cdf)
        pct = rep.response_time_percentiles
        assert pct[50] <= pct[95] <= pct[99]

    def test_per_minute_buckets(self):
        reqs = [
            completed(0, 0, 10.0, 10.0, 100.0),
            completed(1, 0, 59_000.0, 59_000.0, 200.0),
            completed(2, 0, 61_000.0, 61_000.0, 300.0),
        ]
        res = SimulationResult(requests=reqs, cold_start_events=[],
                               eviction_events=[], replacement_count=0)
        rep = compute_metrics(res)
        assert rep.per_minute == [(0, 2, 150.0), (1, 1, 300.0)]

    def test_csv_row_shape(self):
        res = SimulationResult(
            requests=[completed(0, 0, 0.0, 5.0, 10.0)],
            cold_start_events=[], eviction_events=[], replacement_count=0)
        rep = compute_metrics(res)
        assert len(rep.to_csv_row()) == len(MetricsReport.csv_fields())
        assert rep.to_json_dict()["avg_response_ms"] == 15.0
