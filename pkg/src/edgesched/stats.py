"""Online per-function history estimators and end-of-run metrics.

Schedulers never see ground-truth durations directly; they read the running
means kept here, which the engine feeds as requests complete, cold starts
finish, and evictions finish. Before a function has any history of its own,
the estimator answers with a prior (the global mean so far, or a constant).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .core import FunctionId, Request, Time

if TYPE_CHECKING:
    from .engine import SimulationResult

PRIOR_GLOBAL = "global"
PRIOR_CONSTANT = "constant"

MS_PER_MINUTE = 60_000.0


@dataclass
class RunningMean:
    count: int = 0
    mean: float = 0.0

    def record(self, x: float) -> None:
        self.count += 1
        self.mean += (x - self.mean) / self.count


class RuntimeStats:
    """Running per-function means of execution, cold-start, and eviction time.

    ``prior_mode`` controls what an unseen function reports: ``"global"``
    falls back to the running mean over all functions (then to the constant
    if nothing at all has been observed); ``"constant"`` always reports the
    configured constant.
    """

    def __init__(
        self,
        prior_mode: str = PRIOR_GLOBAL,
        exec_prior: Time = 1000.0,
        cold_start_prior: Time = 1000.0,
        eviction_prior: Time = 1000.0,
    ):
        if prior_mode not in (PRIOR_GLOBAL, PRIOR_CONSTANT):
            raise ValueError(f"unknown prior mode {prior_mode!r}")
        self.prior_mode = prior_mode
        self._priors = {
            "exec": exec_prior,
            "cold_start": cold_start_prior,
            "eviction": eviction_prior,
        }
        self._per_function: dict[str, dict[FunctionId, RunningMean]] = {
            "exec": {}, "cold_start": {}, "eviction": {},
        }
        self._global = {
            "exec": RunningMean(), "cold_start": RunningMean(), "eviction": RunningMean(),
        }

    def _record(self, quantity: str, f: FunctionId, observed: Time) -> None:
        self._per_function[quantity].setdefault(f, RunningMean()).record(observed)
        self._global[quantity].record(observed)

    def record_execution(self, f: FunctionId, observed: Time) -> None:
        if observed <= 0:
            raise ValueError(f"execution observation must be > 0, got {observed}")
        self._record("exec", f, observed)

    def record_cold_start(self, f: FunctionId, observed: Time) -> None:
        if observed < 0:
            raise ValueError(f"cold-start observation must be >= 0, got {observed}")
        self._record("cold_start", f, observed)

    def record_eviction(self, f: FunctionId, observed: Time) -> None:
        if observed < 0:
            raise ValueError(f"eviction observation must be >= 0, got {observed}")
        self._record("eviction", f, observed)

    def _estimate(self, quantity: str, f: FunctionId) -> Time:
        own = self._per_function[quantity].get(f)
        if own is not None and own.count > 0:
            return own.mean
        if self.prior_mode == PRIOR_GLOBAL and self._global[quantity].count > 0:
            return self._global[quantity].mean
        return self._priors[quantity]

    def avg_exec(self, f: FunctionId) -> Time:
        return self._estimate("exec", f)

    def avg_cold_start(self, f: FunctionId) -> Time:
        return self._estimate("cold_start", f)

    def avg_eviction(self, f: FunctionId) -> Time:
        return self._estimate("eviction", f)

    def estimate(self, f: FunctionId) -> tuple[Time, Time, Time]:
        """(avg_exec, avg_cold_start, avg_eviction) for ``f``."""
        return self.avg_exec(f), self.avg_cold_start(f), self.avg_eviction(f)

    def observation_count(self, quantity: str, f: FunctionId) -> int:
        rm = self._per_function[quantity].get(f)
        return rm.count if rm is not None else 0


def nearest_rank_percentile(sorted_values: np.ndarray, p: float) -> float:
    """Nearest-rank percentile of an ascending array (no interpolation)."""
    n = len(sorted_values)
    if n == 0:
        raise ValueError("no samples")
    rank = max(1, math.ceil(p / 100.0 * n))
    return float(sorted_values[rank - 1])


@dataclass
class MetricsReport:
    """Aggregate view of one simulation run.

    ``avg_cold_start_time`` spreads the total cold-start milliseconds over
    all requests; ``avg_cold_start_per_event`` is the mean duration of the
    cold starts that actually happened.
    """

    request_count: int
    avg_response_time: Time
    avg_slowdown: float
    avg_cold_start_time: Time
    avg_cold_start_per_event: Time
    cold_start_count: int
    eviction_count: int
    replacement_count: int
    response_time_percentiles: dict[int, Time]
    response_cdf: np.ndarray
    slowdown_cdf: np.ndarray
    per_minute: list[tuple[int, int, Time]] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        d = {
            "request_count": self.request_count,
            "avg_response_ms": self.avg_response_time,
            "avg_slowdown": self.avg_slowdown,
            "avg_cold_start_ms": self.avg_cold_start_time,
            "avg_cold_start_per_event_ms": self.avg_cold_start_per_event,
            "cold_start_count": self.cold_start_count,
            "eviction_count": self.eviction_count,
            "replacement_count": self.replacement_count,
        }
        for p, v in sorted(self.response_time_percentiles.items()):
            d[f"p{p}_response_ms"] = v
        return d

    @staticmethod
    def csv_fields() -> list[str]:
        return [
            "avg_response_ms", "avg_slowdown", "avg_cold_start_ms",
            "p50_response_ms", "p95_response_ms", "p99_response_ms",
        ]

    def to_csv_row(self) -> list[str]:
        pct = self.response_time_percentiles
        return [
            f"{self.avg_response_time:.6f}",
            f"{self.avg_slowdown:.6f}",
            f"{self.avg_cold_start_time:.6f}",
            f"{pct[50]:.6f}",
            f"{pct[95]:.6f}",
            f"{pct[99]:.6f}",
        ]


def compute_metrics(result: "SimulationResult") -> MetricsReport:
    """Reduce a simulation result to the report metrics.

    Every request must have completed; partial runs are a simulator bug and
    rejected here.
    """
    requests = result.requests
    if not requests:
        raise ValueError("empty result")
    for r in requests:
        if r.start is None or r.completion is None:
            raise ValueError(f"request {r.id} did not complete")

    responses = np.array([r.completion - r.arrival for r in requests], dtype=float)
    slowdowns = np.array(
        [(r.completion - r.arrival) / r.exec_time for r in requests], dtype=float
    )
    response_cdf = np.sort(responses)
    slowdown_cdf = np.sort(slowdowns)
    percentiles = {p: nearest_rank_percentile(response_cdf, p) for p in (50, 95, 99)}

    cold_durations = [d for (_f, _t, d) in result.cold_start_events]
    total_cold = float(sum(cold_durations))

    by_minute: dict[int, list[float]] = {}
    for r, resp in zip(requests, responses):
        by_minute.setdefault(int(r.arrival // MS_PER_MINUTE), []).append(resp)
    per_minute = [
        (minute, len(vals), float(np.mean(vals)))
        for minute, vals in sorted(by_minute.items())
    ]

    return MetricsReport(
        request_count=len(requests),
        avg_response_time=float(np.mean(responses)),
        avg_slowdown=float(np.mean(slowdowns)),
        avg_cold_start_time=total_cold / len(requests),
        avg_cold_start_per_event=(total_cold / len(cold_durations)) if cold_durations else 0.0,
        cold_start_count=len(cold_durations),
        eviction_count=len(result.eviction_events),
        replacement_count=result.replacement_count,
        response_time_percentiles=percentiles,
        response_cdf=response_cdf,
        slowdown_cdf=slowdown_cdf,
        per_minute=per_minute,
    )


def write_requests_csv(requests: Iterable[Request], path) -> None:
    """Dump per-request records: request_id,function_id,arrival_ms,start_ms,completion_ms,exec_ms."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["request_id", "function_id", "arrival_ms", "start_ms", "completion_ms", "exec_ms"])
        for r in requests:
            w.writerow([
                r.id, r.function_id,
                f"{r.arrival:.6f}", f"{r.start:.6f}", f"{r.completion:.6f}", f"{r.exec_time:.6f}",
            ])
