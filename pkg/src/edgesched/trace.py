"""Workload acquisition: invocation-trace parsing, intensity scaling, and
synthetic workload generation.

Trace CSVs carry one row per invocation with header ``func,end_timestamp,
duration`` (milliseconds). The recorded completion stamp is treated as
execution without queueing at the origin, so arrival = end - duration; a
file that already has arrivals can use the alternate header
``func,arrival,duration``.
"""

from __future__ import annotations

import csv
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .core import FunctionId, FunctionProfile, Request, Time


class TraceParseError(ValueError):
    """Malformed trace file; the message carries the offending line number."""


@dataclass(frozen=True)
class TraceRecord:
    function_key: str
    end_timestamp: Time
    duration: Time


def derive_rng(base_seed: int, *labels: str) -> np.random.Generator:
    """Child generator for one purpose, split off the base seed.

    The split hashes each label with CRC-32 and feeds (base_seed, *hashes)
    to a seed sequence, so runs for different purposes (workload, profiles,
    oracle cases, ...) never share a stream and adding one purpose never
    shifts another's draws.
    """
    words = [zlib.crc32(label.encode("utf-8")) for label in labels]
    return np.random.default_rng(np.random.SeedSequence([base_seed, *words]))


def parse_trace(path, limit: int | None = None) -> list[Request]:
    """Read an invocation CSV into arrival-sorted requests.

    Zero durations (below the recorder's precision) become 1 ms. Function
    keys are interned to dense integer ids in order of first appearance.
    Equal arrivals keep file order. ``limit`` keeps the earliest N requests.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceParseError(f"{path}: empty file") from None
        header = [h.strip().lower() for h in header]
        if header == ["func", "end_timestamp", "duration"]:
            arrival_given = False
        elif header == ["func", "arrival", "duration"]:
            arrival_given = True
        else:
            raise TraceParseError(
                f"{path}:1: expected header func,end_timestamp,duration "
                f"(or func,arrival,duration), got {','.join(header)}")

        function_ids: dict[str, FunctionId] = {}
        rows: list[tuple[Time, int, FunctionId, Time]] = []  # (arrival, file_seq, fn, exec)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise TraceParseError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            key = row[0].strip()
            try:
                stamp = float(row[1])
                duration = float(row[2])
            except ValueError as exc:
                raise TraceParseError(f"{path}:{lineno}: {exc}") from None
            if duration < 0:
                raise TraceParseError(f"{path}:{lineno}: negative duration {duration}")
            if duration == 0:
                duration = 1.0
            arrival = stamp if arrival_given else stamp - duration
            if arrival < 0:
                arrival = 0.0
            fid = function_ids.setdefault(key, len(function_ids))
            rows.append((arrival, lineno, fid, duration))

    rows.sort(key=lambda t: (t[0], t[1]))
    if limit is not None:
        rows = rows[:limit]
    return [
        Request(id=i, function_id=fid, arrival=arrival, exec_time=duration)
        for i, (arrival, _seq, fid, duration) in enumerate(rows)
    ]


def apply_intensity(reqs: list[Request], ratio: float) -> list[Request]:
    """Scale inter-arrival gaps by ``ratio`` (> 1 lightens load, < 1
    intensifies). The first arrival stays anchored; execution times are
    untouched."""
    if ratio <= 0:
        raise ValueError(f"intensity ratio must be > 0, got {ratio}")
    if not reqs:
        return []
    out = [replace(reqs[0])]
    for prev, cur in zip(reqs, reqs[1:]):
        if cur.arrival < prev.arrival:
            raise ValueError("requests must be sorted by arrival")
        out.append(replace(cur, arrival=out[-1].arrival + (cur.arrival - prev.arrival) * ratio))
    return out


def write_trace_csv(reqs: list[Request], path, function_keys: dict[FunctionId, str] | None = None) -> None:
    """Export requests in the input CSV format (round-trips through parse_trace)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["func", "end_timestamp", "duration"])
        for r in reqs:
            key = function_keys[r.function_id] if function_keys else f"f{r.function_id}"
            w.writerow([key, f"{r.arrival + r.exec_time:.6f}", f"{r.exec_time:.6f}"])


def build_profiles(
    function_ids: list[FunctionId],
    cold_start_range: tuple[Time, Time],
    eviction_range: tuple[Time, Time],
    rng: np.random.Generator,
) -> list[FunctionProfile]:
    """Draw each function's ground-truth cold-start and eviction delay once,
    uniformly from the configured ranges."""
    profiles = []
    for f in sorted(function_ids):
        cold = float(rng.uniform(*cold_start_range))
        evict = float(rng.uniform(*eviction_range))
        profiles.append(FunctionProfile(id=f, cold_start=cold, eviction=evict))
    return profiles


@dataclass
class SyntheticSpec:
    """Recipe for a deterministic synthetic workload.

    Execution-time distributions (per function, shared by its requests
    unless ``exec_jitter`` > 0):

    * ``uniform``  - params ``low``, ``high``
    * ``constant`` - param ``value``
    * ``bimodal``  - params ``long_fraction``, ``long_low``, ``long_high``,
      ``short_low``, ``short_high``; the first round(F * long_fraction)
      functions are the long ones.

    Arrival processes:

    * ``poisson`` - params ``rate_per_sec``; functions drawn uniformly.
    * ``bursts``  - params ``burst_gap_ms`` (mean, exponential),
      ``burst_size_low``/``burst_size_high``, ``burst_span_ms``, and
      ``background_rate_per_sec``. Bursts draw one short-pool function each;
      the background process draws from the long pool (whole pool when the
      exec distribution is not bimodal).
    """

    function_count: int
    exec_distribution: str = "uniform"
    exec_params: dict = field(default_factory=lambda: {"low": 100.0, "high": 1000.0})
    arrival_process: str = "poisson"
    arrival_params: dict = field(default_factory=lambda: {"rate_per_sec": 10.0})
    horizon_ms: float = 60_000.0
    max_requests: int | None = None
    exec_jitter: float = 0.0
    cold_start_range: tuple[Time, Time] = (500.0, 1500.0)
    eviction_range: tuple[Time, Time] = (500.0, 1500.0)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.function_count < 1:
            raise ValueError("function_count must be >= 1")
        if self.horizon_ms <= 0:
            raise ValueError("horizon must be positive")
        if self.max_requests is not None and self.max_requests < 1:
            raise ValueError("max_requests must be >= 1")
        if self.exec_jitter < 0:
            raise ValueError("exec_jitter must be >= 0")


def _exec_bases(spec: SyntheticSpec, rng: np.random.Generator) -> tuple[np.ndarray, list[int], list[int]]:
    """Per-function base execution times plus (long_pool, short_pool) ids."""
    f = spec.function_count
    p = spec.exec_params
    if spec.exec_distribution == "uniform":
        bases = rng.uniform(p["low"], p["high"], f)
        pool = list(range(f))
        return bases, pool, pool
    if spec.exec_distribution == "constant":
        return np.full(f, float(p["value"])), list(range(f)), list(range(f))
    if spec.exec_distribution == "bimodal":
        n_long = max(1, round(f * p["long_fraction"]))
        if n_long >= f:
            raise ValueError("bimodal needs at least one short function")
        bases = np.empty(f)
        bases[:n_long] = rng.uniform(p["long_low"], p["long_high"], n_long)
        bases[n_long:] = rng.uniform(p["short_low"], p["short_high"], f - n_long)
        return bases, list(range(n_long)), list(range(n_long, f))
    raise ValueError(f"unknown exec distribution {spec.exec_distribution!r}")


def _poisson_times(rate_per_sec: float, horizon_ms: float, rng: np.random.Generator) -> list[float]:
    if rate_per_sec <= 0:
        raise ValueError("rate must be positive")
    mean_gap = 1000.0 / rate_per_sec
    times = []
    t = float(rng.exponential(mean_gap))
    while t < horizon_ms:
        times.append(t)
        t += float(rng.exponential(mean_gap))
    return times


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[Request], list[FunctionProfile]]:
    """Materialize a spec into (arrival-sorted requests, per-function
    profiles). Pure function of the spec: the same spec always yields the
    same workload."""
    rng = derive_rng(spec.rng_seed, "synthetic")
    bases, long_pool, short_pool = _exec_bases(spec, rng)

    arrivals: list[tuple[float, int]] = []  # (time, function)
    p = spec.arrival_params
    if spec.arrival_process == "poisson":
        for t in _poisson_times(p["rate_per_sec"], spec.horizon_ms, rng):
            arrivals.append((t, int(rng.integers(spec.function_count))))
    elif spec.arrival_process == "bursts":
        background = p.get("background_rate_per_sec", 0.0)
        if background > 0:
            for t in _poisson_times(background, spec.horizon_ms, rng):
                arrivals.append((t, int(rng.choice(long_pool))))
        gap = p["burst_gap_ms"]
        if gap <= 0:
            raise ValueError("burst_gap_ms must be positive")
        lo, hi = int(p["burst_size_low"]), int(p["burst_size_high"])
        if lo < 1 or hi < lo:
            raise ValueError("burst sizes must satisfy 1 <= low <= high")
        span = float(p.get("burst_span_ms", 0.0))
        t = float(rng.exponential(gap))
        while t < spec.horizon_ms:
            size = int(rng.integers(lo, hi + 1))
            fn = int(rng.choice(short_pool))
            offsets = np.sort(rng.uniform(0.0, span, size)) if span > 0 else np.zeros(size)
            for off in offsets:
                arrivals.append((t + float(off), fn))
            t += float(rng.exponential(gap))
    else:
        raise ValueError(f"unknown arrival process {spec.arrival_process!r}")

    arrivals.sort(key=lambda a: a[0])
    if spec.max_requests is not None:
        arrivals = arrivals[: spec.max_requests]

    requests = []
    for i, (t, fn) in enumerate(arrivals):
        exec_time = float(bases[fn])
        if spec.exec_jitter > 0:
            exec_time *= float(rng.lognormal(0.0, spec.exec_jitter))
        requests.append(Request(id=i, function_id=fn, arrival=t, exec_time=max(exec_time, 1.0)))

    profiles = build_profiles(
        list(range(spec.function_count)), spec.cold_start_range, spec.eviction_range,
        derive_rng(spec.rng_seed, "synthetic", "profiles"),
    )
    return requests, profiles


def blocking_preset() -> tuple[list[Request], list[FunctionProfile], dict]:
    """Two long requests of one function arriving just before three short
    requests of another, on a single-slot server: the blocking scenario where
    arrival-order scheduling suffers most.

    Returns (requests, profiles, config overrides).
    """
    long_fn, short_fn = 0, 1
    requests = [
        Request(id=0, function_id=long_fn, arrival=0.0, exec_time=10_000.0),
        Request(id=1, function_id=long_fn, arrival=100.0, exec_time=10_000.0),
        Request(id=2, function_id=short_fn, arrival=200.0, exec_time=300.0),
        Request(id=3, function_id=short_fn, arrival=250.0, exec_time=300.0),
        Request(id=4, function_id=short_fn, arrival=300.0, exec_time=300.0),
    ]
    profiles = [
        FunctionProfile(id=long_fn, cold_start=400.0, eviction=800.0),
        FunctionProfile(id=short_fn, cold_start=400.0, eviction=800.0),
    ]
    return requests, profiles, {"capacity": 1}


def bursty_preset(seed: int = 0, request_count: int = 10_000) -> SyntheticSpec:
    """Mixed long/short functions with frequent short-function bursts over a
    steady trickle of long requests.

    Sized so a 16-slot server sees real contention while the warm working
    set fits comfortably by 32 slots: replacement churn, and with it the
    per-request cold-start exposure, falls as capacity grows.
    """
    return SyntheticSpec(
        function_count=10,
        exec_distribution="bimodal",
        exec_params={
            "long_fraction": 0.2,
            "long_low": 2_000.0, "long_high": 6_000.0,
            "short_low": 50.0, "short_high": 400.0,
        },
        arrival_process="bursts",
        arrival_params={
            "background_rate_per_sec": 0.2,
            "burst_gap_ms": 700.0,
            "burst_size_low": 2, "burst_size_high": 3,
            "burst_span_ms": 1_200.0,
        },
        horizon_ms=max(3_000_000.0, 400.0 * request_count),
        max_requests=request_count,
        cold_start_range=(200.0, 600.0),
        eviction_range=(200.0, 600.0),
        rng_seed=seed,
    )


PRESETS = {
    "blocking": blocking_preset,
    "bursty": bursty_preset,
}
