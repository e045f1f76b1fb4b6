"""Offline single-slot scheduling: weight-based optimal sequencing plus an
exhaustive brute-force oracle.

The simplified problem: one instance slot, every request of a function shares
that function's execution time, all requests arrive at time 0, and everything
is known up front. Scheduling reduces to sequencing requests; the optimal
order groups each function's requests contiguously and sorts the groups by
ascending weight ``w = exec + (cold_start + eviction) / request_count``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import FunctionId, Time

MAX_ORACLE_REQUESTS = 10

# Setup-charging conventions for the schedule evaluator:
#   "switch"  - entering a run of f costs eviction-of-previous + cold-start-of-f;
#               the very first run evicts nothing.
#   "uniform" - every run, including the first, pre-pays its own
#               cold-start + eviction. The two totals differ by the
#               order-independent constant sum(n_j * eviction_j).
CHARGE_ON_SWITCH = "switch"
CHARGE_UNIFORM = "uniform"


@dataclass(frozen=True)
class SsfsFunction:
    """One function of the offline problem: shared execution time and the
    number of (simultaneous, time-0) requests."""

    id: FunctionId
    exec_time: Time
    cold_start: Time
    eviction: Time
    request_count: int

    def __post_init__(self) -> None:
        if self.request_count < 1:
            raise ValueError(f"function {self.id}: request_count must be >= 1")
        if self.exec_time <= 0:
            raise ValueError(f"function {self.id}: exec_time must be > 0")
        if self.cold_start < 0 or self.eviction < 0:
            raise ValueError(f"function {self.id}: setup times must be >= 0")


@dataclass(frozen=True)
class SsfsSchedule:
    sequence: tuple[FunctionId, ...]
    total_response_time: Time


def ssfs_weight(f: SsfsFunction) -> float:
    """Scheduling weight: execution time plus setup cost amortized over the
    function's requests. Lower weight runs earlier."""
    return f.exec_time + (f.cold_start + f.eviction) / f.request_count


def _function_map(fs: list[SsfsFunction]) -> dict[FunctionId, SsfsFunction]:
    by_id: dict[FunctionId, SsfsFunction] = {}
    for f in fs:
        if f.id in by_id:
            raise ValueError(f"duplicate function id {f.id}")
        by_id[f.id] = f
    if not by_id:
        raise ValueError("need at least one function")
    return by_id


def evaluate_schedule(
    fs: list[SsfsFunction],
    sequence: list[FunctionId] | tuple[FunctionId, ...],
    convention: str = CHARGE_ON_SWITCH,
) -> Time:
    """Total response time of ``sequence`` on the single-slot server.

    The sequence holds one entry per request. Within a maximal run of the same
    function no setup is charged; entering a run is charged per ``convention``
    (see module constants). All requests arrive at time 0, so each response
    time is simply the request's completion timestamp.
    """
    by_id = _function_map(fs)
    counts: dict[FunctionId, int] = {}
    for fid in sequence:
        if fid not in by_id:
            raise ValueError(f"sequence references unknown function {fid}")
        counts[fid] = counts.get(fid, 0) + 1
    expected = {f.id: f.request_count for f in fs}
    if counts != expected:
        raise ValueError(f"sequence multiplicities {counts} do not match request counts {expected}")
    if convention not in (CHARGE_ON_SWITCH, CHARGE_UNIFORM):
        raise ValueError(f"unknown charging convention {convention!r}")

    clock = 0.0
    total = 0.0
    loaded: FunctionId | None = None
    for fid in sequence:
        f = by_id[fid]
        if fid != loaded:
            if convention == CHARGE_UNIFORM:
                clock += f.cold_start + f.eviction
            else:
                if loaded is not None:
                    clock += by_id[loaded].eviction
                clock += f.cold_start
            loaded = fid
        clock += f.exec_time
        total += clock
    return total


def ssfs_optimal(
    fs: list[SsfsFunction],
    convention: str = CHARGE_ON_SWITCH,
) -> SsfsSchedule:
    """Optimal schedule: contiguous per-function blocks in ascending weight
    order, ties broken by ascending function id."""
    by_id = _function_map(fs)
    order = sorted(by_id.values(), key=lambda f: (ssfs_weight(f), f.id))
    sequence: list[FunctionId] = []
    for f in order:
        sequence.extend([f.id] * f.request_count)
    total = evaluate_schedule(fs, sequence, convention)
    return SsfsSchedule(tuple(sequence), total)


def _distinct_sequences(items: list[FunctionId]):
    """Yield the distinct orderings of a multiset of function ids."""
    remaining = {}
    for fid in items:
        remaining[fid] = remaining.get(fid, 0) + 1
    prefix: list[FunctionId] = []
    n = len(items)

    def extend():
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for fid in sorted(remaining):
            if remaining[fid] == 0:
                continue
            remaining[fid] -= 1
            prefix.append(fid)
            yield from extend()
            prefix.pop()
            remaining[fid] += 1

    yield from extend()


def ssfs_oracle(
    fs: list[SsfsFunction],
    convention: str = CHARGE_ON_SWITCH,
) -> SsfsSchedule:
    """Exhaustive minimum over every distinct request ordering.

    Guarded to small instances; the count of distinct orderings is factorial
    in the total request count.
    """
    by_id = _function_map(fs)
    items: list[FunctionId] = []
    for f in by_id.values():
        items.extend([f.id] * f.request_count)
    if len(items) > MAX_ORACLE_REQUESTS:
        raise ValueError(
            f"oracle limited to {MAX_ORACLE_REQUESTS} requests, got {len(items)}"
        )

    best_seq: tuple[FunctionId, ...] | None = None
    best_total = float("inf")
    for seq in _distinct_sequences(items):
        total = evaluate_schedule(fs, seq, convention)
        if total < best_total:
            best_total = total
            best_seq = seq
    assert best_seq is not None
    return SsfsSchedule(best_seq, best_total)
