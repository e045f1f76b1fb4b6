"""Shared generators for randomized tests."""

from __future__ import annotations

import numpy as np

from edgesched.core import FunctionProfile, Request
from edgesched.ssfs import SsfsFunction


def random_ssfs_instance(
    rng: np.random.Generator,
    min_functions: int = 2,
    max_functions: int = 4,
    min_total: int = 3,
    max_total: int = 8,
) -> list[SsfsFunction]:
    """Instance with integer times in [1, 10] so totals are float-exact."""
    nf = int(rng.integers(min_functions, max_functions + 1))
    total = int(rng.integers(max(min_total, nf), max_total + 1))
    counts = [1] * nf
    for _ in range(total - nf):
        counts[int(rng.integers(nf))] += 1
    return [
        SsfsFunction(
            id=j,
            exec_time=float(rng.integers(1, 11)),
            cold_start=float(rng.integers(1, 11)),
            eviction=float(rng.integers(1, 11)),
            request_count=counts[j],
        )
        for j in range(nf)
    ]


def random_workload(
    rng: np.random.Generator,
    n_functions: int = 6,
    n_requests: int = 150,
    horizon_ms: float = 90_000.0,
) -> tuple[list[Request], list[FunctionProfile]]:
    """Small mixed workload for engine property tests."""
    exec_base = rng.uniform(50.0, 6000.0, n_functions)
    arrivals = np.sort(rng.uniform(0.0, horizon_ms, n_requests))
    fns = rng.integers(0, n_functions, n_requests)
    requests = [
        Request(id=i, function_id=int(fns[i]), arrival=float(arrivals[i]),
                exec_time=float(exec_base[fns[i]]))
        for i in range(n_requests)
    ]
    profiles = [
        FunctionProfile(id=f, cold_start=float(rng.uniform(500.0, 1500.0)),
                        eviction=float(rng.uniform(500.0, 1500.0)))
        for f in range(n_functions)
    ]
    return requests, profiles


def replay_esff_decision(decision, count_source: str = "candidate") -> list[str]:
    """Independently recompute the creation/replacement rules from a decision
    snapshot; returns mismatch descriptions (empty when conformant).

    Straight-line reimplementation of the decision rules, kept separate from
    the scheduler so formula bugs cannot hide.
    """
    snap = decision.snapshot
    f = decision.function_id
    s = snap[f]
    acts = decision.actions
    kinds = [type(a).__name__ for a in acts]
    errors: list[str] = []

    def err(msg):
        errors.append(f"t={decision.time} {decision.hook} f={f}: {msg} (got {kinds})")

    if decision.hook == "arrival":
        if s.waiting == 0 and s.idle > 0:
            if kinds != ["DispatchToIdle"]:
                err("expected a bare dispatch to an idle instance")
            return errors
        if not kinds or kinds[-1] != "Enqueue":
            err("non-dispatch branches must end with Enqueue")
        if decision.total_slots < decision.capacity:
            ne = s.waiting + 1 - (s.avg_cold_start * s.instances) / s.avg_exec
            if (ne > 0) != ("InitializeNew" in kinds):
                err(f"creation estimate {ne} disagrees with InitializeNew presence")
            if "Replace" in kinds:
                err("replace emitted while capacity was free")
        else:
            best = None
            for g, sg in sorted(snap.items()):
                if g == f or sg.idle == 0:
                    continue
                ne = s.waiting + 1 - ((s.avg_cold_start + sg.avg_eviction) * s.instances) / s.avg_exec
                if ne <= 0:
                    continue
                key = (-sg.avg_exec, g)
                if best is None or key < best:
                    best = key
            if best is None:
                if "Replace" in kinds:
                    err("replace emitted with an empty candidate set")
            elif "Replace" not in kinds or decision.victim_function != best[1]:
                err(f"expected replace of an idle instance of function {best[1]}")
            if "InitializeNew" in kinds:
                err("initialize emitted on a full server")
    else:
        if s.waiting > 0:
            w_own = s.avg_exec + (s.avg_eviction * s.instances) / s.waiting
        else:
            w_own = float("inf")
        best_w, best_g = w_own, None
        for g, sg in sorted(snap.items()):
            if g == f or sg.waiting == 0:
                continue
            count = sg.instances if count_source == "candidate" else s.instances
            ne = sg.waiting + 1 - ((sg.avg_cold_start + s.avg_eviction) * count) / sg.avg_exec
            if ne <= 0:
                continue
            w_g = sg.avg_exec + ((sg.avg_cold_start + sg.avg_eviction) * (s.instances + 1)) / ne
            if w_g < best_w:
                best_w, best_g = w_g, g
        if best_g is not None:
            ok = (kinds == ["Replace"] and decision.victim_function == f
                  and acts[0].function_id == best_g)
            if not ok:
                err(f"expected replace of own instance with function {best_g} "
                    f"(weight {best_w} < own {w_own})")
        elif s.waiting > 0:
            if kinds != ["TakeFromQueue"]:
                err("expected the instance to continue its own queue")
        elif kinds != ["GoIdle"]:
            err("expected the instance to go idle")
    return errors


def result_fingerprint(result) -> str:
    """Stable serialization of a simulation result for determinism checks."""
    parts = []
    for r in result.requests:
        parts.append(f"{r.id}:{r.function_id}:{r.arrival!r}:{r.start!r}:{r.completion!r}")
    for f, t, d in result.cold_start_events:
        parts.append(f"c:{f}:{t!r}:{d!r}")
    for f, t, d in result.eviction_events:
        parts.append(f"e:{f}:{t!r}:{d!r}")
    parts.append(f"repl:{result.replacement_count}")
    return "|".join(parts)
