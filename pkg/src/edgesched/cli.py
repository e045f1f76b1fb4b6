"""Experiment runner: single runs, capacity/intensity sweeps, CDF export,
and offline-oracle checks, driven by flags and an optional JSON config file
(flags override file values).

Artifacts per experiment directory:

* ``metrics.csv``          - one row per (scheduler, capacity, intensity) run
* ``cdf_<run>.csv``        - sorted response-time and slowdown samples
* ``per_minute_<run>.csv`` - per-arrival-minute request count and mean response
* ``events_<run>.log``     - engine event log (with ``--events``)
* ``requests_<run>.csv``   - per-request records (with ``--dump-requests``)

Identical spec and seed reproduce identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .core import FunctionProfile, Request
from .engine import SimulationConfig, run
from .schedulers import SCHEDULERS
from .ssfs import SsfsFunction, ssfs_optimal, ssfs_oracle
from .stats import compute_metrics, write_requests_csv
from .trace import (
    SyntheticSpec,
    apply_intensity,
    build_profiles,
    bursty_preset,
    derive_rng,
    blocking_preset,
    generate_synthetic,
    parse_trace,
)

METRICS_HEADER = [
    "scheduler", "capacity", "intensity",
    "avg_response_ms", "avg_slowdown", "avg_cold_start_ms", "p50", "p95", "p99",
]


@dataclass
class ExperimentSpec:
    """One experiment: a workload source, schedulers, and sweep axes.

    ``synthetic`` is a preset name or a dict of SyntheticSpec fields (the
    config-file form for custom workloads)."""

    trace_path: str | None = None
    synthetic: str | dict | None = None
    schedulers: list[str] = field(default_factory=lambda: ["esff"])
    capacities: list[int] | None = None
    intensities: list[float] | None = None
    base: SimulationConfig = field(default_factory=SimulationConfig)
    out_dir: str = "out"
    limit: int | None = None
    record_events: bool = False
    dump_requests: bool = False

    def __post_init__(self) -> None:
        if (self.trace_path is None) == (self.synthetic is None):
            raise ValueError("exactly one of trace_path or synthetic must be set")
        if not self.schedulers:
            raise ValueError("scheduler list must be non-empty")
        for name in self.schedulers:
            if name not in SCHEDULERS:
                raise ValueError(f"unknown scheduler {name!r}; choose from {sorted(SCHEDULERS)}")
        if self.capacities is not None and not self.capacities:
            raise ValueError("capacity sweep list must be non-empty")
        if self.intensities is not None and not self.intensities:
            raise ValueError("intensity sweep list must be non-empty")


def _load_workload(spec: ExperimentSpec) -> tuple[list[Request], list[FunctionProfile], dict]:
    if spec.trace_path is not None:
        requests = parse_trace(spec.trace_path, limit=spec.limit)
        profiles = build_profiles(
            sorted({r.function_id for r in requests}),
            spec.base.cold_start_range, spec.base.eviction_range,
            derive_rng(spec.base.rng_seed, "profiles"),
        )
        return requests, profiles, {}
    if isinstance(spec.synthetic, dict):
        fields = dict(spec.synthetic)
        fields.setdefault("rng_seed", spec.base.rng_seed)
        if spec.limit is not None:
            fields.setdefault("max_requests", spec.limit)
        for key in ("cold_start_range", "eviction_range"):
            if key in fields:
                fields[key] = tuple(fields[key])
        requests, profiles = generate_synthetic(SyntheticSpec(**fields))
        return requests, profiles, {}
    if spec.synthetic == "blocking":
        return blocking_preset()
    if spec.synthetic == "bursty":
        # the preset carries its own setup-delay ranges; config ranges apply
        # to trace-mode profile draws and estimator priors
        synth = bursty_preset(seed=spec.base.rng_seed,
                              request_count=spec.limit or 10_000)
        requests, profiles = generate_synthetic(synth)
        return requests, profiles, {}
    raise ValueError(f"unknown synthetic preset {spec.synthetic!r}; choose blocking or bursty")


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    """Run every (scheduler, sweep point), write artifacts, return the
    metrics rows in run order."""
    requests, profiles, overrides = _load_workload(spec)
    capacities = spec.capacities or [overrides.get("capacity", spec.base.capacity)]
    intensities = spec.intensities or [spec.base.intensity_ratio]

    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    single_point = len(capacities) == 1 and len(intensities) == 1
    rows: list[dict] = []
    for intensity in intensities:
        scaled = apply_intensity(requests, intensity) if intensity != 1.0 else requests
        for capacity in capacities:
            for name in spec.schedulers:
                cfg = replace(spec.base, capacity=capacity, intensity_ratio=intensity,
                              scheduler=name, record_events=spec.record_events)
                result = run(scaled, profiles, cfg)
                report = compute_metrics(result)
                tag = name if single_point else f"{name}_c{capacity}_i{intensity:g}"
                pct = report.response_time_percentiles
                rows.append({
                    "scheduler": name, "capacity": capacity, "intensity": intensity,
                    "avg_response_ms": report.avg_response_time,
                    "avg_slowdown": report.avg_slowdown,
                    "avg_cold_start_ms": report.avg_cold_start_time,
                    "p50": pct[50], "p95": pct[95], "p99": pct[99],
                })

                with open(out / f"cdf_{tag}.csv", "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["response_ms", "slowdown"])
                    for r_ms, s in zip(report.response_cdf, report.slowdown_cdf):
                        w.writerow([f"{r_ms:.6f}", f"{s:.6f}"])
                with open(out / f"per_minute_{tag}.csv", "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["minute", "arrival_count", "avg_response_ms"])
                    for minute, count, avg in report.per_minute:
                        w.writerow([minute, count, f"{avg:.6f}"])
                if spec.record_events:
                    (out / f"events_{tag}.log").write_text(
                        "\n".join(result.event_log) + "\n")
                if spec.dump_requests:
                    write_requests_csv(result.requests, out / f"requests_{tag}.csv")

    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRICS_HEADER)
        for row in rows:
            w.writerow([
                row["scheduler"], row["capacity"], f"{row['intensity']:g}",
                f"{row['avg_response_ms']:.6f}", f"{row['avg_slowdown']:.6f}",
                f"{row['avg_cold_start_ms']:.6f}",
                f"{row['p50']:.6f}", f"{row['p95']:.6f}", f"{row['p99']:.6f}",
            ])
    return rows


def check_ssfs(seed: int, cases: int, max_requests: int) -> int:
    """Compare the weight-ordered schedule against the exhaustive oracle on
    random instances; returns the number of mismatches."""
    rng = derive_rng(seed, "ssfs-check")
    mismatches = 0
    for case in range(cases):
        nf = int(rng.integers(2, 5))
        total = int(rng.integers(max(3, nf), max(nf, max_requests) + 1))
        counts = [1] * nf
        for _ in range(total - nf):
            counts[int(rng.integers(nf))] += 1
        fs = [
            SsfsFunction(id=j, exec_time=float(rng.integers(1, 11)),
                         cold_start=float(rng.integers(1, 11)),
                         eviction=float(rng.integers(1, 11)),
                         request_count=counts[j])
            for j in range(nf)
        ]
        opt = ssfs_optimal(fs)
        oracle = ssfs_oracle(fs)
        if opt.total_response_time != oracle.total_response_time:
            mismatches += 1
            print(f"case {case}: optimal {opt.total_response_time} != "
                  f"oracle {oracle.total_response_time}", file=sys.stderr)
    print(f"ssfs check: {cases - mismatches}/{cases} oracle matches")
    return mismatches


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="edgesched",
        description="Edge serverless scheduling simulator and experiment runner.")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--trace", help="invocation trace CSV (func,end_timestamp,duration)")
    p.add_argument("--synthetic", help="synthetic preset: blocking | bursty")
    p.add_argument("--scheduler", help="comma-separated scheduler names "
                   f"({'|'.join(sorted(SCHEDULERS))})")
    p.add_argument("--capacity", help="comma-separated capacity sweep, e.g. 8,16,24,32")
    p.add_argument("--intensity", help="comma-separated intensity-ratio sweep, e.g. 0.8,1.0,1.2")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--limit", type=int, help="max requests read or generated")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--events", action="store_true", default=None,
                   help="write per-run event logs")
    p.add_argument("--dump-requests", action="store_true", default=None,
                   help="write per-run per-request CSVs")
    p.add_argument("--check-ssfs", action="store_true",
                   help="verify weight ordering against the exhaustive oracle and exit")
    p.add_argument("--cases", type=int, default=200,
                   help="random instances for --check-ssfs (default 200)")
    p.add_argument("--max-requests", type=int, default=8,
                   help="max total requests per --check-ssfs instance (default 8)")
    return p


_CONFIG_KEYS = {
    "trace", "synthetic", "scheduler", "capacity", "intensity", "seed", "limit",
    "out", "events", "dump_requests", "v2_wait_threshold", "cold_start_range",
    "eviction_range", "prior_mode", "exec_prior", "cold_start_prior",
    "eviction_prior", "count_source",
}


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    file_cfg: dict = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")

    def pick(flag_value, key, default=None):
        return flag_value if flag_value is not None else file_cfg.get(key, default)

    schedulers = pick(args.scheduler, "scheduler")
    if isinstance(schedulers, str):
        schedulers = [s.strip() for s in schedulers.split(",") if s.strip()]
    capacities = pick(args.capacity, "capacity")
    if isinstance(capacities, str):
        capacities = _parse_int_list(capacities)
    intensities = pick(args.intensity, "intensity")
    if isinstance(intensities, str):
        intensities = _parse_float_list(intensities)

    base = SimulationConfig(
        rng_seed=pick(args.seed, "seed", 0),
        v2_wait_threshold=file_cfg.get("v2_wait_threshold", 100.0),
        cold_start_range=tuple(file_cfg.get("cold_start_range", (500.0, 1500.0))),
        eviction_range=tuple(file_cfg.get("eviction_range", (500.0, 1500.0))),
        prior_mode=file_cfg.get("prior_mode", "global"),
        exec_prior=file_cfg.get("exec_prior", 1000.0),
        cold_start_prior=file_cfg.get("cold_start_prior"),
        eviction_prior=file_cfg.get("eviction_prior"),
        count_source=file_cfg.get("count_source", "candidate"),
    )
    return ExperimentSpec(
        trace_path=pick(args.trace, "trace"),
        synthetic=pick(args.synthetic, "synthetic"),
        schedulers=schedulers or ["esff"],
        capacities=capacities,
        intensities=intensities,
        base=base,
        out_dir=pick(args.out, "out", "out"),
        limit=pick(args.limit, "limit"),
        record_events=bool(pick(args.events, "events", False)),
        dump_requests=bool(pick(args.dump_requests, "dump_requests", False)),
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.check_ssfs:
            seed = args.seed if args.seed is not None else 0
            return 1 if check_ssfs(seed, args.cases, args.max_requests) else 0
        spec = _spec_from_args(args)
        rows = run_experiment(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for row in rows:
        print(f"{row['scheduler']:14s} C={row['capacity']:<3d} "
              f"intensity={row['intensity']:g} "
              f"avg_response={row['avg_response_ms']:.1f}ms "
              f"avg_slowdown={row['avg_slowdown']:.3f} "
              f"avg_cold_start={row['avg_cold_start_ms']:.1f}ms")
    return 0


if __name__ == "__main__":
    sys.exit(main())
