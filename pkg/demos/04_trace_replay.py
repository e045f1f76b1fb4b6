"""Replaying an invocation trace and scaling its intensity.

Builds a small trace CSV in the interchange format (func,end_timestamp,
duration; milliseconds; arrival is reconstructed as end minus duration),
parses it back, and runs the same workload at three intensity ratios. A
ratio above 1 stretches the gaps between arrivals (lighter load), below 1
compresses them (heavier load).
"""

import tempfile
from pathlib import Path

from edgesched import SimulationConfig, apply_intensity, compute_metrics, parse_trace, run
from edgesched.trace import build_profiles, derive_rng

rng = derive_rng(7, "demo-trace")
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "trace.csv"
    lines = ["func,end_timestamp,duration"]
    clock = 0.0
    for i in range(400):
        clock += float(rng.exponential(250.0))
        fn = f"fn-{int(rng.integers(4))}"
        duration = float(rng.uniform(40.0, 2500.0))
        lines.append(f"{fn},{clock + duration:.3f},{duration:.3f}")
    path.write_text("\n".join(lines) + "\n")

    requests = parse_trace(path)
    print(f"parsed {len(requests)} requests, "
          f"{len({r.function_id for r in requests})} functions, "
          f"span {(requests[-1].arrival - requests[0].arrival) / 1000:.1f} s")

    profiles = build_profiles(
        sorted({r.function_id for r in requests}),
        cold_start_range=(500.0, 1500.0),
        eviction_range=(500.0, 1500.0),
        rng=derive_rng(7, "demo-profiles"),
    )

    print(f"\n{'intensity':>9s} {'avg resp':>10s} {'slowdown':>9s} {'p95':>9s} {'cold/req':>9s}")
    for ratio in (0.5, 1.0, 2.0):
        workload = apply_intensity(requests, ratio)
        cfg = SimulationConfig(capacity=4, scheduler="esff")
        report = compute_metrics(run(workload, profiles, cfg))
        print(f"{ratio:9.1f} {report.avg_response_time:9.0f}ms "
              f"{report.avg_slowdown:9.2f} {report.response_time_percentiles[95]:8.0f}ms "
              f"{report.avg_cold_start_time:8.1f}ms")

print("\ncompressing arrivals (ratio 0.5) piles requests onto the same slots;"
      "\nstretching them (ratio 2.0) lets instances go idle and be reused warm.")
