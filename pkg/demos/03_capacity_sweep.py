"""Capacity sweep on a bursty mixed workload.

Generates a deterministic workload of short-function bursts over a trickle
of long requests, then sweeps server capacity for each scheduler. Two things
to watch: average response time falls as capacity grows, and so does the
per-request cold-start exposure, because with more slots the warm instance
pools survive between bursts instead of being evicted and rebuilt.

Takes half a minute or so; shrink REQUESTS to speed it up.
"""

from edgesched import SimulationConfig, bursty_preset, compute_metrics, generate_synthetic, run

REQUESTS = 5000
CAPACITIES = (8, 16, 24, 32)
SCHEDULERS = ("esff", "sff", "faascache", "openwhisk-v2", "fifo")

requests, profiles = generate_synthetic(bursty_preset(seed=0, request_count=REQUESTS))
span = (requests[-1].arrival - requests[0].arrival) / 1000.0
busy = sum(r.exec_time for r in requests) / 1000.0
print(f"workload: {len(requests)} requests over {span:.0f} s "
      f"({busy / span:.1f} server-equivalents of work)\n")

reports = {}
for capacity in CAPACITIES:
    for name in SCHEDULERS:
        cfg = SimulationConfig(capacity=capacity, scheduler=name)
        reports[(capacity, name)] = compute_metrics(run(requests, profiles, cfg))

print("average response time (ms):")
print(f"{'C':>4s} " + "".join(f"{name:>14s}" for name in SCHEDULERS))
for capacity in CAPACITIES:
    row = "".join(f"{reports[(capacity, name)].avg_response_time:14.0f}" for name in SCHEDULERS)
    print(f"{capacity:4d} {row}")

print("\naverage cold-start time per request (ms):")
print(f"{'C':>4s} " + "".join(f"{name:>14s}" for name in SCHEDULERS))
for capacity in CAPACITIES:
    row = "".join(f"{reports[(capacity, name)].avg_cold_start_time:14.1f}" for name in SCHEDULERS)
    print(f"{capacity:4d} {row}")

print("\ntail at C=16 (ms):")
for name in SCHEDULERS:
    pct = reports[(16, name)].response_time_percentiles
    print(f"  {name:14s} p50={pct[50]:7.0f}  p95={pct[95]:7.0f}  p99={pct[99]:7.0f}")
