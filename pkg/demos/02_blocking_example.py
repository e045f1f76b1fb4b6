"""Short requests blocked behind long ones, and what replacement buys.

A single-slot server receives two long requests followed by a burst of three
short ones. Arrival-order policies grind through both long requests before
any short one runs. The weight-based scheduler instead evicts the long
function's instance after its first completion, serves the short burst, and
only then returns to the second long request: the short requests' responses
drop by ~10 seconds each while the one delayed long request pays far less.
"""

from edgesched import SimulationConfig, blocking_preset, compute_metrics, run

requests, profiles, overrides = blocking_preset()

print("workload (single-slot server):")
for r in requests:
    kind = "long " if r.exec_time > 1000 else "short"
    print(f"  request {r.id}: {kind} f{r.function_id}  "
          f"arrives {r.arrival:6.0f} ms  runs {r.exec_time:7.0f} ms")

print(f"\n{'scheduler':14s} {'avg resp':>10s} {'slowdown':>9s}   per-request responses (ms)")
for name in ("fifo", "openwhisk-v2", "faascache", "sff", "esff"):
    cfg = SimulationConfig(capacity=overrides["capacity"], scheduler=name)
    result = run(requests, profiles, cfg)
    report = compute_metrics(result)
    responses = "  ".join(f"{r.completion - r.arrival:7.0f}" for r in result.requests)
    print(f"{name:14s} {report.avg_response_time:9.0f}ms {report.avg_slowdown:9.2f}   {responses}")

print("\nnote: fifo and openwhisk-v2 coincide here; with a single slot and one"
      "\nfunction already running, the wait threshold changes nothing.")
