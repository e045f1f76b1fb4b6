"""Offline single-slot sequencing: function weights, the optimal order, and
the exhaustive oracle.

With one instance slot, identical per-function execution times, and every
request present at time 0, the best schedule keeps each function's requests
together and runs the blocks in ascending weight order, where a function's
weight is its execution time plus its setup cost amortized over its
requests. This script builds a tiny instance, walks through the weights,
and confirms the ordering against brute force.
"""

from edgesched import SsfsFunction, evaluate_schedule, ssfs_optimal, ssfs_oracle, ssfs_weight

functions = [
    SsfsFunction(id=0, exec_time=10.0, cold_start=1.0, eviction=1.0, request_count=2),
    SsfsFunction(id=1, exec_time=1.0, cold_start=1.0, eviction=1.0, request_count=3),
    SsfsFunction(id=2, exec_time=4.0, cold_start=6.0, eviction=2.0, request_count=1),
]

print("function weights (exec + (cold_start + eviction) / requests):")
for f in functions:
    print(f"  f{f.id}: exec={f.exec_time:4.1f}  requests={f.request_count}  "
          f"weight={ssfs_weight(f):5.2f}")

optimal = ssfs_optimal(functions)
print(f"\noptimal sequence: {optimal.sequence}")
print(f"total response time: {optimal.total_response_time:.1f} ms")

oracle = ssfs_oracle(functions)
print(f"oracle minimum:      {oracle.total_response_time:.1f} ms "
      f"(over every distinct ordering of {sum(f.request_count for f in functions)} requests)")
assert optimal.total_response_time == oracle.total_response_time

two = functions[:2]
print("\nwhat interleaving costs: splitting f1's block around f0's requests")
interleaved = [1, 1, 0, 1, 0]
grouped = [1, 1, 1, 0, 0]
print(f"  grouped {tuple(grouped)} -> {evaluate_schedule(two, grouped):.1f} ms")
print(f"  split   {tuple(interleaved)} -> {evaluate_schedule(two, interleaved):.1f} ms "
      f"(every switch pays the outgoing eviction plus the incoming cold start)")

print("\nswapping two adjacent blocks never helps when the lighter one is first:")
swapped = [0, 0, 1, 1, 1]
print(f"  lighter-first {evaluate_schedule(two, grouped):.1f} ms "
      f"vs heavier-first {evaluate_schedule(two, swapped):.1f} ms")
