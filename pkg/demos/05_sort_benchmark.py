# ===========================================================================
# The sort benchmark, from Python
# ===========================================================================
# Same thing as `sortbench run`, but driving RunConfig directly. We lose a
# node a third of the way through and check the output is still exact.

from futureshuffle.sortbench import InputSpec, RunConfig, run

base = {
    "data_size": 32_000_000,
    "partition_size": 1_000_000,
    "variant": "push_star",
    "cluster": {"nodes": 4, "slots": 2, "store": {"memory_limit": 4_000_000}},
}

clean = run(RunConfig.from_dict(base))
crash = run(RunConfig.from_dict({**base, "failure_plan": {
    "events": [{"action": "kill_node", "node": 2, "after_fraction": 0.33}]}}))

oracle = f"{InputSpec(base['data_size'], clean.num_partitions, 0).sorted_digest():016x}"
for name, rep in (("clean", clean), ("node lost", crash)):
    print(f"{name:<10} valid={rep.passed} digest={rep.validation['digest']} "
          f"JCT={rep.job_completion_time:.3f}s retries={rep.task_retries} "
          f"spilled={rep.io['bytes_spilled'] / base['data_size']:.2f}xD")
print("oracle digest:", oracle)
print("4D/B baseline:", clean.theoretical_baseline_seconds, "s")
print("stages:", {k: round(v["seconds"], 3) for k, v in clean.stage_times.items()})
