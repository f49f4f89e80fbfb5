# ===========================================================================
# One sort, five shuffles
# ===========================================================================
# The same range-partitioned sort under the simple all-to-all shuffle, a
# pre-shuffle merge (riffle), push-based merging (magnet) and the pipelined
# push shuffle with and without keeping map outputs around. Memory is
# 1 MiB per node against 3.2 MB of data, so pressure shows up as spilling.

import numpy as np

from futureshuffle import StoreConfig, start_cluster
from futureshuffle.shuffle import (ShuffleConfig, SortJob, magnet_shuffle, push_shuffle_pipelined,
                                   riffle_shuffle, simple_shuffle, uniform_boundaries)
from futureshuffle.shuffle.records import as_records, sort_records

M = R = 32
rng = np.random.default_rng(0)
parts = [rng.integers(0, 256, (1000, 100), dtype=np.uint8).tobytes() for _ in range(M)]
oracle = sort_records(as_records(b"".join(parts))).tobytes()

runs = [
    ("simple", simple_shuffle, {}),
    ("riffle F=4", riffle_shuffle, {"F": 4}),
    ("magnet F=4", magnet_shuffle, {"F": 4}),
    ("push (keep)", push_shuffle_pipelined, {"keep_map_outputs": True}),
    ("push*", push_shuffle_pipelined, {}),
]

print(f"{'variant':<12} {'ok':<5} {'JCT(s)':>8} {'blocks':>7} {'reduce-in':>10} {'spilled':>9}")
for name, fn, kw in runs:
    with start_cluster(4, 2, StoreConfig(memory_limit=1 << 20)) as c:
        rt = c.runtime
        job = SortJob(uniform_boundaries(R), loader=parts.__getitem__)
        out = fn(rt, job, list(range(M)), ShuffleConfig(M=M, R=R, **kw))
        result = b"".join(rt.get(r) for r in out)
        m = rt.metrics()
        print(f"{name:<12} {str(result == oracle):<5} {rt.now:8.4f} {m['blocks_created']:7d} "
              f"{m['reducer_visible_blocks']:10d} {m['bytes_spilled']:9d}")
