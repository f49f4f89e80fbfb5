# ===========================================================================
# Spilling under memory pressure, with and without fusing
# ===========================================================================
# Small objects spilled one per file turn into thousands of tiny writes.
# Fusing batches them into files of at least fuse_threshold bytes.

import os

from futureshuffle import StoreConfig, start_cluster

N, SIZE = 2000, 10 * 1024

for threshold in (1 << 20, 0):
    cfg = StoreConfig(memory_limit=4 << 20, fuse_threshold=threshold)
    with start_cluster(1, 1, cfg) as c:
        rt = c.runtime
        refs = [rt.put(bytes([i % 256]) * SIZE) for i in range(N)]
        m = c.metrics()
        files = c.store.spill_files()
        print(f"fuse_threshold={threshold:>8}: {m['spill_files_created']:>5} files, "
              f"{m['bytes_spilled'] / 2**20:.1f} MiB spilled, "
              f"I/O lane busy until t={c.store.nodes[0].io.busy_until:.3f}s")
        # every spill file has a readable JSON-lines index next to it
        f = files[0]
        print("   first file:", os.path.basename(f.path), "holds", len(f.objects), "objects;",
              "index:", os.path.basename(f.index_path))
        # restores are transparent and checksummed
        assert rt.get(refs[7]) == bytes([7]) * SIZE
