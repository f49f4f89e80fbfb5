"""Fixed-width sort records: 100 bytes, the first 10 are a big-endian key.

Within equal keys, records are ordered by bytes 10..18. The benchmark
generator stores a unique record index there, so every variant produces the
same bytes.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import MalformedRecord, PartitionMismatch

RECORD_SIZE = 100
KEY_SIZE = 10
KEY_BITS = 8 * KEY_SIZE


def as_records(payload):
    """View a payload as an ``(n, 100)`` uint8 array (no copy for bytes input)."""
    if isinstance(payload, np.ndarray):
        buf = payload.reshape(-1).view(np.uint8)
    else:
        buf = np.frombuffer(payload, dtype=np.uint8)
    if buf.size % RECORD_SIZE:
        raise MalformedRecord(f"payload of {buf.size} bytes is not a multiple of {RECORD_SIZE}")
    return buf.reshape(-1, RECORD_SIZE)


def _be_u64(cols):
    return np.ascontiguousarray(cols).view(">u8").ravel()


def key_parts(rec):
    """(high 8 bytes, low 2 bytes) of each key as unsigned integers."""
    hi = _be_u64(rec[:, :8])
    lo = (rec[:, 8].astype(np.uint16) << 8) | rec[:, 9]
    return hi, lo


def sort_order(rec):
    hi, lo = key_parts(rec)
    tie = _be_u64(rec[:, 10:18])
    return np.lexsort((tie, lo, hi))


def sort_records(rec):
    if rec.shape[0] < 2:
        return rec.copy()
    return rec[sort_order(rec)]


def key_to_int(key):
    if len(key) != KEY_SIZE:
        raise ValueError(f"keys are {KEY_SIZE} bytes")
    return int.from_bytes(key, "big")


def int_to_key(value):
    return int(value).to_bytes(KEY_SIZE, "big")


def keys_as_ints(rec):
    hi, lo = key_parts(rec)
    return [(int(h) << 16) | int(l) for h, l in zip(hi, lo)]


def check_boundaries(boundaries, R=None):
    ints = [key_to_int(b) for b in boundaries]
    if any(b >= c for b, c in zip(ints, ints[1:])):
        raise ValueError("boundaries must be strictly increasing")
    if R is not None and len(ints) != R - 1:
        raise ValueError(f"need exactly {R - 1} boundaries for R={R}, got {len(ints)}")
    return ints


def split_points(sorted_rec, boundaries):
    """Row offsets where each boundary key starts in an already sorted array."""
    hi, lo = key_parts(sorted_rec)
    out = []
    for b in boundaries:
        v = key_to_int(b)
        bh, bl = np.uint64(v >> 16), np.uint16(v & 0xFFFF)
        a = int(np.searchsorted(hi, bh, "left"))
        z = int(np.searchsorted(hi, bh, "right"))
        out.append(a + int(np.searchsorted(lo[a:z], bl, "left")))
    return out


def split_sorted(sorted_rec, boundaries):
    """Split a sorted array into ``len(boundaries) + 1`` payloads."""
    cuts = [0] + split_points(sorted_rec, boundaries) + [sorted_rec.shape[0]]
    return [sorted_rec[a:b].tobytes() for a, b in zip(cuts, cuts[1:])]


@dataclass(frozen=True)
class Block:
    partition_id: int
    payload: bytes

    @property
    def record_count(self):
        return len(self.payload) // RECORD_SIZE


def sort_and_partition(partition, boundaries):
    """Sort a partition and cut it into ``len(boundaries) + 1`` range blocks."""
    check_boundaries(boundaries)
    rec = sort_records(as_records(partition))
    return [Block(i, p) for i, p in enumerate(split_sorted(rec, boundaries))]


def merge_runs(payloads):
    """Merge sorted runs into one sorted payload."""
    runs = [as_records(p) for p in payloads if len(p)]
    if not runs:
        return b""
    if len(runs) == 1:
        return runs[0].tobytes()
    return sort_records(np.concatenate(runs)).tobytes()


def merge_sorted(blocks):
    """k-way merge of sorted blocks that belong to the same partition."""
    if not blocks:
        raise ValueError("merge_sorted needs at least one block")
    pid = blocks[0].partition_id
    if any(b.partition_id != pid for b in blocks):
        raise PartitionMismatch("blocks come from different partitions")
    return Block(pid, merge_runs([b.payload for b in blocks]))


def is_sorted(rec):
    """Index of the first row whose key is below its predecessor's, or -1."""
    if rec.shape[0] < 2:
        return -1
    hi, lo = key_parts(rec)
    bad = (hi[1:] < hi[:-1]) | ((hi[1:] == hi[:-1]) & (lo[1:] < lo[:-1]))
    idx = np.flatnonzero(bad)
    return int(idx[0]) + 1 if idx.size else -1


def sample_boundaries(sample_keys, R):
    """R-1 strictly increasing cut keys from evenly spaced quantiles of a key sample."""
    if R < 1:
        raise ValueError("R must be >= 1")
    if R == 1:
        return []
    keys = sorted(sample_keys)
    if not keys:
        return uniform_boundaries(R)
    out = []
    for i in range(1, R):
        v = keys[min(len(keys) - 1, (i * len(keys)) // R)]
        if out and v <= out[-1]:
            v = out[-1] + 1
        out.append(v)
    # a sample crowded at the top of the key space can push cuts past the max key
    top = (1 << KEY_BITS) - 1
    for i in range(len(out) - 1, -1, -1):
        out[i] = min(out[i], top if i == len(out) - 1 else out[i + 1] - 1)
    return [int_to_key(v) for v in out]


def uniform_boundaries(R):
    """Cut points that split the key space into R equal ranges."""
    return [int_to_key((i << KEY_BITS) // R) for i in range(1, R)]


def partition_groups(R, G):
    """Split partitions ``0..R-1`` into G contiguous, balanced ``(lo, hi)`` ranges."""
    if G < 1:
        raise ValueError("G must be >= 1")
    return [((g * R) // G, ((g + 1) * R) // G) for g in range(G)]


def owner_of(part, groups):
    for g, (lo, hi) in enumerate(groups):
        if lo <= part < hi:
            return g
    raise ValueError(f"partition {part} not covered")
