import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_records
from futureshuffle.errors import MalformedRecord, PartitionMismatch
from futureshuffle.shuffle import (Block, merge_sorted, partition_groups, sample_boundaries,
                                   sort_and_partition, uniform_boundaries)
from futureshuffle.shuffle.records import (as_records, check_boundaries, int_to_key, is_sorted,
                                           key_to_int, owner_of, sort_records)


def brute_partition(rec, boundaries):
    """Classify each record by linear scan over the boundaries, then sort each bucket."""
    cuts = [key_to_int(b) for b in boundaries]
    buckets = [[] for _ in range(len(cuts) + 1)]
    for row in rec:
        k = key_to_int(row[:10].tobytes())
        p = sum(1 for c in cuts if k >= c)
        buckets[p].append(row)
    out = []
    for b in buckets:
        b.sort(key=lambda r: (r[:10].tobytes(), r[10:18].tobytes()))
        out.append(b"".join(r.tobytes() for r in b))
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 300), st.integers(1, 12), st.integers(0, 2**32), st.integers(1, 10))
def test_sort_and_partition_matches_brute_force(n, R, seed, key_bytes):
    # narrow keys force plenty of ties and boundary hits
    rec = random_records(n, seed, key_bytes=key_bytes)
    bounds = uniform_boundaries(R)
    blocks = sort_and_partition(rec.tobytes(), bounds)
    assert [b.partition_id for b in blocks] == list(range(R))
    assert [b.payload for b in blocks] == brute_partition(rec, bounds)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 80), min_size=1, max_size=6), st.integers(0, 2**32))
def test_merge_sorted_equals_full_resort(sizes, seed):
    rec = random_records(sum(sizes), seed, key_bytes=2)
    runs, at = [], 0
    for s in sizes:
        runs.append(Block(3, sort_records(rec[at:at + s]).tobytes()))
        at += s
    merged = merge_sorted(runs)
    assert merged.partition_id == 3
    assert merged.payload == sort_records(rec).tobytes()
    assert merged.record_count == len(rec)


def test_merge_sorted_rejects_mixed_partitions():
    with pytest.raises(PartitionMismatch):
        merge_sorted([Block(0, b""), Block(1, b"")])
    with pytest.raises(ValueError):
        merge_sorted([])


def test_malformed_payload():
    with pytest.raises(MalformedRecord):
        as_records(b"x" * 150)


def test_is_sorted_reports_first_inversion():
    rec = sort_records(random_records(100, 5))
    assert is_sorted(rec) == -1
    bad = rec.copy()
    bad[[40, 41]] = bad[[41, 40]]
    assert is_sorted(bad) == 41
    assert is_sorted(rec[:1]) == -1


def test_boundary_helpers():
    b = uniform_boundaries(4)
    assert check_boundaries(b, 4) == [1 << 78, 2 << 78, 3 << 78]
    with pytest.raises(ValueError):
        check_boundaries(b[::-1])
    with pytest.raises(ValueError):
        check_boundaries(b, 5)
    assert int_to_key(key_to_int(b"abcdefghij")) == b"abcdefghij"
    assert uniform_boundaries(1) == []


@given(st.lists(st.integers(0, 2**80 - 1), max_size=200), st.integers(1, 20))
def test_sample_boundaries_strictly_increasing(keys, R):
    b = sample_boundaries(keys, R)
    assert len(b) == R - 1
    check_boundaries(b, R)


@given(st.integers(0, 200), st.integers(1, 16))
def test_partition_groups_tile_the_range(R, G):
    groups = partition_groups(R, G)
    assert len(groups) == G
    assert groups[0][0] == 0 and groups[-1][1] == R
    assert all(a[1] == b[0] for a, b in zip(groups, groups[1:]))
    assert max(hi - lo for lo, hi in groups) - min(hi - lo for lo, hi in groups) <= 1
    for p in range(R):
        lo, hi = groups[owner_of(p, groups)]
        assert lo <= p < hi
