"""Shuffle jobs: the map / merge / reduce functions a shuffle variant wires together.

A job splits its reduce partitions ``0..R-1`` into G contiguous groups
(``partition_groups(R, G)``). ``map`` returns one payload per group,
``merge`` turns any number of payloads covering partitions ``[lo, hi)``
into one payload per partition, and ``reduce`` folds a partition's payloads
into its output.
"""

from collections import Counter

import numpy as np

from ..checksum import fnv1a64
from .records import (as_records, check_boundaries, merge_runs, partition_groups,
                      sort_records, split_points)


class ShuffleJob:
    name = "job"
    num_partitions = 1
    output_to_disk = False

    def map(self, item, num_groups):
        raise NotImplementedError

    def merge(self, lo, hi, *payloads):
        raise NotImplementedError

    def reduce(self, part, *payloads):
        raise NotImplementedError

    def stage_cost(self, stage):
        """Optional cost override for a stage, in the form ``register`` accepts."""
        return None

    # streaming jobs also define these
    def reduce_state(self, part, state, *payloads):
        raise NotImplementedError

    def aggregate(self, states):
        raise NotImplementedError


def fn_names(job):
    return {s: f"{job.name}.{s}" for s in ("map", "merge", "reduce", "reduce_state")}


def register_job(rt, job):
    """Register the job's task functions under ``<job.name>.<stage>``. Idempotent."""
    names = fn_names(job)
    if rt.is_registered(names["map"]):
        return names

    def map_task(item, num_groups):
        out = job.map(item, num_groups)
        return out[0] if num_groups == 1 else out

    def merge_task(lo, hi, *payloads):
        out = job.merge(lo, hi, *payloads)
        return out[0] if hi - lo == 1 else out

    rt.register(names["map"], map_task, cost=job.stage_cost("map"))
    rt.register(names["merge"], merge_task, cost=job.stage_cost("merge"))
    rt.register(names["reduce"], job.reduce, output_to_disk=job.output_to_disk,
                cost=job.stage_cost("reduce"))
    rt.register(names["reduce_state"], job.reduce_state, cost=job.stage_cost("reduce_state"))
    return names


class SortJob(ShuffleJob):
    """Range-partitioned sort of 100-byte records.

    ``loader`` turns an inline map input (for example a partition index) into
    the partition's bytes. Ref inputs arrive as bytes already.
    """

    def __init__(self, boundaries, loader=None, name="sort", output_to_disk=False):
        check_boundaries(boundaries)
        self.boundaries = list(boundaries)
        self.num_partitions = len(self.boundaries) + 1
        self.loader = loader
        self.name = name
        self.output_to_disk = output_to_disk

    def _load(self, item):
        if isinstance(item, (bytes, bytearray, memoryview)):
            return item
        return self.loader(item)

    def _cuts(self, rec):
        return [0] + split_points(rec, self.boundaries) + [rec.shape[0]]

    def map(self, item, num_groups):
        rec = sort_records(as_records(self._load(item)))
        cuts = self._cuts(rec)
        return [rec[cuts[lo]:cuts[hi]].tobytes()
                for lo, hi in partition_groups(self.num_partitions, num_groups)]

    def merge(self, lo, hi, *payloads):
        rec = as_records(merge_runs(payloads))
        cuts = self._cuts(rec)
        return [rec[cuts[p]:cuts[p + 1]].tobytes() for p in range(lo, hi)]

    def reduce(self, part, *payloads):
        return merge_runs(payloads)


def stable_bucket(word, R):
    return fnv1a64(word.encode()) % R


class CountJob(ShuffleJob):
    """Hash-partitioned word count. Map inputs are lists of words."""

    def __init__(self, R, name="count"):
        self.num_partitions = R
        self.name = name

    def _counts(self, words):
        return Counter(words)

    def map(self, item, num_groups):
        groups = partition_groups(self.num_partitions, num_groups)
        bucket_group = np.empty(self.num_partitions, dtype=np.int64)
        for g, (lo, hi) in enumerate(groups):
            bucket_group[lo:hi] = g
        out = [dict() for _ in groups]
        for w, c in sorted(self._counts(item).items()):
            out[bucket_group[stable_bucket(w, self.num_partitions)]][w] = c
        return out

    def merge(self, lo, hi, *payloads):
        out = [Counter() for _ in range(lo, hi)]
        for d in payloads:
            for w, c in d.items():
                out[stable_bucket(w, self.num_partitions) - lo][w] += c
        return [dict(sorted(c.items())) for c in out]

    def reduce(self, part, *payloads):
        total = Counter()
        for d in payloads:
            total.update(d)
        return dict(sorted(total.items()))

    def reduce_state(self, part, state, *payloads):
        total = Counter(state or {})
        for d in payloads:
            total.update(d)
        return dict(sorted(total.items()))

    def aggregate(self, states):
        total = Counter()
        for s in states:
            total.update(s)
        return dict(sorted(total.items()))
