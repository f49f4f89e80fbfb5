"""Deterministic TeraSort-style input and output validation."""

from dataclasses import asdict, dataclass

import numpy as np

from ..checksum import FNV_OFFSET, combine, fnv1a64, multiset_checksum
from ..errors import ValidationFailed
from ..shuffle.records import RECORD_SIZE, as_records, is_sorted, key_parts, merge_runs, sort_records


def partition_layout(data_size, num_partitions):
    """Records per partition. The last partition absorbs the remainder."""
    if data_size % RECORD_SIZE:
        raise ValueError(f"data_size must be a multiple of {RECORD_SIZE}")
    total = data_size // RECORD_SIZE
    base = total // num_partitions
    counts = [base] * num_partitions
    counts[-1] += total - base * num_partitions
    return counts


def generate_partition(seed, index, num_records, first_record, skew=None):
    """Records of one input partition, keyed by (seed, partition).

    Bytes 0..10 are the random key, 10..18 the global record number (big
    endian), the rest pseudorandom filler. ``skew=(fraction, span)`` moves
    ``fraction`` of the keys into the lowest ``span`` of the key space.
    """
    gen = np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))
    rec = gen.integers(0, 256, size=(num_records, RECORD_SIZE), dtype=np.uint8)
    ids = np.arange(first_record, first_record + num_records, dtype=">u8")
    rec[:, 10:18] = ids.view(np.uint8).reshape(-1, 8)
    if skew is not None:
        fraction, span = skew
        hot = gen.random(num_records) < fraction
        top = max(1, int(256 * span))
        rec[hot, 0] = rec[hot, 0] % top
    return rec.tobytes()


@dataclass(frozen=True)
class InputSpec:
    data_size: int
    num_partitions: int
    seed: int
    skew: tuple | None = None

    def counts(self):
        return partition_layout(self.data_size, self.num_partitions)

    def partition(self, i):
        counts = self.counts()
        return generate_partition(self.seed, i, counts[i], sum(counts[:i]), self.skew)

    def summary(self):
        """(record count, order-independent checksum) computed straight from the generator."""
        total, chk = 0, 0
        for i in range(self.num_partitions):
            rec = as_records(self.partition(i))
            total += rec.shape[0]
            chk = combine(chk, multiset_checksum(rec))
        return total, chk

    def sorted_digest(self):
        """FNV-1a of the fully sorted dataset, from a single in-process sort."""
        rec = sort_records(as_records(b"".join(self.partition(i)
                                                for i in range(self.num_partitions))))
        return fnv1a64(rec)


def gen_input(rt, data_size, num_partitions, seed, skew=None, fn="sortbench.gen"):
    """Submit generator tasks; their outputs are the input partitions.

    The generator task is the lineage root, so a lost partition is rebuilt by
    re-running it.
    """
    spec = InputSpec(data_size, num_partitions, seed, skew)
    if not rt.is_registered(fn):
        rt.register(fn, spec.partition)
    return [rt.call(fn, i, placement=i % rt.num_nodes, labels={"role": "gen", "index": i})
            for i in range(num_partitions)]


@dataclass
class ValidationRecord:
    sorted: bool
    record_count_ok: bool
    checksum_ok: bool
    records: int
    expected_records: int
    checksum: int
    expected_checksum: int
    digest: int
    first_bad_offset: int | None = None

    @property
    def passed(self):
        return self.sorted and self.record_count_ok and self.checksum_ok

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        d["checksum"] = f"{self.checksum:016x}"
        d["expected_checksum"] = f"{self.expected_checksum:016x}"
        d["digest"] = f"{self.digest:016x}"
        return d

    def raise_for_failure(self):
        if not self.sorted:
            raise ValidationFailed(f"unsorted at record {self.first_bad_offset}",
                                   self.first_bad_offset)
        if not self.record_count_ok:
            raise ValidationFailed(f"{self.records} records, expected {self.expected_records}")
        if not self.checksum_ok:
            raise ValidationFailed("record checksum differs from the input")


def validate_partitions(partitions, expected_records, expected_checksum):
    """Check an iterable of partition payloads, in partition order."""
    offset = 0
    chk = 0
    digest = FNV_OFFSET
    first_bad = None
    prev = None
    for payload in partitions:
        rec = as_records(payload)
        if rec.shape[0] == 0:
            continue
        if first_bad is None:
            bad = is_sorted(rec)
            if bad >= 0:
                first_bad = offset + bad
            elif prev is not None:
                hi, lo = key_parts(rec[:1])
                if (int(hi[0]), int(lo[0])) < prev:
                    first_bad = offset
        hi, lo = key_parts(rec[-1:])
        prev = (int(hi[0]), int(lo[0]))
        chk = combine(chk, multiset_checksum(rec))
        digest = fnv1a64(rec, digest)
        offset += rec.shape[0]
    return ValidationRecord(first_bad is None, offset == expected_records,
                            chk == expected_checksum, offset, expected_records, chk,
                            expected_checksum, digest, first_bad)


def materialize(rt, out):
    """Yield partition payloads; a list of refs stands for one split partition."""
    for item in out:
        if isinstance(item, list):
            yield merge_runs([rt.get(r) for r in item])
        else:
            yield rt.get(item)


def validate(rt, output_refs, input_checksum, expected_records):
    """Stream the job's outputs through ``validate_partitions``."""
    return validate_partitions(materialize(rt, output_refs), expected_records, input_checksum)
