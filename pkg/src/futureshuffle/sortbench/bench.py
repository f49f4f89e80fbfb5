"""End-to-end sort benchmark: generate, sample, shuffle, validate, report."""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields

from ..cluster import FailureEvent, FailurePlan, start_cluster
from ..runtime.types import CostModel
from ..shuffle import (ShuffleConfig, SortJob, best_effort_merge, magnet_shuffle,
                       push_shuffle_pipelined, repartition_shuffle, riffle_shuffle,
                       sample_boundaries, simple_shuffle, speculative_shuffle, streaming_shuffle)
from ..shuffle.records import as_records, merge_runs, uniform_boundaries
from ..store.config import StoreConfig
from .data import InputSpec, validate

log = logging.getLogger(__name__)

VARIANTS = ("simple", "riffle", "magnet", "push", "push_star", "streaming", "best_effort",
            "speculative", "repartition")


def theoretical_baseline(data_size, disk_bandwidth):
    """Seconds to read and write the data twice at ``disk_bandwidth`` bytes/s."""
    return 4.0 * data_size / disk_bandwidth


@dataclass
class ClusterSpec:
    nodes: int = 4
    slots: int = 2
    store: StoreConfig = field(default_factory=StoreConfig)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        store = d.pop("store", {})
        if isinstance(store, dict):
            store = StoreConfig.from_dict(store)
        return cls(store=store, **d)


@dataclass
class RunConfig:
    data_size: int = 64 << 20
    partition_size: int = 2 << 20
    variant: str = "push_star"
    shuffle: dict = field(default_factory=dict)     # ShuffleConfig overrides
    cluster: ClusterSpec = field(default_factory=ClusterSpec)
    failure_plan: dict = field(default_factory=dict)
    seed: int = 0
    disk_bandwidth_model: float = 200e6
    output: str | None = None
    trace: str | None = None
    boundaries: str = "sample"                      # or "uniform"
    key_skew: tuple | None = None                   # (fraction, span)
    slow_maps: dict = field(default_factory=dict)   # map index -> slowdown factor
    stall_merges: list = field(default_factory=list)  # merge target nodes that never finish
    cost: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.data_size <= 0 or self.data_size % 100:
            raise ValueError("data_size must be a positive multiple of 100 bytes")
        if self.partition_size <= 0:
            raise ValueError("partition_size must be positive")
        if self.key_skew is not None:
            self.key_skew = tuple(self.key_skew)
        self.slow_maps = {int(k): float(v) for k, v in self.slow_maps.items()}

    @property
    def num_partitions(self):
        return max(1, math.ceil(self.data_size / self.partition_size))

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown RunConfig fields: {sorted(unknown)}")
        d = dict(d)
        if "cluster" in d and isinstance(d["cluster"], dict):
            d["cluster"] = ClusterSpec.from_dict(d["cluster"])
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


@dataclass
class BenchReport:
    variant: str
    data_size: int
    num_partitions: int
    job_completion_time: float
    stage_times: dict
    io: dict
    blocks_created: int
    reducer_visible_blocks: int
    task_retries: int
    reconstructions: int
    theoretical_baseline_seconds: float
    validation: dict
    counters: dict

    @property
    def passed(self):
        return bool(self.validation.get("passed"))

    def to_dict(self):
        return asdict(self)

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


class BenchSortJob(SortJob):
    """Sort job whose reducer output goes to disk, with streaming hooks.

    Map tasks generate their partition in place, so their cost adds the time
    it would take to read that partition from disk.
    """

    def __init__(self, boundaries, loader, cost_model, disk_bandwidth, **kw):
        super().__init__(boundaries, loader=loader, **kw)
        self.cost_model = cost_model
        self.disk_bandwidth = disk_bandwidth

    def stage_cost(self, stage):
        if stage != "map":
            return None
        model, bw = self.cost_model, self.disk_bandwidth
        return lambda in_bytes, out_bytes: (model.duration(in_bytes, out_bytes)
                                            + out_bytes / bw)

    def reduce_state(self, part, state, *payloads):
        return merge_runs(([state] if state else []) + list(payloads))

    def aggregate(self, states):
        return sum(len(s) for s in states) // 100


def planned_tasks(variant, M, R, F, P, nodes):
    """Task count of a failure-free run, used to turn a progress fraction into a task count."""
    live = min(nodes, R)
    if variant == "riffle":
        return M + math.ceil(M / F) + R
    if variant in ("magnet", "best_effort"):
        return M + math.ceil(M / F) * live + R
    if variant in ("push", "push_star"):
        return M + math.ceil(M / P) * live + R
    if variant == "streaming":
        return M + math.ceil(M / P) * R
    return M + R


def _failure_plan(cfg, offset, planned):
    events = []
    for e in cfg.failure_plan.get("events", []):
        e = dict(e)
        frac = e.pop("after_fraction", None)
        if frac is not None:
            e["after_k_tasks"] = offset + max(1, math.ceil(frac * planned))
        events.append(FailureEvent(**e))
    return FailurePlan(events)


def stage_times(trace):
    spans = {}
    for e in trace.events:
        role = e.detail.get("role")
        if role is None or e.kind not in ("task_started", "task_finished"):
            continue
        lo, hi = spans.get(role, (math.inf, -math.inf))
        if e.kind == "task_started":
            lo = min(lo, e.time)
        else:
            hi = max(hi, e.time)
        spans[role] = (lo, hi)
    return {role: {"start": lo, "end": hi, "seconds": hi - lo}
            for role, (lo, hi) in spans.items() if hi >= lo}


def run(cfg):
    """Execute one benchmark run and return its report."""
    M = cfg.num_partitions
    spec = InputSpec(cfg.data_size, M, cfg.seed, cfg.key_skew)
    expected_records, input_checksum = spec.summary()
    sh = dict(cfg.shuffle)
    N = cfg.cluster.nodes
    R = sh.pop("R", M)
    F = sh.pop("F", 4)
    P = sh.pop("P", None) or N * cfg.cluster.slots
    planned = planned_tasks(cfg.variant, M, R, F, P, N)
    sample_tasks = M if cfg.boundaries == "sample" else 0
    cluster = start_cluster(N, cfg.cluster.slots, cfg.cluster.store,
                            cost=CostModel(**cfg.cost), seed=cfg.seed,
                            failure_plan=_failure_plan(cfg, sample_tasks, planned))
    try:
        return _run(cfg, cluster, spec, M, R, F, P, sh, expected_records, input_checksum)
    finally:
        cluster.shutdown()


def _run(cfg, cluster, spec, M, R, F, P, sh, expected_records, input_checksum):
    rt = cluster.runtime
    N = cfg.cluster.nodes
    if cfg.boundaries == "sample":
        boundaries = _sample(rt, spec, R)
    else:
        boundaries = uniform_boundaries(R)
    job = BenchSortJob(boundaries, spec.partition, rt.cost, cfg.cluster.store.disk_bandwidth,
                       name="sortbench", output_to_disk=True)
    for idx, factor in cfg.slow_maps.items():
        rt.slowdowns.append(
            lambda s, idx=idx, f=factor: f if (s.labels.get("role") == "map"
                                               and s.labels.get("index") == idx
                                               and "duplicate" not in s.labels) else 1.0)
    for node in cfg.stall_merges:
        rt.slowdowns.append(
            lambda s, n=node: math.inf if (s.labels.get("role") == "merge"
                                           and s.labels.get("target") == n) else 1.0)
    if cfg.variant == "speculative" and sh.get("speculation") is None:
        # duplicate maps that run three times longer than an unslowed map would
        typical = job.stage_cost("map")(0, cfg.data_size / M)
        sh["speculation"] = (3 * typical, 1)
    if cfg.variant == "repartition" and sh.get("skew_memory_threshold") is None:
        sh["skew_memory_threshold"] = 2 * cfg.data_size // R
    t0 = rt.now
    inputs = list(range(M))
    scfg = ShuffleConfig(M=M, R=R, F=F, P=P, num_nodes=N, **sh)
    v = cfg.variant
    if v == "simple":
        out = simple_shuffle(rt, job, inputs, scfg)
    elif v == "riffle":
        out = riffle_shuffle(rt, job, inputs, scfg)
    elif v == "magnet":
        out = magnet_shuffle(rt, job, inputs, scfg)
    elif v in ("push", "push_star"):
        scfg.keep_map_outputs = v == "push"
        out = push_shuffle_pipelined(rt, job, inputs, scfg)
    elif v == "best_effort":
        out = best_effort_merge(rt, job, inputs, scfg)
    elif v == "speculative":
        out = speculative_shuffle(rt, job, inputs, scfg)
    elif v == "repartition":
        out = repartition_shuffle(rt, job, inputs, scfg)
    else:
        stream = streaming_shuffle(rt, job, inputs, scfg)
        partials = [(p.round, p.timestamp) for p in stream]
        out = stream.final_refs
        rt.counters["first_partial_at"] = partials[0][1] - t0
    flat = [r for item in out for r in (item if isinstance(item, list) else [item])]
    rt.wait(flat, num_ready=len(flat))
    jct = rt.now - t0
    record = validate(rt, out, input_checksum, expected_records)
    if cfg.trace:
        if cfg.trace.endswith(".csv"):
            cluster.trace.write_csv(cfg.trace)
        else:
            cluster.trace.write_jsonl(cfg.trace)
    metrics = rt.metrics()
    report = BenchReport(
        variant=v, data_size=cfg.data_size, num_partitions=M, job_completion_time=jct,
        stage_times=stage_times(cluster.trace),
        io={k: metrics[k] for k in ("bytes_spilled", "bytes_restored", "spill_files_created",
                                    "network_bytes", "allocation_queue_peak", "objects_created")},
        blocks_created=metrics["blocks_created"],
        reducer_visible_blocks=metrics["reducer_visible_blocks"],
        task_retries=metrics["task_retries"], reconstructions=metrics["reconstructions"],
        theoretical_baseline_seconds=theoretical_baseline(cfg.data_size, cfg.disk_bandwidth_model),
        validation=record.to_dict(),
        counters={k: v for k, v in sorted(rt.counters.items())})
    if cfg.output:
        report.write(cfg.output)
    rt.drop_refs(flat)
    return report


def _sample(rt, spec, R, rate=0.01):
    """Range boundaries from a ~1% key sample taken by one task per input partition."""
    name = "sortbench.sample"
    if not rt.is_registered(name):
        def sample(i):
            rec = as_records(spec.partition(i))
            step = max(1, int(round(1 / rate)))
            return rec[::step, :10].tobytes()
        rt.register(name, sample)
    refs = [rt.call(name, i, placement=i % rt.num_nodes, labels={"role": "sample", "index": i})
            for i in range(spec.num_partitions)]
    keys = []
    for r in refs:
        raw = rt.get(r)
        keys.extend(int.from_bytes(raw[j:j + 10], "big") for j in range(0, len(raw), 10))
    rt.drop_refs(refs)
    return sample_boundaries(keys, R)
