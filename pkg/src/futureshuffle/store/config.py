from dataclasses import asdict, dataclass, field, fields

MiB = 1 << 20


@dataclass
class StoreConfig:
    """Per-node object store settings.

    The bandwidth and latency fields feed the simulated I/O lanes. ``fetch_latency``
    is added to every restore and every cross-node pull.
    """

    memory_limit: int = 256 * MiB
    fuse_threshold: int = 1 * MiB
    spill_dir: str | None = None
    fetch_latency: float = 0.0
    prefetch_enabled: bool = True
    prefetch_depth: int = 4
    disk_bandwidth: float = 200e6
    disk_seek: float = 1e-3
    network_bandwidth: float = 1.25e9

    def __post_init__(self):
        if self.memory_limit <= 0:
            raise ValueError("memory_limit must be positive")
        if self.fuse_threshold < 0:
            raise ValueError("fuse_threshold must be >= 0")

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown StoreConfig fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


COUNTERS = ("bytes_spilled", "bytes_restored", "spill_files_created",
            "network_bytes", "allocation_queue_peak", "objects_created")


@dataclass
class IoMetrics:
    """Monotone I/O counters for one node (or the sum over nodes)."""

    bytes_spilled: int = 0
    bytes_restored: int = 0
    spill_files_created: int = 0
    network_bytes: int = 0
    allocation_queue_peak: int = 0
    objects_created: int = 0
    network_bytes_by_tag: dict = field(default_factory=dict)

    def add_network(self, nbytes, tag):
        self.network_bytes += nbytes
        if tag is not None:
            self.network_bytes_by_tag[tag] = self.network_bytes_by_tag.get(tag, 0) + nbytes

    def to_dict(self):
        return asdict(self)

    @classmethod
    def total(cls, items):
        out = cls()
        for m in items:
            for name in COUNTERS:
                if name == "allocation_queue_peak":
                    out.allocation_queue_peak = max(out.allocation_queue_peak, m.allocation_queue_peak)
                else:
                    setattr(out, name, getattr(out, name) + getattr(m, name))
            for tag, v in m.network_bytes_by_tag.items():
                out.network_bytes_by_tag[tag] = out.network_bytes_by_tag.get(tag, 0) + v
        return out
