from dataclasses import asdict, dataclass


@dataclass
class ShuffleConfig:
    """Shape of a shuffle. ``M`` and ``R`` are checked against the inputs and the job."""

    M: int
    R: int
    F: int = 1
    P: int | None = None
    num_nodes: int | None = None
    partitioner: str = "range"
    keep_map_outputs: bool = False
    merge_timeout: float | None = None
    speculation: tuple | None = None      # (delay_threshold, max_dups)
    skew_memory_threshold: int | None = None

    def __post_init__(self):
        if self.M < 1 or self.R < 1:
            raise ValueError("M and R must be >= 1")
        if self.F < 1:
            raise ValueError("F must be >= 1")
        if self.P is not None and self.P < 1:
            raise ValueError("P must be >= 1")
        if self.partitioner not in ("range", "hash"):
            raise ValueError(f"unknown partitioner {self.partitioner!r}")

    def to_dict(self):
        return asdict(self)


def chunks(n, size):
    """``(start, stop)`` ranges of ``size`` items; the last one may be shorter."""
    return [(s, min(n, s + size)) for s in range(0, n, size)]
