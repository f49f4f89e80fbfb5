"""Back-of-the-envelope block arithmetic for shuffle layouts (nothing is executed)."""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BlockEstimate:
    partitions: int
    blocks: int
    block_size: float


def estimate_blocks(data_size, partition_size):
    """M = R = data/partition; a simple shuffle then creates M*R blocks."""
    m = math.ceil(data_size / partition_size)
    return BlockEstimate(m, m * m, data_size / (m * m))


def reducer_visible_blocks(variant, M, R, F=1, nodes=1, P=None):
    """Blocks the reduce stage reads, by shuffle variant."""
    if variant == "simple":
        return M * R
    if variant == "riffle":
        return math.ceil(M / F) * R
    if variant == "magnet":
        return math.ceil(M / F) * R
    if variant in ("push", "push_star"):
        return math.ceil(M / (P or M)) * R
    raise ValueError(f"unknown variant {variant!r}")


def intermediate_blocks(variant, M, R, F=1, nodes=1, P=None):
    """Map and merge output objects created, by shuffle variant."""
    if variant == "simple":
        return M * R
    if variant == "riffle":
        return M * R + math.ceil(M / F) * R
    if variant == "magnet":
        return M * R + math.ceil(M / F) * R
    if variant in ("push", "push_star"):
        return M * min(nodes, R) + math.ceil(M / (P or M)) * R
    raise ValueError(f"unknown variant {variant!r}")
