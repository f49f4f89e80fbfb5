from .algorithms import (magnet_shuffle, pipelined_consume, push_shuffle_pipelined,
                         reducer_nodes, riffle_shuffle, simple_shuffle)
from .config import ShuffleConfig
from .jobs import CountJob, ShuffleJob, SortJob, register_job
from .planning import estimate_blocks, intermediate_blocks, reducer_visible_blocks
from .records import (Block, merge_sorted, partition_groups, sample_boundaries,
                      sort_and_partition, uniform_boundaries)
from .skew import dynamic_repartition, repartition_shuffle
from .stragglers import best_effort_merge, run_speculatively, speculative_shuffle, speculative_submit
from .streaming import PartialAggregate, kl_divergence, normalize, streaming_shuffle

__all__ = [
    "simple_shuffle", "riffle_shuffle", "magnet_shuffle", "push_shuffle_pipelined",
    "pipelined_consume", "reducer_nodes", "ShuffleConfig", "ShuffleJob", "SortJob", "CountJob",
    "register_job", "estimate_blocks", "intermediate_blocks", "reducer_visible_blocks", "Block",
    "merge_sorted", "partition_groups", "sample_boundaries", "sort_and_partition",
    "uniform_boundaries", "dynamic_repartition", "repartition_shuffle", "best_effort_merge",
    "run_speculatively", "speculative_shuffle", "speculative_submit", "PartialAggregate",
    "kl_divergence", "normalize", "streaming_shuffle",
]
