from .bench import (VARIANTS, BenchReport, ClusterSpec, RunConfig, planned_tasks, run,
                    stage_times, theoretical_baseline)
from .data import (InputSpec, ValidationRecord, gen_input, generate_partition,
                   partition_layout, validate, validate_partitions)

__all__ = ["VARIANTS", "BenchReport", "ClusterSpec", "RunConfig", "planned_tasks", "run",
           "stage_times", "theoretical_baseline", "InputSpec", "ValidationRecord", "gen_input",
           "generate_partition", "partition_layout", "validate", "validate_partitions"]
