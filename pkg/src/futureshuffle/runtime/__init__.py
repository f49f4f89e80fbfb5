from .core import Runtime, decode, encode
from .types import (INLINE_LIMIT, CostModel, LineageRecord, ObjectRef, TaskContext,
                    TaskSpec, WaitResult)

__all__ = ["Runtime", "CostModel", "LineageRecord", "ObjectRef", "TaskContext", "TaskSpec",
           "WaitResult", "INLINE_LIMIT", "encode", "decode"]
