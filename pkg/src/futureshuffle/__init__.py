"""Distributed futures on a simulated cluster, and shuffle algorithms built on them."""

from .cluster import Cluster, FailureEvent, FailurePlan, start_cluster
from .runtime import CostModel, ObjectRef, Runtime, TaskSpec, WaitResult
from .store import StoreConfig

__all__ = ["Cluster", "FailureEvent", "FailurePlan", "start_cluster", "CostModel",
           "ObjectRef", "Runtime", "TaskSpec", "WaitResult", "StoreConfig"]
