from .config import IoMetrics, StoreConfig
from .spill import SpillAddress, SpillFile, read_index, read_spilled, write_spill_file
from .store import ObjectEntry, ObjectStore

__all__ = ["IoMetrics", "StoreConfig", "SpillAddress", "SpillFile", "ObjectEntry",
           "ObjectStore", "read_index", "read_spilled", "write_spill_file"]
