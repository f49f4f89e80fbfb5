"""Exception types raised by the runtime, the object store and the shuffle library."""


class FutureShuffleError(Exception):
    """Base class for every error raised by this package."""


# runtime

class UnknownFunction(FutureShuffleError, KeyError):
    pass


class DeadReference(FutureShuffleError):
    """A reference was used after its count dropped to zero."""


class DoubleDrop(FutureShuffleError):
    pass


class GetTimeoutError(FutureShuffleError, TimeoutError):
    pass


class InlineArgumentTooLarge(FutureShuffleError, ValueError):
    pass


class ReconstructionFailed(FutureShuffleError):
    pass


class NonReconstructibleRoot(ReconstructionFailed):
    """The object was created by ``put`` and has no lineage to replay."""


class TaskCancelledError(FutureShuffleError):
    pass


class TaskFailedError(FutureShuffleError):
    """Application error raised inside a task body.

    The original exception is kept in ``cause``.
    """

    def __init__(self, task_id, function_id, cause):
        super().__init__(f"task {task_id} ({function_id}) raised {cause!r}")
        self.task_id = task_id
        self.function_id = function_id
        self.cause = cause


class DeadlockError(FutureShuffleError, RuntimeError):
    """The driver is blocked and no simulated event can ever wake it."""


class NondeterministicReplay(FutureShuffleError):
    pass


# object store

class ObjectTooLarge(FutureShuffleError, ValueError):
    pass


class NothingToSpill(FutureShuffleError):
    pass


class SpillFileError(FutureShuffleError):
    pass


class SpillFileCorrupt(SpillFileError):
    pass


class SpillFileMissing(SpillFileError):
    pass


class SourceLost(FutureShuffleError):
    pass


# shuffle

class MalformedRecord(FutureShuffleError, ValueError):
    pass


class PartitionMismatch(FutureShuffleError, ValueError):
    pass


class SupportMismatch(FutureShuffleError, ValueError):
    pass


class Unnormalized(FutureShuffleError, ValueError):
    pass


class SingleBlockOverThreshold(UserWarning):
    """One indivisible reduce input exceeds the repartition threshold."""


# benchmark

class ValidationFailed(FutureShuffleError):
    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset
