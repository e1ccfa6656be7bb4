"""Exception types shared across the package."""


class MinsurfError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigurationError(MinsurfError):
    """A config value, preset name, or argument combination is invalid."""


class StructuralError(MinsurfError):
    """Graph or array structure violated: node from a foreign tape, shape
    mismatch, layer stack that does not line up with the input dimension."""


class EvaluationError(MinsurfError):
    """A numeric evaluation produced nan/inf or hit an undefined point."""


class ParseError(MinsurfError):
    """Expression text rejected; ``offset`` is the byte position of the
    first character that could not be consumed."""

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


class NumericalError(MinsurfError):
    """An algorithm produced a non-finite quantity mid-run."""


class CheckpointError(MinsurfError):
    """Checkpoint file is malformed, truncated, or version-incompatible."""


class TrainingDiverged(NumericalError):
    """Loss or parameters went non-finite during training.

    Carries the last finite checkpoint so the caller can salvage the run.
    """

    def __init__(self, message: str, epoch: int, checkpoint=None):
        super().__init__(message)
        self.epoch = epoch
        self.checkpoint = checkpoint
