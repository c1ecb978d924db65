"""Exception hierarchy shared by every nettwin app."""


class NetTwinError(Exception):
    """Base class for all domain errors raised by nettwin."""


class InvalidArgument(NetTwinError, ValueError):
    """An argument violates the operation's precondition."""


class EmptyGraphError(NetTwinError):
    """A topology generator could not place a single link."""


class NoPathError(NetTwinError):
    """The destination is unreachable from the source."""


class FixedOutputWidthError(NetTwinError):
    """The generic graph model was given a path count it was not built for."""


class DegenerateSpreadError(NetTwinError):
    """The ground truth has zero inter-quartile range."""


class DatasetBuildError(NetTwinError):
    """Too many samples failed while building a dataset."""


class TrainingError(NetTwinError):
    """Training cannot proceed on the given data."""


class CheckpointFormatError(NetTwinError):
    """A checkpoint file is truncated or was written by another format."""
