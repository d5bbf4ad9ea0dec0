"""Exception hierarchy shared by every module."""


class MaxDiskError(Exception):
    """Base class for all errors raised by :mod:`maxdisk`."""


class DifferentSheets(MaxDiskError, ValueError):
    pass


class OnUnitCircle(MaxDiskError, ValueError):
    pass


class NotInB0(MaxDiskError, ValueError):
    pass


class PreconditionViolated(MaxDiskError, ValueError):
    pass


class OutsideDomain(MaxDiskError, ValueError):
    pass


class QuadratureNonConvergent(MaxDiskError, ArithmeticError):
    pass


class DivisorMayVanish(MaxDiskError, ZeroDivisionError):
    pass


class UncancelledPole(MaxDiskError, ValueError):
    pass


class DegenerateData(MaxDiskError, ValueError):
    pass


class PoleUncompensated(MaxDiskError, ValueError):
    pass


class OffsetDegenerate(MaxDiskError, ValueError):
    pass


class NTooSmall(MaxDiskError, ValueError):
    pass


class PartitionFailed(MaxDiskError):
    pass


class FitFailed(MaxDiskError):
    pass


class PathLeavesDomain(MaxDiskError, ValueError):
    pass


class EmptySource(MaxDiskError, ValueError):
    pass


class LevelSetNotSeparating(MaxDiskError):
    pass


class QOutsideK(MaxDiskError):
    pass


class NoFrameFound(MaxDiskError):
    pass


class AlphaSearchFailed(MaxDiskError):
    """No admissible alpha; ``failing`` names the certificate that blocked the search."""

    def __init__(self, message, failing=None, history=None, certificate=None):
        super().__init__(message)
        self.failing = failing
        self.history = history or []
        self.certificate = certificate


class NExhausted(MaxDiskError):
    """Every N in the ladder failed; ``failing`` names the last failing certificate."""

    def __init__(self, message, failing=None, attempts=None):
        super().__init__(message)
        self.failing = failing
        self.attempts = attempts or []


class SearchExhausted(MaxDiskError):
    pass


class TrialLadderExhausted(MaxDiskError):
    pass
