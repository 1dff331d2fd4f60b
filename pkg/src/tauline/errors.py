"""Exception hierarchy.

Errors split into two families so the command-line front end can map them
to exit codes: :class:`ValidationError` (bad input, exit 2) and
:class:`ComputationError` (well-formed input on which an estimand is not
defined, exit 3).
"""


class TaulineError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(TaulineError, ValueError):
    """Input data or configuration is malformed."""


class ComputationError(TaulineError, ArithmeticError):
    """A quantity cannot be computed on otherwise valid data."""


class MissingColumn(ValidationError):
    pass


class NonNumericTime(ValidationError):
    def __init__(self, row, value):
        super().__init__(f"row {row}: time {value!r} is not numeric")
        self.row = row


class NegativeTime(ValidationError):
    def __init__(self, row, value):
        super().__init__(f"row {row}: negative time {value!r}")
        self.row = row


class InvalidEvent(ValidationError):
    def __init__(self, row, value):
        super().__init__(f"row {row}: event value {value!r} not in {{0, 1}}")
        self.row = row


class EmptyData(ValidationError):
    pass


class EmptyArm(ValidationError):
    pass


class BandwidthTooLarge(ValidationError):
    pass


class NonMonotoneCurve(ValidationError):
    pass


class InconsistentRiskTable(ValidationError):
    pass


class InfeasibleTotalEvents(ValidationError):
    pass


class CensoredDataUnsupported(ValidationError):
    pass


class DomainExceeded(ComputationError):
    pass


class MilestoneBeyondFollowUp(DomainExceeded):
    pass


class NoEventsBeforeMilestone(ComputationError):
    pass


class NoEvents(ComputationError):
    pass


class TooFewEvents(ComputationError):
    pass


class EstimandUndefinedOnFullData(ComputationError):
    pass


class TooManyFailedResamples(ComputationError):
    pass


class MonotoneLikelihood(UserWarning):
    """The Cox partial likelihood has no finite maximiser."""


class ReconstructionWarning(UserWarning):
    """Reconstruction ran in a degraded mode (e.g. no risk table)."""
