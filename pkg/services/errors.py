class ComplementKitError(Exception):
    '''Base class for every error raised by the toolkit.

    Analogue to the built-in errors, kept separate so callers (and the CLI)
    can tell numerical-domain failures from programming mistakes.
    '''


class InvalidInput(ComplementKitError, ValueError):
    '''Raised when a value cannot represent the requested object
    (non-finite entries, wrong rank, malformed JSON payload).'''


class DimensionMismatch(ComplementKitError):
    '''Raised when operands live in ambient spaces of different dimension.'''


class NotInvertible(ComplementKitError):
    '''Raised when the estimated condition number exceeds ``cond_max``.'''

    def __init__(self, msg, cond=float("inf")):
        super().__init__(msg)
        self.cond = cond


class NotComplementary(ComplementKitError):
    '''Raised when a direct sum decomposition required by an operation fails.'''


class GapTooLarge(ComplementKitError):
    '''Raised when two projectors are too far apart to be conjugated.'''


class InvalidGroupElement(ComplementKitError):
    '''Raised when an operator does not leave the required subspace invariant.'''


class OutsideChartDomain(ComplementKitError):
    '''Raised when a frame point lies outside the domain of a chart.'''


class OutsideTrivializationDomain(ComplementKitError):
    '''Raised when a point lies outside the domain of a local trivialization.'''


class NotInDelta(ComplementKitError):
    '''Raised when a pair of subspaces has no common complement.'''


class SearchFailed(ComplementKitError):
    '''Raised when the common complement search exhausts its retry budget.

    ``margins`` holds the best ``(margin_s, margin_t)`` observed.
    '''

    def __init__(self, msg, margins=(float("nan"), float("nan"))):
        super().__init__(msg)
        self.margins = margins


class NotInFiber(ComplementKitError):
    '''Raised when a frame does not project onto the prescribed pair.'''
