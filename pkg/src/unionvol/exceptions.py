"""Exception hierarchy shared across the package."""


class UnionVolError(Exception):
    """Base class for every error raised by unionvol."""


class ContractError(UnionVolError, ValueError):
    """An argument violates an operation's precondition (shape, range, sign)."""


class EmptyBodyError(UnionVolError, ValueError):
    """A body would have zero volume."""


class BudgetError(UnionVolError, ValueError):
    """A requested sample count, cell count or enumeration exceeds its guard."""


class InfeasibleBudgetError(UnionVolError, ValueError):
    """The oracle error ratios are too large for the requested accuracy.

    ``min_eps`` is the smallest accuracy the estimator can guarantee with the
    given oracle errors (``inf`` if none).
    """

    def __init__(self, message, min_eps=float("inf")):
        super().__init__(message)
        self.min_eps = min_eps


class SamplingTimeoutError(UnionVolError, RuntimeError):
    """Rejection sampling hit its consecutive-rejection limit."""

    def __init__(self, message, tries, accepted):
        super().__init__(message)
        self.tries = tries
        self.accepted = accepted


class NoCompletedTrialError(UnionVolError, RuntimeError):
    """The union estimator ran out of budget before finishing a single trial."""


class AmplificationError(UnionVolError, RuntimeError):
    """More than half of the amplified runs failed."""

    def __init__(self, message, failed, runs):
        super().__init__(message)
        self.failed = failed
        self.runs = runs


class SpecParseError(UnionVolError, ValueError):
    """A body or CNF file does not match its schema.

    ``pointer`` is a JSON pointer (or ``line N`` for text formats) to the
    offending element.
    """

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.pointer = pointer
