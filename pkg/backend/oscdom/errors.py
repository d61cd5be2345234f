"""Exception hierarchy of the oscdom package."""


class OscdomError(Exception):
    """Base class of every error raised by the library."""


class CubeBelowResolution(OscdomError):
    """A cube covers fewer cells per axis than the operation needs."""


class CubeOutsideDomain(OscdomError):
    """A cube leaves the grid box of a function without compact support."""


class LambdaOutOfRange(OscdomError):
    pass


class DepthExhausted(OscdomError):
    """A dyadic recursion reached the tree's maximal depth."""


class SingularCellUnhandled(OscdomError):
    """The evaluation point lies in a source cell with no cancellation rule."""


class TailNotConvergent(OscdomError):
    pass


class DomainTooSmall(OscdomError):
    pass


class NoDiagonalPart(OscdomError):
    pass


class SupportNotContained(OscdomError):
    pass


class RingBudgetExceeded(OscdomError):
    pass


class UnauditedFamily(OscdomError):
    pass


class DimensionUnsupported(OscdomError):
    pass


class ZeroGradient(OscdomError):
    pass


class ConfigError(OscdomError):
    """Invalid experiment configuration; `field` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class InvariantViolation(OscdomError):
    def __init__(self, module, invariant, detail=""):
        super().__init__(f"[{module}] {invariant} violated: {detail}")
        self.module = module
        self.invariant = invariant
        self.detail = detail
