"""Domain errors raised by the solvers and the instance loader."""


class ShedError(Exception):
    """Base class for every load-shedding error."""


class InfeasibilityError(ShedError):
    """A solver could not produce a control for the given instance."""


class UnbalancedInjection(ShedError):
    """Injections of a connected component do not sum to zero."""


class InadmissibleControl(ShedError):
    """A control leaves the shedding box or breaks per-component balance."""


class DegenerateCut(ShedError):
    """A hyperplane supports a face of a cell without splitting it."""


class NegativeCoordinate(ShedError):
    """A sweep was requested on a set reaching below x_k = 0."""


class EmptyPolytope(ShedError):
    """An operation needs a nonempty polytope."""


class RetrievalFailed(InfeasibilityError):
    """No concrete control reproduces the aggregated path."""


class NotTreeReducible(InfeasibilityError):
    """The network does not contract to a tree of two-terminal components."""


class EmptyDomain(InfeasibilityError):
    """A piecewise-chi function has an empty domain."""


class InfeasibleTarget(InfeasibilityError):
    """The requested total lies outside the domain of a star output."""


class InstanceParseError(ShedError):
    """An instance file is malformed.

    Args:
        message (str): Human-readable reason.
        line (int | None): 1-based line of the offending item, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


__all__ = [
    "ShedError",
    "InfeasibilityError",
    "UnbalancedInjection",
    "InadmissibleControl",
    "DegenerateCut",
    "NegativeCoordinate",
    "EmptyPolytope",
    "RetrievalFailed",
    "NotTreeReducible",
    "EmptyDomain",
    "InfeasibleTarget",
    "InstanceParseError",
]
