"""Exception hierarchy shared by every layer of the package."""


class RandpolyError(Exception):
    """Base class for all package errors."""


class DegenerateInput(RandpolyError):
    """Point set is not in sufficiently general position for the operation."""


class AmbiguousFace(RandpolyError):
    """More than d points lie on one candidate facet hyperplane."""


class UnsupportedModel(RandpolyError):
    """Operation requires a rotation-invariant body model."""


class DomainError(RandpolyError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class RejectionBudgetExceeded(RandpolyError):
    """Rejection sampler would need more proposals than the configured budget."""


class QuadratureNoConvergence(RandpolyError):
    """Adaptive quadrature exhausted its subdivision budget."""


class ContainmentUnverified(RandpolyError):
    """Probabilistic check of K contained in L failed."""
