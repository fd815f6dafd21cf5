"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A shape, mesh, or configuration parameter is outside its valid range."""


class DomainError(ValueError):
    """Argument outside the supported range of a special function."""


class SingularityError(ValueError):
    """Evaluation requested exactly at a singular point (z = 0, zero displacement)."""


class NotSPDError(ValueError):
    """Matrix expected to be symmetric positive definite is not."""


class SingularSystemError(RuntimeError):
    """A wavenumber-dependent linear solve failed (system singular or non-finite)."""


class DegenerateNodesError(ValueError):
    """Sample nodes for a rational fit are not pairwise distinct."""


class PoleEvaluationError(ZeroDivisionError):
    """Barycentric denominator vanished at the requested evaluation point."""


class EmptyPoleSetError(ValueError):
    """Pole preprocessing removed every pole."""


class GridMismatchError(ValueError):
    """Two curves do not share the same wavenumber grid."""


class ContourError(RuntimeError):
    """Contour integration passed too close to an eigenvalue (moment blow-up)."""


class ConfigError(ValueError):
    """Experiment configuration is invalid; message names the offending field."""
