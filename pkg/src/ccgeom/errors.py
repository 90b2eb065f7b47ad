"""Exception hierarchy shared by all ccgeom modules."""


class GeometryError(Exception):
    """Base class for ccgeom errors."""


class DomainError(GeometryError, ValueError):
    """Input outside the domain of an operation."""


class DegeneracyError(DomainError):
    """Input is a degenerate configuration (coincident points, zero sides)."""


class AmbiguityError(DomainError):
    """The requested object is not unique (e.g. segments between antipodes)."""


class UnsupportedKindError(DomainError):
    """Operation is not defined on the given model kind."""


class NumericalError(GeometryError, RuntimeError):
    """An iterative solver failed to reach its tolerance.

    ``best`` carries the best value found so callers can decide whether it
    is usable.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ResolutionError(GeometryError):
    """A discretization was too coarse (empty fiber, disconnected net)."""


class SetupError(GeometryError):
    """A scan could not be set up (e.g. no strainer was found)."""
