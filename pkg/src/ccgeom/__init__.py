"""Numerical toolkit for the double disk, crosscap and purse model spaces."""
from .errors import (
    AmbiguityError,
    DegeneracyError,
    DomainError,
    GeometryError,
    NumericalError,
    ResolutionError,
    SetupError,
    UnsupportedKindError,
)
from .kernels import BACKEND
from .modelspace import (
    ModelKind,
    ModelParams,
    ModelPoint,
    PointSet,
    SolverOpts,
    base_points,
    involution_A,
    model_distance,
    reflect_R,
    sample_points,
    sample_set,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguityError", "DegeneracyError", "DomainError", "GeometryError", "NumericalError",
    "ResolutionError", "SetupError", "UnsupportedKindError", "BACKEND", "ModelKind", "ModelParams",
    "ModelPoint", "PointSet", "SolverOpts", "base_points", "involution_A", "model_distance",
    "reflect_R", "sample_points", "sample_set", "__version__",
]
