"""Quadrature-QFI nonclassicality measures for single-mode bosonic states."""

__version__ = "0.1.0"

from .fock_core import (
    DensityMatrix,
    PureState,
    QuadratureMoments,
    TruncatedBasis,
    TruncationError,
    moments,
    suggest_dim,
)
from .qfi import max_quadrature_qfi, metrological_power, pure_nonclassicality
from .roof import RoofOptions, minimize_nonclassicality
from .states import CoherentSuperposition, StateSpec, prepare_pure, prepare_superposition, rho_p

__all__ = [
    "CoherentSuperposition",
    "DensityMatrix",
    "PureState",
    "QuadratureMoments",
    "RoofOptions",
    "StateSpec",
    "TruncatedBasis",
    "TruncationError",
    "max_quadrature_qfi",
    "metrological_power",
    "minimize_nonclassicality",
    "moments",
    "prepare_pure",
    "prepare_superposition",
    "pure_nonclassicality",
    "rho_p",
    "suggest_dim",
]
