"""Curve surgery, Riesz potentials of loop currents, Lorentz norms and
spectral div-curl solvers."""

from .geometry import Curve, CurrentMeasure, SurfaceMeasure, build_curve, cone_surface, cut, measure_of
from .surgery import SurgeryConfig, ball_growth_constant, surgery_decompose, verify_decomposition
from .potential import riesz_direct, riesz_semigroup
from .lorentz import layercake_norm, lorentz_norm, rearrange
from .fields import FieldGrid, dirac_family, loop_current
from .pde import solve_divcurl, solve_poisson_vec

__version__ = "0.1.0"

__all__ = [
    "Curve",
    "CurrentMeasure",
    "SurfaceMeasure",
    "build_curve",
    "cone_surface",
    "cut",
    "measure_of",
    "SurgeryConfig",
    "ball_growth_constant",
    "surgery_decompose",
    "verify_decomposition",
    "riesz_direct",
    "riesz_semigroup",
    "layercake_norm",
    "lorentz_norm",
    "rearrange",
    "FieldGrid",
    "dirac_family",
    "loop_current",
    "solve_divcurl",
    "solve_poisson_vec",
]
