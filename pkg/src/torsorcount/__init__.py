"""Exact point counts and leading-constant factors for four singular quartic
del Pezzo surfaces over imaginary quadratic fields."""

from .constants import (
    Constants,
    alpha_polytope,
    compute_constants,
    omega_infinity,
    peyre_constant,
    theta0,
)
from .enumeration import direct_count, direct_points
from .height import ProjPoint, canonical_key, weil_height
from .qfield import DomainError, FieldCtx
from .surfaces import find_lines, get_surface
from .torsor import ConsistencyError, build_torsor_spec, torsor_count, torsor_enumerate

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError",
    "Constants",
    "DomainError",
    "FieldCtx",
    "ProjPoint",
    "alpha_polytope",
    "build_torsor_spec",
    "canonical_key",
    "compute_constants",
    "direct_count",
    "direct_points",
    "find_lines",
    "get_surface",
    "omega_infinity",
    "peyre_constant",
    "theta0",
    "torsor_count",
    "torsor_enumerate",
    "weil_height",
]
