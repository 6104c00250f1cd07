"""Local invariants of primitive k-differentials (k >= 3).

Decides which zero/pole order patterns and k-residue tuples occur on a
genus-g Riemann surface, builds explicit flat-surface witnesses out of
polygonal building blocks, and re-verifies every witness from its raw
cell-complex data.
"""

from .numerics import Tolerance, kth_roots, proportional_up_to_scale, arg_sort
from .stratum import (
    Signature,
    ComponentLabel,
    ResidueConfig,
    primitive_divisor,
    dimension,
    components,
    admissible_partition,
    is_empty,
)
from .surface import FlatSurface, SurfaceError, analyze

__all__ = [
    "Tolerance",
    "kth_roots",
    "proportional_up_to_scale",
    "arg_sort",
    "Signature",
    "ComponentLabel",
    "ResidueConfig",
    "primitive_divisor",
    "dimension",
    "components",
    "admissible_partition",
    "is_empty",
    "FlatSurface",
    "SurfaceError",
    "analyze",
]

__version__ = "0.1.0"
