"""Curvature, soliton and Ricci-flow computations for left-invariant Randers metrics on nilpotent Lie groups."""

__version__ = "0.1.0"

from .lie_algebra import NilpotentAlgebra, abelian, filiform4, heisenberg, validate  # noqa: E402
from .randers import RandersStructure, TangentSample  # noqa: E402

__all__ = [
    "NilpotentAlgebra",
    "RandersStructure",
    "TangentSample",
    "abelian",
    "filiform4",
    "heisenberg",
    "validate",
    "__version__",
]
