"""Numerics for half-dimensional surface immersions in the para-complex
projective plane: split-complex algebra, frame (zero-curvature)
integration, structure-equation solvers, and Gauss-map harmonicity
certificates."""

from .liealg import Signature
from .surface2d import Grid2D, MCPair, SurfaceData

__version__ = "0.1.0"

__all__ = ["Signature", "Grid2D", "MCPair", "SurfaceData", "__version__"]
