"""Finite-difference operators shared across the geometry modules.

Gridded fields are indexed ``f[i, j, ...]`` with axis 0 the first real
coordinate (spacing ``hx``) and axis 1 the second (spacing ``hy``); extra
trailing axes (vector or matrix components) are carried through untouched.
Order 2 uses central differences with second-order one-sided stencils at
the edges (``np.gradient``).  Order 4 uses the five-point central stencil
in the interior; the two cells nearest each edge fall back to order 2, so
fourth-order accuracy holds on the margin-2 interior.
"""

from __future__ import annotations

import numpy as np


def diff(f: np.ndarray, h: float, axis: int, order: int = 2) -> np.ndarray:
    """Partial derivative of a gridded field along a grid axis."""
    edge = 2 if f.shape[axis] > 2 else 1
    if order == 2:
        return np.gradient(f, h, axis=axis, edge_order=edge)
    if order != 4:
        raise ValueError(f"unsupported difference order {order}")
    n = f.shape[axis]
    if n < 5:
        return np.gradient(f, h, axis=axis, edge_order=edge)
    g = np.moveaxis(np.gradient(f, h, axis=axis, edge_order=edge), axis, 0)
    fm = np.moveaxis(f, axis, 0)
    g[2:-2] = (-fm[4:] + 8.0 * fm[3:-1] - 8.0 * fm[1:-3] + fm[:-4]) / (12.0 * h)
    return np.moveaxis(g, 0, axis)


def dz(f: np.ndarray, hx: float, hy: float, order: int = 2) -> np.ndarray:
    """d/dz = (d/dy1 - i d/dy2)/2 for z = y1 + i*y2."""
    return 0.5 * (diff(f, hx, 0, order) - 1j * diff(f, hy, 1, order))


def dzbar(f: np.ndarray, hx: float, hy: float, order: int = 2) -> np.ndarray:
    """d/dzbar = (d/dy1 + i d/dy2)/2."""
    return 0.5 * (diff(f, hx, 0, order) + 1j * diff(f, hy, 1, order))


def _second(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    fm = np.moveaxis(f, axis, 0)
    out = np.empty_like(fm)
    out[1:-1] = (fm[2:] - 2.0 * fm[1:-1] + fm[:-2]) / (h * h)
    out[0] = (2.0 * fm[0] - 5.0 * fm[1] + 4.0 * fm[2] - fm[3]) / (h * h)
    out[-1] = (2.0 * fm[-1] - 5.0 * fm[-2] + 4.0 * fm[-3] - fm[-4]) / (h * h)
    return np.moveaxis(out, 0, axis)


def laplacian(f: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Five-point Laplacian; one-sided second differences on the edges."""
    return _second(f, hx, 0) + _second(f, hy, 1)


def dz_dzbar(f: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """The operator d2/(dz dzbar) = Laplacian/4."""
    return 0.25 * laplacian(f, hx, hy)


def interior_max(field: np.ndarray, margin: int = 1) -> float:
    """Max absolute value away from the boundary ring of the grid."""
    if margin == 0:
        return float(np.max(np.abs(field)))
    sl = (slice(margin, -margin), slice(margin, -margin))
    return float(np.max(np.abs(field[sl])))


def zero_curvature_field(uz: np.ndarray, uzb: np.ndarray, hx: float, hy: float,
                         order: int = 2) -> np.ndarray:
    """Pointwise Frobenius norm of d_z Uzb - d_zbar Uz + [Uz, Uzb]."""
    resid = (dz(uzb, hx, hy, order) - dzbar(uz, hx, hy, order)
             + uz @ uzb - uzb @ uz)
    return np.sqrt(np.sum(np.abs(resid) ** 2, axis=(-2, -1)))
