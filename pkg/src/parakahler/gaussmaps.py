"""Matrix models of the frame bundles and the Gauss maps of a frame field.

Three homogeneous-space models are realized as matrix orbits through the
twisted real group: the order-6 bundle point U P_eps U^T, the symmetric
orbit U P_H U^T, and the conjugation orbit U diag(eps^4, eps^2, 1) U^{-1}.
Their stabilizers (the circle diag(a, 1/a, 1), the diagonal subgroup,
and the twisted rotation group) make the maps well defined; the two
product identities P_eps P_eps^T = diag(eps^4, eps^2, 1) and
P_eps P_eps^T P_eps = P_H tie the composite projections to the direct
ones.  Harmonicity certificates for the Gauss maps delegate to the
eigenspace test of the frame coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import liealg, surface2d
from .liealg import EPS, Signature

KINDS = ("FL3", "SLGrTilde", "Fl2Tilde")

_SLR_TOL = 1e-8


@dataclass
class GaussPoint:
    kind: str
    M: np.ndarray


def _check_real_form(U: np.ndarray, sig: Signature, tol: float = _SLR_TOL) -> None:
    dev = float(np.max(np.abs(liealg.tau(U, sig) - U)))
    if dev > tol:
        raise ValueError(f"matrix is outside the twisted real form (dev {dev:.3e})")


def gauss_FL3(U: np.ndarray, sig: Signature) -> GaussPoint:
    """U -> U P_eps U^T, the order-6 bundle model."""
    _check_real_form(U, sig)
    p = sig.P_eps
    return GaussPoint("FL3", U @ p @ np.swapaxes(U, -1, -2))


def gauss_SLGr(U: np.ndarray, sig: Signature) -> GaussPoint:
    """U -> U P_H U^T, the Grassmannian-of-Lagrangian-subspaces model."""
    _check_real_form(U, sig)
    p = sig.P_H
    return GaussPoint("SLGrTilde", U @ p @ np.swapaxes(U, -1, -2))


def gauss_Fl2(U: np.ndarray, sig: Signature) -> GaussPoint:
    """U -> U diag(eps^4, eps^2, 1) U^{-1}, the flag model."""
    _check_real_form(U, sig)
    d = np.diag([EPS ** 4, EPS ** 2, 1.0]).astype(complex)
    return GaussPoint("Fl2Tilde", U @ d @ np.linalg.inv(U))


_GAUSS_FUNCS = {"FL3": gauss_FL3, "SLGrTilde": gauss_SLGr, "Fl2Tilde": gauss_Fl2}


def product_identities(sig: Signature) -> dict[str, float]:
    """Deviations of the two closed-form products from their targets."""
    p = sig.P_eps
    d = np.diag([EPS ** 4, EPS ** 2, 1.0])
    return {
        "PPt_vs_diag": float(np.max(np.abs(p @ p.T - d))),
        "PPtP_vs_PH": float(np.max(np.abs(p @ p.T @ p - sig.P_H))),
    }


def stabilizer_sample(kind: str, sig: Signature, rng: np.random.Generator) -> np.ndarray:
    """Random stabilizer element of the corresponding base point."""
    if kind == "FL3":
        a = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        return np.diag([a, 1.0 / a, 1.0])
    if kind == "Fl2Tilde":
        # diagonal subgroup of the real form: diag(a, conj(a), 1/|a|^2)
        a = rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
        return np.diag([a, np.conj(a), 1.0 / abs(a) ** 2])
    if kind == "SLGrTilde":
        # twisted rotation: conjugate a standard special orthogonal matrix
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        r = sig.R_H
        return np.linalg.inv(r) @ q.astype(complex) @ r
    raise ValueError(f"unknown bundle kind {kind!r}")


def stabilizer_invariance(kind: str, sig: Signature, trials: int = 100,
                          rng: np.random.Generator | None = None) -> float:
    """Max deviation of the model under right multiplication by stabilizers."""
    if rng is None:
        rng = np.random.default_rng(7)
    func = _GAUSS_FUNCS[kind]
    worst = 0.0
    for _ in range(trials):
        u = liealg.random_slr_group(rng, sig)
        k = stabilizer_sample(kind, sig, rng)
        if kind == "SLGrTilde":
            dev = float(np.max(np.abs(k @ sig.P_H @ k.T - sig.P_H)))
            if dev > 1e-10:
                raise RuntimeError("sampled matrix does not stabilize P_H")
        base = func(u, sig).M
        moved = func(u @ k, sig).M
        worst = max(worst, float(np.max(np.abs(moved - base))))
    return worst


def gauss_of_frame(F: np.ndarray, which: str, sig: Signature) -> np.ndarray:
    """Pointwise Gauss map of a frame field; returns an (nx, ny, 3, 3) field."""
    if which not in KINDS:
        raise ValueError(f"which must be one of {KINDS}")
    _check_real_form(F, sig)
    if which == "FL3":
        return F @ sig.P_eps @ np.swapaxes(F, -1, -2)
    if which == "SLGrTilde":
        return F @ sig.P_H @ np.swapaxes(F, -1, -2)
    d = np.diag([EPS ** 4, EPS ** 2, 1.0]).astype(complex)
    return F @ d @ np.linalg.inv(F)


def diagram_check(F: np.ndarray, sig: Signature) -> float:
    """Agreement of the two routes to the lower bundles.

    The composite projections act on U P_eps U^T by the product matrices
    P_eps P_eps^T and P_eps P_eps^T P_eps; the direct maps use the
    closed-form diagonal and P_H.  Both routes are evaluated numerically
    and compared pointwise.
    """
    p = sig.P_eps
    ft = np.swapaxes(F, -1, -2)
    via_products_slgr = F @ (p @ p.T @ p) @ ft
    direct_slgr = gauss_of_frame(F, "SLGrTilde", sig)
    finv = np.linalg.inv(F)
    via_products_fl2 = F @ (p @ p.T) @ finv
    direct_fl2 = gauss_of_frame(F, "Fl2Tilde", sig)
    return float(max(np.max(np.abs(via_products_slgr - direct_slgr)),
                     np.max(np.abs(via_products_fl2 - direct_fl2))))


def orbit_signature_defect(point: GaussPoint, sig: Signature) -> float:
    """Distance of a model point from the structural traits of its orbit.

    Flag points carry the fixed eigenvalue multiset {eps^4, eps^2, 1};
    the symmetric-model points are congruences of a fixed matrix, so
    their determinant is pinned and (for the Grassmannian model) the
    transpose symmetry of P_H survives congruence.
    """
    if point.kind == "Fl2Tilde":
        target = sorted([EPS ** 4, EPS ** 2, 1.0 + 0j], key=np.angle)
        eig = sorted(np.linalg.eigvals(point.M), key=np.angle)
        return float(np.max(np.abs(np.array(eig) - np.array(target))))
    if point.kind == "SLGrTilde":
        det_dev = abs(np.linalg.det(point.M) - np.linalg.det(sig.P_H))
        sym_dev = float(np.max(np.abs(point.M - point.M.T)))
        return max(float(det_dev), sym_dev)
    det_dev = abs(np.linalg.det(point.M) - np.linalg.det(sig.P_eps))
    return float(det_dev)


def harmonicity_certificate(F: np.ndarray, mc: surface2d.MCPair, k: int,
                            sig: Signature, tol: float = 1e-10):
    """Primitive-harmonicity certificate attached to the Gauss maps.

    k = 6 certifies the order-6 bundle maps, k = 3 the flag maps,
    k = 2 the Lagrangian-Grassmannian maps.  The frame must live in the
    twisted real form; the eigenspace test runs on the coefficients.
    """
    _check_real_form(F, sig)
    return surface2d.primitive_check(mc, k, sig, tol=tol)
