"""sl(3, C) with its order-6 automorphism, real form, and eigenspace split.

The automorphism sigma acts by X -> -P_eps X^T P_eps where P_eps carries
sixth roots of unity; its square and cube are realized by explicit
conjugations.  The antilinear involution tau singles out a real form
isomorphic to sl(3, R) (conjugation by R_H makes its elements literally
real).  Everything is parameterized by the signature H = +1 (elliptic) or
H = -1 (hyperbolic).

The label convention for the six eigenspace slots (does slot j carry
eigenvalue eps^j or eps^-j?) is calibrated once per signature from the
basis tables rather than assumed; see :func:`eigenvalue_sign`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .kernels import expm3

EPS = np.exp(1j * np.pi / 3.0)

_SLOTS = 6


@dataclass(frozen=True)
class Signature:
    """Case selector H = +1 (elliptic) or H = -1 (hyperbolic)."""

    H: int

    def __post_init__(self):
        if self.H not in (1, -1):
            raise ValueError("H must be +1 or -1")

    @property
    def sqrt_minus_H(self) -> complex:
        # principal value: sqrt(-1) = i when H = +1, sqrt(1) = 1 when H = -1
        return 1j if self.H == 1 else 1.0 + 0.0j

    @property
    def P_H(self) -> np.ndarray:
        return np.array([[0, 1, 0], [1, 0, 0], [0, 0, -self.H]], dtype=complex)

    @property
    def P_eps(self) -> np.ndarray:
        return np.array([[0, EPS ** 2, 0],
                         [EPS ** 4, 0, 0],
                         [0, 0, -self.H]], dtype=complex)

    @property
    def P2(self) -> np.ndarray:
        return np.diag([EPS ** 4, EPS ** 2, 1.0]).astype(complex)

    @property
    def R_H(self) -> np.ndarray:
        s = 1.0 / np.sqrt(2.0)
        return np.array([[s, s, 0],
                         [1j * s, -1j * s, 0],
                         [0, 0, self.sqrt_minus_H]], dtype=complex)


def sigma(X: np.ndarray, sig: Signature) -> np.ndarray:
    """Order-6 automorphism on the algebra: -P_eps X^T P_eps."""
    p = sig.P_eps
    return -p @ np.swapaxes(X, -1, -2) @ p


def sigma_group(g: np.ndarray, sig: Signature) -> np.ndarray:
    """Group version: P_eps (g^T)^{-1} P_eps."""
    p = sig.P_eps
    return p @ np.linalg.inv(np.swapaxes(g, -1, -2)) @ p


def sigma2(X: np.ndarray, sig: Signature) -> np.ndarray:
    """The square of sigma, realized as conjugation by diag(eps^4, eps^2, 1)."""
    p2 = sig.P2
    return p2 @ X @ np.linalg.inv(p2)


def sigma3(X: np.ndarray, sig: Signature) -> np.ndarray:
    """The cube of sigma: -P_H X^T P_H (an order-2 outer automorphism)."""
    p3 = sig.P_H
    return -p3 @ np.swapaxes(X, -1, -2) @ p3


def tau(X: np.ndarray, sig: Signature) -> np.ndarray:
    """Antilinear real-form involution Ad(P_H) conj; commutes with sigma."""
    p = sig.P_H
    return p @ np.conj(X) @ p


def tau_group(g: np.ndarray, sig: Signature) -> np.ndarray:
    return tau(g, sig)


def in_slr(X: np.ndarray, sig: Signature, tol: float = 1e-10) -> bool:
    """True when X is fixed by tau (algebra and group share the formula)."""
    return float(np.max(np.abs(tau(X, sig) - X))) < tol


def rh_conjugate(X: np.ndarray, sig: Signature) -> np.ndarray:
    """Ad(R_H) X; real for tau-fixed input."""
    r = sig.R_H
    return r @ X @ np.linalg.inv(r)


def basis_matrices(sig: Signature) -> list[tuple[int, str, np.ndarray]]:
    """The eight basis matrices of the six eigenspace slots."""
    H = float(sig.H)

    def m(rows):
        return np.array(rows, dtype=complex)

    return [
        (0, "g0", m([[1, 0, 0], [0, -1, 0], [0, 0, 0]])),
        (1, "g1_a", m([[0, 0, 0], [0, 0, 1], [-H, 0, 0]])),
        (1, "g1_b", m([[0, 1, 0], [0, 0, 0], [0, 0, 0]])),
        (2, "g2", m([[0, 0, 1], [0, 0, 0], [0, H, 0]])),
        (3, "g3", m([[1, 0, 0], [0, 1, 0], [0, 0, -2]])),
        (4, "g4", m([[0, 0, 0], [0, 0, 1], [H, 0, 0]])),
        (5, "g5_a", m([[0, 0, -H], [0, 0, 0], [0, 1, 0]])),
        (5, "g5_b", m([[0, 0, 0], [1, 0, 0], [0, 0, 0]])),
    ]


@lru_cache(maxsize=None)
def _eigenvalue_sign(H: int) -> int:
    sig = Signature(H)
    e12 = np.zeros((3, 3), dtype=complex)
    e12[0, 1] = 1.0
    ratio = sigma(e12, sig)[0, 1]
    if abs(ratio - EPS) < 1e-12:
        return 1
    if abs(ratio - EPS ** -1) < 1e-12:
        return -1
    raise RuntimeError(f"slot-1 basis is not a sigma eigenvector (ratio {ratio})")


def eigenvalue_sign(sig: Signature) -> int:
    """Calibrated sign c: slot j carries the sigma-eigenvalue eps^(c*j)."""
    return _eigenvalue_sign(sig.H)


def project_eigenspace(X: np.ndarray, j: int, sig: Signature) -> np.ndarray:
    """Averaging projector onto slot j: (1/6) sum_k eps^(-c j k) sigma^k(X)."""
    c = eigenvalue_sign(sig)
    out = np.zeros_like(np.asarray(X, dtype=complex))
    term = np.asarray(X, dtype=complex)
    for k in range(_SLOTS):
        out = out + EPS ** (-c * j * k) * term
        term = sigma(term, sig)
    return out / _SLOTS


def eigenspace_decomposition(X: np.ndarray, sig: Signature) -> list[np.ndarray]:
    """All six slot projections; they sum back to X."""
    return [project_eigenspace(X, j, sig) for j in range(_SLOTS)]


def eigenspace_masses(X: np.ndarray, sig: Signature) -> np.ndarray:
    """Frobenius norm of each slot projection, normalized by |X|_F."""
    norm = np.linalg.norm(X)
    if norm == 0.0:
        return np.zeros(_SLOTS)
    return np.array([np.linalg.norm(p) for p in eigenspace_decomposition(X, sig)]) / norm


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential for 3x3 blocks (scaling-and-squaring kernel)."""
    return expm3(np.asarray(A, dtype=complex))


def random_sl3r(rng: np.random.Generator, max_cond: float = 30.0) -> np.ndarray:
    """Random real unimodular 3x3 matrix with bounded condition number."""
    while True:
        m = rng.normal(size=(3, 3))
        d = np.linalg.det(m)
        if abs(d) > 1e-3:
            m = m / np.cbrt(d)
            if np.linalg.cond(m) <= max_cond:
                return m


def random_slr_group(rng: np.random.Generator, sig: Signature) -> np.ndarray:
    """Random element of the twisted real form: R_H^{-1} SL(3, R) R_H."""
    r = sig.R_H
    return np.linalg.inv(r) @ random_sl3r(rng).astype(complex) @ r


def random_slr_algebra(rng: np.random.Generator, sig: Signature) -> np.ndarray:
    """Random tau-fixed trace-free matrix, built as Y + tau(Y)."""
    y = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    y -= np.trace(y) / 3.0 * np.eye(3)
    return y + tau(y, sig)


def random_tracefree(rng: np.random.Generator) -> np.ndarray:
    y = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    return y - np.trace(y) / 3.0 * np.eye(3)
