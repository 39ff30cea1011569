"""Split-complex scalars/vectors and the geometry of the quadric <x, chi> = 1.

The split-complex unit j satisfies j^2 = +1, so the algebra has zero
divisors (1 + j)(1 - j) = 0; inversion is only defined away from the null
cone and returns an explicit error otherwise.  The quadric carries a
contact form, a metric ghat and a symplectic form omegahat on tangent
pairs, and every immersion lift decomposes into horizontal forms
(xi, eta) plus a vertical 1-form psi.  Gridded lifts are handled by
:func:`lift_forms` and friends; all pairings between vectors and
covectors are the plain componentwise sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffops import diff, interior_max

POINT_TOL = 1e-12
TANGENT_TOL = 1e-10


class NullDivisionError(ZeroDivisionError):
    """Division by a split-complex zero divisor (z* z = 0)."""


@dataclass(frozen=True)
class ParaComplex:
    """Split-complex number re + j*im with j^2 = +1.

    Components may be floats or numpy arrays of matching shape.
    """

    re: float
    im: float

    def __add__(self, other: "ParaComplex") -> "ParaComplex":
        return ParaComplex(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ParaComplex") -> "ParaComplex":
        return ParaComplex(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "ParaComplex") -> "ParaComplex":
        return ParaComplex(self.re * other.re + self.im * other.im,
                           self.re * other.im + self.im * other.re)

    def __neg__(self) -> "ParaComplex":
        return ParaComplex(-self.re, -self.im)

    def conj(self) -> "ParaComplex":
        return ParaComplex(self.re, -self.im)

    def square_norm(self) -> float:
        """The real number z* z = re^2 - im^2."""
        return self.re * self.re - self.im * self.im

    def inverse(self) -> "ParaComplex":
        q = self.square_norm()
        if np.any(np.abs(q) < 1e-300):
            raise NullDivisionError("split-complex zero divisor has no inverse")
        return ParaComplex(self.re / q, -self.im / q)

    def as_array(self) -> np.ndarray:
        return np.stack([np.asarray(self.re), np.asarray(self.im)], axis=-1)


PC_ONE = ParaComplex(1.0, 0.0)
PC_J = ParaComplex(0.0, 1.0)


def pc_mul(z: ParaComplex, w: ParaComplex) -> ParaComplex:
    return z * w


def pc_pair(z: ParaComplex, w: ParaComplex) -> ParaComplex:
    """Hermitian pairing <z, w> = z* w (antilinear in the first slot)."""
    return z.conj() * w


def pc_exp_ip(t: float) -> ParaComplex:
    """exp(j t) = cosh t + j sinh t; unit square norm for every t."""
    return ParaComplex(np.cosh(t), np.sinh(t))


@dataclass(frozen=True)
class ParaVector3:
    """Vector in the rank-3 free module over the split-complex numbers."""

    re: np.ndarray  # shape (3,)
    im: np.ndarray

    def conj(self) -> "ParaVector3":
        return ParaVector3(self.re, -self.im)

    def component(self, k: int) -> ParaComplex:
        return ParaComplex(float(self.re[k]), float(self.im[k]))


def pv_pair(u: ParaVector3, v: ParaVector3) -> ParaComplex:
    """Standard pairing <u, v> = sum_k u_k* v_k."""
    re = float(u.re @ v.re - u.im @ v.im)
    im = float(u.re @ v.im - u.im @ v.re)
    return ParaComplex(re, im)


def pv_pair_twisted(u: ParaVector3, v: ParaVector3, H: int) -> ParaComplex:
    """Pairing u*^T P_H v with P_H swapping the first two slots, -H in the third."""
    p = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -float(H)]])
    pv_re = p @ v.re
    pv_im = p @ v.im
    return pv_pair(u, ParaVector3(pv_re, pv_im))


def real_pair_to_pc(x: np.ndarray, chi: np.ndarray) -> ParaVector3:
    """Identify (x, chi) with z = (x + chi)/2 + j (x - chi)/2 componentwise."""
    x = np.asarray(x, dtype=float)
    chi = np.asarray(chi, dtype=float)
    return ParaVector3(0.5 * (x + chi), 0.5 * (x - chi))


def pc_to_real_pair(z: ParaVector3) -> tuple[np.ndarray, np.ndarray]:
    return z.re + z.im, z.re - z.im


@dataclass(frozen=True)
class PointCM:
    """Point (x, chi) on the quadric <x, chi> = 1."""

    x: np.ndarray
    chi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "chi", np.asarray(self.chi, dtype=float))
        pairing = float(self.x @ self.chi)
        if abs(pairing - 1.0) > POINT_TOL:
            raise ValueError(f"<x, chi> = {pairing}, not 1")


@dataclass(frozen=True)
class TangentCM:
    """Tangent vector (X, Xt) at a quadric point: <X, chi> + <x, Xt> = 0."""

    X: np.ndarray
    Xt: np.ndarray
    base: PointCM

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=float))
        object.__setattr__(self, "Xt", np.asarray(self.Xt, dtype=float))
        resid = float(self.X @ self.base.chi + self.base.x @ self.Xt)
        if abs(resid) > TANGENT_TOL:
            raise ValueError(f"tangency defect {resid}")


def _check_same_base(v: TangentCM, w: TangentCM) -> None:
    if not (np.array_equal(v.base.x, w.base.x)
            and np.array_equal(v.base.chi, w.base.chi)):
        raise ValueError("tangent vectors have different base points")


def decompose_tangent(v: TangentCM) -> tuple[TangentCM, TangentCM, TangentCM]:
    """Split into the +1 horizontal, vertical, and -1 horizontal parts.

    The horizontal parts are the +-1 eigenvectors of the para-complex
    structure (X, Xt) -> (X, -Xt); the vertical part is along (x, -chi).
    """
    x, chi = v.base.x, v.base.chi
    s = float(v.X @ chi)
    hplus = TangentCM(v.X - s * x, np.zeros(3), v.base)
    vert = TangentCM(s * x, -s * chi, v.base)
    hminus = TangentCM(np.zeros(3), v.Xt - float(x @ v.Xt) * chi, v.base)
    return hplus, vert, hminus


def ghat(v: TangentCM, w: TangentCM) -> float:
    """Induced metric: (<X, Yt> + <Y, Xt>)/2."""
    _check_same_base(v, w)
    return 0.5 * float(v.X @ w.Xt + w.X @ v.Xt)


def omegahat(v: TangentCM, w: TangentCM) -> float:
    """Symplectic form on the horizontal space: (<X, Yt> - <Y, Xt>)/2."""
    _check_same_base(v, w)
    return 0.5 * float(v.X @ w.Xt - w.X @ v.Xt)


def contact(v: TangentCM) -> float:
    """Contact form Im <z, .> in split-complex form; equals <X, chi>."""
    z = real_pair_to_pc(v.base.x, v.base.chi)
    w = real_pair_to_pc(v.X, v.Xt)
    return pv_pair(z, w).im


def group_action(g: np.ndarray, x: np.ndarray, chi: np.ndarray):
    """(x, chi) -> (g x, g^{-T} chi); preserves the pairing for any g."""
    ginv_t = np.linalg.inv(g).T
    return np.einsum("ab,...b->...a", g, x), np.einsum("ab,...b->...a", ginv_t, chi)


def s2n_normalize(x: np.ndarray, chi: np.ndarray):
    """Rescale onto the slice |x| = |chi| (Euclidean norms on both factors)."""
    nx = np.linalg.norm(x, axis=-1)
    nc = np.linalg.norm(chi, axis=-1)
    alpha = np.sqrt(nc / nx)
    return x * alpha[..., None], chi / alpha[..., None]


# ---------------------------------------------------------------------------
# Gridded lifts.  x, chi: (nx, ny, 3) real arrays over a uniform rectangle.
# ---------------------------------------------------------------------------


@dataclass
class LiftForms:
    """Horizontal forms of a gridded lift.

    ``xi``/``eta`` are the complexified forms xi_z, eta_z (shape
    (nx, ny, 3)), ``psi`` holds the two real components psi_1, psi_2
    (shape (nx, ny, 2)) and ``rho`` = (psi_1 - i psi_2)/2.
    """

    xi: np.ndarray
    eta: np.ndarray
    psi: np.ndarray
    rho: np.ndarray


def lift_forms(x: np.ndarray, chi: np.ndarray, hx: float, hy: float,
               order: int = 2) -> LiftForms:
    """Horizontal/vertical split of a lift's differential, by finite differences."""
    dx = [diff(x, hx, 0, order), diff(x, hy, 1, order)]
    dchi = [diff(chi, hx, 0, order), diff(chi, hy, 1, order)]
    psi = np.stack([np.einsum("ijk,ijk->ij", dx[a], chi) for a in (0, 1)], axis=-1)
    xi_r = [dx[a] - psi[..., a:a + 1] * x for a in (0, 1)]
    eta_r = [dchi[a] + psi[..., a:a + 1] * chi for a in (0, 1)]
    xi = 0.5 * (xi_r[0] - 1j * xi_r[1])
    eta = 0.5 * (eta_r[0] - 1j * eta_r[1])
    rho = 0.5 * (psi[..., 0] - 1j * psi[..., 1])
    return LiftForms(xi=xi, eta=eta, psi=psi, rho=rho)


def scale_lift(x: np.ndarray, chi: np.ndarray, alpha: np.ndarray):
    """(x, chi) -> (alpha x, chi / alpha) for a nowhere-zero scalar field."""
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), x.shape[:-1])
    if np.any(np.abs(alpha) < 1e-14):
        raise ValueError("scaling field vanishes on the grid")
    return x * alpha[..., None], chi / alpha[..., None]


def horizontality_residual(x: np.ndarray, chi: np.ndarray,
                           hx: float, hy: float) -> float:
    """max |psi| over the grid; zero exactly for horizontal lifts."""
    if x.shape[0] < 3 or x.shape[1] < 3:
        raise ValueError("grid must have at least 3 points per axis")
    return float(np.max(np.abs(lift_forms(x, chi, hx, hy).psi)))


def dpsi_vs_omega_residual(x: np.ndarray, chi: np.ndarray,
                           hx: float, hy: float) -> float:
    """max |d psi + 2 omegahat| over interior plaquettes.

    d psi is the circulation of psi around each grid cell divided by the
    cell area; omegahat is evaluated at the cell center from averaged
    one-sided tangents.  Both are O(h^2) consistent.
    """
    if x.shape[0] < 3 or x.shape[1] < 3:
        raise ValueError("grid must have at least 3 points per axis")
    forms = lift_forms(x, chi, hx, hy)
    p1, p2 = forms.psi[..., 0], forms.psi[..., 1]
    # circulation / area on each cell
    bottom = 0.5 * (p1[:-1, :-1] + p1[1:, :-1]) * hx
    top = 0.5 * (p1[:-1, 1:] + p1[1:, 1:]) * hx
    left = 0.5 * (p2[:-1, :-1] + p2[:-1, 1:]) * hy
    right = 0.5 * (p2[1:, :-1] + p2[1:, 1:]) * hy
    dpsi = (bottom + right - top - left) / (hx * hy)
    # omegahat at cell centers from cell-averaged tangents
    d1x = 0.5 * (x[1:, 1:] + x[1:, :-1] - x[:-1, 1:] - x[:-1, :-1]) / hx
    d2x = 0.5 * (x[1:, 1:] + x[:-1, 1:] - x[1:, :-1] - x[:-1, :-1]) / hy
    d1c = 0.5 * (chi[1:, 1:] + chi[1:, :-1] - chi[:-1, 1:] - chi[:-1, :-1]) / hx
    d2c = 0.5 * (chi[1:, 1:] + chi[:-1, 1:] - chi[1:, :-1] - chi[:-1, :-1]) / hy
    omega = 0.5 * (np.einsum("ijk,ijk->ij", d1x, d2c)
                   - np.einsum("ijk,ijk->ij", d2x, d1c))
    return float(np.max(np.abs(dpsi + 2.0 * omega)))


def pairing_field(x: np.ndarray, chi: np.ndarray) -> np.ndarray:
    """<x, chi> at every grid point."""
    return np.einsum("...k,...k->...", x, chi)
