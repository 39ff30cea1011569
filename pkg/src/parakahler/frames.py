"""General-dimension frame data: connection, Codazzi tensor, curvature.

An immersion is encoded on a uniform grid by its Christoffel symbols
``Gamma[..., a, b, c] = G^a_{bc}`` (symmetric in b, c), the non-symmetric
tensor ``h[..., a, b]`` whose symmetric part is the metric, and the
vertical 1-form ``psi[..., a]``.  From these the (n+1)x(n+1) frame
coefficient matrices are pure indexing; the three compatibility residuals,
the projective (Weyl) curvature, the cubic form C = (covariant derivative
of h, derivative index last) and the difference tensor K with
h(., K(X, Y)) = (D_X h)(., Y) are finite-difference fields.

Index conventions: C[..., a, b, c] = (D_c h)(a, b); K[..., m, c, b] solves
h[a, m] K[m, c, b] = C[a, b, c].  Residual maxima exclude the boundary
ring of the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffops import diff

_DET_FLOOR = 1e-10


@dataclass
class ImmersionDataN:
    """Gridded (Gamma, h, psi) on a uniform rectangular lattice in R^n."""

    n: int
    spacings: tuple[float, ...]
    Gamma: np.ndarray          # (*grid, n, n, n)
    h: np.ndarray              # (*grid, n, n)
    psi: np.ndarray            # (*grid, n)
    GammaStar: np.ndarray | None = None
    order: int = 2             # stencil order for internal differencing
    grid_shape: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError("only n = 2 and n = 3 grids are supported")
        if len(self.spacings) != self.n:
            raise ValueError("one spacing per axis required")
        self.grid_shape = self.h.shape[:-2]
        if len(self.grid_shape) != self.n:
            raise ValueError("grid rank must equal n")
        dets = np.linalg.det(self.h)
        if np.min(np.abs(dets)) <= _DET_FLOOR:
            raise ValueError("h is singular somewhere on the grid")
        skew = self.Gamma - np.swapaxes(self.Gamma, -1, -2)
        if np.max(np.abs(skew)) > 1e-10:
            raise ValueError("Gamma is not symmetric in its lower indices")

    def axis_deriv(self, f: np.ndarray, axis: int) -> np.ndarray:
        return diff(f, self.spacings[axis], axis, order=self.order)


@dataclass
class MaurerCartanN:
    """Per-point, per-direction (n+1)x(n+1) coefficient matrices."""

    U: np.ndarray        # (*grid, n, n+1, n+1)
    Ustar: np.ndarray


def dual_connection(data: ImmersionDataN) -> np.ndarray:
    """Gamma* from the duality d_c h(b, d) = h(m, d) G^m_{bc} + h(b, m) G*^m_{dc}.

    Used when the dual Christoffel symbols are not supplied; the h
    derivative is O(h^2) finite differencing.
    """
    if data.GammaStar is not None:
        return data.GammaStar
    n = data.n
    dh = np.stack([data.axis_deriv(data.h, c) for c in range(n)], axis=-1)
    # rhs[..., b, d, c] = d_c h_{bd} - h_{md} Gamma^m_{bc}
    rhs = dh - np.einsum("...md,...mbc->...bdc", data.h, data.Gamma)
    # solve h_{bm} G*^m_{dc} = rhs_{bdc} for each (d, c)
    hinv = np.linalg.inv(data.h)
    return np.einsum("...mb,...bdc->...mdc", hinv, rhs)


def build_U(data: ImmersionDataN) -> MaurerCartanN:
    """Assemble the frame coefficient matrices; pure indexing, no derivatives.

    For the primal family, direction a: entry (0,0) = psi_a, row 0 column
    g = -h[g, a], column 0 row b = delta(b, a), block (b, g) =
    Gamma^b_{ag} + psi_a delta(b, g).  The dual family uses -psi, h
    transposed in the row-0 slots, and the dual connection.
    """
    n = data.n
    gshape = data.grid_shape
    U = np.zeros(gshape + (n, n + 1, n + 1), dtype=float)
    Us = np.zeros_like(U)
    gs = dual_connection(data)
    eye = np.eye(n)
    for a in range(n):
        U[..., a, 0, 0] = data.psi[..., a]
        Us[..., a, 0, 0] = -data.psi[..., a]
        U[..., a, 0, 1:] = -data.h[..., :, a]
        Us[..., a, 0, 1:] = -data.h[..., a, :]
        U[..., a, 1 + a, 0] = 1.0
        Us[..., a, 1 + a, 0] = 1.0
        U[..., a, 1:, 1:] = (data.Gamma[..., :, a, :]
                             + data.psi[..., a, None, None] * eye)
        Us[..., a, 1:, 1:] = (gs[..., :, a, :]
                              - data.psi[..., a, None, None] * eye)
    return MaurerCartanN(U=U, Ustar=Us)


def data_from_U(mc: MaurerCartanN, spacings: tuple[float, ...]) -> ImmersionDataN:
    """Invert build_U: read psi, h, Gamma back out of the primal matrices."""
    n = mc.U.shape[-3]
    psi = mc.U[..., :, 0, 0].copy()
    h = np.empty(mc.U.shape[:-3] + (n, n))
    for a in range(n):
        h[..., :, a] = -mc.U[..., a, 0, 1:]
    gamma = np.empty(mc.U.shape[:-3] + (n, n, n))
    eye = np.eye(n)
    for a in range(n):
        gamma[..., :, a, :] = mc.U[..., a, 1:, 1:] - psi[..., a, None, None] * eye
    return ImmersionDataN(n=n, spacings=spacings, Gamma=gamma, h=h, psi=psi)


def riemann(data: ImmersionDataN) -> np.ndarray:
    """R[..., b, g, d, a] = d_d G^b_{ag} - d_a G^b_{dg} + G G - G G."""
    n = data.n
    dG = np.stack([data.axis_deriv(data.Gamma, c) for c in range(n)], axis=-1)
    # dG[..., b, a, g, d] = d_d Gamma^b_{ag}
    r = (np.einsum("...bagd->...bgda", dG)
         - np.einsum("...bdga->...bgda", dG)
         + np.einsum("...bde,...eag->...bgda", data.Gamma, data.Gamma)
         - np.einsum("...bae,...edg->...bgda", data.Gamma, data.Gamma))
    return r


def ricci(data: ImmersionDataN) -> np.ndarray:
    """Ric[..., g, a] = R^d_{g d a}."""
    r = riemann(data)
    return np.einsum("...dgda->...ga", r)


def h_from_ricci(ric: np.ndarray, n: int) -> np.ndarray:
    """h = (n Ric + Ric^T) / (n^2 - 1)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return (n * ric + np.swapaxes(ric, -1, -2)) / (n * n - 1)


def weyl(data: ImmersionDataN) -> np.ndarray:
    """Projective curvature; identically zero for n = 2 up to discretization."""
    n = data.n
    if n < 2:
        raise ValueError("n must be at least 2")
    r = riemann(data)
    ric = np.einsum("...dgda->...ga", r)
    eye = np.eye(n)
    corr = (np.einsum("ba,...gd->...bgda", eye, n * ric + np.swapaxes(ric, -1, -2))
            - np.einsum("bd,...ga->...bgda", eye, n * ric + np.swapaxes(ric, -1, -2))
            + (n - 1) * np.einsum("bg,...ad->...bgda",
                                  eye, ric - np.swapaxes(ric, -1, -2)))
    return r + corr / (n * n - 1)


def covariant_dh(data: ImmersionDataN) -> np.ndarray:
    """(D_c h)[..., a, b, c] = d_c h_{ab} - G^m_{ca} h_{mb} - G^m_{cb} h_{am}."""
    n = data.n
    dh = np.stack([data.axis_deriv(data.h, c) for c in range(n)], axis=-1)
    corr1 = np.einsum("...mca,...mb->...abc", data.Gamma, data.h)
    corr2 = np.einsum("...mcb,...am->...abc", data.Gamma, data.h)
    return dh - corr1 - corr2


def cubic_form(data: ImmersionDataN) -> np.ndarray:
    """C[..., a, b, c] = (D h)(a, b; c), the derivative slot last."""
    return covariant_dh(data)


def difference_tensor(data: ImmersionDataN) -> np.ndarray:
    """K[..., m, c, b] with h_{am} K^m_{cb} = C_{abc}, solved pointwise."""
    c = cubic_form(data)
    hinv = np.linalg.inv(data.h)
    return np.einsum("...ma,...abc->...mcb", hinv, c)


def metric(data: ImmersionDataN) -> np.ndarray:
    return 0.5 * (data.h + np.swapaxes(data.h, -1, -2))


def tchebycheff(C: np.ndarray, g: np.ndarray) -> np.ndarray:
    """T_a = C_{abc} g^{bc} / 2."""
    ginv = np.linalg.inv(g)
    return 0.5 * np.einsum("...abc,...bc->...a", C, ginv)


def _interior(field: np.ndarray, rank: int) -> np.ndarray:
    sl = tuple(slice(1, -1) for _ in range(rank))
    return field[sl]


def compatibility_residuals(data: ImmersionDataN) -> dict[str, float]:
    """Max-abs interior residuals of the three frame integrability conditions.

    r1: d_d psi_a - d_a psi_d - (h_{ad} - h_{da});
    r2: (D_d h)(g, a) - (D_a h)(g, d);
    r3: R^b_{gda} - delta^b_d h_{ga} + delta^b_a h_{gd}
        - delta^b_g (h_{da} - h_{ad}).
    """
    n = data.n
    if min(data.grid_shape) < 3:
        raise ValueError("grid must have at least 3 points per axis")
    dpsi = np.stack([data.axis_deriv(data.psi, c) for c in range(n)], axis=-1)
    # dpsi[..., a, d] = d_d psi_a; r1[d, a] = d_d psi_a - d_a psi_d
    #                                          - (h_ad - h_da)
    r1 = (np.einsum("...ad->...da", dpsi) - dpsi
          + (data.h - np.swapaxes(data.h, -1, -2)))
    cdh = covariant_dh(data)  # (D_c h)(a, b) at [..., a, b, c]
    r2 = np.einsum("...gad->...gda", cdh) - cdh
    eye = np.eye(n)
    r3 = (riemann(data)
          - np.einsum("bd,...ga->...bgda", eye, data.h)
          + np.einsum("ba,...gd->...bgda", eye, data.h)
          - np.einsum("bg,...da->...bgda",
                      eye, data.h - np.swapaxes(data.h, -1, -2)))
    return {
        "r1": float(np.max(np.abs(_interior(r1, n)))),
        "r2": float(np.max(np.abs(_interior(r2, n)))),
        "r3": float(np.max(np.abs(_interior(r3, n)))),
    }


def trace_g_cubic(data: ImmersionDataN) -> np.ndarray:
    """T-like contraction C_{abc} g^{bc} whose vanishing is minimality."""
    return tchebycheff(cubic_form(data), metric(data))


def is_minimal(data: ImmersionDataN, tol: float = 1e-8) -> bool:
    return float(np.max(np.abs(_interior(trace_g_cubic(data), data.n)))) < tol


def is_totally_geodesic(data: ImmersionDataN, tol: float = 1e-8) -> bool:
    return float(np.max(np.abs(_interior(cubic_form(data), data.n)))) < tol


def residual_report(data: ImmersionDataN, tol: float = 1e-8) -> dict:
    """Machine-readable summary used by the command-line `check`."""
    res = compatibility_residuals(data)
    res["weyl"] = float(np.max(np.abs(_interior(weyl(data), data.n))))
    res["minimal"] = is_minimal(data, tol)
    res["totally_geodesic"] = is_totally_geodesic(data, tol)
    return res
