"""Frame integration over the grid and recovery of the immersion data.

The gauged coefficient pair (Uz, Uzb) is integrated by exponential
midpoint steps (one 3x3 exponential per grid edge, trace split off
analytically so unimodularity is preserved to rounding).  With the
identity initial frame the result stays in the twisted real form; the
lift (x, chi) is exposed by left-multiplying with a base frame built
from the surface data at the grid corner and undoing the diagonal gauge.

Recovery runs the other way: finite differences of (x, chi) rebuild the
horizontal forms, and their pairings return u, theta, phi, Q, rho.  The
same forms feed the induced connection/tensor data, the ambient second
fundamental form, and the mean-curvature diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import frames, paracomplex
from .diffops import diff, interior_max, zero_curvature_field
from .kernels import integrate_grid
from .liealg import Signature, rh_conjugate
from .surface2d import Grid2D, MCPair, SurfaceData, sqrt_Hc, theta_from_c

REALITY_TOL = 1e-8

PATH_MODES = ("row_major", "column_major")


@dataclass
class FrameField:
    """Integrated frame F over the grid, with its initial value."""

    grid: Grid2D
    F: np.ndarray            # (nx, ny, 3, 3) complex
    Finit: np.ndarray
    base: tuple[int, int] = (0, 0)


@dataclass
class LiftField:
    """Lift (x, chi) of the immersion plus frame-extracted horizontal forms."""

    grid: Grid2D
    sig: Signature
    x: np.ndarray            # (nx, ny, 3) real
    chi: np.ndarray
    xi: np.ndarray           # (nx, ny, 3) complex, from the frame columns
    eta: np.ndarray


def integrate_frame(mc: MCPair, Finit: np.ndarray | None = None,
                    path_mode: str = "row_major") -> FrameField:
    """Propagate the frame from the grid corner by exponential midpoint steps."""
    if path_mode not in PATH_MODES:
        raise ValueError(f"path_mode must be one of {PATH_MODES}")
    if Finit is None:
        Finit = np.eye(3, dtype=complex)
    Finit = np.asarray(Finit, dtype=complex)
    if abs(np.linalg.det(Finit)) < 1e-12:
        raise ValueError("initial frame is singular")
    F = integrate_grid(mc.Uz, mc.Uzb, mc.grid.hx, mc.grid.hy, Finit,
                       row_major=(path_mode == "row_major"))
    if not np.all(np.isfinite(F)):
        raise FloatingPointError("frame integration overflowed")
    return FrameField(grid=mc.grid, F=F, Finit=Finit)


def flatness_residual(mc: MCPair, order: int = 2) -> np.ndarray:
    """Pointwise norm of d_z Uzb - d_zbar Uz + [Uz, Uzb]."""
    return zero_curvature_field(mc.Uz, mc.Uzb, mc.grid.hx, mc.grid.hy, order)


def max_flatness(mc: MCPair, order: int = 2, margin: int = 2) -> float:
    # margin 2: the curvature stencil must not touch one-sided edge values
    # of coefficient fields that were themselves built by differencing.
    return interior_max(flatness_residual(mc, order), margin)


def loop_disagreement(mc: MCPair, Finit: np.ndarray | None = None) -> float:
    """Max frame difference between row-major and column-major integration."""
    fr = integrate_frame(mc, Finit, "row_major").F
    fc = integrate_frame(mc, Finit, "column_major").F
    return float(np.max(np.abs(fr - fc)))


def reality_defect(field: FrameField, sig: Signature) -> float:
    """max |Im Ad(R_H) F|; zero when the frame sits in the real form."""
    return float(np.max(np.abs(np.imag(rh_conjugate(field.F, sig)))))


# ---------------------------------------------------------------------------
# Gauge bookkeeping
# ---------------------------------------------------------------------------


def _gauge_field(data: SurfaceData) -> np.ndarray:
    """Diagonal gauge D with entries ((Hc)^{-1/2} e^{-u/2}, conj, i)."""
    c = data.c_field()
    eu = np.exp(-0.5 * data.u)
    d = np.zeros(data.grid.shape + (3,), dtype=complex)
    d[..., 0] = eu / sqrt_Hc(c, data.sig)
    d[..., 1] = eu / sqrt_Hc(np.conj(c), data.sig)
    d[..., 2] = 1j
    return d


def base_frame(data: SurfaceData) -> np.ndarray:
    """Unimodular frame value consistent with a lift at the grid corner.

    Starts the lift at x = e1, chi = e1 with the tangent forms along
    e2, e3, then rescales to unit determinant.  Integrating from the
    identity and left-multiplying by this matrix realizes x and chi as
    real fields.
    """
    u0 = float(data.u[0, 0])
    c0 = complex(data.c_field()[0, 0])
    ftilde = np.array([[0.0, 0.0, 1.0],
                       [0.5, 0.5, 0.0],
                       [-0.5j, 0.5j, 0.0]], dtype=complex)
    d0 = np.diag([np.exp(-0.5 * u0) / complex(sqrt_Hc(np.array(c0), data.sig)),
                  np.exp(-0.5 * u0) / complex(sqrt_Hc(np.array(np.conj(c0)), data.sig)),
                  1j])
    w = ftilde @ d0
    det = np.linalg.det(w)
    if abs(det.imag) > 1e-12 * abs(det):
        raise ValueError("base frame determinant is not real")
    alpha = np.cbrt(det.real) ** -1
    return alpha * w


def extract_lift(field: FrameField, data: SurfaceData) -> LiftField:
    """Undo the gauge and read the lift and horizontal forms off the frame.

    The frame columns give (xi, conj(xi), x) after the diagonal gauge is
    removed; the dual frame rows give (conj(eta), eta, chi).  x and chi
    must come out real (tolerance 1e-8) or the frame is inconsistent
    with the data.
    """
    w = base_frame(data)
    ftilde = np.einsum("ab,ijbc->ijac", w, field.F)
    dinv = 1.0 / _gauge_field(data)
    ftilde = ftilde * dinv[..., None, :]
    finv = np.linalg.inv(ftilde)
    x_c = ftilde[..., :, 2]
    chi_c = finv[..., 2, :]
    im_breach = max(float(np.max(np.abs(x_c.imag))), float(np.max(np.abs(chi_c.imag))))
    if im_breach > REALITY_TOL:
        raise ValueError(f"lift is not real (max imaginary part {im_breach:.3e})")
    c = data.c_field()
    dtilde2 = float(data.sig.H) * np.conj(c) * np.exp(data.u)
    xi = ftilde[..., :, 0]
    eta = finv[..., 1, :] * dtilde2[..., None]
    return LiftField(grid=field.grid, sig=data.sig,
                     x=np.real(x_c), chi=np.real(chi_c), xi=xi, eta=eta)


# ---------------------------------------------------------------------------
# Round trip
# ---------------------------------------------------------------------------


def recover_fields(lift: LiftField, order: int = 4) -> dict[str, np.ndarray]:
    """Rebuild (u, theta, phi, Q, rho) from finite differences of (x, chi).

    Everything is derived from the lift alone; the pairing <xi, conj(eta)>
    determines u and the angle, the derivative pairings give phi, Q, rho.
    """
    g = lift.grid
    forms = paracomplex.lift_forms(lift.x, lift.chi, g.hx, g.hy, order=order)
    xi, eta, rho = forms.xi, forms.eta, forms.rho
    H = float(lift.sig.H)
    pair = np.einsum("ijk,ijk->ij", xi, np.conj(eta))
    he_u = np.real(pair) * H
    if np.min(he_u) <= 0.0:
        raise ValueError("degenerate pairing <xi, conj(eta)>")
    u = np.log(he_u)
    c = pair / (H * he_u)
    theta = theta_from_c(c)
    dzb_xi = 0.5 * (diff(xi, g.hx, 0, order) + 1j * diff(xi, g.hy, 1, order))
    dz_xi = 0.5 * (diff(xi, g.hx, 0, order) - 1j * diff(xi, g.hy, 1, order))
    phi = H * np.exp(-u) * np.einsum("ijk,ijk->ij", dzb_xi, eta)
    Q = np.einsum("ijk,ijk->ij", dz_xi, eta)
    return {"u": u, "theta": theta, "phi": phi, "Q": Q, "rho": rho, "c": c}


def round_trip(lift: LiftField, data: SurfaceData, order: int = 4,
               margin: int | None = None) -> tuple[dict[str, np.ndarray], dict[str, float]]:
    """Recover the surface fields and report max deviations from ``data``.

    Deviations are measured away from the boundary: phi and Q stack two
    difference stencils, so full order-4 accuracy needs a margin of 4
    cells (2 for the order-2 path).
    """
    if margin is None:
        margin = 4 if order == 4 else 2
    rec = recover_fields(lift, order=order)
    errors = {
        "u": interior_max(rec["u"] - data.u, margin),
        "theta": interior_max(rec["theta"] - data.theta, margin),
        "phi": interior_max(rec["phi"] - data.phi, margin),
        "Q": interior_max(rec["Q"] - data.Q, margin),
        "rho": interior_max(rec["rho"] - data.rho, margin),
    }
    return rec, errors


def lift_invariant_report(lift: LiftField, data: SurfaceData) -> dict[str, float]:
    """Structural invariants of the extracted lift and frame forms."""
    pair_xchi = paracomplex.pairing_field(lift.x, lift.chi)
    xi_chi = np.einsum("ijk,ijk->ij", lift.xi, lift.chi.astype(complex))
    x_eta = np.einsum("ijk,ijk->ij", lift.x.astype(complex), lift.eta)
    c = data.c_field()
    target = float(data.sig.H) * np.exp(data.u) * c
    pair_xieta_bar = np.einsum("ijk,ijk->ij", lift.xi, np.conj(lift.eta))
    pair_xieta = np.einsum("ijk,ijk->ij", lift.xi, lift.eta)
    return {
        "x_chi_pairing": float(np.max(np.abs(pair_xchi - 1.0))),
        "xi_chi": float(np.max(np.abs(xi_chi))),
        "x_eta": float(np.max(np.abs(x_eta))),
        "xi_etabar_vs_Heuc": float(np.max(np.abs(pair_xieta_bar - target))),
        "xi_eta": float(np.max(np.abs(pair_xieta))),
    }


# ---------------------------------------------------------------------------
# Induced data and the second fundamental form
# ---------------------------------------------------------------------------


def horizontal_frames(lift: LiftField, order: int = 2):
    """Real horizontal forms xi_a, eta_a and the 1-form psi from the lift."""
    g = lift.grid
    x, chi = lift.x, lift.chi
    hs = (g.hx, g.hy)
    dx = [diff(x, hs[a], a, order) for a in (0, 1)]
    dchi = [diff(chi, hs[a], a, order) for a in (0, 1)]
    psi = np.stack([np.einsum("ijk,ijk->ij", dx[a], chi) for a in (0, 1)], axis=-1)
    xi = np.stack([dx[a] - psi[..., a:a + 1] * x for a in (0, 1)], axis=-2)
    eta = np.stack([dchi[a] + psi[..., a:a + 1] * chi for a in (0, 1)], axis=-2)
    return xi, eta, psi


def induced_immersion_data(lift: LiftField, order: int = 2):
    """Rebuild (Gamma, h, psi) and the real horizontal forms from the lift.

    The connection entries come from the frame identities; the discrete
    antisymmetric defect of Gamma (O(h^2)) is symmetrized away so the
    result satisfies the torsion-free contract exactly.
    """
    g = lift.grid
    hs = (g.hx, g.hy)
    xi, eta, psi = horizontal_frames(lift, order)
    # h_{ab} = <xi_a, eta_b>
    h = np.einsum("ijak,ijbk->ijab", xi, eta)
    hinv = np.linalg.inv(h)
    dxi = np.stack([diff(xi, hs[c], c, order) for c in (0, 1)], axis=-3)
    # gamma^a_{bc} = -psi_c delta^a_b + h^{da} <d_c xi_b, eta_d>
    pair = np.einsum("ijcbk,ijdk->ijbcd", dxi, eta)
    gamma = np.einsum("ijda,ijbcd->ijabc", hinv, pair)
    eye = np.eye(2)
    gamma -= np.einsum("ijc,ab->ijabc", psi, eye)
    gamma = 0.5 * (gamma + np.swapaxes(gamma, -1, -2))
    data = frames.ImmersionDataN(n=2, spacings=hs, Gamma=gamma, h=h, psi=psi)
    return data, xi, eta


def _project_normal(w_chi: np.ndarray, xi: np.ndarray, eta: np.ndarray,
                    gmetric: np.ndarray, pinv_threshold: float = 1e-10):
    """Project (0, w_chi) onto the normal space of the tangent plane."""
    p = 0.5 * np.einsum("ijak,ijk->ija", xi, w_chi)
    ginv = np.linalg.pinv(gmetric, rcond=pinv_threshold)
    coef = np.einsum("ijab,ijb->ija", ginv, p)
    ii_x = -np.einsum("ija,ijak->ijk", coef, xi)
    ii_chi = w_chi - np.einsum("ija,ijak->ijk", coef, eta)
    return ii_x, ii_chi


def _ii_ingredients(lift: LiftField, data: SurfaceData | None, order: int):
    """Difference tensor, metric, and pushforward frames for the II maps.

    When the generating surface data is available its field-level export
    supplies (Gamma, h, psi) without differencing the lift twice, which
    keeps the difference tensor clean; otherwise everything is rebuilt
    from the lift alone.
    """
    if data is not None:
        from .surface2d import immersion_data_from_surface

        induced = immersion_data_from_surface(data, order=order)
        xi, eta, _ = horizontal_frames(lift, order)
    else:
        induced, xi, eta = induced_immersion_data(lift, order)
    K = frames.difference_tensor(induced)
    gm = frames.metric(induced)
    return K, gm, xi, eta


def second_fundamental_form(lift: LiftField, at: tuple[int, int],
                            X: np.ndarray, Y: np.ndarray,
                            data: SurfaceData | None = None,
                            order: int = 2):
    """Ambient value II(X, Y) at a grid point, as an (x-part, chi-part) pair.

    The difference tensor is pushed forward along the horizontal forms,
    cut down to the minus eigenspace of the product structure, and then
    projected onto the normal space of the immersed tangent plane.
    """
    K, gm, xi, eta = _ii_ingredients(lift, data, order)
    kxy = np.einsum("ijmcb,c,b->ijm", K, np.asarray(X, float), np.asarray(Y, float))
    w_chi = np.einsum("ijm,ijmk->ijk", kxy, eta)
    ii_x, ii_chi = _project_normal(w_chi, xi, eta, gm)
    i, j = at
    return ii_x[i, j], ii_chi[i, j]


def mean_curvature_residual(lift: LiftField, data: SurfaceData | None = None,
                            order: int = 2, margin: int = 2) -> float:
    """max |trace_g II| over the interior; zero iff the surface is minimal."""
    K, gm, xi, eta = _ii_ingredients(lift, data, order)
    ginv = np.linalg.inv(gm)
    trk = np.einsum("ijmcb,ijcb->ijm", K, ginv)
    w_chi = np.einsum("ijm,ijmk->ijk", trk, eta)
    ii_x, ii_chi = _project_normal(w_chi, xi, eta, gm)
    norms = np.sqrt(np.sum(ii_x ** 2, axis=-1) + np.sum(ii_chi ** 2, axis=-1))
    return interior_max(norms, margin)


def second_fundamental_norm(lift: LiftField, data: SurfaceData | None = None,
                            order: int = 2, margin: int = 2) -> float:
    """max over the grid and coordinate slots of |II(e_a, e_b)|."""
    K, gm, xi, eta = _ii_ingredients(lift, data, order)
    worst = 0.0
    for a in (0, 1):
        for b in (0, 1):
            w_chi = np.einsum("ijm,ijmk->ijk", K[..., :, a, b], eta)
            ii_x, ii_chi = _project_normal(w_chi, xi, eta, gm)
            norms = np.sqrt(np.sum(ii_x ** 2, axis=-1) + np.sum(ii_chi ** 2, axis=-1))
            worst = max(worst, interior_max(norms, margin))
    return worst
