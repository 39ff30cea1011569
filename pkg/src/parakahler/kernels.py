"""Hot numerical kernels with numba acceleration and a pure-numpy fallback.

Three operations dominate runtime: the 3x3 matrix exponential (called once
per grid edge during frame integration), the sequential frame sweep itself,
and the direct-summation Cauchy transform.  Each has a numba ``@njit``
implementation and a numpy reference implementation.  The active backend is
chosen at import time: numba when importable, unless the environment
variable ``PARAKAHLER_NO_NUMBA`` is set to a non-empty value other than
``0``.  ``PARAKAHLER_THREADS`` caps the numba thread pool.

Both implementations stay importable (``expm3_numpy`` vs ``expm3_numba``)
so benchmarks and equivalence tests can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np

# exp(A) = exp(A/2^k)^(2^k), Taylor 16 on the scaled matrix.  For 3x3 with
# scaled norm <= 0.25 the truncation error is below 1e-20.
_TAYLOR_TERMS = 16
_SCALE_LIMIT = 0.25

_I3 = np.eye(3, dtype=np.complex128)


def _squarings(norm1: float) -> int:
    k = 0
    while norm1 > _SCALE_LIMIT:
        norm1 *= 0.5
        k += 1
    return k


def expm3_numpy(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a single 3x3 complex matrix."""
    norm1 = float(np.max(np.sum(np.abs(a), axis=0)))
    k = _squarings(norm1)
    b = a / (2.0 ** k)
    term = _I3.copy()
    out = _I3.copy()
    for i in range(1, _TAYLOR_TERMS + 1):
        term = term @ b / i
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def expm3_batch_numpy(a: np.ndarray) -> np.ndarray:
    """Matrix exponential over the leading axes of an (..., 3, 3) array."""
    flat = a.reshape(-1, 3, 3)
    norms = np.max(np.sum(np.abs(flat), axis=1), axis=1)
    k = _squarings(float(norms.max(initial=0.0)))
    b = flat / (2.0 ** k)
    term = np.broadcast_to(_I3, b.shape).copy()
    out = term.copy()
    for i in range(1, _TAYLOR_TERMS + 1):
        term = term @ b / i
        out = out + term
    for _ in range(k):
        out = out @ out
    return out.reshape(a.shape)


def _step_numpy(f: np.ndarray, a: np.ndarray) -> np.ndarray:
    # Split off the trace so the exponential acts on a trace-free increment;
    # the scalar factor is reapplied exactly.
    t = np.trace(a) / 3.0
    return (f @ expm3_numpy(a - t * _I3)) * np.exp(t)


def _integrate_numpy(uz, uzb, h0, h1, w0, w1, finit):
    n0, n1 = uz.shape[0], uz.shape[1]
    f = np.empty((n0, n1, 3, 3), dtype=np.complex128)
    f[0, 0] = finit
    c1 = 0.5 * h1
    for j in range(1, n1):
        a = c1 * (w1 * (uz[0, j - 1] + uz[0, j])
                  + np.conj(w1) * (uzb[0, j - 1] + uzb[0, j]))
        f[0, j] = _step_numpy(f[0, j - 1], a)
    c0 = 0.5 * h0
    for j in range(n1):
        for i in range(1, n0):
            a = c0 * (w0 * (uz[i - 1, j] + uz[i, j])
                      + np.conj(w0) * (uzb[i - 1, j] + uzb[i, j]))
            f[i, j] = _step_numpy(f[i - 1, j], a)
    return f


def cauchy_transform_numpy(rhs: np.ndarray, z: np.ndarray,
                           hx: float, hy: float) -> np.ndarray:
    """Direct-sum solution of d/dzbar rho = rhs via the Cauchy kernel.

    rho(z_p) = (hx*hy/pi) * sum_{q != p} rhs(w_q) / (z_p - w_q).
    """
    zf = z.ravel()
    rf = rhs.ravel()
    n = zf.size
    out = np.empty(n, dtype=np.complex128)
    weight = hx * hy / np.pi
    for p in range(n):
        d = zf[p] - zf
        d[p] = 1.0  # excluded self-cell
        terms = rf / d
        terms[p] = 0.0
        out[p] = weight * terms.sum()
    return out.reshape(z.shape)


_HAS_NUMBA = False
try:
    import numba

    _threads = os.environ.get("PARAKAHLER_THREADS", "")
    if _threads.strip():
        numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))

    @numba.njit(cache=True)
    def _expm3_nb(a):
        s = 0.0
        for j in range(3):
            col = abs(a[0, j]) + abs(a[1, j]) + abs(a[2, j])
            if col > s:
                s = col
        k = 0
        while s > _SCALE_LIMIT:
            s *= 0.5
            k += 1
        b = a / (2.0 ** k)
        term = np.eye(3, dtype=np.complex128)
        out = np.eye(3, dtype=np.complex128)
        for i in range(1, _TAYLOR_TERMS + 1):
            term = term @ b / i
            out = out + term
        for _ in range(k):
            out = out @ out
        return out

    @numba.njit(cache=True)
    def _step_nb(f, a):
        t = (a[0, 0] + a[1, 1] + a[2, 2]) / 3.0
        b = a.copy()
        b[0, 0] -= t
        b[1, 1] -= t
        b[2, 2] -= t
        return (f @ _expm3_nb(b)) * np.exp(t)

    @numba.njit(cache=True, parallel=True)
    def _integrate_nb(uz, uzb, h0, h1, w0, w1, finit):
        n0, n1 = uz.shape[0], uz.shape[1]
        f = np.empty((n0, n1, 3, 3), dtype=np.complex128)
        f[0, 0] = finit
        c1 = 0.5 * h1
        for j in range(1, n1):
            a = c1 * (w1 * (uz[0, j - 1] + uz[0, j])
                      + np.conj(w1) * (uzb[0, j - 1] + uzb[0, j]))
            f[0, j] = _step_nb(f[0, j - 1], a)
        c0 = 0.5 * h0
        for j in numba.prange(n1):
            for i in range(1, n0):
                a = c0 * (w0 * (uz[i - 1, j] + uz[i, j])
                          + np.conj(w0) * (uzb[i - 1, j] + uzb[i, j]))
                f[i, j] = _step_nb(f[i - 1, j], a)
        return f

    @numba.njit(cache=True, parallel=True)
    def _cauchy_nb(rhs, z, hx, hy):
        n = z.size
        out = np.empty(n, dtype=np.complex128)
        weight = hx * hy / np.pi
        for p in numba.prange(n):
            acc = 0.0 + 0.0j
            zp = z[p]
            for q in range(n):
                if q != p:
                    acc += rhs[q] / (zp - z[q])
            out[p] = weight * acc
        return out

    def expm3_numba(a: np.ndarray) -> np.ndarray:
        return _expm3_nb(np.ascontiguousarray(a, dtype=np.complex128))

    def expm3_batch_numba(a: np.ndarray) -> np.ndarray:
        flat = np.ascontiguousarray(a, dtype=np.complex128).reshape(-1, 3, 3)
        out = np.empty_like(flat)
        for i in range(flat.shape[0]):
            out[i] = _expm3_nb(flat[i])
        return out.reshape(a.shape)

    def _integrate_numba(uz, uzb, h0, h1, w0, w1, finit):
        return _integrate_nb(np.ascontiguousarray(uz), np.ascontiguousarray(uzb),
                             h0, h1, w0, w1,
                             np.ascontiguousarray(finit, dtype=np.complex128))

    def cauchy_transform_numba(rhs, z, hx, hy):
        out = _cauchy_nb(np.ascontiguousarray(rhs, dtype=np.complex128).ravel(),
                         np.ascontiguousarray(z, dtype=np.complex128).ravel(),
                         float(hx), float(hy))
        return out.reshape(z.shape)

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    pass


def _numba_disabled() -> bool:
    flag = os.environ.get("PARAKAHLER_NO_NUMBA", "")
    return flag.strip() not in ("", "0")


HAS_NUMBA = _HAS_NUMBA
USE_NUMBA = _HAS_NUMBA and not _numba_disabled()

if USE_NUMBA:
    BACKEND = "numba"
    expm3 = expm3_numba
    expm3_batch = expm3_batch_numba
    _integrate = _integrate_numba
    cauchy_transform = cauchy_transform_numba
else:
    BACKEND = "numpy"
    expm3 = expm3_numpy
    expm3_batch = expm3_batch_numpy
    _integrate = _integrate_numpy
    cauchy_transform = cauchy_transform_numpy


def integrate_grid(uz: np.ndarray, uzb: np.ndarray, hx: float, hy: float,
                   finit: np.ndarray, row_major: bool = True) -> np.ndarray:
    """Propagate a frame over the grid by exponential midpoint steps.

    Axis 0 of ``uz``/``uzb`` is the first real coordinate (complex increment
    ``hx``), axis 1 the second (increment ``1j*hy``).  ``row_major`` climbs
    the axis-1 edge first and then sweeps every axis-0 line (those sweeps
    are independent and run in parallel under numba); ``column_major`` is
    the transposed order.  Path disagreement between the two modes measures
    the curvature of the connection.
    """
    uz = np.asarray(uz, dtype=np.complex128)
    uzb = np.asarray(uzb, dtype=np.complex128)
    if row_major:
        return _integrate(uz, uzb, float(hx), float(hy), 1.0 + 0.0j, 1.0j, finit)
    ft = _integrate(np.ascontiguousarray(uz.transpose(1, 0, 2, 3)),
                    np.ascontiguousarray(uzb.transpose(1, 0, 2, 3)),
                    float(hy), float(hx), 1.0j, 1.0 + 0.0j, finit)
    return ft.transpose(1, 0, 2, 3)


def warmup() -> None:
    """Trigger JIT compilation of the numba kernels on tiny inputs."""
    if not USE_NUMBA:
        return
    a = np.eye(3, dtype=np.complex128) * 0.1
    expm3(a)
    u = np.zeros((2, 2, 3, 3), dtype=np.complex128)
    integrate_grid(u, u, 0.1, 0.1, np.eye(3, dtype=np.complex128))
    integrate_grid(u, u, 0.1, 0.1, np.eye(3, dtype=np.complex128), row_major=False)
    z = np.array([[0.0 + 0.0j, 1.0], [1.0j, 1.0 + 1.0j]])
    cauchy_transform(np.ones((2, 2), dtype=np.complex128), z, 0.1, 0.1)
