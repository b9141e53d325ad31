"""Hot numeric kernels with numba-jitted and pure-numpy implementations.

The active backend is chosen at import time: numba when importable, unless the
environment variable ``CRDD_NUMBA`` is set to ``0``/``off``/``false`` (then the
pure-numpy path is used).  ``benchmarks/bench_kernels.py`` times both.

Kernels:

``su2_chain``
    Sequential composition of per-step SU(2) factors
    ``U <- exp(-i(dx X + dy Y)/2) exp(-i(cx X + cy Y)/2) U`` recording the
    unitary after every step.  Steps with all-zero coefficients copy the node
    (used for delays and duplicated piece boundaries); steps with only a
    (cx, cy) pair realize instantaneous rotations.

``rk4_evolve``
    Fixed-step RK4 for ``dpsi/dt = -i H(t) psi`` with
    ``H(t) = sum_q ax[q](t) X_q + ay[q](t) Y_q + diag`` applied matrix-free to
    a statevector or to the columns of a propagator matrix.  Transverse
    coefficients are sampled per step at (start, midpoint, end) so segment
    boundaries stay one-sided.
"""
import os

import numpy as np

_env = os.environ.get("CRDD_NUMBA", "auto").strip().lower()
if _env in ("0", "off", "false", "no"):
    NUMBA_ENABLED = False
else:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# SU(2) chain
# ---------------------------------------------------------------------------

def _su2_chain_loop(cx, cy, dx, dy, out):
    n = cx.shape[0]
    u00 = out[0, 0, 0]
    u01 = out[0, 0, 1]
    u10 = out[0, 1, 0]
    u11 = out[0, 1, 1]
    for i in range(n):
        ax = cx[i]
        ay = cy[i]
        th = np.hypot(ax, ay)
        if th > 0.0:
            c = np.cos(0.5 * th)
            s = np.sin(0.5 * th) / th
            e01 = -1j * s * (ax - 1j * ay)
            e10 = -1j * s * (ax + 1j * ay)
            v00 = c * u00 + e01 * u10
            v01 = c * u01 + e01 * u11
            v10 = e10 * u00 + c * u10
            v11 = e10 * u01 + c * u11
            u00, u01, u10, u11 = v00, v01, v10, v11
        ax = dx[i]
        ay = dy[i]
        th = np.hypot(ax, ay)
        if th > 0.0:
            c = np.cos(0.5 * th)
            s = np.sin(0.5 * th) / th
            e01 = -1j * s * (ax - 1j * ay)
            e10 = -1j * s * (ax + 1j * ay)
            v00 = c * u00 + e01 * u10
            v01 = c * u01 + e01 * u11
            v10 = e10 * u00 + c * u10
            v11 = e10 * u01 + c * u11
            u00, u01, u10, u11 = v00, v01, v10, v11
        out[i + 1, 0, 0] = u00
        out[i + 1, 0, 1] = u01
        out[i + 1, 1, 0] = u10
        out[i + 1, 1, 1] = u11


def su2_chain_numpy(cx, cy, dx, dy, out):
    """Pure-numpy fallback: vectorized factor construction, scalar product loop."""
    n = cx.shape[0]

    def factors(ax, ay):
        th = np.hypot(ax, ay)
        safe = np.where(th > 0.0, th, 1.0)
        s = np.where(th > 0.0, np.sin(0.5 * th) / safe, 0.0)
        c = np.cos(0.5 * th)
        return c, -1j * s * (ax - 1j * ay), -1j * s * (ax + 1j * ay)

    c1, o1, r1 = factors(cx, cy)
    c2, o2, r2 = factors(dx, dy)
    u00 = complex(out[0, 0, 0])
    u01 = complex(out[0, 0, 1])
    u10 = complex(out[0, 1, 0])
    u11 = complex(out[0, 1, 1])
    for i in range(n):
        ca, oa, ra = c1[i], o1[i], r1[i]
        v00 = ca * u00 + oa * u10
        v01 = ca * u01 + oa * u11
        v10 = ra * u00 + ca * u10
        v11 = ra * u01 + ca * u11
        cb, ob, rb = c2[i], o2[i], r2[i]
        u00 = cb * v00 + ob * v10
        u01 = cb * v01 + ob * v11
        u10 = rb * v00 + cb * v10
        u11 = rb * v01 + cb * v11
        out[i + 1, 0, 0] = u00
        out[i + 1, 0, 1] = u01
        out[i + 1, 1, 0] = u10
        out[i + 1, 1, 1] = u11


# ---------------------------------------------------------------------------
# Matrix-free RK4 statevector / propagator evolution
# ---------------------------------------------------------------------------

def _apply_h_loop(out, psi, ax, ay, diag, nq):
    # out = -i H psi with H = sum_q ax[q] X_q + ay[q] Y_q + diag(diag)
    dim, ncol = psi.shape
    for j in range(dim):
        for c in range(ncol):
            out[j, c] = diag[j] * psi[j, c]
    for q in range(nq):
        a = ax[q]
        b = ay[q]
        if a == 0.0 and b == 0.0:
            continue
        bit = 1 << (nq - 1 - q)
        for j in range(dim):
            jj = j ^ bit
            if j & bit:
                coef = a + 1j * b
            else:
                coef = a - 1j * b
            for c in range(ncol):
                out[j, c] += coef * psi[jj, c]
    for j in range(dim):
        for c in range(ncol):
            out[j, c] = -1j * out[j, c]


def _rk4_evolve_loop(psi, ax, ay, diag, h, reps):
    nsteps = ax.shape[0]
    nq = ax.shape[2]
    k1 = np.empty_like(psi)
    k2 = np.empty_like(psi)
    k3 = np.empty_like(psi)
    k4 = np.empty_like(psi)
    tmp = np.empty_like(psi)
    dim, ncol = psi.shape
    for _ in range(reps):
        for s in range(nsteps):
            hs = h[s]
            _apply_h_jit(k1, psi, ax[s, 0], ay[s, 0], diag, nq)
            for j in range(dim):
                for c in range(ncol):
                    tmp[j, c] = psi[j, c] + 0.5 * hs * k1[j, c]
            _apply_h_jit(k2, tmp, ax[s, 1], ay[s, 1], diag, nq)
            for j in range(dim):
                for c in range(ncol):
                    tmp[j, c] = psi[j, c] + 0.5 * hs * k2[j, c]
            _apply_h_jit(k3, tmp, ax[s, 1], ay[s, 1], diag, nq)
            for j in range(dim):
                for c in range(ncol):
                    tmp[j, c] = psi[j, c] + hs * k3[j, c]
            _apply_h_jit(k4, tmp, ax[s, 2], ay[s, 2], diag, nq)
            for j in range(dim):
                for c in range(ncol):
                    psi[j, c] += (hs / 6.0) * (k1[j, c] + 2.0 * k2[j, c] + 2.0 * k3[j, c] + k4[j, c])


def apply_h_numpy(psi, ax, ay, diag, nq):
    """out = -i H psi, vectorized; psi shape (dim, ncol)."""
    out = diag[:, None] * psi
    dim = psi.shape[0]
    for q in range(nq):
        a = ax[q]
        b = ay[q]
        if a == 0.0 and b == 0.0:
            continue
        pre = 1 << q
        post = dim // (2 * pre)
        ps = psi.reshape(pre, 2, post, -1)
        ot = out.reshape(pre, 2, post, -1)
        ot[:, 0] += (a - 1j * b) * ps[:, 1]
        ot[:, 1] += (a + 1j * b) * ps[:, 0]
    return -1j * out


def rk4_evolve_numpy(psi, ax, ay, diag, h, reps):
    nsteps = ax.shape[0]
    nq = ax.shape[2]
    for _ in range(reps):
        for s in range(nsteps):
            hs = h[s]
            k1 = apply_h_numpy(psi, ax[s, 0], ay[s, 0], diag, nq)
            k2 = apply_h_numpy(psi + (0.5 * hs) * k1, ax[s, 1], ay[s, 1], diag, nq)
            k3 = apply_h_numpy(psi + (0.5 * hs) * k2, ax[s, 1], ay[s, 1], diag, nq)
            k4 = apply_h_numpy(psi + hs * k3, ax[s, 2], ay[s, 2], diag, nq)
            psi += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


if NUMBA_ENABLED:
    su2_chain_numba = njit(cache=True)(_su2_chain_loop)
    _apply_h_jit = njit(cache=True)(_apply_h_loop)
    rk4_evolve_numba = njit(cache=True)(_rk4_evolve_loop)
    su2_chain = su2_chain_numba
    rk4_evolve = rk4_evolve_numba
else:
    _apply_h_jit = _apply_h_loop
    su2_chain_numba = None
    rk4_evolve_numba = None
    su2_chain = su2_chain_numpy
    rk4_evolve = rk4_evolve_numpy
