"""Integrators for Hill's equation -y'' + u y = lam y over one period.

Provides the normalized fundamental matrix Y(x, lam) (Y(0) = I), its
lambda-derivative via the variational system, and phase-factored forms that
stay bounded for large |lam| off the positive real axis:

- ``mn_functions``: m = exp(i z x) y^-, n = exp(i z x) y^+ with z = sqrt(lam),
  where y^\pm are the solutions with y(0) = 1, y'(0) = +-i z.  Both satisfy
  f'' = 2 i z f' + u f, which has no growing mode for Im z > 0.
- ``scaled_bloch``: the Bloch-Floquet solutions with their oscillatory phase
  removed, psi^- e^{izx} (forward integration) and psi^+ e^{-izx} (backward
  integration from x = T), each stable in its direction.

All solvers are batched over an array of spectral parameters; the adaptive
controller is shared across the batch.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .branching import sqrt_lambda
from .errors import IntegratorFailure

RTOL = 1e-11
ATOL = 1e-12

# above this |lam|, callers should prefer the phase-factored solvers
LARGE_LAMBDA = 1.0e4


@dataclass
class FundamentalMatrix:
    """Y(x, lam) = [[y1, y2], [y1', y2']] with optional d/dlam entries."""

    x: float
    lam: complex
    entries: np.ndarray
    d_lambda_entries: np.ndarray = None

    @property
    def det(self):
        m = self.entries
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]

    @property
    def trace(self):
        return self.entries[0, 0] + self.entries[1, 1]


def _solve(rhs, span, y0, t_eval=None, rtol=RTOL, atol=ATOL):
    sol = solve_ivp(rhs, span, y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval)
    if not sol.success:
        raise IntegratorFailure(sol.message)
    return sol


def _hill_rhs(p, lam, with_dlam):
    n_rows = 8 if with_dlam else 4
    k = lam.size

    def rhs(x, yflat):
        y = yflat.reshape(n_rows, k)
        w = p(x) - lam
        dy = np.empty_like(y)
        dy[0] = y[1]
        dy[1] = w * y[0]
        dy[2] = y[3]
        dy[3] = w * y[2]
        if with_dlam:
            dy[4] = y[5]
            dy[5] = w * y[4] - y[0]
            dy[6] = y[7]
            dy[7] = w * y[6] - y[2]
        return dy.ravel()

    return rhs, n_rows


def fundamental_matrix_batch(p, lam, xs, with_dlambda=False,
                             rtol=RTOL, atol=ATOL):
    """Y(x, lam) for an array of lam at points ``xs`` in [0, T].

    Returns ``(Y, dY)`` with shapes (len(xs), K, 2, 2); ``dY`` is None unless
    requested.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs < 0) or np.any(xs > p.period * (1 + 1e-12) + 1e-15):
        raise ValueError("xs must lie in [0, T]; use monodromy powers beyond")
    rhs, n_rows = _hill_rhs(p, lam, with_dlambda)
    k = lam.size
    y0 = np.zeros((n_rows, k), dtype=complex)
    y0[0] = 1.0
    y0[3] = 1.0
    uniq = np.unique(xs)
    cols = {}
    if uniq[0] == 0.0:
        cols[0.0] = y0.copy()
    pos = uniq[uniq > 0.0]
    if pos.size:
        sol = _solve(rhs, (0.0, float(pos[-1])), y0.ravel(), t_eval=pos,
                     rtol=rtol, atol=atol)
        for i, xv in enumerate(pos):
            cols[float(xv)] = sol.y[:, i].reshape(n_rows, k)
    out = np.empty((len(xs), k, 2, 2), dtype=complex)
    dout = np.empty((len(xs), k, 2, 2), dtype=complex) if with_dlambda else None
    for j, xv in enumerate(xs):
        col = cols[float(xv)]
        out[j, :, 0, 0] = col[0]
        out[j, :, 1, 0] = col[1]
        out[j, :, 0, 1] = col[2]
        out[j, :, 1, 1] = col[3]
        if with_dlambda:
            dout[j, :, 0, 0] = col[4]
            dout[j, :, 1, 0] = col[5]
            dout[j, :, 0, 1] = col[6]
            dout[j, :, 1, 1] = col[7]
    return out, dout


def monodromy_batch(p, lam, with_dlambda=False, rtol=RTOL, atol=ATOL):
    """Y(T, lam) for an array of lam, with per-potential caching."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    cache = p._monodromy_cache
    out = np.empty((lam.size, 2, 2), dtype=complex)
    dout = np.empty((lam.size, 2, 2), dtype=complex) if with_dlambda else None
    misses = []
    for i, lv in enumerate(lam):
        key = (complex(lv), with_dlambda, rtol)
        hit = cache.get(key)
        if hit is None:
            misses.append(i)
        else:
            out[i] = hit[0]
            if with_dlambda:
                dout[i] = hit[1]
    if misses:
        sub = lam[misses]
        y, dy = fundamental_matrix_batch(p, sub, [p.period],
                                         with_dlambda=with_dlambda,
                                         rtol=rtol, atol=atol)
        for j, i in enumerate(misses):
            out[i] = y[0, j]
            dij = dy[0, j] if with_dlambda else None
            if with_dlambda:
                dout[i] = dij
            cache[(complex(lam[i]), with_dlambda, rtol)] = (
                out[i].copy(), None if dij is None else dij.copy())
    return out, dout


def eval_potential(p, x):
    """u(x) by Fourier synthesis (periodic extension exact)."""
    return p(x)


def fundamental_matrix(p, lam, x, with_dlambda=False, rtol=RTOL, atol=ATOL):
    """Y(x, lam) for a single lam; x beyond [0, T] via monodromy powers."""
    T = p.period
    q, r = divmod(float(x), T)
    q = int(q)
    if r > T * (1 - 1e-14):
        # avoid a sliver integration when x is an exact multiple of T
        r = 0.0
        q += 1
    ys, dys = fundamental_matrix_batch(p, [lam], [r], with_dlambda=with_dlambda,
                                       rtol=rtol, atol=atol)
    y = ys[0, 0]
    dy = dys[0, 0] if with_dlambda else None
    if q != 0:
        mon, _ = monodromy_batch(p, [lam], rtol=rtol, atol=atol)
        M = np.linalg.matrix_power(mon[0], q) if q > 0 else \
            np.linalg.matrix_power(np.linalg.inv(mon[0]), -q)
        y = y @ M
        dy = None  # derivative beyond one period not propagated
    return FundamentalMatrix(x=float(x), lam=complex(lam), entries=y,
                             d_lambda_entries=dy)


def monodromy(p, lam, with_dlambda=False, rtol=RTOL, atol=ATOL):
    """Y(T, lam), cached per (potential, lam)."""
    y, dy = monodromy_batch(p, [lam], with_dlambda=with_dlambda,
                            rtol=rtol, atol=atol)
    return FundamentalMatrix(x=p.period, lam=complex(lam), entries=y[0],
                             d_lambda_entries=dy[0] if with_dlambda else None)


def discriminant_batch(p, lam, rtol=RTOL, atol=ATOL):
    """Delta(lam) = tr Y(T, lam) for an array of lam."""
    y, _ = monodromy_batch(p, lam, rtol=rtol, atol=atol)
    return y[:, 0, 0] + y[:, 1, 1]


def disc_and_deriv_batch(p, lam, rtol=RTOL, atol=ATOL):
    """(Delta, dDelta/dlam) via the variational system."""
    y, dy = monodromy_batch(p, lam, with_dlambda=True, rtol=rtol, atol=atol)
    return y[:, 0, 0] + y[:, 1, 1], dy[:, 0, 0] + dy[:, 1, 1]


# -- phase-factored forms for large |lam| ------------------------------------


def mn_functions(p, z, rtol=RTOL, atol=ATOL):
    """m, m', n, n' at x = T for an array of z = sqrt(lam), Im z >= 0.

    m = e^{izx} y^-, n = e^{izx} y^+ both solve f'' = 2iz f' + u f with
    initial data (1, 0) and (1, 2iz).
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    k = z.size

    def rhs(x, yflat):
        y = yflat.reshape(4, k)
        u = p(x)
        dy = np.empty_like(y)
        dy[0] = y[1]
        dy[1] = 2j * z * y[1] + u * y[0]
        dy[2] = y[3]
        dy[3] = 2j * z * y[3] + u * y[2]
        return dy.ravel()

    y0 = np.zeros((4, k), dtype=complex)
    y0[0] = 1.0
    y0[2] = 1.0
    y0[3] = 2j * z
    sol = _solve(rhs, (0.0, p.period), y0.ravel(), rtol=rtol, atol=atol)
    m, mp, n, np_ = sol.y[:, -1].reshape(4, k)
    return m, mp, n, np_


def floquet_scalars(p, z, rtol=RTOL, atol=ATOL):
    """Bounded Floquet quantities in the upper z half plane.

    Returns m, m', n, n' at T, the scaled discriminant D = Delta e^{izT},
    the scaled root S = sqrt(D^2 - 4 e^{2izT}) with the branch that makes
    |rho| < 1, and rho_scaled = rho e^{-izT} = 2 / (D + S).
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    m, mp, n, np_ = mn_functions(p, z, rtol=rtol, atol=atol)
    D = m + (np_ - mp) / (2j * z)
    e2 = np.exp(2j * z * p.period)
    S = np.sqrt(D * D - 4.0 * e2)
    flip = np.real(np.conj(D) * S) < 0.0
    S = np.where(flip, -S, S)
    return {"m": m, "mp": mp, "n": n, "np": np_, "D": D, "E2": e2, "S": S,
            "rho_scaled": 2.0 / (D + S)}


def scaled_bloch(p, z, xs, rtol=RTOL, atol=ATOL):
    """Phase-removed Bloch solutions at points ``xs`` in [0, T].

    Returns a dict with arrays of shape (len(xs), len(z)):
      ``vm``  = psi^-(x) e^{+izx},   ``dvm`` = (psi^-)'(x) e^{+izx},
      ``vp``  = psi^+(x) e^{-izx},   ``dvp`` = (psi^+)'(x) e^{-izx},
    plus the ``floquet_scalars`` dict under ``"scalars"``.

    psi^- is integrated forward (its parasitic mode decays forward); psi^+
    backward from x = T with terminal data from the scaled multiplier, so
    both directions are stable for Im z > 0.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    T = p.period
    if np.any(xs < 0) or np.any(xs > T * (1 + 1e-12)):
        raise ValueError("xs must lie in [0, T]")
    sc = floquet_scalars(p, z, rtol=rtol, atol=atol)
    m, n = sc["m"], sc["n"]
    D, S, e2 = sc["D"], sc["S"], sc["E2"]
    k = z.size
    uniq = np.unique(xs)

    # v = psi^- e^{izx}: v'' = 2iz v' + u v, forward from x = 0
    def rhs_v(x, yflat):
        y = yflat.reshape(2, k)
        return np.concatenate([y[1], 2j * z * y[1] + p(x) * y[0]])

    v_cols = {}
    v0 = np.concatenate([np.ones(k, dtype=complex),
                         1j * z * (D + S - 2.0 * m) / (n - m)])
    if uniq[0] == 0.0:
        v_cols[0.0] = v0.reshape(2, k).copy()
    pos = uniq[uniq > 0.0]
    if pos.size:
        sol_v = _solve(rhs_v, (0.0, float(pos[-1])), v0, t_eval=pos,
                       rtol=rtol, atol=atol)
        for i, xv in enumerate(pos):
            v_cols[float(xv)] = sol_v.y[:, i].reshape(2, k)

    # w = psi^+ e^{-izx}: w'' = -2iz w' + u w, backward from x = T
    def rhs_w(x, yflat):
        y = yflat.reshape(2, k)
        return np.concatenate([y[1], -2j * z * y[1] + p(x) * y[0]])

    wT = 2.0 / (D + S)
    dwT = wT * (1j * z * (4.0 * e2 / (D + S) - 2.0 * n) / (n - m))
    w0 = np.concatenate([wT, dwT])
    w_cols = {}
    if uniq[-1] >= T * (1 - 1e-14):
        w_cols[float(uniq[-1])] = w0.reshape(2, k).copy()
        inner = uniq[uniq < T * (1 - 1e-14)]
    else:
        inner = uniq
    if inner.size:
        sol_w = _solve(rhs_w, (T, float(inner[0])), w0, t_eval=inner[::-1],
                       rtol=rtol, atol=atol)
        for i, xv in enumerate(inner[::-1]):
            w_cols[float(xv)] = sol_w.y[:, i].reshape(2, k)

    vm = np.empty((len(xs), k), dtype=complex)
    dvm = np.empty_like(vm)
    vp = np.empty_like(vm)
    dvp = np.empty_like(vm)
    for j, xv in enumerate(xs):
        cv = v_cols[float(xv)]
        vm[j] = cv[0]
        dvm[j] = cv[1] - 1j * z * cv[0]
        cw = w_cols[float(xv)]
        vp[j] = cw[0]
        dvp[j] = cw[1] + 1j * z * cw[0]
    return {"vm": vm, "dvm": dvm, "vp": vp, "dvp": dvp, "scalars": sc}


def sqrt_lam_upper(lam):
    """sqrt(lam) in the closed upper half plane (package-wide convention)."""
    return sqrt_lambda(lam)
