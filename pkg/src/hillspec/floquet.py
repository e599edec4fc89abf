"""Floquet discriminant, multiplier, Bloch solutions, and asymptotic checks.

The multiplier rho(lam) is the root of rho^2 - Delta rho + 1 with |rho| < 1
off the spectrum, realized through the quadratic formula with the product
branch of sqrt(Delta^2 - 4) (holomorphic off the bands, positive below the
spectrum).  When the RHP data carries a potential handle, the product values
are rescaled to the ODE magnitude (phase from the factor-local branches,
modulus from Delta), which keeps the algebraic identities exact to integrator
accuracy.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import ode_core
from .errors import NearDirichletPole, OnSpectrumError, PathCrossesSpectrum
from .branching import sqrt_lambda

EPS_COLLAR = 1e-8


def _collar(lam):
    return EPS_COLLAR * np.maximum(1.0, np.abs(lam))


@dataclass
class FloquetPoint:
    lam: complex
    delta: complex
    rho: complex
    sqrt_disc: complex
    y1T: complex
    y2T: complex
    y2primeT: complex


def discriminant(p, lam):
    """Delta(lam) = tr Y(T, lam); vectorized over lam."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    vals = ode_core.discriminant_batch(p, lam)
    return vals if vals.size > 1 else complex(vals[0])


def quartic_disc_hybrid(rhp, lam, side=None):
    """(Delta^2-4)^(1/4) with product phase and ODE modulus (if available)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    q = rhp.quartic_disc(lam, side)
    if rhp.potential is None:
        return q
    d = ode_core.discriminant_batch(rhp.potential, lam)
    mag = np.abs(d * d - 4.0)
    return q * (mag / np.abs(q) ** 4) ** 0.25


def sqrt_discriminant(rhp, lam, side=None):
    """The branch of sqrt(Delta^2 - 4) holomorphic off the bands.

    Positive for real lam below the spectrum; boundary values on the axis via
    ``side``.  Equals ``quartic**2`` exactly.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if side is None:
        on_axis = (np.abs(lam.imag) < _collar(lam.real)) & (lam.real > 0)
        if np.any(on_axis):
            for lv in lam[on_axis]:
                kind, _ = rhp.classify_point(lv.real)
                if kind == "band":
                    raise OnSpectrumError(
                        f"lam={lv:.6g} lies in a band; pass side=+1/-1")
    out = quartic_disc_hybrid(rhp, lam, side) ** 2
    return out if out.size > 1 else complex(out[0])


def multiplier(rhp, lam, side=None):
    """rho(lam) with |rho| < 1 off the spectrum; |rho| = 1 on band interiors."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    s = np.atleast_1d(sqrt_discriminant(rhp, lam, side))
    if rhp.potential is not None:
        d = ode_core.discriminant_batch(rhp.potential, lam)
    else:
        d = rhp.delta(lam)
    rho = (d - s) / 2.0
    return rho if rho.size > 1 else complex(rho[0])


def multiplier_pair(rhp, lam, side=None):
    """(rho, rho^{-1}) computed as (Delta -+ sqrt)/2, so rho - 1/rho = -sqrt."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    s = np.atleast_1d(sqrt_discriminant(rhp, lam, side))
    if rhp.potential is not None:
        d = ode_core.discriminant_batch(rhp.potential, lam)
    else:
        d = rhp.delta(lam)
    return (d - s) / 2.0, (d + s) / 2.0


def floquet_point(p, rhp, lam, side=None):
    """Assemble the FloquetPoint record at one lam."""
    mono = ode_core.monodromy(p, lam)
    d = mono.trace
    s = sqrt_discriminant(rhp, np.array([lam]), side)
    s = complex(np.atleast_1d(s)[0])
    return FloquetPoint(lam=complex(lam), delta=complex(d), rho=(d - s) / 2.0,
                        sqrt_disc=s, y1T=mono.entries[0, 0],
                        y2T=mono.entries[0, 1], y2primeT=mono.entries[1, 1])


def bloch_solutions(p, rhp, x, lam, side=None):
    """(psi^-, psi^+, dpsi^-, dpsi^+) at (x, lam), normalized psi(0) = 1.

    Raises NearDirichletPole within the collar of a Dirichlet point, naming
    the singular column from the signature.
    """
    lam_c = complex(lam)
    col = _collar(abs(lam_c))
    for (n_k, lo, hi, mu_k, sig_k) in rhp.gaps:
        if abs(lam_c - mu_k) < 10 * col:
            column = {1: "+", -1: "-", 0: "both"}[sig_k]
            raise NearDirichletPole(
                f"lam={lam_c:.8g} within collar of mu_{n_k}={mu_k:.8g}",
                column=column)
    edges = rhp.sdata.edges
    if np.abs(np.asarray(edges) - lam_c).min() < col:
        raise NearDirichletPole(f"lam={lam_c:.8g} at a band edge",
                                column="both")
    rho, rho_inv = multiplier_pair(rhp, np.array([lam_c]), side)
    rho, rho_inv = complex(rho[0]), complex(rho_inv[0])
    monoT = ode_core.monodromy(p, lam_c)
    y1T, y2T = monoT.entries[0, 0], monoT.entries[0, 1]
    cm = (rho_inv - y1T) / y2T
    cp = (rho - y1T) / y2T
    Yx = ode_core.fundamental_matrix(p, lam_c, x)
    y1, y2 = Yx.entries[0, 0], Yx.entries[0, 1]
    dy1, dy2 = Yx.entries[1, 0], Yx.entries[1, 1]
    return (y1 + cm * y2, y1 + cp * y2, dy1 + cm * dy2, dy1 + cp * dy2)


def log_multiplier(rhp, lam, side=None, n_nodes=64):
    """log rho(lam) by path quadrature of Delta' / sqrt(Delta^2 - 4) from 0.

    The path runs to -delta0 along the negative axis (substituting out the
    square-root zero at lam_0 = 0), then to the target through C \\ R^+,
    descending onto the chosen side for real positive targets.
    """
    if rhp.potential is None:
        raise ValueError("log_multiplier needs rhp.potential for Delta'")
    p = rhp.potential
    lam_c = complex(lam)
    if lam_c.real > 0 and abs(lam_c.imag) < _collar(lam_c.real) and side is None:
        raise PathCrossesSpectrum("real positive target needs side=+1/-1")

    def integrand(pts, side_=None):
        # rho'/rho = Delta'/(2 rho - Delta) = -Delta'/sqrt(Delta^2 - 4)
        pts = np.asarray(pts, dtype=complex)
        _, dd = ode_core.disc_and_deriv_batch(p, pts)
        s = np.atleast_1d(sqrt_discriminant(rhp, pts, side_))
        return -dd / s

    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)

    def path_int(za, zb, side_=None):
        mid = 0.5 * (za + zb)
        half = 0.5 * (zb - za)
        pts = mid + half * nodes
        return half * np.sum(weights * integrand(pts, side_))

    total = 0.0 + 0.0j
    delta0 = min(0.5, 0.25 * abs(lam_c)) if lam_c != 0 else 0.5
    # piece A: 0 -> -delta0 with lam = -t^2 (kills the 1/sqrt singularity)
    tmax = np.sqrt(delta0)
    tpts = 0.5 * tmax + 0.5 * tmax * nodes
    total += 0.5 * tmax * np.sum(weights * integrand(-tpts ** 2) * (-2.0 * tpts))
    start = -delta0
    if abs(lam_c.imag) > _collar(lam_c.real) or lam_c.real <= 0:
        total += path_int(start, lam_c)
    else:
        h = 0.5 * max(1.0, abs(lam_c.real)) * (1 if side is None or side > 0
                                               else -1)
        if side is not None and side < 0:
            h = -abs(h)
        corner1 = start + 1j * h
        corner2 = lam_c + 1j * h
        total += path_int(start, corner1)
        total += path_int(corner1, corner2)
        # descend in two stages to resolve the boundary approach
        corner3 = lam_c + 1j * h * 1e-3
        total += path_int(corner2, corner3)
        total += path_int(corner3, lam_c, side_=side)
    return total


def check_bloch_asymptotics(p, x, s, ray_points):
    """Residual report for psi^+ e^{-i sqrt(lam) x} = 1 + (1/2i sqrt) int u.

    All points must lie in Omega_s; the scaled Bloch solver keeps everything
    bounded, so |lam| up to 1e6 and beyond is fine.
    """
    lam = np.asarray(ray_points, dtype=complex)
    ang = np.angle(lam) % (2 * np.pi)
    if np.any((ang < s) | (ang > 2 * np.pi - s)):
        raise ValueError("ray points must lie in Omega_s")
    z = sqrt_lambda(lam)
    out = ode_core.scaled_bloch(p, z, [x])
    w = out["vp"][0]
    corr = 1.0 + p.integral(x) / (2j * z)
    resid = np.abs(w - corr) * np.abs(lam)
    return _bounded_report(np.abs(lam), resid)


def check_delta_asymptotics(p, ray_points):
    """Residual report for Delta e^{i sqrt(lam) T} = 1 - Q/(2i sqrt(lam))."""
    lam = np.asarray(ray_points, dtype=complex)
    z = sqrt_lambda(lam)
    sc = ode_core.floquet_scalars(p, z)
    resid = np.abs(sc["D"] - (1.0 - p.Q / (2j * z))) * np.abs(lam)
    return _bounded_report(np.abs(lam), resid)


def _bounded_report(scale, resid, slope_tol=0.12):
    """Log-log growth fit: pass iff the residual shows no growth trend."""
    mask = resid > 0
    ls, lr = np.log(scale[mask]), np.log(resid[mask])
    if len(ls) < 3:
        return {"scale": scale, "residual": resid, "slope": 0.0,
                "bound": float(resid.max()), "passed": True}
    A = np.vstack([ls, np.ones_like(ls)]).T
    coef, res_, *_ = np.linalg.lstsq(A, lr, rcond=None)
    slope = float(coef[0])
    dof = max(len(ls) - 2, 1)
    sig = float(np.sqrt((res_[0] if len(res_) else 0.0) / dof))
    stderr = sig / max(np.std(ls), 1e-12) / np.sqrt(len(ls))
    passed = slope <= slope_tol + 2.0 * stderr
    return {"scale": scale, "residual": resid, "slope": slope,
            "slope_stderr": stderr, "bound": float(resid.max()),
            "passed": bool(passed)}
