"""Assembly of the matrix RHP solution and numerical verification of it.

Phi(x, lam) = Psi(x, lam) B(lam) exp(i sigma3 sqrt(lam) x) is built from the
ODE fundamental matrix and the product data.  The multivalued ingredients
take their phases from the factor-local product branches; their moduli are
rescaled by the (entire, integrator-accurate) discriminant and y2(T, .), so
the algebraic identities behind det Phi = 1 hold to ODE accuracy rather than
product-truncation accuracy.  Near an interior Dirichlet point the singular
column is evaluated in fused form, pairing rho^{+-1} - y1(T) against
y2(T, .) through a ratio of lambda-derivatives.
"""

import numpy as np

from . import ode_core
from .branching import sqrt_lambda
from .errors import ExtrapolationDiverged
from .floquet import _bounded_report

FUSE_RADIUS = 1e-6


def _principal_root(ratio, k):
    """Principal k-th root of a ratio that must stay near 1."""
    r = np.asarray(ratio, dtype=complex)
    if np.any(np.abs(r - 1.0) > 0.9):
        raise ValueError("hybrid correction ratio far from 1; "
                         "raise the resolved gap count")
    return np.exp(np.log(r) / k)


def multiplier_pieces(p, rhp, lam, side=None):
    """Delta, sqrt(Delta^2-4), rho^{+-1} and monodromy entries, consistent.

    The square root takes its phase from the product branch (a function of
    the time-invariant spectral data only) and its modulus from the
    integrator-accurate Delta of ``p``, so rho - 1/rho = -sqrt exactly.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    mono, dmono = ode_core.monodromy_batch(p, lam, with_dlambda=True)
    y1T = mono[:, 0, 0]
    y2T = mono[:, 0, 1]
    delta = mono[:, 0, 0] + mono[:, 1, 1]
    s_prod = rhp.quartic_disc(lam, side) ** 2
    s = s_prod * _principal_root((delta ** 2 - 4.0) / s_prod ** 2, 2)
    return {"lam": lam, "mono": mono, "dmono": dmono, "delta": delta,
            "s": s, "rho": (delta - s) / 2.0, "rho_inv": (delta + s) / 2.0,
            "y1T": y1T, "y2T": y2T}


def consistent_pieces(p, rhp, lam, side=None):
    """All Phi ingredients with mutually consistent branches and moduli.

    Extends ``multiplier_pieces`` with the B diagonal, rescaled so that
    b^2 = -T f0 sqrt(Delta^2-4)^{-1} holds exactly, which makes
    det Phi = 1 at integrator level.
    """
    pieces = multiplier_pieces(p, rhp, lam, side)
    lam = pieces["lam"]
    fp = rhp.f_pm(lam, +1)
    fm = rhp.f_pm(lam, -1)
    f0_true = pieces["y2T"] / (rhp.T * fp * fm)
    b_prod = rhp.b_scalar(lam, side)
    b = b_prod * _principal_root(-rhp.T * f0_true / pieces["s"]
                                 / b_prod ** 2, 2)
    pieces.update({"fp": fp, "fm": fm, "b11": b * fm, "b22": b * fp,
                   "b_scalar": b})
    return pieces


def _column_coeffs(p, rhp, pieces, i):
    """(q_minus, q_plus) with q_w = (rho^w - y1T) f^w / y2T, fused near poles.

    Phi columns are B_scalar [y1 f^w + q_w y2] e^{+-i sqrt(lam) x}, which
    stays finite through interior Dirichlet points.
    """
    lam = complex(pieces["lam"][i])
    y1T, y2T = pieces["y1T"][i], pieces["y2T"][i]
    rho, rho_inv = pieces["rho"][i], pieces["rho_inv"][i]
    delta, s = pieces["delta"][i], pieces["s"][i]
    dmono = pieces["dmono"][i]
    dy1T, dy2T = dmono[0, 0], dmono[0, 1]
    ddelta = dmono[0, 0] + dmono[1, 1]
    fp, fm = pieces["fp"][i], pieces["fm"][i]

    near = None
    for (n_k, lo, hi, mu_k, sig_k) in rhp.gaps:
        if abs(lam - mu_k) < FUSE_RADIUS * max(1.0, abs(mu_k)):
            near = (mu_k, sig_k)
            break
    if near is None or near[1] == 0:
        return (rho_inv - y1T) * fm / y2T, (rho - y1T) * fp / y2T

    sig = near[1]
    ds = delta * ddelta / s          # d sqrt(Delta^2-4) / dlam
    drho = (ddelta - ds) / 2.0
    drho_inv = (ddelta + ds) / 2.0
    if sig == +1:
        # psi^+ pole cancelled by f^+ zero; psi^- is 0/0
        q_plus = (rho - y1T) * (rhp.f_pm_deriv(np.array([lam]), +1)[0] / dy2T)
        q_minus = ((drho_inv - dy1T) / dy2T) * fm
    else:
        q_minus = (rho_inv - y1T) * (rhp.f_pm_deriv(np.array([lam]), -1)[0] / dy2T)
        q_plus = ((drho - dy1T) / dy2T) * fp
    return q_minus, q_plus


def assemble_Phi(p, rhp, x, lam, side=None):
    """Phi(x, lam) = Psi B e^{i sigma3 sqrt(lam) x} as a 2x2 array."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    pieces = consistent_pieces(p, rhp, lam_arr, side)
    Yx, _ = ode_core.fundamental_matrix_batch(p, lam_arr, [x])
    z = sqrt_lambda(lam_arr, side)
    out = np.empty((lam_arr.size, 2, 2), dtype=complex)
    for i in range(lam_arr.size):
        qm, qp = _column_coeffs(p, rhp, pieces, i)
        y1, y2 = Yx[0, i, 0, 0], Yx[0, i, 0, 1]
        dy1, dy2 = Yx[0, i, 1, 0], Yx[0, i, 1, 1]
        b = pieces["b_scalar"][i]
        fp, fm = pieces["fp"][i], pieces["fm"][i]
        ep = np.exp(1j * z[i] * x)
        out[i, 0, 0] = b * (y1 * fm + qm * y2) * ep
        out[i, 1, 0] = b * (dy1 * fm + qm * dy2) * ep
        out[i, 0, 1] = b * (y1 * fp + qp * y2) / ep
        out[i, 1, 1] = b * (dy1 * fp + qp * dy2) / ep
    return out if np.ndim(lam) else out[0]


def sample_intervals(rhp, samples_per_interval=7, margin=0.05, band_cap=None):
    """Interior sample points per band/gap, excluding edge collars."""
    edges = rhp.sdata.edges
    n_gaps = rhp.sdata.n_gaps
    out = []
    for k in range(1, n_gaps + 2):
        if k <= n_gaps:
            lo, hi = edges[2 * k - 2], edges[2 * k - 1]
        else:
            lo = edges[-1]
            hi = band_cap if band_cap is not None else \
                lo + max(2.0, edges[-1] - edges[-2] if len(edges) > 1 else 2.0)
        pts = lo + (hi - lo) * np.linspace(margin, 1 - margin,
                                           samples_per_interval)
        out.append(("band", k, pts))
    for k in range(1, n_gaps + 1):
        lo, hi = edges[2 * k - 1], edges[2 * k]
        pts = lo + (hi - lo) * np.linspace(margin, 1 - margin,
                                           samples_per_interval)
        out.append(("gap", k, pts))
    return out


def verify_jump(p, rhp, x, t=None, samples_per_interval=7, margin=0.05):
    """Max relative residual of Phi_+ = Phi_- V per band/gap interval."""
    if t is None:
        def assemble(side):
            return lambda lam: assemble_Phi(p, rhp, x, lam, side)

        def jump(lam):
            return rhp.jump_V(x, lam)
    else:
        from . import kdv as _kdv

        def assemble(side):
            return lambda lam: _kdv.assemble_Phi_kdv(p, rhp, x, t, lam, side)

        def jump(lam):
            return rhp.jump_V(x, lam, t=t, variant="kdv")

    report = {"intervals": [], "max_residual": 0.0}
    for kind, k, pts in sample_intervals(rhp, samples_per_interval, margin):
        worst = 0.0
        for lv in pts:
            # skip points inside the Dirichlet fuse collar: boundary values
            # exist but the +-side discrepancy there is dominated by the
            # collar approximation, not the jump relation
            if any(abs(lv - mu_k) < 10 * FUSE_RADIUS * max(1.0, abs(mu_k))
                   for (_, _, _, mu_k, _) in rhp.gaps):
                continue
            Pp = assemble(+1)(lv)
            Pm = assemble(-1)(lv)
            V = jump(lv)
            resid = np.linalg.norm(Pp - Pm @ V) / max(np.linalg.norm(Pm), 1e-300)
            worst = max(worst, float(resid))
        report["intervals"].append({"kind": kind, "k": k,
                                    "residual": worst})
        report["max_residual"] = max(report["max_residual"], worst)
    return report


def verify_asymptotics(p, rhp, x, s, ray):
    """Flatness of E = M(lam)^{-1} Psi e^{i sigma3 sqrt(lam) x} along a ray.

    E equals M^{-1} Phi B^{-1} with the phases removed; computing it from the
    scaled Bloch solutions avoids forming the (huge) unscaled entries.
    """
    lam = np.asarray(ray, dtype=complex)
    ang = np.angle(lam) % (2 * np.pi)
    if np.any((ang < s) | (ang > 2 * np.pi - s)):
        raise ValueError("ray must lie in Omega_s")
    z = sqrt_lambda(lam)
    sb = ode_core.scaled_bloch(p, z, [x])
    vm, dvm = sb["vm"][0], sb["dvm"][0]
    vp, dvp = sb["vp"][0], sb["dvp"][0]
    E = np.empty((lam.size, 2, 2), dtype=complex)
    E[:, 0, 0] = (1j * z * vm - dvm) / (2j * z)
    E[:, 0, 1] = (1j * z * vp - dvp) / (2j * z)
    E[:, 1, 0] = (1j * z * vm + dvm) / (2j * z)
    E[:, 1, 1] = (1j * z * vp + dvp) / (2j * z)
    dev = np.array([np.linalg.norm(E[i] - np.eye(2)) for i in range(lam.size)])
    resid = dev * np.abs(z)
    rep = _bounded_report(np.abs(lam), resid)
    rep["x"] = x
    return rep


def verify_edge_singularity(p, rhp, edge, direction, side=+1,
                            d0=1e-2, q=0.5, count=12):
    """Fitted growth exponent alpha of |Phi| ~ |lam - E|^{-alpha}."""
    dists = d0 * q ** np.arange(count)
    lams = edge + direction * dists
    mags = []
    for lv in lams:
        Phi = assemble_Phi(p, rhp, 0.3 * p.period, lv, side=side)
        mags.append(np.abs(Phi).max())
    mags = np.asarray(mags)
    A = np.vstack([np.log(dists), np.ones_like(dists)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(mags), rcond=None)
    alpha = -float(coef[0])
    return {"edge": float(edge), "alpha": alpha,
            "passed": alpha <= 0.25 + 0.05}


def bloch_v_row(p, ray_lambdas, xs):
    """psi^-(x) e^{i sqrt(lam) x} at points ``xs`` (periodically extended).

    Shape (len(xs), len(ray)); beyond [0, T] the Floquet shift relation
    supplies the scaled multiplier powers.
    """
    lam = np.asarray(ray_lambdas, dtype=complex)
    z = sqrt_lambda(lam)
    T = p.period
    xs = np.atleast_1d(xs).astype(float)
    qs, rs = np.divmod(xs, T)
    sb = ode_core.scaled_bloch(p, z, rs)
    rho_scaled = sb["scalars"]["rho_scaled"]
    vals = np.empty((len(xs), lam.size), dtype=complex)
    for j, qj in enumerate(qs):
        # v(x + qT) = (rho e^{-izT})^{-q} v(x)
        fac = rho_scaled ** (-int(qj)) if qj else 1.0
        vals[j] = sb["vm"][j] * fac
    return vals, z


def neville_limit(values, tvar, tol=1e-6, context=""):
    """Polynomial extrapolation of ``values(tvar)`` to tvar = 0."""
    tab = np.asarray(values, dtype=complex).copy()
    n = len(tab)
    prev_diag = tab[-1]
    gap = np.inf
    for m in range(1, n):
        for i in range(n - m):
            tab[i] = (tab[i + 1] * tvar[i] - tab[i] * tvar[i + m]) / \
                     (tvar[i] - tvar[i + m])
        diag = tab[0]
        gap = abs(diag - prev_diag)
        prev_diag = diag
    if gap > tol * max(1.0, abs(prev_diag)):
        raise ExtrapolationDiverged(
            f"Richardson stages disagree by {gap:.3g} {context}")
    return prev_diag


def limit_row(p, rhp, x, ray_lambdas, tol=1e-6):
    """Richardson limit of sqrt(lam) (1 - psi^- e^{i sqrt(lam) x}) on a ray.

    The limit equals (1/2i) int_0^x u; ExtrapolationDiverged if the last two
    Neville stages disagree beyond ``tol``.
    """
    xs = np.atleast_1d(x).astype(float)
    vals, z = bloch_v_row(p, ray_lambdas, xs)
    F = z * (1.0 - vals)
    tvar = 1.0 / z
    out = np.empty(len(xs), dtype=complex)
    for j in range(len(xs)):
        out[j] = neville_limit(F[j], tvar, tol, context=f"at x={xs[j]:.6g}")
    return out if np.ndim(x) else complex(out[0])


def reconstruct_potential(p, rhp, x, ray_lambdas=None, h=None):
    """u(x) = 2i d/dx lim sqrt(lam) (1 - b11^{-1} phi11); central difference.

    b11^{-1} phi11 = psi^- e^{i sqrt(lam) x} identically, so the limit values
    come straight from the stable scaled Bloch solver.
    """
    T = p.period
    if ray_lambdas is None:
        ray_lambdas = -400.0 * 2.0 ** np.arange(8)
    if h is None:
        h = 1e-4 * T
    xs = np.asarray([x - h, x + h], dtype=float)
    lim = limit_row(p, rhp, xs, ray_lambdas)
    val = 2j * (lim[1] - lim[0]) / (2 * h)
    return float(val.real)


def growth_bound_report(p, rhp, x, n_radii=6, n_angles=8, lam_max=400.0):
    """Finite surrogate of the sub-Gaussian bound: fit c in log|phi| <= c|lam|.

    Samples Phi on the cut plane away from the positive axis and the gap
    discs and reports the fitted growth coefficient.
    """
    radii = np.geomspace(5.0, lam_max, n_radii)
    angles = np.linspace(0.35, 2 * np.pi - 0.35, n_angles)
    pts = []
    R = max(rhp.disc_radius, 1e-3)
    centers = np.array([0.5 * (lo + hi) for (_, lo, hi, _, _) in rhp.gaps]
                       or [0.0])
    for r in radii:
        for a in angles:
            lv = r * np.exp(1j * a)
            if np.min(np.abs(lv - centers)) > 2 * R:
                pts.append(lv)
    logmag = []
    scale = []
    for lv in pts:
        Phi = assemble_Phi(p, rhp, x, lv)
        logmag.append(np.log(np.abs(Phi).max()))
        scale.append(abs(lv))
    logmag = np.asarray(logmag)
    scale = np.asarray(scale)
    c_fit = float(np.max(logmag / scale))
    return {"c_fit": c_fit, "n_points": len(pts),
            "passed": np.isfinite(c_fit)}
