"""Band edges, Dirichlet eigenvalues, signatures, and spectral data assembly.

Periodic/antiperiodic eigenvalues are located as roots of Delta(lam) -+ 2.
For even potentials the classical half-period factorizations

    Delta - 2 = 4 y2(T/2) y1'(T/2),      Delta + 2 = 4 y1(T/2) y2'(T/2)

split each (possibly nearly double) root into two simple, well-conditioned
shooting roots, so near-degenerate gap edges are resolved to integrator
accuracy.  A discriminant-extremum fallback handles general potentials.

The module also ships the independent Fourier truncation oracle (eigenvalues
of the truncated Hill matrix in the exponential/sine bases) used by the test
suite; it never touches the ODE integrator.
"""

from dataclasses import dataclass, field

import json
import numpy as np

from . import ode_core
from .errors import RootBracketFailure

# gap width below this (scaled) is treated as closed
DEGENERACY_TOL = 1e-7


# ---------------------------------------------------------------------------
# helpers


def _batched_bisect(f, lo, hi, flo, iters):
    """Vectorized bisection on sign-change brackets."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    flo = np.array(flo, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        same = flo * fm > 0
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def _batched_newton(f_df, x, lo, hi, iters=5):
    """Newton polish inside brackets; falls back to midpoint on escape."""
    x = np.array(x, dtype=float)
    for _ in range(iters):
        fv, dv = f_df(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - fv / dv
        bad = ~np.isfinite(xn) | (xn < lo) | (xn > hi)
        xn = np.where(bad, x, xn)
        x = xn
    return x


def _is_even_potential(p, tol=1e-12):
    c = p.fourier_coeffs
    scale = max(1.0, np.abs(c).max())
    return np.abs(c.imag).max() <= tol * scale


def _even_translation(p, tol=1e-10):
    """Shift delta with u(x + delta) even, or None.

    Band edges are translation invariant, so edges of a translated-even
    potential can be computed on its even representative.
    """
    from .potential import PeriodicPotential

    if _is_even_potential(p):
        return 0.0
    c = p.fourier_coeffs
    kmax = p.kmax
    scale = np.abs(c).max()
    k0 = None
    for k in range(1, kmax + 1):
        if abs(c[k + kmax]) > 1e-9 * scale:
            k0 = k
            break
    if k0 is None:
        return 0.0
    base = -np.angle(c[k0 + kmax]) * p.period / (2 * np.pi * k0)
    for extra in range(2 * k0):
        delta = base + extra * p.period / (2 * k0)
        shifted = c * np.exp(2j * np.pi * np.arange(-kmax, kmax + 1)
                             * delta / p.period)
        if np.abs(shifted.imag).max() <= tol * max(1.0, scale):
            return float(delta % p.period)
    return None


def _translate(p, delta):
    from .potential import PeriodicPotential

    c = p.fourier_coeffs
    kmax = p.kmax
    shifted = c * np.exp(2j * np.pi * np.arange(-kmax, kmax + 1)
                         * delta / p.period)
    shifted = 0.5 * (shifted + np.conj(shifted[::-1]))
    return PeriodicPotential(p.period, shifted)


def _sup_norm_estimate(p):
    return float(np.abs(p.fourier_coeffs).sum())


# ---------------------------------------------------------------------------
# even-potential path: half-interval shooting


# matrix entries of Y(T/2): families of simple shooting roots
_HALF_ENTRIES = (("per_even", 1, 0),   # y1'(T/2)
                 ("per_odd", 0, 1),    # y2(T/2)
                 ("anti_even", 0, 0),  # y1(T/2)
                 ("anti_odd", 1, 1))   # y2'(T/2)


def _half_matrix_batch(p, lam, deriv=False):
    y, dy = ode_core.fundamental_matrix_batch(
        p, np.asarray(lam, float) + 0j, [p.period / 2.0], with_dlambda=deriv)
    return y[0].real, (dy[0].real if deriv else None)


def _half_roots(p, grid):
    """Roots of all four half-interval entries over ``grid``, per family.

    Runs one shared batched solve per refinement sweep.
    """
    vals, _ = _half_matrix_batch(p, grid)
    lo, hi, flo, fam_i, fam_j, fam = [], [], [], [], [], []
    for name, i, j in _HALF_ENTRIES:
        v = vals[:, i, j]
        idx = np.nonzero(v[:-1] * v[1:] < 0)[0]
        lo += list(grid[idx])
        hi += list(grid[idx + 1])
        flo += list(v[idx])
        fam_i += [i] * len(idx)
        fam_j += [j] * len(idx)
        fam += [name] * len(idx)
    if not lo:
        return {name: np.empty(0) for name, _, _ in _HALF_ENTRIES}
    fam_i = np.array(fam_i)
    fam_j = np.array(fam_j)
    sel = np.arange(len(fam_i))

    def f(x):
        v, _ = _half_matrix_batch(p, x)
        return v[sel, fam_i, fam_j]

    def f_df(x):
        v, dv = _half_matrix_batch(p, x, deriv=True)
        return v[sel, fam_i, fam_j], dv[sel, fam_i, fam_j]

    mid = _batched_bisect(f, lo, hi, flo, 30)
    root = _batched_newton(f_df, mid, lo, hi)
    out = {}
    fam = np.array(fam)
    for name, _, _ in _HALF_ENTRIES:
        out[name] = np.sort(root[fam == name])
    return out


def _edges_even(p, n_max):
    """lam_0..lam_{2 n_max} for an even potential via half-period shooting."""
    T = p.period
    c = p.mean
    bound = _sup_norm_estimate(p) + 1.0
    # dense grid in s = sqrt(lam - lam_min); root spacing ~ 2 pi / T in s
    lam_min = c - bound
    s_hi = (n_max + 1.5) * np.pi / T
    s = np.linspace(0.0, s_hi * 1.02, int(20 * (n_max + 2)) + 8)
    grid = lam_min + s ** 2
    roots = _half_roots(p, grid)
    per = np.sort(np.concatenate([roots["per_even"], roots["per_odd"]]))
    anti = np.sort(np.concatenate([roots["anti_even"], roots["anti_odd"]]))
    need_per = 1 + 2 * (n_max // 2)
    need_anti = 2 * ((n_max + 1) // 2)
    if per.size < need_per or anti.size < need_anti:
        raise RootBracketFailure(
            "half-period scan found too few eigenvalues",
            interval=(float(grid[0]), float(grid[-1])))
    seq = [per[0]]
    ip, ia = 1, 0
    for n in range(1, n_max + 1):
        if n % 2 == 1:
            seq += [anti[ia], anti[ia + 1]]
            ia += 2
        else:
            seq += [per[ip], per[ip + 1]]
            ip += 2
    lam = np.array(seq)
    order_defect = np.min(np.diff(lam))
    if order_defect < -1e-8 * max(1.0, np.abs(lam).max()):
        raise RootBracketFailure("periodic/antiperiodic interlacing violated",
                                 interval=(float(lam.min()), float(lam.max())))
    return lam


# ---------------------------------------------------------------------------
# general path: discriminant extrema


def _edges_general(p, n_max):
    T = p.period
    c = p.mean
    bound = _sup_norm_estimate(p) + 1.0

    def disc(lam):
        return ode_core.discriminant_batch(p, lam).real

    def disc_deriv(lam):
        d, dd = ode_core.disc_and_deriv_batch(p, np.asarray(lam) + 0j)
        return d.real, dd.real

    # in-band reference points (|Delta| < 2) near free band midpoints
    b = []
    for n in range(n_max + 1):
        seed = ((n + 0.5) * np.pi / T) ** 2 + c
        span = max(1.0, (n + 0.5) * (np.pi / T) ** 2)
        cand = seed + span * np.linspace(-0.45, 0.45, 13)
        vals = disc(cand)
        ok = np.abs(vals) < 1.9
        if not ok.any():
            raise RootBracketFailure("no in-band point found",
                                     interval=(float(cand[0]), float(cand[-1])))
        pick = np.argmin(np.abs(vals))
        b.append(float(cand[pick]))
    b = np.array(b)

    # lam_0: leftmost root of Delta - 2
    lo = c - bound
    while disc(np.array([lo]))[0] < 2.0:
        lo -= max(1.0, bound)
        if lo < c - 50 * bound:
            raise RootBracketFailure("failed to bracket lambda_0",
                                     interval=(lo, b[0]))
    lam0 = _batched_bisect(lambda x: disc(x) - 2.0, [lo], [b[0]],
                           [disc(np.array([lo]))[0] - 2.0], 45)
    lam0 = _batched_newton(lambda x: (lambda d, dd: (d - 2.0, dd))(*disc_deriv(x)),
                           lam0, [lo], [b[0]])

    # one discriminant extremum per gap, then edge pair
    lo_g, hi_g = b[:-1], b[1:]
    _, dlo = disc_deriv(lo_g)
    star = _batched_bisect(lambda x: disc_deriv(x)[1], lo_g, hi_g, dlo, 50)
    signs = np.array([(-1) ** n for n in range(1, n_max + 1)], dtype=float)
    dstar, _ = disc_deriv(star)
    depth = signs * dstar - 2.0  # >= 0 up to noise at an open/closed gap
    h = 1e-3 * np.maximum(1.0, np.abs(star))
    _, dp = disc_deriv(star + h)
    _, dm = disc_deriv(star - h)
    curv = np.abs((dp - dm) / (2 * h))
    lam_pairs = np.empty((n_max, 2))
    for i in range(n_max):
        n = i + 1
        if depth[i] <= max(1e-9, 0.125 * curv[i] *
                           (DEGENERACY_TOL * max(1.0, abs(star[i]))) ** 2):
            lam_pairs[i] = star[i], star[i]
            continue
        w_est = 2.0 * np.sqrt(2.0 * depth[i] / max(curv[i], 1e-12))
        guess = np.array([star[i] - 0.5 * w_est, star[i] + 0.5 * w_est])
        lo2 = np.array([lo_g[i], star[i]])
        hi2 = np.array([star[i], hi_g[i]])

        def g_df(x, sgn=signs[i]):
            d, dd = disc_deriv(x)
            return sgn * d - 2.0, sgn * dd

        root = _batched_newton(g_df, np.clip(guess, lo2, hi2), lo2, hi2, iters=7)
        lam_pairs[i] = np.sort(root)
    return np.concatenate([lam0, lam_pairs.ravel()])


# ---------------------------------------------------------------------------
# public operations


def band_edges(p, n_max):
    """First 2*n_max + 1 periodic/antiperiodic eigenvalues, ordered.

    Uses half-period shooting when the potential is even up to translation
    (edges are translation invariant), otherwise discriminant extrema.
    """
    if n_max < 1:
        raise ValueError("n_max >= 1 required")
    delta = _even_translation(p)
    if delta is not None:
        q = p if delta == 0.0 else _translate(p, delta)
        return _edges_even(q, n_max)
    return _edges_general(p, n_max)


def dirichlet_eigenvalues(p, n_max, lam=None):
    """mu_n (roots of y2(T, .)) bracketed inside [lam_{2n-1}, lam_{2n}]."""
    if lam is None:
        lam = band_edges(p, n_max)

    def y2(x):
        y, _ = ode_core.monodromy_batch(p, np.asarray(x, float) + 0j)
        return y[:, 0, 1].real

    def y2_df(x):
        y, dy = ode_core.monodromy_batch(p, np.asarray(x, float) + 0j,
                                         with_dlambda=True)
        return y[:, 0, 1].real, dy[:, 0, 1].real

    mu = np.empty(n_max)
    a = lam[1::2]
    bnd = lam[2::2]
    fa = y2(a)
    fb = y2(bnd)
    for i in range(n_max):
        if bnd[i] - a[i] <= 0:
            mu[i] = a[i]
            continue
        if fa[i] * fb[i] < 0:
            mid = _batched_bisect(y2, [a[i]], [bnd[i]], [fa[i]], 40)
            mu[i] = _batched_newton(y2_df, mid, [a[i]], [bnd[i]])[0]
        else:
            # root pinned at (or within tolerance of) one endpoint
            mu[i] = a[i] if abs(fa[i]) <= abs(fb[i]) else bnd[i]
            polished = _batched_newton(y2_df, [mu[i]], [a[i]], [bnd[i]])[0]
            mu[i] = min(max(polished, a[i]), bnd[i])
    return mu


def signatures(p, mu, lam, collar=DEGENERACY_TOL):
    """sigma_n = -sgn log |y2'(T, mu_n)|, forced to 0 at gap edges."""
    mu = np.asarray(mu, float)
    y, _ = ode_core.monodromy_batch(p, mu + 0j)
    d = np.abs(y[:, 1, 1])
    sig = np.zeros(len(mu), dtype=int)
    for i in range(len(mu)):
        a, bnd = lam[2 * i + 1], lam[2 * i + 2]
        tol = collar * max(1.0, abs(mu[i]))
        if bnd - a <= tol or mu[i] - a <= tol or bnd - mu[i] <= tol:
            continue
        logd = np.log(d[i])
        if abs(logd) > 1e-12:
            sig[i] = -int(np.sign(logd))
    return sig


@dataclass
class SpectralData:
    """The inverse-spectral data of a potential, normalized so lam_0 = 0.

    ``lam``/``mu``/``sigma`` are the full (shifted) sequences; ``edges`` is
    the reduced band-edge list E_0 < E_1 < ... keeping only open gaps, and
    ``gap_index`` maps gap counter k (1-based) to the original index n_k.
    """

    T: float
    n_max: int
    shift: float
    Q: float
    lam: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    edges: np.ndarray = field(default=None)
    gap_index: list = field(default_factory=list)

    def __post_init__(self):
        if self.edges is None:
            edges = [0.0]
            gap_index = []
            for n in range(1, self.n_max + 1):
                a, b = self.lam[2 * n - 1], self.lam[2 * n]
                if b - a > DEGENERACY_TOL * max(1.0, abs(b)):
                    edges += [a, b]
                    gap_index.append(n)
            self.edges = np.array(edges)
            self.gap_index = gap_index

    @property
    def n_gaps(self):
        """Number of open gaps (the paper's script-G)."""
        return len(self.gap_index)

    def gap_mu(self, k):
        """(mu, sigma) for open gap k (1-based)."""
        n = self.gap_index[k - 1]
        return self.mu[n - 1], int(self.sigma[n - 1])

    def gap_interval(self, k):
        return self.edges[2 * k - 1], self.edges[2 * k]

    def band_interval(self, k):
        """Band k = 1..n_gaps+1; the last one is [E_{2G}, inf)."""
        if k == self.n_gaps + 1:
            return self.edges[-1], np.inf
        lo = self.edges[2 * k - 2]
        return lo, self.edges[2 * k - 1]

    def shifted_potential(self, p):
        """The normalized potential u - lam_0 this data describes."""
        return p.shifted(self.shift)

    def to_dict(self):
        gaps = []
        for k, n in enumerate(self.gap_index, start=1):
            gaps.append({"k": k, "n": int(n), "lo": float(self.edges[2 * k - 1]),
                         "hi": float(self.edges[2 * k]),
                         "mu": float(self.mu[n - 1]),
                         "sigma": int(self.sigma[n - 1])})
        return {"schema": "hillspec-sigma-1", "T": self.T, "shift": self.shift,
                "Q": self.Q, "n_max": self.n_max,
                "lambda_seq": [float(v) for v in self.lam],
                "mu_seq": [float(v) for v in self.mu],
                "sigma_seq": [int(v) for v in self.sigma],
                "edges": [float(v) for v in self.edges], "gaps": gaps}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d):
        return cls(T=d["T"], n_max=d["n_max"], shift=d["shift"], Q=d["Q"],
                   lam=np.array(d["lambda_seq"]), mu=np.array(d["mu_seq"]),
                   sigma=np.array(d["sigma_seq"], dtype=int))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def spectral_data(p, n_max):
    """Assemble the full spectral data of ``p``, shifted so lam_0 = 0."""
    lam = band_edges(p, n_max)
    mu = dirichlet_eigenvalues(p, n_max, lam)
    sig = signatures(p, mu, lam)
    shift = float(lam[0])
    Q = (p.mean - shift) * p.period
    return SpectralData(T=p.period, n_max=n_max, shift=shift, Q=Q,
                        lam=lam - shift, mu=mu - shift, sigma=sig)


# ---------------------------------------------------------------------------
# Fourier truncation oracle (independent of ode_core)


def fourier_hill_eigs(p, count, kind, K=64):
    """Lowest eigenvalues from the truncated Fourier/sine Hill matrix.

    ``kind``: 'periodic' (basis exp(2 pi i m x / T)), 'antiperiodic'
    (exp(i pi (2m+1) x / T)), or 'dirichlet' (sin(n pi x / T) on [0, T]).
    """
    T = p.period
    c = p.fourier_coeffs
    kmax = p.kmax

    def coeff(k):
        return c[k + kmax] if abs(k) <= kmax else 0.0

    if kind in ("periodic", "antiperiodic"):
        if kind == "periodic":
            freqs = 2.0 * np.pi / T * np.arange(-K, K + 1)
            labels = np.arange(-K, K + 1)  # coupling index differences
        else:
            freqs = np.pi / T * (2 * np.arange(-K, K) + 1)
            labels = np.arange(-K, K)
        m = len(freqs)
        H = np.zeros((m, m), dtype=complex)
        H[np.diag_indices(m)] = freqs ** 2
        dk = labels[:, None] - labels[None, :]
        inside = (np.abs(dk) <= kmax) & (dk != 0)
        H[inside] += c[dk[inside] + kmax]
        vals = np.linalg.eigvalsh(H)
        return np.sort(vals.real)[:count]

    if kind != "dirichlet":
        raise ValueError(kind)
    N = 2 * K
    # V_{nm} = C(|n-m|) - C(n+m), C(k) = (1/T) int_0^T u cos(k pi x / T) dx
    kk = np.arange(0, 2 * N + 1)
    C = np.zeros(len(kk))
    for k in kk:
        if k % 2 == 0:
            C[k] = coeff(k // 2).real if k // 2 <= kmax else 0.0
        else:
            beta = k * np.pi / T
            s = 0.0 + 0j
            for j in range(-kmax, kmax + 1):
                alpha = 2.0 * np.pi * j / T
                s += coeff(j) * (1.0 / (alpha + beta) + 1.0 / (alpha - beta))
            C[k] = (1j / T * s).real  # real by c_{-j} = conj(c_j)
    n = np.arange(1, N + 1)
    H = np.diag((n * np.pi / T) ** 2).astype(float)
    H += C[np.abs(n[:, None] - n[None, :])] - C[n[:, None] + n[None, :]]
    vals = np.linalg.eigvalsh(H)
    return np.sort(vals)[:count]


def oracle_lambda_sequence(p, n_max, K=64):
    """lam_0..lam_{2 n_max} from the Fourier truncation oracle."""
    per = fourier_hill_eigs(p, 2 * (n_max // 2) + 2, "periodic", K)
    anti = fourier_hill_eigs(p, 2 * ((n_max + 1) // 2) + 1, "antiperiodic", K)
    seq = [per[0]]
    ip, ia = 1, 0
    for n in range(1, n_max + 1):
        if n % 2 == 1:
            seq += [anti[ia], anti[ia + 1]]
            ia += 2
        else:
            seq += [per[ip], per[ip + 1]]
            ip += 2
    return np.array(seq)


# ---------------------------------------------------------------------------
# candidate data admissibility (the six periodicity-section conditions)


def admissibility_check(data, growth_margin=0.1):
    """Check a candidate spectral data set; returns a report dict.

    Conditions: (1) strictly increasing edges, (2) mu in its closed gap,
    (3) finite max gap width R, (4) sigma in {-1, 0, 1}, (5) E_n > C n^2
    growth, (6) eventual disjointness of the radius-R discs around gap
    midpoints.
    """
    if isinstance(data, SpectralData):
        d = data.to_dict()
    else:
        d = dict(data)
    edges = np.asarray(d["edges"], dtype=float)
    gaps = d.get("gaps", [])
    report = {"violations": [], "checks": {}}

    ok1 = bool(np.all(np.diff(edges) > 0))
    report["checks"]["edges_increasing"] = ok1
    if not ok1:
        report["violations"].append("edges not strictly increasing")

    ok2 = True
    for g in gaps:
        lo, hi, mu = g["lo"], g["hi"], g["mu"]
        if not (lo - 1e-12 <= mu <= hi + 1e-12):
            ok2 = False
            report["violations"].append(
                f"mu={mu:.6g} outside gap {g['k']} [{lo:.6g}, {hi:.6g}]")
    report["checks"]["mu_in_gap"] = ok2

    widths = np.array([g["hi"] - g["lo"] for g in gaps]) if gaps else np.zeros(0)
    R = float(widths.max()) if widths.size else 0.0
    ok3 = np.isfinite(R)
    report["checks"]["finite_R"] = ok3
    report["R"] = R

    ok4 = all(g["sigma"] in (-1, 0, 1) for g in gaps)
    report["checks"]["sigma_valid"] = ok4
    if not ok4:
        report["violations"].append("sigma outside {-1,0,1}")

    # growth: fit E_n / n^2 over the upper half of the edge list
    n = np.arange(1, len(edges))
    ok5 = True
    if len(n) >= 4:
        ratio = edges[1:] / np.maximum(n, 1) ** 2
        tail = ratio[len(ratio) // 2:]
        cfit = float(np.median(tail))
        ok5 = bool(cfit > 0 and tail.min() > (1 - growth_margin) * cfit * 0.1)
        report["growth_constant"] = cfit
        slope = np.polyfit(np.log(n[len(n) // 2:]),
                           np.log(edges[1 + len(n) // 2:]), 1)[0]
        report["growth_exponent"] = float(slope)
        ok5 = ok5 and slope > 2.0 - 0.5
        if not ok5:
            report["violations"].append(
                f"edge growth exponent {slope:.3f} below quadratic")
    report["checks"]["quadratic_growth"] = ok5

    ok6 = True
    if gaps:
        cen = np.array([(g["hi"] + g["lo"]) / 2 for g in gaps])
        if len(cen) > 1:
            gapsep = np.diff(cen)
            disjoint_from = None
            for i in range(len(gapsep)):
                if np.all(gapsep[i:] > 2 * R):
                    disjoint_from = i + 1
                    break
            report["discs_disjoint_from"] = disjoint_from
            ok6 = disjoint_from is not None
            if not ok6:
                report["violations"].append(
                    "radius-R discs never become disjoint")
    report["checks"]["discs_eventually_disjoint"] = ok6

    report["passed"] = not report["violations"]
    return report
