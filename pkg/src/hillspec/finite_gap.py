"""Finite-gap machinery: hyperelliptic periods, theta functions, and the
explicit potentials and eigenfunctions they generate.

The curve is w^2 = P(lam) = lam prod (lam - E_n) with real branch points
0 = E_0 < E_1 < ... < E_{2g}, cut along the bands; sheet 1 carries the
branch of w that is positive above the last cut.  Cycles: a_j winds around
gap j = [E_{2j-1}, E_{2j}] (upper half on sheet 1), b_j encloses
[E_0, E_{2j-1}]; with this choice all period quadratures reduce to real
integrals over bands and gaps, the normalized Riemann matrix is real
negative definite, and the second-kind period vectors are real.

All endpoint-singular integrals use Gauss-Chebyshev nodes in the local
1/sqrt((lam-a)(b-lam)) weight; partial (Abel map) segments substitute the
square root out and use Gauss-Legendre.
"""

from dataclasses import dataclass, field

import numpy as np

from .branching import sqrt_factor
from .errors import (CutoffExplosion, DegenerateCurve, LinearSolveSingular,
                     OnPoleDivisor, ThetaZero)

THETA_RADIUS_CAP = 80
_LATTICE_CACHE = {}


def agm(a, b, tol=1e-15):
    """Arithmetic-geometric mean (the elliptic-period oracle primitive)."""
    a, b = float(a), float(b)
    while abs(a - b) > tol * abs(a):
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return 0.5 * (a + b)


def elliptic_K_agm(k):
    """Complete elliptic integral K(k) (modulus k) via the AGM."""
    return np.pi / (2.0 * agm(1.0, np.sqrt(1.0 - k * k)))


# ---------------------------------------------------------------------------
# curve and periods


def _w_real(lam, betas, side=+1):
    """Sheet-1 w on the real axis (boundary value from the given side)."""
    lam = np.asarray(lam, dtype=complex)
    out = np.ones_like(lam)
    for b in betas:
        out = out * sqrt_factor(lam, b, side)
    return out


def _w_complex(lam, betas):
    """Sheet-1 w off the axis (factor-local [0, 2 pi) branches)."""
    lam = np.asarray(lam, dtype=complex)
    out = np.ones_like(lam)
    for b in betas:
        out = out * sqrt_factor(lam, b)
    return out


@dataclass
class HyperellipticData:
    edges: np.ndarray
    genus: int
    betas: np.ndarray
    omega_coeffs: np.ndarray       # (g, g): omega_i = sum_k C[i,k] lam^k / w
    tau: np.ndarray
    Omega1: np.ndarray
    Omega3: np.ndarray
    omega1_coeffs: np.ndarray      # second kind d sqrt(lam):    poly / w
    omega3_coeffs: np.ndarray      # second kind d sqrt(lam)^3:  poly / w
    K: np.ndarray = None
    divisor: list = field(default_factory=list)   # (mu, sheet) pairs
    n_nodes: int = 256

    @property
    def gaps(self):
        return [(self.betas[2 * j - 1], self.betas[2 * j])
                for j in range(1, self.genus + 1)]

    @property
    def bands(self):
        return [(self.betas[2 * j], self.betas[2 * j + 1])
                for j in range(self.genus)]

    # -- quadrature cores --------------------------------------------------

    def _gc_nodes(self, a, b, n=None):
        n = n or self.n_nodes
        th = (2.0 * np.arange(1, n + 1) - 1.0) * np.pi / (2.0 * n)
        return 0.5 * (a + b) + 0.5 * (b - a) * np.cos(th), np.pi / n

    def seg_integral(self, a, b, poly, n=None):
        """int_a^b poly(lam)/w dlam between consecutive branch points."""
        lam, wgt = self._gc_nodes(a, b, n)
        others = [bb for bb in self.betas if bb not in (a, b)]
        rest = _w_real(lam, others, +1)
        num = np.polyval(poly[::-1], lam)
        # local pair sqrt(lam-a) sqrt(lam-b) = i sqrt((lam-a)(b-lam))
        return wgt * np.sum(num / (1j * rest))

    def partial_integral(self, a, lam_p, poly, n=None):
        """int_a^lam_p poly/w dlam from the branch point a (real or radial).

        The square-root vanishing at a is substituted out; the path is the
        straight segment from a to lam_p, which works for real targets in
        the adjacent interval and for complex/negative targets from a = 0.
        """
        n = n or self.n_nodes
        if abs(lam_p - a) < 1e-300:
            return 0.0 + 0.0j
        xi, wgt = np.polynomial.legendre.leggauss(n)
        xi = 0.5 * (xi + 1.0)
        wgt = 0.5 * wgt
        lam = a + (complex(lam_p) - a) * xi ** 2
        others = [bb for bb in self.betas if bb != a]
        rest = _w_complex(lam, others)
        num = np.polyval(poly[::-1], lam)
        # dlam = 2 (lam_p - a) xi dxi; sqrt(lam - a) = sqrt(lam_p - a) xi
        # (the [0, 2pi) branch factors through the real scaling xi^2)
        return 2.0 * np.sqrt(complex(lam_p - a)) * np.sum(wgt * num / rest)

    def a_period(self, poly, j, n=None):
        lo, hi = self.gaps[j - 1]
        return -2.0 * self.seg_integral(lo, hi, poly, n)

    def b_period(self, poly, j, n=None):
        tot = 0.0 + 0.0j
        for m in range(j):
            a, b = self.bands[m]
            tot += self.seg_integral(a, b, poly, n)
        return 2.0 * tot

    # -- Abel map ------------------------------------------------------------

    def _path_segments(self, lam_p):
        """Segments of the integration path from p0 = (0, .) to lam_p.

        Real positive targets walk the axis through bands and gaps; complex
        or nonpositive targets take the radial segment from the base point.
        """
        lam_c = complex(lam_p)
        if abs(lam_c.imag) > 1e-14 * max(1.0, abs(lam_c)) or lam_c.real <= 0:
            return [(0.0, lam_c, "partial")]
        lp = lam_c.real
        segs = []
        pts = list(self.betas) + [np.inf]
        for a, b in zip(pts[:-1], pts[1:]):
            if lp >= b - 1e-14 * max(1.0, abs(b)) and np.isfinite(b):
                segs.append((a, b, None))
            elif lp > a:
                segs.append((a, lp, "partial"))
                break
            else:
                break
        return segs

    def _path_integral(self, lam_p, poly, n=None):
        tot = 0.0 + 0.0j
        for a, b, mode in self._path_segments(lam_p):
            if mode is None:
                tot += self.seg_integral(a, b, poly, n)
            else:
                tot += self.partial_integral(a, b, poly, n)
        return tot

    def abel(self, lam_p, sheet=+1, n=None):
        """A(p) = int_{p0}^{p} omega, p0 = (0, .)."""
        out = np.array([self._path_integral(lam_p, self.omega_coeffs[i], n)
                        for i in range(self.genus)])
        # sheet 0 marks a branch-point divisor entry: either sheet works
        return (sheet if sheet != 0 else 1) * out

    def abel_second_kind(self, lam_p, sheet=+1, which=1, n=None):
        """int_{p0}^{p} omega^{(1)} or omega^{(3)} along the same path."""
        poly = self.omega1_coeffs if which == 1 else self.omega3_coeffs
        return (sheet if sheet != 0 else 1) * \
            self._path_integral(lam_p, poly, n)

    def abel_divisor(self):
        return sum(self.abel(mu, sh) for mu, sh in self.divisor) if \
            self.divisor else np.zeros(self.genus, dtype=complex)


def build_curve(edges, divisor=None, n_nodes=256, degeneracy_tol=1e-9):
    """Construct the curve, normalized differentials, and period data.

    ``edges`` = [0, E_1, ..., E_{2g}] strictly increasing; ``divisor`` is a
    list of (mu_k, sheet) pairs, one per gap (defaults to the right edges).
    """
    betas = np.asarray(edges, dtype=float)
    if abs(betas[0]) > 1e-12 * max(1.0, abs(betas[-1])):
        raise ValueError("edges must be normalized so E_0 = 0")
    if len(betas) % 2 != 1 or len(betas) < 3:
        raise ValueError("need an odd number of edges, at least 3")
    if np.any(np.diff(betas) <= degeneracy_tol * np.maximum(1.0, betas[1:])):
        raise DegenerateCurve("adjacent branch points coincide")
    g = (len(betas) - 1) // 2
    hyp = HyperellipticData(edges=betas.copy(), genus=g, betas=betas,
                            omega_coeffs=np.zeros((g, g)),
                            tau=np.zeros((g, g)), Omega1=np.zeros(g),
                            Omega3=np.zeros(g),
                            omega1_coeffs=np.zeros(g + 1),
                            omega3_coeffs=np.zeros(g + 2),
                            n_nodes=n_nodes)
    # period building blocks for monomials lam^k, k = 0..g+1
    A = np.empty((g, g + 2), dtype=complex)
    B = np.empty((g, g + 2), dtype=complex)
    for k in range(g + 2):
        poly = np.zeros(k + 1)
        poly[k] = 1.0
        for j in range(1, g + 1):
            A[j - 1, k] = hyp.a_period(poly, j)
            B[j - 1, k] = hyp.b_period(poly, j)
    # first kind: sum_k C[i,k] A[j,k] = 2 pi i delta_ij
    Amat = A[:, :g]
    try:
        Cmat = 2j * np.pi * np.linalg.inv(Amat).T
    except np.linalg.LinAlgError as exc:
        raise LinearSolveSingular(str(exc))
    hyp.omega_coeffs = Cmat
    tau = Cmat @ B[:, :g].T
    sym_defect = np.abs(tau - tau.T).max()
    if sym_defect > 1e-7 * max(1.0, np.abs(tau).max()):
        raise LinearSolveSingular(f"tau asymmetric by {sym_defect:.2e}")
    tau = 0.5 * (tau + tau.T)
    if np.abs(tau.imag).max() > 1e-8 * np.abs(tau).max():
        raise LinearSolveSingular("tau unexpectedly complex")
    tau = tau.real
    if np.linalg.eigvalsh(tau).max() >= 0:
        raise LinearSolveSingular("Re tau not negative definite")
    hyp.tau = tau

    # second kind, d sqrt(lam): (1/2) lam^g + lower,  a-periods zero
    rhs1 = -0.5 * A[:, g]
    try:
        a1 = np.linalg.solve(Amat, rhs1)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveSingular(str(exc))
    hyp.omega1_coeffs = np.concatenate([a1.real, [0.5]])
    if np.abs(a1.imag).max() > 1e-8 * max(1.0, np.abs(a1).max()):
        raise LinearSolveSingular("omega^(1) coefficients complex")
    Omega1 = (B[:, :g] @ a1 + 0.5 * B[:, g])
    # second kind, d sqrt(lam)^3: (3/2) lam^{g+1} - (3/4) (sum betas) lam^g
    s_beta = betas.sum()
    rhs3 = -(1.5 * A[:, g + 1] - 0.75 * s_beta * A[:, g])
    a3 = np.linalg.solve(Amat, rhs3)
    hyp.omega3_coeffs = np.concatenate([a3.real, [-0.75 * s_beta, 1.5]])
    Omega3 = (B[:, :g] @ a3 + 1.5 * B[:, g + 1] - 0.75 * s_beta * B[:, g])
    if max(np.abs(Omega1.imag).max(), np.abs(Omega3.imag).max()) > \
            1e-7 * max(1.0, np.abs(Omega1).max(), np.abs(Omega3).max()):
        raise LinearSolveSingular("second-kind periods not real")
    hyp.Omega1 = Omega1.real
    hyp.Omega3 = Omega3.real

    if divisor is None:
        divisor = [(betas[2 * j], 0) for j in range(1, g + 1)]
    hyp.divisor = list(divisor)
    hyp.K = riemann_constants(hyp)
    return hyp


def second_kind_periods(hyp):
    """(Omega1, Omega3): b-periods of the normalized second-kind forms."""
    return hyp.Omega1.copy(), hyp.Omega3.copy()


def riemann_constants(hyp, n_theta=None):
    """Vector of Riemann constants for base point p0 = (0, .).

    K_j = (2 pi i + tau_jj)/2 + (1/2 pi i) sum_{l != j} oint_{a_l}
    omega_l(p) A_j(p); the a_l circuits are parametrized by the gap angle,
    where the integrands are smooth and periodic (trapezoid sums converge
    spectrally).  The sign of the sum term is pinned by the Riemann
    vanishing property, which the test suite checks directly: theta(A(q)+K)
    vanishes identically in q at this K and at no sign variant.
    """
    g = hyp.genus
    K = np.array([(2j * np.pi + hyp.tau[j, j]) / 2.0 for j in range(g)],
                 dtype=complex)
    if g == 1:
        return K
    n = n_theta or 4 * hyp.n_nodes
    th = np.arange(n) * (2.0 * np.pi / n)
    dth = 2.0 * np.pi / n
    for ell in range(g):
        lo, hi = hyp.gaps[ell]
        mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
        lam = mid + hw * np.cos(th)
        others = [bb for bb in hyp.betas if bb not in (lo, hi)]
        rest = _w_real(lam, others, +1)
        # on the circuit dlam / (sheet * w) = -dtheta / (i rest): the local
        # pair i hw |sin| cancels dlam = -hw sin dtheta and the sheet sign
        base = hyp.abel(hi, +1)  # A at the circuit start (right edge)
        for jj in range(g):
            if jj == ell:
                continue
            fj = -np.polyval(hyp.omega_coeffs[jj][::-1], lam) / (1j * rest)
            fl = -np.polyval(hyp.omega_coeffs[ell][::-1], lam) / (1j * rest)
            # cumulative A_j along the circuit (trapezoid antiderivative)
            Aj = base[jj] + dth * np.concatenate(
                [[0.0], np.cumsum(0.5 * (fj[1:] + fj[:-1]))])
            K[jj] += (1.0 / (2j * np.pi)) * dth * np.sum(fl * Aj)
    return K


# ---------------------------------------------------------------------------
# theta function


def _lattice(g, radius):
    key = (g, radius)
    hit = _LATTICE_CACHE.get(key)
    if hit is None:
        axes = [np.arange(-radius, radius + 1)] * g
        mesh = np.meshgrid(*axes, indexing="ij")
        hit = np.stack([m.ravel() for m in mesh], axis=1)
        _LATTICE_CACHE[key] = hit
    return hit


def _theta_radius(z, tau):
    gamma = -np.linalg.eigvalsh(np.real(tau)).max()
    if gamma <= 0:
        raise CutoffExplosion("Re tau not negative definite")
    rz = np.abs(np.real(np.atleast_2d(z))).max()
    L = 60.0
    r = (rz + np.sqrt(rz * rz + 2.0 * gamma * L)) / gamma
    return int(np.ceil(r)) + 2


def theta_sums(z, tau, dirs=(), orders=(), radius=None):
    """Raw theta sums S = sum exp(<m,z> + <m,tau m>/2) with moment weights.

    ``z``: (g,) or (N, g).  ``orders``: tuples of per-direction powers for
    the direction vectors in ``dirs``.  Returns (theta, {order: S_order}),
    each shaped (N,), stabilized by factoring out the per-point max exponent
    (ratios of returned values are exact; absolute scales are not).
    """
    z2 = np.atleast_2d(np.asarray(z, dtype=complex))
    g = z2.shape[1]
    if radius is None:
        radius = _theta_radius(z2, tau)
    if radius > THETA_RADIUS_CAP:
        raise CutoffExplosion(f"theta cutoff {radius} exceeds cap")
    m = _lattice(g, radius)
    q = np.einsum("mi,ij,mj->m", m, np.asarray(tau, dtype=complex), m)
    expo = z2 @ m.T + 0.5 * q[None, :]
    shift = expo.real.max(axis=1, keepdims=True)
    ee = np.exp(expo - shift)
    theta = ee.sum(axis=1)
    # boundary-shell convergence check against the sum of moduli
    shell = np.abs(m).max(axis=1) == radius
    tail = np.abs(ee[:, shell]).sum(axis=1)
    denom = np.abs(ee).sum(axis=1)
    if np.any(tail > 1e-13 * denom):
        if radius + 5 > THETA_RADIUS_CAP:
            raise CutoffExplosion("theta tail not converged at cap")
        return theta_sums(z, tau, dirs, orders, radius=radius + 5)
    out = {}
    dots = [m @ np.asarray(d, dtype=complex) for d in dirs]
    for order in orders:
        wgt = np.ones(m.shape[0], dtype=complex)
        for d_i, p_i in enumerate(order):
            if p_i:
                wgt = wgt * dots[d_i] ** p_i
        out[order] = ee @ wgt
    return theta, out, shift[:, 0]


def theta(z, tau, radius=None):
    """theta(z, tau) itself (absolute scale restored)."""
    th, _, shift = theta_sums(z, tau, radius=radius)
    vals = th * np.exp(shift)
    return vals if np.ndim(z) > 1 else complex(vals[0])


def _cumulants(z, tau, dx, dt=None, need_t=False):
    """Log-theta directional cumulants up to x-order 5 (and one t-order)."""
    dirs = (dx,) if dt is None else (dx, dt)
    orders = [(p,) + ((0,) if dt is not None else ())
              for p in range(1, 6)]
    if need_t and dt is not None:
        orders += [(0, 1), (1, 1), (2, 1)]
    orders = [tuple(o) for o in orders]
    th, sums, _ = theta_sums(z, tau, dirs, orders)
    if np.any(np.abs(th) < 1e-280):
        raise ThetaZero("theta vanished along the trajectory")

    def M(p, q=0):
        key = (p,) if dt is None else (p, q)
        if p == 0 and q == 0:
            return np.ones_like(th)
        return sums[key] / th

    k = {}
    m1, m2, m3 = M(1), M(2), M(3)
    m4, m5 = M(4), M(5)
    k[(1, 0)] = m1
    k[(2, 0)] = m2 - m1 ** 2
    k[(3, 0)] = m3 - 3 * m2 * m1 + 2 * m1 ** 3
    k[(4, 0)] = m4 - 4 * m3 * m1 - 3 * m2 ** 2 + 12 * m2 * m1 ** 2 \
        - 6 * m1 ** 4
    k[(5, 0)] = m5 - 5 * m4 * m1 - 10 * m3 * m2 + 20 * m3 * m1 ** 2 \
        + 30 * m2 ** 2 * m1 - 60 * m2 * m1 ** 3 + 24 * m1 ** 5
    if need_t and dt is not None:
        m01, m11, m21 = M(0, 1), M(1, 1), M(2, 1)
        k[(0, 1)] = m01
        k[(1, 1)] = m11 - m1 * m01
        k[(2, 1)] = m21 - 2 * m11 * m1 - m2 * m01 + 2 * m1 ** 2 * m01
    return k


def phase_point(hyp):
    """The theta-argument base z0 = -A(P) - K + i pi 1 for the flows.

    The extra half-period vector i pi 1 accounts for the branch-point base
    point p0 = (0, .) of the Abel maps (classical treatments place p0 at
    infinity); with it the theta-line potential and the eigenfunction
    formula pair exactly (Hill residual at quadrature level) and the
    physical Dirichlet divisor of the generated potential matches the input.
    """
    return -hyp.abel_divisor() - hyp.K + 1j * np.pi * np.ones(hyp.genus)


def matveev_constant(hyp):
    """The additive constant pinned by the curve alone.

    c = sum of branch points - 2 sum_j (1/2 pi i) oint_{a_j} lam omega_j;
    with this c the theta-function potential carries lam_0 = 0 (verified by
    the spectral round-trip test) and solves the KdV equation exactly.
    """
    if getattr(hyp, "_matveev_c", None) is not None:
        return hyp._matveev_c
    total = float(hyp.betas.sum())
    for j in range(1, hyp.genus + 1):
        poly_j = np.concatenate([[0.0], hyp.omega_coeffs[j - 1]])
        total -= 2.0 * float((hyp.a_period(poly_j, j) / (2j * np.pi)).real)
    hyp._matveev_c = total
    return total


def its_matveev_u(hyp, x, t=0.0, c=None, derivatives=False):
    """u(x, t) = -2 d^2/dx^2 log theta(i Omega1 x + 4 i Omega3 t - A(P) - K) + c.

    ``derivatives=True`` additionally returns u_x, u_xxx, u_t for PDE
    residual checks (all by term-wise differentiation of the theta sums).
    """
    if c is None:
        c = matveev_constant(hyp)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    z0 = phase_point(hyp)
    dx = 1j * hyp.Omega1
    dt = 4j * hyp.Omega3
    Z = z0[None, :] + xs[:, None] * dx[None, :] + t * dt[None, :]
    k = _cumulants(Z, hyp.tau, dx, dt, need_t=derivatives)
    u = (-2.0 * k[(2, 0)] + c).real
    if not derivatives:
        return u if np.ndim(x) else float(u[0])
    out = {
        "u": u,
        "u_x": (-2.0 * k[(3, 0)]).real,
        "u_xx": (-2.0 * k[(4, 0)]).real,
        "u_xxx": (-2.0 * k[(5, 0)]).real,
        "u_t": (-2.0 * k[(2, 1)]).real,
        "c": c,
    }
    return out


def kdv_residual(hyp, x, t=0.0, c=None):
    """u_t - 6 u u_x + u_xxx on a grid, all derivatives analytic."""
    d = its_matveev_u(hyp, x, t, c=c, derivatives=True)
    return d["u_t"] - 6.0 * d["u"] * d["u_x"] + d["u_xxx"]


def baker_akhiezer(hyp, x, t, lam_p, sheet=+1, c=None):
    """The normalized simultaneous eigenfunction at curve point (lam_p, sheet).

    psi(0, 0, p) = 1 by construction; poles sit on the divisor.
    """
    for mu, sh in hyp.divisor:
        if abs(lam_p - mu) < 1e-9 * max(1.0, abs(mu)) and \
                (sh == 0 or sh == sheet):
            raise OnPoleDivisor(f"lam={lam_p} is on the pole divisor")
    A_p = hyp.abel(lam_p, sheet)
    I1 = hyp.abel_second_kind(lam_p, sheet, which=1)
    I3 = hyp.abel_second_kind(lam_p, sheet, which=3)
    AP = hyp.abel_divisor()
    z0 = phase_point(hyp)   # = -A(P) - K + i pi 1: the potential's phase
    W = 1j * hyp.Omega1 * x + 4j * hyp.Omega3 * t
    # the A-bearing thetas carry the paper's argument A - A(P) - K (poles
    # exactly on the divisor); the potential pair carries the phase point
    args = np.stack([A_p - AP - hyp.K + W,
                     z0,
                     A_p - AP - hyp.K,
                     z0 + W])
    th, _, shift = theta_sums(args, hyp.tau)
    vals = th * np.exp(shift)
    if min(abs(vals[2]), abs(vals[3])) < 1e-250:
        raise ThetaZero("theta denominator vanished")
    return np.exp(1j * (I1 * x + 4.0 * I3 * t)) * vals[0] * vals[1] \
        / (vals[2] * vals[3])


# ---------------------------------------------------------------------------
# periodicity certificates


def commensurability(vec, tol=1e-8, max_den=10 ** 6):
    """Smallest T > 0 with T vec_j in 2 pi Z for all j, within tolerance.

    Returns (T, integers) or (None, None): absence within the denominator
    bound is reported, never asserted.
    """
    vec = np.atleast_1d(np.asarray(vec, dtype=float))
    ref = np.abs(vec).max()
    if ref == 0:
        return None, None
    ratios = vec / vec[np.argmax(np.abs(vec))]
    block = 100000
    for start in range(1, max_den + 1, block):
        qs = np.arange(start, min(start + block, max_den + 1))
        vals = np.abs(qs[:, None] * ratios[None, :]
                      - np.round(qs[:, None] * ratios[None, :]))
        # absolute tolerance plus roundoff growth of q * ratio
        lim = np.maximum(tol, 1e-12 * qs)[:, None]
        ok = np.all(vals <= lim, axis=1)
        hits = np.nonzero(ok)[0]
        if hits.size:
            q = int(qs[hits[0]])
            T = 2.0 * np.pi * q / vec[np.argmax(np.abs(vec))]
            T = abs(T)
            ints = np.round(T * vec / (2.0 * np.pi)).astype(int)
            return T, ints
    return None, None


def periodicity_certificates(hyp, which="space", tol=1e-8, max_den=10 ** 6):
    """Commensurability search plus the scalar jump-function evaluator.

    For 'space' the phase vector is Omega1 and r(lam) = exp(i T1 int
    omega^(1)); for 'time' it is 4 Omega3 with r = exp(i T2 int 4 omega^(3)).
    The evaluator exposes side-aware boundary values on the axis.
    """
    if which == "space":
        vec = hyp.Omega1
        kind = 1
        scale = 1.0
    elif which == "time":
        vec = 4.0 * hyp.Omega3
        kind = 3
        scale = 4.0
    else:
        raise ValueError(which)
    T, ints = commensurability(vec, tol=tol, max_den=max_den)
    if T is None:
        return {"commensurate": False, "period": None, "integers": None,
                "r": None}

    def f_integral(lam, side=+1):
        """int_{p0}^{lam in Sigma_+} omega^{(kind)}, side-aware on the axis."""
        poly = hyp.omega1_coeffs if kind == 1 else hyp.omega3_coeffs
        lam_c = complex(lam)
        if abs(lam_c.imag) < 1e-12 * max(1.0, abs(lam_c)) and lam_c.real > 0:
            tot = 0.0 + 0.0j
            pts = list(hyp.betas) + [np.inf]
            lp = lam_c.real
            for a, b in zip(pts[:-1], pts[1:]):
                if lp >= b - 1e-14 * max(1.0, abs(b)) and np.isfinite(b):
                    lamq, wgt = hyp._gc_nodes(a, b)
                    others = [bb for bb in hyp.betas if bb not in (a, b)]
                    rest = _w_real(lamq, others, side)
                    pair = (sqrt_factor(lamq, a, side)
                            * sqrt_factor(lamq, b, side))
                    tot += wgt * np.sum(np.polyval(poly[::-1], lamq)
                                        * np.abs(pair) / (pair * rest)
                                        / np.abs(1.0))
                    # pair/|pair| keeps the exact local phase; weight uses GC
                elif lp > a:
                    n = hyp.n_nodes
                    xi, w2 = np.polynomial.legendre.leggauss(n)
                    xi = 0.5 * (xi + 1.0)
                    w2 = 0.5 * w2
                    lamq = a + (lp - a) * xi ** 2
                    others = [bb for bb in hyp.betas if bb != a]
                    rest = _w_real(lamq, others, side)
                    loc = sqrt_factor(lamq, a, side) / (np.sqrt(lp - a) * xi)
                    tot += 2.0 * np.sqrt(lp - a) * np.sum(
                        w2 * np.polyval(poly[::-1], lamq) / (loc * rest))
                    break
                else:
                    break
            return tot
        # complex target: radial path from 0, lam = zeta^2 direction
        n = hyp.n_nodes
        xi, w2 = np.polynomial.legendre.leggauss(n)
        xi = 0.5 * (xi + 1.0)
        w2 = 0.5 * w2
        lamq = lam_c * xi ** 2
        rest = _w_complex(lamq, [b for b in hyp.betas if b != 0.0])
        loc = sqrt_factor(lamq, 0.0) / (np.sqrt(lam_c) * xi)
        return 2.0 * np.sqrt(lam_c) * np.sum(
            w2 * np.polyval(poly[::-1], lamq) / (loc * rest))

    def r_eval(lam, side=+1):
        return np.exp(1j * T * scale * f_integral(lam, side))

    return {"commensurate": True, "period": float(T),
            "integers": ints.tolist(), "r": r_eval,
            "f_integral": f_integral}
