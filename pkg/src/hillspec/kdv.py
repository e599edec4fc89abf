"""KdV dynamics of the spectral data.

Contains the reference pseudospectral solver for u_t - 6 u u_x + u_xxx = 0
(integrating-factor RK4 in Fourier space), the Dubrovin flow of the Dirichlet
divisor in a global angle chart per open gap (which removes the square-root
degeneracy at both gap edges at once), the Lax deformation factors
alpha^{+-}(t, lam) and e^{+-}(t, lam) with their moving pole peeled off in
closed form, and the time-dependent RHP assembly.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import ode_core, spectrum
from .branching import sqrt_lambda, sqrt_factor
from .errors import NearPole, ResolutionLoss
from .potential import PeriodicPotential

TAIL_THRESHOLD = 1e-10
CHART_EDGE_FRACTION = 1e-3


@dataclass
class KdVField:
    """One snapshot of the field on a uniform grid over [0, T)."""

    t: float
    period: float
    samples: np.ndarray

    @property
    def mean(self):
        return float(np.mean(self.samples))

    def potential(self, clip=1e-13):
        c = np.fft.fft(self.samples) / len(self.samples)
        kmax = (len(self.samples) - 1) // 2
        scale = np.abs(c).max()
        coeffs = {}
        for k in range(-kmax, kmax + 1):
            v = c[k % len(self.samples)]
            if abs(v) > clip * scale or k == 0:
                coeffs[k] = v
        return PeriodicPotential(self.period, coeffs)


class KdVSolver:
    """Integrating-factor RK4 pseudospectral solver with dense output.

    Stores the slow variable vhat = exp(-i k^3 t) uhat at every step together
    with its time derivative, so fields at arbitrary t come from cubic
    Hermite interpolation with the stiff linear phase reattached exactly.
    """

    def __init__(self, p, n_grid=256, dealias=True):
        self.period = p.period
        self.n = n_grid
        x = np.arange(n_grid) * (p.period / n_grid)
        self.x = x
        u0 = p(x)
        self.k = 2.0 * np.pi * np.fft.fftfreq(n_grid, d=p.period / n_grid)
        self.ik3 = 1j * self.k ** 3
        self.mask = np.ones(n_grid)
        if dealias:
            kc = n_grid // 3
            idx = np.abs(np.fft.fftfreq(n_grid, d=1.0 / n_grid)) > kc
            self.mask[idx] = 0.0
        self.times = [0.0]
        uhat0 = np.fft.fft(u0)
        self.vhats = [uhat0.copy()]
        self.dvhats = [self._nonlinear(uhat0, 0.0)]
        self._pot_cache = {}

    def _nonlinear(self, uhat, t):
        """d vhat / dt = exp(-i k^3 t) * 3 i k fft(u^2)."""
        u = np.fft.ifft(uhat).real
        nl = 3j * self.k * np.fft.fft(u * u) * self.mask
        return np.exp(-self.ik3 * t) * nl

    def run(self, t_end, dt=5e-4):
        steps = max(1, int(np.ceil(abs(t_end) / dt)))
        dt = t_end / steps
        t = self.times[-1]
        uhat = self.vhats[-1] * np.exp(self.ik3 * t)
        E1 = np.exp(self.ik3 * dt / 2.0)
        E2 = E1 * E1
        for _ in range(steps):
            def NL(uh):
                u = np.fft.ifft(uh).real
                return 3j * self.k * np.fft.fft(u * u) * self.mask

            a = dt * NL(uhat)
            b = dt * NL(E1 * (uhat + a / 2.0))
            c = dt * NL(E1 * uhat + b / 2.0)
            d = dt * NL(E2 * uhat + E1 * c)
            uhat = E2 * uhat + (E2 * a + 2.0 * E1 * (b + c) + d) / 6.0
            t += dt
            self.times.append(t)
            self.vhats.append(uhat * np.exp(-self.ik3 * t))
            self.dvhats.append(self._nonlinear(uhat, t))
        tail = np.abs(uhat[self.n // 3:self.n - self.n // 3])
        if tail.size and tail.max() > TAIL_THRESHOLD * np.abs(uhat).max():
            raise ResolutionLoss(
                f"spectral tail {tail.max():.2e} exceeds threshold")
        self._t_arr = np.array(self.times)
        self._v_arr = np.array(self.vhats)
        self._dv_arr = np.array(self.dvhats)
        return self

    def uhat_at(self, t):
        """Hermite interpolation of vhat, linear phase reattached."""
        ts = self._t_arr
        if t <= ts[0]:
            v = self._v_arr[0]
        elif t >= ts[-1]:
            v = self._v_arr[-1]
        else:
            i = int(np.searchsorted(ts, t) - 1)
            h = ts[i + 1] - ts[i]
            s = (t - ts[i]) / h
            h00 = (1 + 2 * s) * (1 - s) ** 2
            h10 = s * (1 - s) ** 2
            h01 = s * s * (3 - 2 * s)
            h11 = s * s * (s - 1)
            v = (h00 * self._v_arr[i] + h * h10 * self._dv_arr[i]
                 + h01 * self._v_arr[i + 1] + h * h11 * self._dv_arr[i + 1])
        return v * np.exp(self.ik3 * t)

    def field(self, t):
        u = np.fft.ifft(self.uhat_at(t)).real
        return KdVField(t=t, period=self.period, samples=u)

    def potential_at(self, t, clip=1e-13):
        key = round(float(t), 14)
        hit = self._pot_cache.get(key)
        if hit is None:
            hit = self.field(t).potential(clip)
            self._pot_cache[key] = hit
        return hit

    def u0_ux0(self, t):
        """(u(0, t), u_x(0, t)) from the spectral representation."""
        uhat = self.uhat_at(t)
        u0 = np.sum(uhat).real / self.n
        ux0 = np.sum(1j * self.k * uhat).real / self.n
        return u0, ux0

    def mass_momentum(self, t):
        u = self.field(t).samples
        dx = self.period / self.n
        return float(u.sum() * dx), float((u * u).sum() * dx)


def reference_kdv(u0: KdVField, t_end, steps=None):
    """Evolve a field snapshot to t_end; returns the final KdVField."""
    p = u0.potential()
    solver = KdVSolver(p, n_grid=len(u0.samples))
    dt = abs(t_end) / steps if steps else 5e-4
    solver.run(t_end, dt=dt)
    return solver.field(t_end)


# ---------------------------------------------------------------------------
# Dubrovin flow


def dubrovin_rhs(p_t, rhp, mu_vec, sigma_vec=None, u00=None):
    """Velocities of the Dirichlet points for the potential at this instant.

    Uses the monodromy form -(4 mu + 2u(0,t)) (y2'(T,mu) - y1(T,mu)) /
    y2_lambda(T,mu), which equals -sigma (4 mu + 2 u(0,t)) (rho - 1/rho) /
    y2_lambda without branch bookkeeping.  ``sigma_vec`` is accepted for
    interface parity and cross-checks.
    """
    mu_vec = np.atleast_1d(np.asarray(mu_vec, dtype=float))
    if u00 is None:
        u00 = float(p_t(0.0))
    y, dy = ode_core.monodromy_batch(p_t, mu_vec + 0j, with_dlambda=True)
    d21 = (y[:, 1, 1] - y[:, 0, 0]).real
    y2lam = dy[:, 0, 1].real
    return -(4.0 * mu_vec + 2.0 * u00) * d21 / y2lam


@dataclass
class DirichletTrajectory:
    """Dirichlet divisor motion under the KdV flow, one angle per open gap.

    mu_n = mid + halfwidth cos(theta_n); sigma_n = sign(sin(theta_n)), set to
    0 within the edge collar.  ``chart`` records 'edge-chart' whenever the
    point is within the chart-switch collar of an edge.
    """

    times: np.ndarray
    theta: np.ndarray            # (nt, n_gaps), unwrapped
    gaps: list                   # (n_k, lo, hi) per open gap
    solver: KdVSolver
    rhp: object
    _dense: object = None

    def _mu_sigma_from_theta(self, th):
        mu = np.empty(len(self.gaps))
        sig = np.zeros(len(self.gaps), dtype=int)
        chart = []
        for i, (n_k, lo, hi) in enumerate(self.gaps):
            mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
            mu[i] = mid + hw * np.cos(th[i])
            s = np.sin(th[i])
            edge_dist = min(mu[i] - lo, hi - mu[i])
            if edge_dist < CHART_EDGE_FRACTION * (hi - lo):
                chart.append("edge-chart")
            else:
                chart.append("interior")
            if edge_dist > spectrum.DEGENERACY_TOL * max(1.0, abs(mu[i])):
                sig[i] = 1 if s > 0 else -1
        return mu, sig, chart

    def theta_at(self, t):
        return self._dense(t) if self._dense is not None else None

    def mu_at(self, t):
        mu, _, _ = self._mu_sigma_from_theta(np.atleast_1d(self.theta_at(t)))
        return mu

    def sigma_at(self, t):
        _, s, _ = self._mu_sigma_from_theta(np.atleast_1d(self.theta_at(t)))
        return s

    @property
    def mu(self):
        return np.array([self._mu_sigma_from_theta(th)[0]
                         for th in self.theta])

    @property
    def sigma(self):
        return np.array([self._mu_sigma_from_theta(th)[1]
                         for th in self.theta])

    @property
    def chart(self):
        return [self._mu_sigma_from_theta(th)[2] for th in self.theta]

    def flip_count(self, i=0):
        """Number of sigma sign flips (edge touches) of gap i over the run."""
        th = self.theta[:, i]
        return int(np.floor(th.max() / np.pi) - np.ceil(th.min() / np.pi)) + 1


def evolve_dirichlet(p0, sdata, t_span, rhp=None, n_grid=256, dt_field=5e-4,
                     rtol=1e-10, atol=1e-12):
    """Integrate the Dubrovin system coupled to the reference field.

    ``p0`` must be the shifted potential described by ``sdata``.  Returns a
    DirichletTrajectory whose angle variables are regular through edge
    touches; gap confinement is structural.
    """
    from .products import RHPData

    if rhp is None:
        rhp = RHPData(sdata, potential=p0)
    t0, t1 = t_span
    solver = KdVSolver(p0, n_grid=n_grid).run(t1, dt=dt_field)
    gaps = [(n_k, lo, hi) for (n_k, lo, hi, _, _) in rhp.gaps]
    if not gaps:
        times = np.array([t0, t1])
        return DirichletTrajectory(times=times, theta=np.zeros((2, 0)),
                                   gaps=gaps, solver=solver, rhp=rhp,
                                   _dense=lambda t: np.zeros(0))
    # rest factor |sqrt(Delta^2-4)| / (hw |sin theta|), smooth through edges
    rest_sign = np.empty(len(gaps))
    theta0 = np.empty(len(gaps))
    for i, (n_k, lo, hi) in enumerate(gaps):
        mu_k, sig_k = rhp.gaps[i][3], rhp.gaps[i][4]
        mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
        cth = np.clip((mu_k - mid) / hw, -1.0, 1.0)
        th = np.arccos(cth)
        theta0[i] = th if sig_k >= 0 else 2.0 * np.pi - th
        rest_sign[i] = 1.0

    def rest_mag(i, mu):
        n_k, lo, hi = gaps[i]
        val = rhp.sqrt_disc_rest(np.array([mu + 0j]), n_k)[0]
        loc = (-(rhp.T / (n_k * np.pi)) ** 2
               * sqrt_factor(np.array([mu + 0j]), lo)
               * sqrt_factor(np.array([mu + 0j]), hi))[0]
        # |local pair| = hw |sin theta| ... times the unit phase of the pair
        return np.abs(val * loc) / max(np.sqrt(abs((mu - lo) * (hi - mu))),
                                       1e-300)

    def theta_rhs(t, th):
        mu = np.array([0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(th[i])
                       for i, (_, lo, hi) in enumerate(gaps)])
        p_t = solver.potential_at(t)
        u00, _ = solver.u0_ux0(t)
        y, dy = ode_core.monodromy_batch(p_t, mu + 0j, with_dlambda=True)
        y2lam = dy[:, 0, 1].real
        d21 = (y[:, 1, 1] - y[:, 0, 0]).real
        out = np.empty(len(gaps))
        for i in range(len(gaps)):
            sth = np.sin(th[i])
            hw = 0.5 * (gaps[i][2] - gaps[i][1])
            if abs(sth) > 0.05:
                # interior: integrator-accurate monodromy velocity
                out[i] = -(4.0 * mu[i] + 2.0 * u00) * d21[i] \
                    / (y2lam[i] * hw * (-sth))
            else:
                # edge collar: peeled product form (regular through edges)
                w = rest_sign[i] * rest_mag(i, mu[i])
                out[i] = -(4.0 * mu[i] + 2.0 * u00) * w / y2lam[i]
        return out

    # calibrate the collar-form sign against the monodromy velocity at the
    # gap midpoints (theta = pi/2), once per gap
    mu_probe = np.array([0.5 * (lo + hi) for (_, lo, hi) in gaps])
    u00_0 = solver.u0_ux0(t0)[0]
    y0_, dy0_ = ode_core.monodromy_batch(p0, mu_probe + 0j, with_dlambda=True)
    d21_0 = (y0_[:, 1, 1] - y0_[:, 0, 0]).real
    y2lam_0 = dy0_[:, 0, 1].real
    for i in range(len(gaps)):
        hw = 0.5 * (gaps[i][2] - gaps[i][1])
        thdot_interior = (4.0 * mu_probe[i] + 2.0 * u00_0) * d21_0[i] \
            / (y2lam_0[i] * hw)
        thdot_collar = -(4.0 * mu_probe[i] + 2.0 * u00_0) \
            * rest_mag(i, mu_probe[i]) / y2lam_0[i]
        if thdot_interior * thdot_collar < 0:
            rest_sign[i] = -1.0
    sol = solve_ivp(theta_rhs, (t0, t1), theta0, method="RK45",
                    rtol=rtol, atol=atol, dense_output=True,
                    max_step=(t1 - t0) / 20 if t1 > t0 else np.inf)
    times = sol.t
    theta = sol.y.T
    return DirichletTrajectory(times=times, theta=theta, gaps=gaps,
                               solver=solver, rhp=rhp,
                               _dense=lambda t: sol.sol(t))


# ---------------------------------------------------------------------------
# Lax deformation factors


def alpha_pm(p_t, rhp, lam, sign, u00=None, ux00=None, side=None):
    """alpha^{+-}(t, lam) = (4 lam + 2u(0,t)) psi_x^{+-}(0) - u_x(0,t).

    For |lam| beyond the phase-factoring threshold the Bloch logarithmic
    derivative comes from the scaled Floquet quantities, so the evaluation
    stays bounded along rays to |lam| ~ 1e6 and beyond.
    """
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    if u00 is None:
        u00 = float(p_t(0.0))
    if ux00 is None:
        ux00 = float(p_t.derivative(0.0))
    if np.abs(lam_arr).max() > ode_core.LARGE_LAMBDA:
        z = sqrt_lambda(lam_arr, side)
        sc = ode_core.floquet_scalars(p_t, z)
        m, n, D, S, e2 = sc["m"], sc["n"], sc["D"], sc["S"], sc["E2"]
        if sign > 0:
            c = 1j * z * (4.0 * e2 / (D + S) - (m + n)) / (n - m)
        else:
            c = 1j * z * (D + S - m - n) / (n - m)
        out = (4.0 * lam_arr + 2.0 * u00) * c - ux00
        return out if np.ndim(lam) else complex(out[0])
    from .rhp_verify import multiplier_pieces

    pieces = multiplier_pieces(p_t, rhp, lam_arr, side)
    rho = pieces["rho"] if sign > 0 else pieces["rho_inv"]
    num = rho - pieces["y1T"]
    out = (4.0 * lam_arr + 2.0 * u00) * num / pieces["y2T"] - ux00
    return out if np.ndim(lam) else complex(out[0])


def e_pm(traj, rhp, t, lam, sign, side=None, nodes=40, pole_collar=1e-9):
    """e^{+-}(t, lam) = exp(int_0^t alpha^{+-}) with moving poles peeled off.

    Over each time window where gap n carries signature ``sign``, the factor
    (lam - mu_n(t_b)) / (lam - mu_n(t_a)) is split off in closed form and the
    remaining integrand is regular; quadrature is Gauss-Legendre on the
    sigma-phase segments.
    """
    lam_c = complex(lam)
    solver = traj.solver
    # build sigma phase boundaries per gap from the angle trajectory
    segs = [(0.0, float(t))]
    cuts = {0.0, float(t)}
    for i in range(len(traj.gaps)):
        th0 = traj.theta[0, i]
        th_t = traj.theta_at(t)[i] if traj._dense else th0
        k_lo = int(np.ceil(min(th0, th_t) / np.pi))
        k_hi = int(np.floor(max(th0, th_t) / np.pi))
        for k in range(k_lo, k_hi + 1):
            # crossing time of theta = k pi by bisection on dense output
            target = k * np.pi
            a, b = 0.0, float(t)
            fa = traj.theta_at(a)[i] - target
            for _ in range(60):
                m = 0.5 * (a + b)
                fm = traj.theta_at(m)[i] - target
                if fa * fm > 0:
                    a, fa = m, fm
                else:
                    b = m
            cuts.add(0.5 * (a + b))
    cuts = sorted(cuts)
    glx, glw = np.polynomial.legendre.leggauss(nodes)
    log_total = 0.0 + 0.0j
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a < 1e-14:
            continue
        mid_t = 0.5 * (a + b)
        mu_mid = traj.mu_at(mid_t)
        sig_mid = traj.sigma_at(mid_t)
        active = [i for i in range(len(traj.gaps)) if sig_mid[i] == sign]
        for i in active:
            if min(abs(lam_c - traj.mu_at(tv)[i])
                   for tv in (a, mid_t, b)) < pole_collar:
                raise NearPole(f"lam={lam_c:.8g} on the mu_{i} trajectory")
        tpts = 0.5 * (a + b) + 0.5 * (b - a) * glx
        vals = np.empty(nodes, dtype=complex)
        for j, tv in enumerate(tpts):
            p_t = solver.potential_at(tv)
            u00, ux00 = solver.u0_ux0(tv)
            al = alpha_pm(p_t, rhp, lam_c, sign, u00=u00, ux00=ux00,
                          side=side)
            mu_t = traj.mu_at(tv)
            # subtract -mu'/(lam - mu) for each active pole
            if active:
                mudot = _mu_velocities(solver, rhp, tv, traj, active)
                for idx, i in enumerate(active):
                    al = al + mudot[idx] / (lam_c - mu_t[i])
            vals[j] = al
        log_total += 0.5 * (b - a) * np.sum(glw * vals)
        for i in active:
            mu_a, mu_b = traj.mu_at(a)[i], traj.mu_at(b)[i]
            log_total += np.log((lam_c - mu_b) / (lam_c - mu_a))
    return np.exp(log_total)


def _mu_velocities(solver, rhp, t, traj, idx_list):
    p_t = solver.potential_at(t)
    u00, _ = solver.u0_ux0(t)
    mu_t = traj.mu_at(t)
    mus = np.array([mu_t[i] for i in idx_list])
    return dubrovin_rhs(p_t, rhp, mus, u00=u00)


def isospectrality_report(p0, t_list, n_gaps, n_grid=256, dt_field=5e-4):
    """Band-edge drift of the evolved field at each requested time."""
    base = spectrum.band_edges(p0, n_gaps)
    solver = KdVSolver(p0, n_grid=n_grid).run(max(t_list), dt=dt_field)
    rows = []
    for t in t_list:
        p_t = solver.potential_at(t)
        lam_t = spectrum.band_edges(p_t, n_gaps)
        rows.append({"t": float(t),
                     "max_drift": float(np.abs(lam_t - base).max())})
    return {"rows": rows,
            "max_drift": max(r["max_drift"] for r in rows),
            "solver": solver}


# ---------------------------------------------------------------------------
# time-dependent RHP


def assemble_Phi_kdv(p0_or_traj, rhp, x, t, lam, side=None, traj=None,
                     solver=None):
    """breve Phi(x, t, lam) = Psi(t) diag(e^-, e^+) B(0)
    e^{i sigma3 (sqrt(lam) x + 4 sqrt(lam)^3 t)}.

    ``p0_or_traj`` may be a DirichletTrajectory (preferred) or the initial
    shifted potential together with ``traj``.
    """
    if isinstance(p0_or_traj, DirichletTrajectory):
        traj = p0_or_traj
    if traj is None:
        raise ValueError("assemble_Phi_kdv needs a DirichletTrajectory")
    solver = solver or traj.solver
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    from .rhp_verify import consistent_pieces, multiplier_pieces

    p_t = solver.potential_at(t)
    pieces0 = consistent_pieces(solver.potential_at(0.0), rhp, lam_arr, side)
    pieces_t = multiplier_pieces(p_t, rhp, lam_arr, side)
    Yx, _ = ode_core.fundamental_matrix_batch(p_t, lam_arr, [x])
    z = sqrt_lambda(lam_arr, side)
    out = np.empty((lam_arr.size, 2, 2), dtype=complex)
    for i in range(lam_arr.size):
        lv = complex(lam_arr[i])
        em = e_pm(traj, rhp, t, lv, -1, side=side)
        ep = e_pm(traj, rhp, t, lv, +1, side=side)
        y1T, y2T = pieces_t["y1T"][i], pieces_t["y2T"][i]
        cm = (pieces_t["rho_inv"][i] - y1T) / y2T
        cp = (pieces_t["rho"][i] - y1T) / y2T
        y1, y2 = Yx[0, i, 0, 0], Yx[0, i, 0, 1]
        dy1, dy2 = Yx[0, i, 1, 0], Yx[0, i, 1, 1]
        phase = np.exp(1j * (z[i] * x + 4.0 * z[i] ** 3 * t))
        b11, b22 = pieces0["b11"][i], pieces0["b22"][i]
        out[i, 0, 0] = (y1 + cm * y2) * em * b11 * phase
        out[i, 1, 0] = (dy1 + cm * dy2) * em * b11 * phase
        out[i, 0, 1] = (y1 + cp * y2) * ep * b22 / phase
        out[i, 1, 1] = (dy1 + cp * dy2) * ep * b22 / phase
    return out if np.ndim(lam) else out[0]


def deformation_factor_row(solver, t, ray_lambdas, nodes=40):
    """g(lam) = e^-(t, lam) e^{4 i sqrt(lam)^3 t} on a ray off the spectrum.

    Computed as exp of the quadrature of alpha^- + 4 i sqrt(lam)^3, which is
    O(lam^{-1/2}); the scaled Floquet quantities keep every intermediate
    bounded however large |lam| gets.
    """
    lam = np.asarray(ray_lambdas, dtype=complex)
    z = sqrt_lambda(lam)
    if abs(t) < 1e-300:
        return np.ones_like(lam)
    if not hasattr(solver, "_g_cache"):
        solver._g_cache = {}
    key = (round(float(t), 14), lam.tobytes(), nodes)
    hit = solver._g_cache.get(key)
    if hit is not None:
        return hit.copy()
    glx, glw = np.polynomial.legendre.leggauss(nodes)
    tpts = 0.5 * t + 0.5 * t * glx
    acc = np.zeros_like(lam)
    for j, tv in enumerate(tpts):
        p_t = solver.potential_at(tv)
        u00, ux00 = solver.u0_ux0(tv)
        sc = ode_core.floquet_scalars(p_t, z)
        c_minus = 1j * z * (sc["D"] + sc["S"] - sc["m"] - sc["n"]) \
            / (sc["n"] - sc["m"])
        integrand = (4.0 * z ** 2 + 2.0 * u00) * c_minus - ux00 \
            + 4j * z ** 3
        acc = acc + glw[j] * integrand
    out = np.exp(0.5 * t * acc)
    solver._g_cache[key] = out.copy()
    return out


def reconstruct_kdv(traj, rhp, x, t, ray_lambdas=None, h=None, tol=1e-5):
    """u(x, t) = 2i d/dx lim sqrt(lam) (1 - b11(0)^{-1} breve-phi11).

    b11(0)^{-1} breve-phi11 = [psi^- e^{i sqrt(lam) x}](x; u(., t)) * g(lam)
    with the x-independent deformation factor g = e^- e^{4 i sqrt(lam)^3 t}.
    The central difference is taken before extrapolating, so g only enters
    multiplicatively.
    """
    from .rhp_verify import bloch_v_row, neville_limit

    solver = traj.solver
    p_t = solver.potential_at(t)
    T = p_t.period
    if ray_lambdas is None:
        ray_lambdas = -400.0 * 2.0 ** np.arange(8)
    if h is None:
        h = 1e-4 * T
    g = deformation_factor_row(solver, t, ray_lambdas)
    vals, z = bloch_v_row(p_t, ray_lambdas, [x - h, x + h])
    diff = 2j * (-z * g) * (vals[1] - vals[0]) / (2.0 * h)
    u_val = neville_limit(diff, 1.0 / z, tol, context=f"at (x,t)=({x},{t})")
    return float(u_val.real)
