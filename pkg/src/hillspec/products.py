"""Canonical-product representations of the Floquet functions and the RHP data.

Everything the Riemann-Hilbert problem needs is built from the spectral data
alone: y2(T, lam), Delta -+ 2, sqrt(Delta^2 - 4), the fourth root, the
signature-split products f^+, f^-, f^0 and sqrt(f^0), the diagonal matrix B,
the Dirichlet counting function m, and the jump matrices (static, KdV, and
the constant-per-gap Xi variant).

Truncation scheme: factors up to ``n_max`` carry resolved data, factors up to
``N_trunc`` carry the Borg-corrected free surrogate mu_n = lam_{2n-1} =
lam_{2n} = (n pi / T)^2 + Q/T, and the remaining infinite tail is summed in
closed form against the shifted free potential (for which all products are
elementary).  Doubling N_trunc therefore only moves factors between the
explicit product and the closed form, so values are stable to roundoff.

Branch bookkeeping is factor-local: every sqrt / fourth root of an elementary
factor (lam - b) uses the branch with arg in [0, 2*pi), routed through
``branching``; boundary values on the positive axis are evaluated exactly via
``side=+1`` / ``side=-1``.
"""

import numpy as np

from .branching import root_factor, sqrt_lambda
from .errors import BranchPointError, OnEdgeError, OnSpectrumError

SIGMA3 = np.diag([1.0, -1.0])


def _collar(lam):
    return 1e-8 * np.maximum(1.0, np.abs(lam))


def _csinc(w, T):
    """sin(T sqrt(w)) / sqrt(w), entire in w."""
    w = np.asarray(w, dtype=complex)
    s = np.sqrt(w)
    small = np.abs(s) * T < 1e-6
    out = np.empty_like(w)
    ssmall = s[small] * T
    out[small] = T * (1.0 - ssmall ** 2 / 6.0 + ssmall ** 4 / 120.0)
    out[~small] = np.sin(T * s[~small]) / s[~small]
    return out


def _ccos(w, T):
    """cos(T sqrt(w)), entire in w."""
    return np.cos(T * np.sqrt(np.asarray(w, dtype=complex)))


class RHPData:
    """Spectral data extended with truncation bookkeeping for products.

    Parameters
    ----------
    sdata : SpectralData (shifted so lam_0 = 0)
    N_trunc : explicit factors kept; >= sdata.n_max
    tail_mode : 'free-tail' (closed-form completion) or 'none'
    potential : optional shifted potential; enables hybrid magnitude
        corrections in the verification layer (never used by the products
        themselves).
    """

    def __init__(self, sdata, N_trunc=200, tail_mode="free-tail",
                 potential=None):
        if N_trunc < sdata.n_max:
            raise ValueError("N_trunc must be >= resolved n_max")
        self.sdata = sdata
        self.N_trunc = int(N_trunc)
        self.tail_mode = tail_mode
        self.potential = potential
        T = sdata.T
        self.T = T
        self.c_free = sdata.Q / T
        n = np.arange(1, self.N_trunc + 1)
        nu = (n * np.pi / T) ** 2 + self.c_free
        self.full_mu = np.where(n <= sdata.n_max,
                                np.concatenate([sdata.mu,
                                                np.zeros(self.N_trunc - sdata.n_max)])[:self.N_trunc],
                                nu)
        lam_lo = np.where(n <= sdata.n_max,
                          np.concatenate([sdata.lam[1::2],
                                          np.zeros(self.N_trunc - sdata.n_max)])[:self.N_trunc],
                          nu)
        lam_hi = np.where(n <= sdata.n_max,
                          np.concatenate([sdata.lam[2::2],
                                          np.zeros(self.N_trunc - sdata.n_max)])[:self.N_trunc],
                          nu)
        self.full_lam_lo = lam_lo   # lam_{2n-1}
        self.full_lam_hi = lam_hi   # lam_{2n}
        self.nu = nu
        self.lam0 = 0.0
        widths = np.array([sdata.edges[2 * k] - sdata.edges[2 * k - 1]
                           for k in range(1, sdata.n_gaps + 1)])
        self.disc_radius = float(widths.max()) if widths.size else 0.0
        # per open gap: (n_k, lo, hi, mu, sigma)
        self.gaps = []
        for k in range(1, sdata.n_gaps + 1):
            n_k = sdata.gap_index[k - 1]
            mu_k, sig_k = sdata.gap_mu(k)
            lo, hi = sdata.gap_interval(k)
            self.gaps.append((n_k, lo, hi, mu_k, sig_k))

    # -- closed-form free tail ------------------------------------------

    def _tail_y2(self, lam):
        """prod_{n > N} (T^2/(n pi)^2)(nu_n - lam), via the free closed form."""
        lam = np.asarray(lam, dtype=complex)
        if self.tail_mode == "none":
            return np.ones_like(lam)
        T = self.T
        free = _csinc(lam - self.c_free, T) / T
        n = np.arange(1, self.N_trunc + 1)
        fac = 1.0 + (self.c_free - lam[..., None]) * (T / (n * np.pi)) ** 2
        return free / np.prod(fac, axis=-1)

    def _sqrt_tail(self, lam):
        t = self._tail_y2(lam)
        if np.any(t.real <= 0) and np.any(np.abs(np.angle(t)) > 0.5 * np.pi):
            raise BranchPointError("free tail left the principal half plane; "
                                   "raise N_trunc")
        return np.sqrt(t)

    # -- Hadamard reconstructions (true normalization) -------------------

    def y2(self, lam):
        """y2(T, lam) = T prod (T/(n pi))^2 (mu_n - lam) * tail."""
        lam = np.asarray(lam, dtype=complex)
        n = np.arange(1, self.N_trunc + 1)
        fac = (self.full_mu - lam[..., None]) * (self.T / (n * np.pi)) ** 2
        return self.T * np.prod(fac, axis=-1) * self._tail_y2(lam)

    def delta_m2(self, lam):
        """Delta(lam) - 2 (periodic product, even-index pairs)."""
        lam = np.asarray(lam, dtype=complex)
        T = self.T
        n = np.arange(1, self.N_trunc + 1)
        even = n % 2 == 0
        fac = ((self.full_lam_hi[even] - lam[..., None])
               * (self.full_lam_lo[even] - lam[..., None])
               * (T / (n[even] * np.pi)) ** 4)
        main = T ** 2 * (self.lam0 - lam) * np.prod(fac, axis=-1)
        if self.tail_mode == "none":
            return main
        free = 2.0 * _ccos(lam - self.c_free, T) - 2.0
        facf = ((self.nu[even] - lam[..., None]) ** 2
                * (T / (n[even] * np.pi)) ** 4)
        tail = free / (T ** 2 * (self.c_free - lam) * np.prod(facf, axis=-1))
        return main * tail

    def delta_p2(self, lam):
        """Delta(lam) + 2 (antiperiodic product, odd-index pairs)."""
        lam = np.asarray(lam, dtype=complex)
        T = self.T
        n = np.arange(1, self.N_trunc + 1)
        odd = n % 2 == 1
        fac = ((self.full_lam_hi[odd] - lam[..., None])
               * (self.full_lam_lo[odd] - lam[..., None])
               * (T / (n[odd] * np.pi)) ** 4)
        main = 4.0 * np.prod(fac, axis=-1)
        if self.tail_mode == "none":
            return main
        free = 2.0 * _ccos(lam - self.c_free, T) + 2.0
        facf = ((self.nu[odd] - lam[..., None]) ** 2
                * (T / (n[odd] * np.pi)) ** 4)
        tail = free / (4.0 * np.prod(facf, axis=-1))
        return main * tail

    def delta(self, lam):
        """Delta(lam) from the two products."""
        return 0.5 * (self.delta_m2(lam) + self.delta_p2(lam))

    def sqrt_disc(self, lam, side=None):
        """sqrt(Delta^2 - 4): holomorphic off the bands, positive below 0."""
        lam = np.asarray(lam, dtype=complex)
        T = self.T
        n = np.arange(1, self.N_trunc + 1)
        out = -2j * T * root_factor(lam, self.lam0, 2, side)
        for i in range(self.N_trunc):
            out = out * (-(T / (n[i] * np.pi)) ** 2
                         * root_factor(lam, self.full_lam_lo[i], 2, side)
                         * root_factor(lam, self.full_lam_hi[i], 2, side))
        return out * self._tail_y2(lam)

    def sqrt_disc_rest(self, lam, skip_n):
        """sqrt_disc with the factor pair of gap index ``skip_n`` removed.

        sqrt_disc = rest * sqrt(lam - lam_lo) * sqrt(lam - lam_hi) *
        (-T^2/(skip_n pi)^2); used for stable in-gap evaluation where the
        local square-root vanishing is peeled off analytically.
        """
        lam = np.asarray(lam, dtype=complex)
        T = self.T
        n = np.arange(1, self.N_trunc + 1)
        out = -2j * T * root_factor(lam, self.lam0, 2, None)
        for i in range(self.N_trunc):
            if i + 1 == skip_n:
                continue
            out = out * (-(T / (n[i] * np.pi)) ** 2
                         * root_factor(lam, self.full_lam_lo[i], 2, None)
                         * root_factor(lam, self.full_lam_hi[i], 2, None))
        return out * self._tail_y2(lam)

    def quartic_disc(self, lam, side=None):
        """(Delta^2 - 4)^(1/4): square of it equals ``sqrt_disc`` exactly."""
        lam = np.asarray(lam, dtype=complex)
        if side is None and np.any(np.abs(lam.imag) < _collar(lam)):
            on_axis = np.abs(lam.imag) < _collar(lam)
            near = np.abs(lam.real[on_axis][..., None]
                          - np.concatenate([[self.lam0], self.full_lam_lo,
                                            self.full_lam_hi])) < _collar(lam.real[on_axis][..., None])
            if np.any(near):
                raise BranchPointError("lam within collar of a branch point; "
                                       "pass side=+1 or side=-1")
        T = self.T
        n = np.arange(1, self.N_trunc + 1)
        out = (np.sqrt(2.0 * T) * np.exp(-0.25j * np.pi)
               * root_factor(lam, self.lam0, 4, side))
        for i in range(self.N_trunc):
            out = out * (-1j * (T / (n[i] * np.pi))
                         * root_factor(lam, self.full_lam_hi[i], 4, side)
                         * root_factor(lam, self.full_lam_lo[i], 4, side))
        return out * self._sqrt_tail(lam)

    # -- signature-split products ----------------------------------------

    def f_pm(self, lam, sign):
        """f^+ or f^- (finite products over open gaps with that signature)."""
        lam = np.asarray(lam, dtype=complex)
        out = np.ones_like(lam)
        for (n_k, lo, hi, mu_k, sig_k) in self.gaps:
            if sig_k == sign:
                out = out * (self.T / (n_k * np.pi)) ** 2 * (mu_k - lam)
        return out

    def f_pm_deriv(self, lam, sign):
        """d/dlam of f^+ or f^- (finite product: sum over factors)."""
        lam = np.asarray(lam, dtype=complex)
        out = np.zeros_like(lam)
        for (n_k, lo, hi, mu_k, sig_k) in self.gaps:
            if sig_k != sign:
                continue
            term = -np.ones_like(lam) * (self.T / (n_k * np.pi)) ** 2
            for (n_j, lo2, hi2, mu_j, sig_j) in self.gaps:
                if sig_j == sign and n_j != n_k:
                    term = term * (self.T / (n_j * np.pi)) ** 2 * (mu_j - lam)
            out = out + term
        return out

    def gap_sqrt_sign(self, k):
        """Sign of the (real) sqrt(Delta^2-4) branch inside open gap k."""
        lo, hi = self.sdata.gap_interval(k)
        mid = 0.5 * (lo + hi)
        val = complex(np.atleast_1d(self.sqrt_disc(np.array([mid + 0j])))[0])
        return 1.0 if val.real >= 0 else -1.0

    def f_zero(self, lam):
        """f^0: product over sigma_n = 0 (includes all degenerate factors)."""
        lam = np.asarray(lam, dtype=complex)
        n = np.arange(1, self.N_trunc + 1)
        keep = np.ones(self.N_trunc, dtype=bool)
        for (n_k, lo, hi, mu_k, sig_k) in self.gaps:
            if sig_k != 0:
                keep[n_k - 1] = False
        fac = (self.full_mu[keep] - lam[..., None]) * (self.T / (n[keep] * np.pi)) ** 2
        return np.prod(fac, axis=-1) * self._tail_y2(lam)

    def f_functions(self, lam, which):
        if which == "plus":
            return self.f_pm(lam, +1)
        if which == "minus":
            return self.f_pm(lam, -1)
        if which == "zero":
            return self.f_zero(lam)
        raise ValueError(which)

    def sqrt_f0(self, lam, side=None):
        """sqrt(f^0) via the factor-local product; its square is f^0 exactly."""
        lam = np.asarray(lam, dtype=complex)
        out = self._sqrt_tail(lam).astype(complex)
        n = np.arange(1, self.N_trunc + 1)
        skip = set()
        for (n_k, lo, hi, mu_k, sig_k) in self.gaps:
            if sig_k != 0:
                skip.add(n_k)
        for i in range(self.N_trunc):
            if (i + 1) in skip:
                continue
            out = out * (-1j * (self.T / (n[i] * np.pi))
                         * root_factor(lam, self.full_mu[i], 2, side))
        return out

    # -- the B matrix ------------------------------------------------------

    def b_scalar(self, lam, side=None):
        """i sqrt(T) sqrt(f^0) / (Delta^2-4)^(1/4), in reduced finite form.

        Every degenerate sqrt factor cancels exactly against its fourth-root
        pair, so only the open gaps and the lam_0 factor survive; this
        realizes the degenerate-gap cancellation identically and shows B
        depends on the reduced spectral data alone.
        """
        lam = np.asarray(lam, dtype=complex)
        out = (np.exp(0.75j * np.pi) / np.sqrt(2.0)
               / root_factor(lam, self.lam0, 4, side))
        for (n_k, lo, hi, mu_k, sig_k) in self.gaps:
            q4 = (root_factor(lam, lo, 4, side)
                  * root_factor(lam, hi, 4, side))
            if sig_k == 0:
                out = out * root_factor(lam, mu_k, 2, side) / q4
            else:
                out = out * (1j * n_k * np.pi / self.T) / q4
        return out

    def b_matrix(self, lam, side=None):
        """Diagonal B(lam) = b_scalar * diag(f^-, f^+)."""
        s = self.b_scalar(lam, side)
        return s * self.f_pm(lam, -1), s * self.f_pm(lam, +1)

    # -- counting function and jump matrices -------------------------------

    def m_count(self, lam):
        """Number of edge-sitting Dirichlet points (sigma = 0) at or below lam
        among the open gaps."""
        lam = np.asarray(lam, dtype=float)
        out = np.zeros(lam.shape, dtype=int)
        for (n_k, lo, hi, mu_k, sig_k) in self.gaps:
            if sig_k == 0:
                out = out + (mu_k <= lam)
        return out if out.shape else int(out)

    def classify_point(self, lam):
        """('band'|'gap', k) for real lam > 0 off the edge set."""
        edges = self.sdata.edges
        lam = float(lam)
        if lam <= edges[0] or np.abs(lam - edges).min() < _collar(lam):
            raise OnEdgeError(f"lam={lam} is at or below a band edge")
        j = int(np.searchsorted(edges, lam)) - 1
        if j >= len(edges) - 1:
            return "band", self.sdata.n_gaps + 1
        if j % 2 == 0:
            return "band", j // 2 + 1
        return "gap", (j + 1) // 2

    def jump_V(self, x, lam, t=None, variant="static"):
        """The 2x2 jump matrix at real lam in a band or gap interior.

        ``variant``: 'static' (e^{2 i sigma3 sqrt(lam) x} on gaps), 'kdv'
        (adds 8 i sigma3 sqrt(lam)^3 t), or 'xi' (constant-per-gap winding
        e^{2 i n_k pi x / T sigma3}).
        """
        kind, k = self.classify_point(lam)
        m = self.m_count(np.array(lam))
        if kind == "band":
            fp = complex(self.f_pm(np.array(lam + 0j), +1))
            fm = complex(self.f_pm(np.array(lam + 0j), -1))
            sign = (-1.0) ** (k + int(m) - 1)
            return sign * np.array([[0.0, 1j * fp / fm],
                                    [1j * fm / fp, 0.0]])
        sign = (-1.0) ** (k + int(m))
        if variant == "xi":
            n_k = self.gaps[k - 1][0]
            phase = 2j * n_k * np.pi * x / self.T
        else:
            rt = np.sqrt(lam)
            phase = 2j * rt * x
            if variant == "kdv":
                if t is None:
                    raise ValueError("kdv jump needs t")
                phase = phase + 8j * rt ** 3 * t
        return sign * np.diag([np.exp(phase), np.exp(-phase)])

    # -- multiplier --------------------------------------------------------

    def rho(self, lam, side=None, delta=None, sqrt_disc=None):
        """(rho, 1/rho) from the quadratic formula with the product branch.

        ``delta``/``sqrt_disc`` may be supplied (e.g. ODE-accurate Delta);
        by default both come from the products.
        """
        lam = np.asarray(lam, dtype=complex)
        d = self.delta(lam) if delta is None else np.asarray(delta, complex)
        s = self.sqrt_disc(lam, side) if sqrt_disc is None else sqrt_disc
        return (d - s) / 2.0, (d + s) / 2.0


# module-level operation wrappers (the spec's operation surface)


def y2_product(rhp, lam):
    return rhp.y2(lam)


def delta_pm2_product(rhp, sign, lam):
    return rhp.delta_m2(lam) if sign < 0 else rhp.delta_p2(lam)


def f_functions(rhp, which, lam):
    return rhp.f_functions(np.asarray(lam, dtype=complex), which)


def sqrt_discriminant_product(rhp, lam, side=None):
    return rhp.sqrt_disc(lam, side)


def quartic_root_disc(rhp, lam, side=None):
    return rhp.quartic_disc(lam, side)


def B_matrix(rhp, lam, side=None):
    return rhp.b_matrix(lam, side)


def m_count(rhp, lam):
    return rhp.m_count(lam)


def jump_V(rhp, x, lam):
    return rhp.jump_V(x, lam)


def jump_V_kdv(rhp, x, t, lam):
    return rhp.jump_V(x, lam, t=t, variant="kdv")


def jump_V_xi(rhp, x, lam):
    return rhp.jump_V(x, lam, variant="xi")
