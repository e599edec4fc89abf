"""Real periodic potentials represented by a finite Fourier series.

Sampled input is lifted to its trigonometric interpolant once, so every
potential evaluates by Fourier synthesis and is exactly periodic.  File format
(JSON)::

    {"period": T, "fourier": [[k, re, im], ...]}
    {"period": T, "samples": [u_0, ..., u_{M-1}]}   # uniform grid from x=0

Coefficients are for exp(2*pi*i*k*x/T); reality requires c_{-k} = conj(c_k).
"""

import json

import numpy as np


class PeriodicPotential:
    """Immutable real periodic potential u(x) with period T."""

    def __init__(self, period, fourier_coeffs):
        """``fourier_coeffs``: dict {k: complex} or array c_{-K}..c_K."""
        if period <= 0:
            raise ValueError("period must be positive")
        self.period = float(period)
        if isinstance(fourier_coeffs, dict):
            kmax = max((abs(int(k)) for k in fourier_coeffs), default=0)
            c = np.zeros(2 * kmax + 1, dtype=complex)
            for k, v in fourier_coeffs.items():
                c[int(k) + kmax] = v
        else:
            c = np.asarray(fourier_coeffs, dtype=complex)
            if len(c) % 2 != 1:
                raise ValueError("coefficient array must have odd length (k=-K..K)")
            kmax = len(c) // 2
        # enforce exact reality: average c_k with conj(c_{-k})
        sym = 0.5 * (c + np.conj(c[::-1]))
        herm_defect = np.abs(c - sym).max() if len(c) else 0.0
        if herm_defect > 1e-8 * max(1.0, np.abs(c).max()):
            raise ValueError("fourier coefficients violate c_{-k} = conj(c_k)")
        self._c = sym
        self._kmax = kmax
        self._k = np.arange(-kmax, kmax + 1)
        self._monodromy_cache = {}

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, period):
        return cls(period, {0: 0.0})

    @classmethod
    def constant(cls, period, value):
        return cls(period, {0: value})

    @classmethod
    def cosine(cls, period, pairs):
        """Potential sum_j 2*q_j*cos(2*pi*k_j*x/T) from ``pairs`` {k: q}."""
        coeffs = {0: pairs.get(0, 0.0)}
        for k, q in pairs.items():
            if k == 0:
                continue
            coeffs[k] = q
            coeffs[-k] = np.conj(q)
        return cls(period, coeffs)

    @classmethod
    def from_samples(cls, period, samples):
        """Trigonometric interpolant of uniform samples over one period."""
        samples = np.asarray(samples, dtype=float)
        m = len(samples)
        chat = np.fft.fft(samples) / m
        kmax = (m - 1) // 2
        coeffs = {}
        for k in range(-kmax, kmax + 1):
            coeffs[k] = chat[k % m]
        return cls(period, coeffs)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        period = data["period"]
        if "fourier" in data:
            coeffs = {int(k): re + 1j * im for k, re, im in data["fourier"]}
            return cls(period, coeffs)
        if "samples" in data:
            return cls.from_samples(period, data["samples"])
        raise ValueError("potential file needs 'fourier' or 'samples'")

    def to_json(self, path):
        rows = [[int(k), float(c.real), float(c.imag)]
                for k, c in zip(self._k, self._c)]
        with open(path, "w") as fh:
            json.dump({"schema": "hillspec-potential-1", "period": self.period,
                       "fourier": rows}, fh, sort_keys=True)

    # -- evaluation ---------------------------------------------------------

    @property
    def fourier_coeffs(self):
        """Array c_{-K}..c_K for exp(2*pi*i*k*x/T)."""
        return self._c.copy()

    @property
    def kmax(self):
        return self._kmax

    @property
    def mean(self):
        """Mean value c_0 = Q/T."""
        return float(self._c[self._kmax].real)

    @property
    def Q(self):
        """Integral of u over one period."""
        return self.period * self.mean

    def __call__(self, x):
        """u(x) by Fourier synthesis; vectorized, exactly periodic."""
        x = np.asarray(x, dtype=float)
        phase = np.exp(2j * np.pi / self.period * np.multiply.outer(self._k, x))
        vals = np.tensordot(self._c, phase, axes=(0, 0))
        return vals.real if vals.ndim else float(vals.real)

    def derivative(self, x):
        """u'(x) by term-wise differentiation."""
        x = np.asarray(x, dtype=float)
        ikw = 2j * np.pi / self.period * self._k
        phase = np.exp(2j * np.pi / self.period * np.multiply.outer(self._k, x))
        vals = np.tensordot(self._c * ikw, phase, axes=(0, 0))
        return vals.real if vals.ndim else float(vals.real)

    def integral(self, x):
        """int_0^x u(t) dt in closed form from the Fourier series."""
        x = np.asarray(x, dtype=float)
        km = self._kmax
        out = np.full(x.shape, self._c[km].real) * x if x.ndim else \
            self._c[km].real * x
        for k in self._k:
            if k == 0:
                continue
            w = 2j * np.pi * k / self.period
            term = self._c[k + km] * (np.exp(w * x) - 1.0) / w
            out = out + term.real
        return out if x.ndim else float(out)

    def shifted(self, c):
        """New potential u(x) - c (used for the lambda_0 normalization)."""
        coeffs = dict(zip(self._k, self._c))
        coeffs[0] = coeffs.get(0, 0.0) - c
        return PeriodicPotential(self.period, coeffs)

    def samples(self, m):
        """m uniform samples over [0, T)."""
        return self(np.arange(m) * (self.period / m))

    def cache_key(self):
        return (self.period, self._c.tobytes())

    def __repr__(self):
        return (f"PeriodicPotential(T={self.period:.6g}, kmax={self._kmax}, "
                f"mean={self.mean:.6g})")
