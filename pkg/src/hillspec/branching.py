"""Single branch utility for all multivalued evaluations.

Every square root and quartic root of an elementary factor ``lam - b`` in the
package goes through this module, using the branch of the argument with values
in [0, 2*pi).  With that convention ``sqrt_upper(lam)`` maps the cut plane onto
the closed upper half plane and is positive on the upper side of the cut
``[b, +inf)``; boundary values on the cut from above/below are available in
closed form, so real-axis evaluations never need an imaginary offset.
"""

import numpy as np

_TWO_PI = 2.0 * np.pi


def arg02(z):
    """Argument of ``z`` in [0, 2*pi)."""
    a = np.angle(z)
    return np.where(a < 0.0, a + _TWO_PI, a)


def root_upper(z, k):
    """k-th root ``z**(1/k)`` with arg in [0, 2*pi); cut along [0, +inf)."""
    z = np.asarray(z, dtype=complex)
    return np.abs(z) ** (1.0 / k) * np.exp(1j * arg02(z) / k)


def sqrt_upper(z):
    """Square root with values in the closed upper half plane."""
    return root_upper(z, 2)


def quartic_upper(z):
    """Quartic root with arg in [0, pi/2]."""
    return root_upper(z, 4)


def root_factor(lam, b, k, side=None):
    """Value of ``(lam - b)**(1/k)`` in the [0, 2*pi) branch.

    ``side=+1`` / ``side=-1`` selects the boundary value from above/below the
    cut for real ``lam > b``; it is ignored where the factor is continuous.
    Vectorized over ``lam``.
    """
    lam = np.asarray(lam, dtype=complex)
    if side is None:
        return root_upper(lam - b, k)
    x = lam.real
    out = np.empty(lam.shape, dtype=complex)
    below = x < b
    # continuous across (-inf, b): arg -> pi from both sides
    out[below] = (b - x[below]) ** (1.0 / k) * np.exp(1j * np.pi / k)
    on_cut = ~below
    r = np.zeros_like(x)
    r[on_cut] = (x[on_cut] - b) ** (1.0 / k)
    phase = 1.0 if side > 0 else np.exp(1j * _TWO_PI / k)
    out[on_cut] = r[on_cut] * phase
    return out


def sqrt_factor(lam, b, side=None):
    """Boundary-aware ``sqrt(lam - b)`` in the [0, 2*pi) branch."""
    return root_factor(lam, b, 2, side)


def quartic_factor(lam, b, side=None):
    """Boundary-aware ``(lam - b)**(1/4)`` in the [0, 2*pi) branch."""
    return root_factor(lam, b, 4, side)


def sqrt_lambda(lam, side=None):
    """The global ``sqrt(lam)`` used in all phases: values in the closed UHP.

    On the positive real axis the upper boundary value is ``+sqrt(lam)`` and
    the lower one is ``-sqrt(lam)``.
    """
    return sqrt_factor(lam, 0.0, side)
