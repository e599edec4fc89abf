"""Spectral theory of periodic Hill operators, KdV flow, and finite-gap machinery.

The package is organized along the computational pipeline:

- ``potential``:   periodic potentials (Fourier/sample representations, file I/O)
- ``ode_core``:    Hill's equation integrators (fundamental matrix, scaled forms)
- ``spectrum``:    band edges, Dirichlet eigenvalues, signatures, spectral data
- ``products``:    truncated canonical products, B matrix, jump matrices
- ``floquet``:     discriminant, multiplier, Bloch solutions, asymptotic checks
- ``rhp_verify``:  assembly and numerical verification of the matrix RHP
- ``kdv``:         Dubrovin dynamics, alpha/e deformation factors, reference solver
- ``finite_gap``:  hyperelliptic periods, theta functions, Its-Matveev potentials
- ``cli``:         the ``hillspec`` command line front end
"""

__version__ = "0.1.0"

from . import errors  # noqa: F401
