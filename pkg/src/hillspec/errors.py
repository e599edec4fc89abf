"""Exception types shared across the package."""


class HillspecError(Exception):
    """Base class for all package errors."""


class IntegratorFailure(HillspecError):
    """Adaptive ODE integration could not meet its tolerance."""


class OnSpectrumError(HillspecError):
    """Evaluation requested inside a band without specifying a side."""


class NearDirichletPole(HillspecError):
    """Bloch solution evaluated too close to a Dirichlet pole.

    Carries which column (``'+'`` or ``'-'``) is singular.
    """

    def __init__(self, msg, column=None):
        super().__init__(msg)
        self.column = column


class PathCrossesSpectrum(HillspecError):
    """Requested integration path crosses the positive real axis interiorly."""


class RootBracketFailure(HillspecError):
    """Eigenvalue bracketing failed; carries the diagnostic interval."""

    def __init__(self, msg, interval=None):
        super().__init__(msg)
        self.interval = interval


class BranchPointError(HillspecError):
    """Evaluation within the collar of a branch point with no side given."""


class OnEdgeError(HillspecError):
    """Jump matrix requested at a band edge."""


class EdgeChartRequired(HillspecError):
    """Dirichlet point too close to a gap edge for the interior chart."""


class ChartSwitchFailure(HillspecError):
    """Angle-chart integration of the Dirichlet flow stalled."""


class NearPole(HillspecError):
    """Evaluation too close to a pole of alpha/e."""


class ResolutionLoss(HillspecError):
    """Spectral tail of the pseudospectral field exceeded its threshold."""


class ExtrapolationDiverged(HillspecError):
    """Successive Richardson stages disagree beyond tolerance."""


class LinearSolveSingular(HillspecError):
    """Period normalization system is singular."""


class DegenerateCurve(HillspecError):
    """Adjacent branch points coincide within tolerance."""


class CutoffExplosion(HillspecError):
    """Theta summation cutoff exceeded its limit (ill-conditioned tau)."""


class ThetaZero(HillspecError):
    """Theta-function trajectory hit the theta divisor within tolerance."""


class OnPoleDivisor(HillspecError):
    """Baker-Akhiezer function evaluated at a point of its pole divisor."""


class ConfigError(HillspecError):
    """Invalid run configuration."""
