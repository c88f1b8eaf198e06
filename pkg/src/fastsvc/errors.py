"""Typed exceptions raised across the package.

Every numerical failure mode has its own class so callers (and the CLI)
can distinguish bad input from estimation breakdown.
"""


class FastSvcError(Exception):
    """Base class for all package errors."""


# -- geometry ---------------------------------------------------------------

class AllPointsCoincident(FastSvcError):
    """Every pairwise distance is zero; the kernel range would degenerate."""


class InvalidKnotCount(FastSvcError):
    """Requested knot count outside [1, N]."""


class NonPositiveRange(FastSvcError):
    """Kernel range must be strictly positive."""


# -- eigenbasis -------------------------------------------------------------

class SizeGuardExceeded(FastSvcError):
    """Dense O(N^2)/O(N^3) path refused for this sample size."""


class DegenerateKernel(FastSvcError):
    """Centered kernel has no positive eigenvalues."""


class SingularCorrection(FastSvcError):
    """Knot eigenvalue correction (lambda + 1) not invertible."""


class MissingKnots(FastSvcError):
    """Operation needs a knot-based (Nystrom) basis."""


class ConstantVector(FastSvcError):
    """Vector has (numerically) zero centered sum of squares."""


# -- compression ------------------------------------------------------------

class DimensionMismatch(FastSvcError):
    """Array shapes are inconsistent."""


class NonFiniteInput(FastSvcError):
    """Input contains NaN or infinity."""


# -- likelihood -------------------------------------------------------------

class NonPositiveEigenvalue(FastSvcError):
    """Shrinkage scaling needs strictly positive eigenvalues."""


class SingularP(FastSvcError):
    """Mixed-model coefficient matrix numerically singular (collinearity
    or shrinkage-ratio overflow)."""


class PerfectFit(FastSvcError):
    """Residual term is zero; the profiled likelihood is undefined."""


class NegativeResidualNorm(FastSvcError):
    """Compressed residual norm evaluated below -tolerance (catastrophic
    cancellation)."""


# -- sequential estimator ---------------------------------------------------

class SingularBlock(FastSvcError):
    """Off-target block system numerically singular during cache build."""


class SingularInnerMatrix(FastSvcError):
    """Target-dependent inner matrix not factorizable."""


# -- model api --------------------------------------------------------------

class InsufficientData(FastSvcError):
    """Need more rows than fixed-effect columns."""


# -- gwr --------------------------------------------------------------------

class LocalSingularity(FastSvcError):
    """A local weighted normal matrix is numerically singular."""

    def __init__(self, site: int, message: str | None = None):
        self.site = site
        super().__init__(message or f"local normal matrix singular at site {site}")


class NoValidBandwidth(FastSvcError):
    """Every candidate bandwidth failed."""


# -- simulation -------------------------------------------------------------

class ShapeMismatch(FastSvcError):
    """Metric inputs must have identical shapes."""
