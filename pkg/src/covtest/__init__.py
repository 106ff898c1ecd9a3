"""Sharp-minimax weighted U-statistic test of H0: Sigma = I for banded,
polynomially decaying covariance alternatives."""

__version__ = "0.1.0"

from .errors import (
    CovtestError,
    DegenerateBand,
    DimensionMismatch,
    DomainError,
    NotCorrelation,
    NotPositiveDefinite,
    SizeGuard,
)
from .params import (
    AdaptiveGrid,
    RateConstants,
    WeightProfile,
    adaptive_grid,
    constants,
    profile,
    separation_rate,
    theoretical_thresholds,
)
from .statistic import TestOutcome, cross_products, dstat, dstat_naive, dstat_unweighted, standardize
from .models import (
    ExtremalPrior,
    Explicit,
    Identity,
    PowerDecay,
    Tridiagonal,
    build,
    cholesky,
    class_report,
    inverse_test_radius,
    whiten,
)
from .sampler import SeedSpec, sample_gaussian
from .procedures import Calibration, adaptive_test, calibrate, delta_test
