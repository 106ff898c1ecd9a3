"""Closed-form quantities of the weighted test: rate constants, optimal
banded weights, separation rates, theoretical thresholds, adaptive grid.

Weights follow ``w_d = lam / (2 b) * (1 - (d / T)**(2 alpha))``. The adaptive
construction is sometimes written with ``lam / b``; the two differ by a
constant factor, which exact renormalization (the default) removes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional

import numpy as np

from .errors import DegenerateBand, DomainError

# Relative nudge applied before flooring the band so that values that are an
# integer up to rounding are not pushed one below.
_FLOOR_NUDGE = 1e-12


class BandClampWarning(UserWarning):
    """The optimal band T is not smaller than the dimension p."""


def normal_quantile(prob: float) -> float:
    """Standard normal quantile z with Phi(z) = prob."""
    if not 0.0 < prob < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {prob}")
    return NormalDist().inv_cdf(prob)


def _check_alpha_ell(alpha, ell):
    if not (np.isfinite(alpha) and alpha > 0.5):
        raise DomainError(f"alpha must be > 1/2, got {alpha}")
    if not (np.isfinite(ell) and ell > 0):
        raise DomainError(f"ell must be > 0, got {ell}")


@dataclass(frozen=True)
class RateConstants:
    alpha: float
    ell: float
    c_T: float
    c_lambda: float
    c_rate: float


def constants(alpha: float, ell: float) -> RateConstants:
    """Band, lambda and rate constants for smoothness ``alpha`` and radius ``ell``."""
    _check_alpha_ell(alpha, ell)
    base = (4 * alpha + 1) * ell
    c_T = base ** (1 / (2 * alpha))
    c_lambda = (2 * alpha + 1) / (2 * alpha) * base ** (-1 / (2 * alpha))
    c_rate = (2 * alpha + 1) * (4 * alpha + 1) ** (-1 - 1 / (2 * alpha)) * ell ** (-1 / (2 * alpha))
    return RateConstants(float(alpha), float(ell), c_T, c_lambda, c_rate)


def band_width(alpha: float, ell: float, phi: float) -> int:
    """Unclamped optimal band ``T = floor(c_T * phi**(-1/alpha))``."""
    if not (np.isfinite(phi) and phi > 0):
        raise DomainError(f"phi must be > 0, got {phi}")
    c = constants(alpha, ell)
    return int(math.floor(c.c_T * phi ** (-1 / alpha) * (1 + _FLOOR_NUDGE)))


def lambda_(alpha: float, ell: float, phi: float) -> float:
    return constants(alpha, ell).c_lambda * phi ** ((2 * alpha + 1) / alpha)


def b_phi(alpha: float, ell: float, phi: float) -> float:
    """Least mean of the statistic over the alternative set at radius ``phi``."""
    return math.sqrt(constants(alpha, ell).c_rate) * phi ** (2 + 1 / (2 * alpha))


def normalization_sum(w_diag, p: int) -> float:
    """``(1/p) * sum_{i<j} w_ij**2`` for a Toeplitz band with diagonals ``w_diag``."""
    w = np.asarray(w_diag, dtype=float)
    d = np.arange(1, w.size + 1)
    keep = d < p
    return float(np.sum((p - d[keep]) * w[keep] ** 2) / p)


@dataclass(frozen=True)
class WeightProfile:
    """Banded diagonal weights ``w_diag[d-1]`` on offsets ``d = 1..len(w_diag)``.

    ``band`` is the theoretical T; offsets ``d >= band`` carry zero weight.
    When ``clamped`` is set, T was at least p and only the ``p - 1``
    existing offsets are kept.
    """

    alpha: Optional[float]
    ell: Optional[float]
    phi: Optional[float]
    p: int
    band: int
    lam: Optional[float]
    b_phi: Optional[float]
    w_diag: np.ndarray = field(repr=False)
    renormalized: bool = False
    clamped: bool = False

    def __post_init__(self):
        w = np.array(self.w_diag, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise DomainError("w_diag must be a nonempty 1-d sequence")
        if w.size > self.p - 1:
            raise DomainError(f"{w.size} diagonals do not fit in dimension {self.p}")
        if not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w_diag", w)

    @classmethod
    def from_weights(cls, w_diag, p: int) -> "WeightProfile":
        """Profile with arbitrary user-supplied diagonal weights."""
        w = np.asarray(w_diag, dtype=float)
        return cls(None, None, None, int(p), w.size + 1, None, None, w)

    @property
    def n_offsets(self) -> int:
        return self.w_diag.size

    def scaled(self, factor: float) -> "WeightProfile":
        from dataclasses import replace

        return replace(self, w_diag=self.w_diag * factor)

    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric p x p weight matrix (zero diagonal)."""
        idx = np.arange(self.p)
        d = np.abs(idx[:, None] - idx[None, :])
        full = np.concatenate([[0.0], self.w_diag, np.zeros(self.p)])
        return full[d]

    def normalization(self) -> float:
        return normalization_sum(self.w_diag, self.p)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "ell": self.ell,
            "phi": self.phi,
            "p": self.p,
            "T": self.band,
            "lambda": self.lam,
            "b": self.b_phi,
            "w_diag": self.w_diag.tolist(),
            "renormalized": self.renormalized,
        }


def profile(alpha: float, ell: float, phi: float, p: int, renormalize: bool = True) -> WeightProfile:
    """Optimal weight profile for the alternative radius ``phi``.

    Parameters
    ----------
    alpha, ell : float
        Smoothness exponent (> 1/2) and ellipsoid radius (> 0).
    phi : float
        Separation radius.
    p : int
        Dimension the weights are applied to (>= 3).
    renormalize : bool
        Rescale all weights by one factor so that
        ``(1/p) * sum_{i<j} w_ij**2 == 1/2`` holds exactly for this ``p``.

    Raises
    ------
    DegenerateBand
        If ``T < 2``.
    """
    if p < 3:
        raise DomainError(f"p must be >= 3, got {p}")
    T = band_width(alpha, ell, phi)
    if T < 2:
        raise DegenerateBand(f"band T={T} < 2 for phi={phi}: no off-diagonal weight")
    clamped = T >= p
    if clamped:
        warnings.warn(f"band T={T} >= p={p}; weights truncated to p-1 offsets", BandClampWarning, stacklevel=2)
    lam = lambda_(alpha, ell, phi)
    b = b_phi(alpha, ell, phi)
    d = np.arange(1, min(T - 1, p - 1) + 1)
    w = lam / (2 * b) * (1 - (d / T) ** (2 * alpha))
    if renormalize:
        w = w * math.sqrt(0.5 / normalization_sum(w, p))
    return WeightProfile(float(alpha), float(ell), float(phi), int(p), T, lam, b, w, bool(renormalize), clamped)


def separation_rate(alpha: float, ell: float, n: int, p: int) -> float:
    """Sharp minimax separation radius ``(c_rate * n**2 * p)**(-alpha/(4 alpha + 1))``."""
    _check_alpha_ell(alpha, ell)
    if n < 2 or p < 2:
        raise DomainError("need n >= 2 and p >= 2")
    c = constants(alpha, ell).c_rate
    return (n * math.sqrt(p) * math.sqrt(c)) ** (-2 * alpha / (4 * alpha + 1))


@dataclass(frozen=True)
class Thresholds:
    t_w: float
    t_star: float


def theoretical_thresholds(prof: WeightProfile, n: int, level: float) -> Thresholds:
    """Asymptotic level-``level`` threshold and the total-error threshold b/2."""
    if n < 2:
        raise DomainError("n must be >= 2")
    t_w = normal_quantile(1 - level) / (n * math.sqrt(prof.p))
    t_star = prof.b_phi / 2 if prof.b_phi is not None else float("nan")
    return Thresholds(t_w, t_star)


def default_c_star(alpha_lo: float, alpha_hi: float) -> float:
    """Sufficient threshold multiplier ``2 / c(alpha_lo, alpha_hi)``."""
    c = (2 * alpha_lo + 1) / (2 * alpha_hi * (4 * alpha_hi + 1) ** (1 / (2 * alpha_lo)))
    return 2 / c


@dataclass(frozen=True)
class GridPoint:
    alpha: float
    psi: float
    profile: WeightProfile
    t: float


@dataclass(frozen=True)
class AdaptiveGrid:
    alpha_lo: float
    alpha_hi: float
    ell: float
    n: int
    p: int
    grid_size: int
    rho: float
    c_star: float
    points: tuple

    @property
    def max_offsets(self) -> int:
        return max(pt.profile.n_offsets for pt in self.points)


def adaptive_psi(alpha: float, n: int, p: int) -> float:
    """Adaptive radius ``(rho / (n sqrt p))**(2 alpha / (4 alpha + 1))``."""
    scale = n * math.sqrt(p)
    rho = math.sqrt(math.log(math.log(scale)))
    return (rho / scale) ** (2 * alpha / (4 * alpha + 1))


def adaptive_grid(
    alpha_lo: float,
    alpha_hi: float,
    ell: float,
    n: int,
    p: int,
    c_star: Optional[float] = None,
) -> AdaptiveGrid:
    """Regular grid of ``ceil(ln(n sqrt p))`` smoothness values with their profiles
    and thresholds ``t_r = c_lambda(alpha_r) * rho / (n sqrt p)``."""
    if not 1 < alpha_lo < alpha_hi:
        raise DomainError(f"need 1 < alpha_lo < alpha_hi, got [{alpha_lo}, {alpha_hi}]")
    scale = n * math.sqrt(p)
    if scale <= math.e:
        raise DomainError(f"ln ln(n sqrt p) <= 0 for n={n}, p={p}")
    if c_star is None:
        c_star = default_c_star(alpha_lo, alpha_hi)
    if not c_star > 0:
        raise DomainError("c_star must be > 0")
    N = math.ceil(math.log(scale))
    rho = math.sqrt(math.log(math.log(scale)))
    points = []
    for r in range(1, N + 1):
        a = alpha_lo + (alpha_hi - alpha_lo) * r / N
        psi = (rho / scale) ** (2 * a / (4 * a + 1))
        prof = profile(a, ell, psi, p, renormalize=True)
        t = constants(a, ell).c_lambda * rho / scale
        points.append(GridPoint(a, psi, prof, t))
    return AdaptiveGrid(alpha_lo, alpha_hi, ell, n, p, N, rho, float(c_star), tuple(points))
