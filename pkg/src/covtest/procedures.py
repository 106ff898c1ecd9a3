"""Decision rules: fixed-threshold test, Monte Carlo calibration, adaptive test."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .params import AdaptiveGrid, WeightProfile
from .sampler import SeedSpec, sample_gaussian
from .statistic import (
    TestOutcome,
    as_sample,
    cross_products,
    dstat,
    dstat_from_products,
    standardize,
)


def worker_count() -> int:
    """Worker cap from ``COVTEST_THREADS`` (default: CPU count)."""
    raw = os.environ.get("COVTEST_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise DomainError(f"COVTEST_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def _replicate(profiles, n, chol, p, seed, b):
    x = sample_gaussian(chol, n, seed.child(b), p=p)
    cp = cross_products(x, max(pr.n_offsets for pr in profiles) + 1)
    return [dstat_from_products(cp, pr) for pr in profiles]


def simulate(
    profiles: Sequence[WeightProfile],
    n: int,
    B: int,
    seed: SeedSpec,
    chol: Optional[np.ndarray] = None,
    p: Optional[int] = None,
) -> np.ndarray:
    """Statistics of ``B`` replicates, one column per profile.

    Replicate ``b`` is drawn from ``seed.child(b)``, so all profiles see the
    same data (common random numbers) and the result does not depend on
    the number of workers.
    """
    if p is None:
        p = profiles[0].p if chol is None else np.asarray(chol).shape[0]
    workers = min(worker_count(), B)
    if workers <= 1:
        rows = [_replicate(profiles, n, chol, p, seed, b) for b in range(B)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda b: _replicate(profiles, n, chol, p, seed, b), range(B)))
    return np.array(rows, dtype=float).reshape(B, len(profiles))


def delta_test(x, prof: WeightProfile, t: float, meta: Optional[dict] = None) -> TestOutcome:
    """Reject iff the statistic is strictly above ``t``."""
    if not math.isfinite(t):
        raise DomainError("threshold must be finite")
    x = as_sample(x)
    n, p = x.shape
    value = dstat(x, prof)
    info = {"n": n, "p": p, "profile": _profile_id(prof)}
    if meta:
        info.update(meta)
    return TestOutcome(value, standardize(value, n, p), t, bool(value > t), info)


def _profile_id(prof: WeightProfile) -> str:
    if prof.alpha is None:
        return f"custom(p={prof.p},offsets={prof.n_offsets})"
    return f"alpha={prof.alpha:g},ell={prof.ell:g},phi={prof.phi:g},T={prof.band},p={prof.p}"


def order_index(level: float, B: int) -> int:
    """1-based rank ``ceil((1 - level) * B)`` of the calibrated threshold."""
    return int(math.ceil(round((1 - level) * B, 9)))


def empirical_threshold(null_stats, level: float) -> float:
    s = np.sort(np.asarray(null_stats, dtype=float))
    return float(s[order_index(level, s.size) - 1])


@dataclass(frozen=True)
class Calibration:
    level: float
    B: int
    threshold: float
    seed: SeedSpec
    quantiles: dict = field(default_factory=dict)
    null_stats: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "B": self.B,
            "threshold": self.threshold,
            "seed": {"master_seed": self.seed.master_seed, "labels": [str(l) for l in self.seed.labels]},
        }


def calibrate(prof: WeightProfile, n: int, level: float, B: int, seed: SeedSpec) -> Calibration:
    """Empirical ``(1 - level)`` threshold from ``B`` statistics under Sigma = I."""
    if B < 100:
        raise DomainError(f"B must be >= 100, got {B}")
    if not 0 < level < 0.5:
        raise DomainError(f"level must lie in (0, 1/2), got {level}")
    stats = simulate([prof], n, B, seed)[:, 0]
    return calibration_from_stats(stats, level, seed)


def calibration_from_stats(stats, level: float, seed: SeedSpec) -> Calibration:
    stats = np.asarray(stats, dtype=float)
    qs = {str(q): float(np.quantile(stats, q)) for q in (0.5, 0.9, 0.95, 0.99)}
    return Calibration(level, stats.size, empirical_threshold(stats, level), seed, qs, stats)


def adaptive_statistics(x, grid: AdaptiveGrid) -> np.ndarray:
    """Statistic of every grid profile, from one pass of cross-products."""
    x = as_sample(x)
    cp = cross_products(x, grid.max_offsets + 1)
    return np.array([dstat_from_products(cp, pt.profile) for pt in grid.points])


def adaptive_decision(values, grid: AdaptiveGrid) -> tuple:
    """Index of the largest ratio ``D_r / (C* t_r)`` and that ratio."""
    thr = grid.c_star * np.array([pt.t for pt in grid.points])
    ratios = np.asarray(values) / thr
    r = int(np.argmax(ratios))
    return r, float(ratios[r])


def adaptive_test(x, grid: AdaptiveGrid) -> TestOutcome:
    """Reject iff ``D_r > C* t_r`` for some grid point r."""
    x = as_sample(x)
    n, p = x.shape
    if (n, p) != (grid.n, grid.p):
        raise DomainError(f"grid built for (n, p)=({grid.n}, {grid.p}), sample is ({n}, {p})")
    values = adaptive_statistics(x, grid)
    r, ratio = adaptive_decision(values, grid)
    thr = grid.c_star * grid.points[r].t
    value = float(values[r])
    meta = {
        "n": n,
        "p": p,
        "argmax_r": r + 1,
        "alpha_r": grid.points[r].alpha,
        "margin": ratio - 1.0,
        "profile": _profile_id(grid.points[r].profile),
    }
    return TestOutcome(value, standardize(value, n, p), thr, bool(value > thr), meta)
