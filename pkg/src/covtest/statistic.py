"""Weighted U-statistic for H0: Sigma = I and its baselines.

Notation: ``W[d][i] = sum_k X[k, i] X[k, i + d]`` and
``Q[d][i] = sum_k X[k, i]**2 X[k, i + d]**2``. Summing over ordered pairs
``k != l`` gives ``sum_i (W**2 - Q)``, so the statistic costs O(n p T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionMismatch, DomainError, SizeGuard
from .params import WeightProfile

NAIVE_MAX_N = 50
NAIVE_MAX_P = 100


def as_sample(x) -> np.ndarray:
    """Validate an ``n x p`` data matrix (rows are observations)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DomainError(f"sample must be 2-d, got shape {x.shape}")
    n, p = x.shape
    if n < 2 or p < 2:
        raise DomainError(f"sample needs n >= 2 and p >= 2, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("sample has non-finite entries")
    return x


@dataclass(frozen=True)
class BandedCrossProducts:
    """Cross-products for offsets ``d = 1..K``.

    ``w[d-1, i] = W_{i, i+d}`` and ``q[d-1, i] = Q_{i, i+d}``, zero-padded
    for ``i >= p - d``; ``w_sums`` / ``q_sums`` expose the unpadded rows.
    """

    band: int
    n: int
    p: int
    w: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)

    @property
    def n_offsets(self) -> int:
        return self.w.shape[0]

    @property
    def w_sums(self) -> tuple:
        return tuple(self.w[d - 1, : self.p - d] for d in range(1, self.n_offsets + 1))

    @property
    def q_sums(self) -> tuple:
        return tuple(self.q[d - 1, : self.p - d] for d in range(1, self.n_offsets + 1))

    def diagonal_terms(self) -> np.ndarray:
        """``sum_i (W**2 - Q)`` for each offset, i.e. the sum over k != l."""
        return np.sum(self.w * self.w - self.q, axis=1)


def _canonical_rows(x: np.ndarray) -> np.ndarray:
    # a fixed row order makes every sum over k independent of row permutations
    first = x[:, 0]
    order = np.argsort(first, kind="stable")
    if np.any(np.diff(first[order]) == 0):
        order = np.lexsort(x.T[::-1])
    return x[order]


def _shifted_products(a: np.ndarray, k: int) -> np.ndarray:
    n, p = a.shape
    padded = np.concatenate([a, np.zeros((n, k))], axis=1)
    win = sliding_window_view(padded, k + 1, axis=1)[:, :p, 1:]
    return np.einsum("ki,kid->di", a, win)


def cross_products(x, band: int) -> BandedCrossProducts:
    """W and Q sums for offsets ``1..min(band - 1, p - 1)``."""
    if band < 1:
        raise DomainError(f"band must be >= 1, got {band}")
    x = _canonical_rows(np.asarray(x, dtype=float))
    n, p = x.shape
    k = min(band - 1, p - 1)
    if k == 0:
        empty = np.zeros((0, p))
        return BandedCrossProducts(band, n, p, empty, empty)
    return BandedCrossProducts(band, n, p, _shifted_products(x, k), _shifted_products(x * x, k))


def _combine(terms: np.ndarray, w_diag: np.ndarray, n: int, p: int) -> float:
    k = min(terms.size, w_diag.size)
    return math.fsum(w_diag[:k] * terms[:k]) / (n * (n - 1) * p)


def dstat_from_products(cp: BandedCrossProducts, prof: WeightProfile) -> float:
    """Statistic from precomputed cross-products; ``cp`` must cover the profile's band."""
    if prof.p != cp.p:
        raise DimensionMismatch(f"profile built for p={prof.p}, sample has p={cp.p}")
    if cp.n_offsets < prof.n_offsets:
        raise DomainError("cross-products do not cover the profile band")
    return _combine(cp.diagonal_terms()[: prof.n_offsets], prof.w_diag, cp.n, cp.p)


def dstat(x, prof: WeightProfile) -> float:
    """Weighted U-statistic

    ``D = 1/(n(n-1)p) * sum_{k != l} sum_{i<j} w_ij X_ki X_kj X_li X_lj``.
    """
    x = as_sample(x)
    n, p = x.shape
    if prof.p != p:
        raise DimensionMismatch(f"profile built for p={prof.p}, sample has p={p}")
    cp = cross_products(x, prof.n_offsets + 1)
    return _combine(cp.diagonal_terms(), prof.w_diag, n, p)


def dstat_naive(x, prof: WeightProfile) -> float:
    """Literal quadruple sum over ``k != l`` and ``i < j``; brute-force oracle."""
    x = as_sample(x)
    n, p = x.shape
    if n > NAIVE_MAX_N or p > NAIVE_MAX_P:
        raise SizeGuard(f"naive evaluation limited to n <= {NAIVE_MAX_N}, p <= {NAIVE_MAX_P}")
    if prof.p != p:
        raise DimensionMismatch(f"profile built for p={prof.p}, sample has p={p}")
    wmat = prof.weight_matrix()
    rows = x.tolist()
    terms = []
    for k in range(n):
        xk = rows[k]
        for l in range(n):
            if k == l:
                continue
            xl = rows[l]
            for i in range(p):
                for j in range(i + 1, p):
                    w = wmat[i, j]
                    if w != 0.0:
                        terms.append(w * xk[i] * xk[j] * xl[i] * xl[j])
    return math.fsum(terms) / (n * (n - 1) * p)


def unweighted_profile(p: int) -> WeightProfile:
    """Constant weights ``1/sqrt(p - 1)`` on every off-diagonal."""
    return WeightProfile.from_weights(np.full(p - 1, 1 / math.sqrt(p - 1)), p)


def dstat_unweighted(x) -> float:
    """Baseline: the same U-statistic with constant weights on all off-diagonals,
    normalized so that ``(1/p) * sum_{i<j} w**2 = 1/2``."""
    x = as_sample(x)
    return dstat(x, unweighted_profile(x.shape[1]))


def standardize(value: float, n: int, p: int) -> float:
    """``n * sqrt(p) * value``; asymptotically N(0, 1) under the null."""
    return n * math.sqrt(p) * value


@dataclass(frozen=True)
class TestOutcome:
    value: float
    standardized: float
    threshold: float
    reject: bool
    meta: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class
