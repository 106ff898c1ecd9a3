import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covtest.errors import DimensionMismatch, DomainError, SizeGuard
from covtest.models import ExtremalPrior, build, cholesky
from covtest.params import WeightProfile, profile
from covtest.procedures import simulate
from covtest.sampler import SeedSpec
from covtest.statistic import (
    cross_products,
    dstat,
    dstat_naive,
    dstat_unweighted,
    standardize,
    unweighted_profile,
)


def test_cross_products_direct_sums():
    x = np.array([[1.0, 2, 3], [4, 5, 6]])
    cp = cross_products(x, 3)
    assert cp.w_sums[0][0] == 1 * 2 + 4 * 5
    assert cp.q_sums[0][0] == 1 * 4 + 16 * 25
    assert cp.w_sums[1][0] == 1 * 3 + 4 * 6
    assert cp.n_offsets == 2


def test_cross_products_offsets_beyond_p_absent():
    cp = cross_products(np.ones((3, 4)), 50)
    assert cp.n_offsets == 3
    assert [w.size for w in cp.w_sums] == [3, 2, 1]


def test_cross_products_zero_row(rng):
    x = rng.standard_normal((4, 6))
    x0 = np.vstack([x, np.zeros(6)])
    a, b = cross_products(x, 5), cross_products(x0, 5)
    for u, v in zip(a.w_sums + a.q_sums, b.w_sums + b.q_sums):
        np.testing.assert_array_equal(u, v)


def test_dstat_ones():
    w = 0.7
    pr = WeightProfile.from_weights([w], 2)
    x = np.ones((2, 2))
    assert dstat(x, pr) == pytest.approx(w / 2)
    assert dstat_naive(x, pr) == pytest.approx(w / 2)


def test_dstat_single_nonzero_per_row(rng):
    x = np.zeros((5, 8))
    x[np.arange(5), rng.integers(0, 8, 5)] = rng.standard_normal(5)
    pr = profile(1, 1, 0.3, 8)
    assert dstat(x, pr) == 0.0
    assert dstat_naive(np.zeros((3, 8)), pr) == 0.0


def test_dstat_matches_naive(rng):
    pr = profile(1, 1, 0.2, 8)
    x = rng.standard_normal((5, 8))
    assert dstat(x, pr) == pytest.approx(dstat_naive(x, pr), rel=1e-12)


@given(
    n=st.integers(2, 6),
    p=st.integers(2, 12),
    seed=st.integers(0, 2**32 - 1),
    data=st.data(),
)
@settings(max_examples=200, deadline=None)
def test_oracle_equivalence_property(n, p, seed, data):
    g = np.random.default_rng(seed)
    k = data.draw(st.integers(1, p - 1))
    pr = WeightProfile.from_weights(g.uniform(0.01, 2.0, k), p)
    x = g.standard_normal((n, p)) * g.uniform(0.2, 3.0)
    assert dstat(x, pr) == pytest.approx(dstat_naive(x, pr), rel=1e-12)


def test_naive_size_guard():
    pr = WeightProfile.from_weights([1.0], 3)
    with pytest.raises(SizeGuard):
        dstat_naive(np.ones((51, 3)), pr)


def test_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        dstat(rng.standard_normal((4, 9)), profile(1, 1, 0.2, 8))


def test_invalid_sample():
    pr = WeightProfile.from_weights([1.0], 3)
    with pytest.raises(DomainError):
        dstat(np.ones((1, 3)), pr)
    x = np.ones((3, 3))
    x[0, 0] = np.nan
    with pytest.raises(DomainError):
        dstat(x, pr)


def test_unweighted_small():
    assert dstat_unweighted(np.ones((2, 2))) == pytest.approx(0.5)


def test_unweighted_equals_full_band_profile(rng):
    x = rng.standard_normal((7, 15))
    pr = WeightProfile.from_weights(np.full(14, 1 / math.sqrt(14)), 15)
    assert dstat_unweighted(x) == pytest.approx(dstat(x, pr), rel=1e-12)
    assert unweighted_profile(15).normalization() == pytest.approx(0.5, rel=1e-14)


def test_linearity_in_weights(rng):
    pr = profile(1, 1, 0.1, 60)
    x = rng.standard_normal((9, 60))
    for c in (0.5, 3.0, 17.25):
        assert dstat(x, pr.scaled(c)) == pytest.approx(c * dstat(x, pr), rel=1e-14)


def test_permutation_symmetry(rng):
    pr = profile(1, 1, 0.1, 40)
    x = rng.standard_normal((12, 40))
    a = dstat(x, pr)
    for _ in range(5):
        assert dstat(x[rng.permutation(12)], pr) == a


def test_standardize():
    assert standardize(8.2243e-3, 20, 100) == pytest.approx(1.64486, rel=1e-12)
    assert standardize(0.0, 7, 9) == 0.0


@pytest.mark.slow
def test_null_mean_and_variance():
    n, p, B = 20, 100, 10_000
    pr = profile(1, 1, 0.1, p)
    vals = simulate([pr], n, B, SeedSpec(11, ("stat-null",)))[:, 0]
    se = vals.std(ddof=1) / math.sqrt(B)
    assert abs(vals.mean()) < 4 * se
    assert vals.var(ddof=1) * n * (n - 1) * p == pytest.approx(1.0, rel=0.05)


@pytest.mark.slow
def test_unweighted_null_mean():
    from covtest.procedures import simulate as sim

    vals = sim([unweighted_profile(30)], 10, 10_000, SeedSpec(12, ("unw",)))[:, 0]
    assert abs(vals.mean()) < 3 * vals.std(ddof=1) / 100


@pytest.mark.slow
def test_alternative_mean_extremal_prior():
    n, p, B, phi = 20, 200, 4000, 0.1
    pr = profile(1, 1, phi, p)
    sigma = build(ExtremalPrior(1, 1, phi), p)
    W = pr.weight_matrix()
    target = np.sum(np.triu(W * sigma**2, 1)) / p
    vals = simulate([pr], n, B, SeedSpec(13, ("alt-mean",)), chol=cholesky(sigma))[:, 0]
    se = vals.std(ddof=1) / math.sqrt(B)
    assert abs(vals.mean() - target) <= 0.05 * target + 4 * se
