import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtri

from covtest.errors import DegenerateBand, DomainError
from covtest.params import (
    BandClampWarning,
    adaptive_grid,
    adaptive_psi,
    b_phi,
    constants,
    default_c_star,
    normal_quantile,
    normalization_sum,
    profile,
    separation_rate,
    theoretical_thresholds,
)

# Reference values evaluated with mpmath at 30 digits.
CONSTANTS_REF = {
    (1.0, 1.0): (2.2360679774997897, 0.6708203932499369, 0.2683281572999748),
    (2.0, 1.0): (1.7320508075688773, 0.7216878364870322, 0.3207501495497921),
}


@pytest.mark.parametrize("key", list(CONSTANTS_REF))
def test_constants_reference(key):
    c = constants(*key)
    assert (c.c_T, c.c_lambda, c.c_rate) == pytest.approx(CONSTANTS_REF[key], rel=1e-13)


def test_constants_identity_alpha_one():
    c = constants(1, 1)
    assert c.c_lambda * c.c_T == pytest.approx(1.5, rel=1e-15)


@given(st.floats(0.51, 10), st.floats(0.01, 100))
def test_constants_identity_property(alpha, ell):
    c = constants(alpha, ell)
    assert c.c_lambda * c.c_T == pytest.approx((2 * alpha + 1) / (2 * alpha), rel=1e-12)
    assert c.c_T > 0 and c.c_lambda > 0 and c.c_rate > 0


@pytest.mark.parametrize("alpha,ell", [(0.5, 1), (0.2, 1), (1, 0), (1, -2)])
def test_constants_domain(alpha, ell):
    with pytest.raises(DomainError):
        constants(alpha, ell)


def test_profile_reference():
    pr = profile(1, 1, 0.1, 500, renormalize=False)
    assert pr.band == 22
    assert pr.lam == pytest.approx(6.70820393249937e-4, rel=1e-12)
    assert pr.b_phi == pytest.approx(1.63807251762544e-3, rel=1e-12)
    assert pr.n_offsets == 21


def test_profile_weight_ratio():
    pr = profile(1, 1, 0.1, 500)
    # (1 - (1/22)^2) / (1 - (21/22)^2) = 483/43
    assert pr.w_diag[0] / pr.w_diag[20] == pytest.approx(483 / 43, rel=1e-12)


def test_profile_degenerate_band():
    assert profile(1, 1, 0.9, 50).band == 2
    with pytest.raises(DegenerateBand):
        profile(1, 1, 2.0, 50)


def test_profile_clamped():
    with pytest.warns(BandClampWarning):
        pr = profile(1, 1, 0.05, 20)
    assert pr.clamped and pr.band == 44 and pr.n_offsets == 19


@given(
    st.floats(0.6, 5),
    st.floats(0.1, 10),
    st.floats(0.005, 0.5),
    st.integers(3, 400),
)
@settings(max_examples=200, deadline=None)
def test_profile_invariants(alpha, ell, phi, p):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BandClampWarning)
        try:
            pr = profile(alpha, ell, phi, p)
        except DegenerateBand:
            return
    w = pr.w_diag
    assert np.all(w > 0)
    assert np.all(np.diff(w) < 0)
    assert pr.normalization() == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("phi", [0.05, 0.02])
def test_unrenormalized_asymptotic_normalization(phi):
    T = profile(1, 1, phi, 10_000, renormalize=False).band
    pr = profile(1, 1, phi, 100 * T, renormalize=False)
    assert abs(pr.normalization() / 0.5 - 1) < 0.05


def test_boundary_identities():
    phi = 0.02
    T = profile(1, 1, phi, 10_000).band
    p = 100 * T
    pr = profile(1, 1, phi, p, renormalize=False)
    d = np.arange(1, T)
    sig2 = pr.lam * np.clip(1 - (d / T) ** 2, 0, None)
    energy = np.sum((p - d) * sig2) / p
    sobolev = np.sum((p - d) * sig2 * d**2) / p
    mean = np.sum((p - d) * pr.w_diag * sig2) / p
    assert energy == pytest.approx(phi**2, rel=0.05)
    assert sobolev == pytest.approx(1.0, rel=0.05)
    assert mean == pytest.approx(pr.b_phi, rel=0.05)


def test_separation_rate_reference():
    assert separation_rate(1, 1, 100, 200) == pytest.approx(0.07145962802870356, rel=1e-12)


def test_separation_rate_defining_identity():
    phit = separation_rate(1, 1, 100, 200)
    assert 100**2 * 200 * b_phi(1, 1, phit) ** 2 == pytest.approx(1.0, rel=1e-12)


def test_separation_rate_scaling():
    ratio = separation_rate(1, 1, 100, 3200) / separation_rate(1, 1, 100, 200)
    assert ratio == pytest.approx(16 ** (-1 / 5), rel=1e-12)


@given(st.floats(0.6, 5), st.integers(2, 10_000), st.integers(2, 10_000))
def test_separation_rate_monotone(alpha, n, p):
    r = separation_rate(alpha, 1, n, p)
    assert separation_rate(alpha, 1, n + 1, p) < r
    assert separation_rate(alpha, 1, n, p + 1) < r


def test_normal_quantile_against_ndtri():
    for q in [1e-8, 0.001, 0.05, 0.3, 0.5, 0.95, 0.999999]:
        assert abs(normal_quantile(q) - ndtri(q)) < 1e-9
    assert normal_quantile(0.95) == pytest.approx(1.6448536269514722, abs=1e-12)


def test_theoretical_thresholds():
    pr = profile(1, 1, 0.1, 100)
    th = theoretical_thresholds(pr, 20, 0.05)
    assert th.t_w == pytest.approx(8.224268134757364e-3, rel=1e-10)
    assert th.t_star == pytest.approx(8.19036258812720e-4, rel=1e-12)
    assert theoretical_thresholds(pr, 20, 0.5).t_w == 0.0


def test_adaptive_grid_shape():
    g = adaptive_grid(1.5, 3, 1, 20, 100)
    assert g.grid_size == 6 and len(g.points) == 6
    assert g.rho == pytest.approx(1.2912742900489653, rel=1e-12)
    assert g.points[2].alpha == 2.25
    psis = [pt.psi for pt in g.points]
    assert all(a > b for a, b in zip(psis, psis[1:]))
    for pt in g.points:
        assert pt.t == pytest.approx(constants(pt.alpha, 1).c_lambda * g.rho / 200, rel=1e-14)
        assert pt.profile.renormalized
    assert g.c_star == pytest.approx(default_c_star(1.5, 3))


def test_adaptive_psi_reference():
    assert adaptive_psi(2.0, 20, 100) == pytest.approx(0.10633140668253002, rel=1e-12)


def test_default_c_star():
    c = (2 * 1.25 + 1) / (2 * 3 * 13 ** (1 / 2.5))
    assert default_c_star(1.25, 3) == pytest.approx(2 / c)


def test_adaptive_grid_domain():
    with pytest.raises(DomainError):
        adaptive_grid(0.9, 3, 1, 20, 100)
    with pytest.raises(DomainError):
        adaptive_grid(2, 1.5, 1, 20, 100)
    with pytest.raises(DomainError):
        adaptive_grid(1.5, 3, 1, 2, 1)


def test_profile_json_fields():
    d = profile(1, 1, 0.1, 100).to_dict()
    assert set(d) == {"alpha", "ell", "phi", "p", "T", "lambda", "b", "w_diag", "renormalized"}
    assert len(d["w_diag"]) == 21


def test_normalization_sum_truncates_at_p():
    assert normalization_sum([1.0, 1.0, 1.0], 3) == pytest.approx((2 + 1) / 3)
