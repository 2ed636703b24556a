import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from simsig.empirical import Direction, as_paired, bivariate_ecdf, build_rank_index, marginal_ecdf
from simsig.estimator import Estimator, estimate, fdr_hat_powerful, fdr_hat_u, sigma12_hat
from simsig.simulation import ScenarioConfig, Scenario


def test_empty_region_is_zero():
    d = as_paired([0.2, 0.4], [0.3, 0.6])
    est = fdr_hat_u(d, None, 0.01, 0.01)
    assert est.value == 0.0 and est.denominator == 0.0


def test_full_region_is_one():
    rng = np.random.default_rng(0)
    d = as_paired(rng.uniform(size=30), rng.uniform(size=30))
    assert fdr_hat_u(d, None, 1.0, 1.0).value == 1.0


def test_counting_example():
    d = as_paired([0.01, 0.5, 0.03, 0.9], [0.02, 0.6, 0.01, 0.8])
    est = fdr_hat_u(d, None, 0.05, 0.05)
    assert est.value == 0.5
    assert (est.n1, est.n2, est.n12) == (2, 2, 2)


def test_value_can_exceed_one():
    d = as_paired([0.01, 0.02, 0.9, 0.95], [0.9, 0.95, 0.01, 0.02])
    assert fdr_hat_u(d, None, 0.5, 1.0).value == 1.0
    d = as_paired([0.01, 0.02, 0.9], [0.01, 0.95, 0.02])
    # 2 * 2 / (3 * 1)
    assert fdr_hat_u(d, None, 0.05, 0.05).value == pytest.approx(4 / 3)


def test_sigma12_constant_sequence_is_zero():
    rng = np.random.default_rng(1)
    d = as_paired(rng.uniform(size=100), np.full(100, 0.3))
    assert abs(sigma12_hat(d)) < 1e-12


def test_sigma12_two_point_example():
    # sample covariance of (0, 1) with itself: ((-.5)(-.5) + (.5)(.5)) / 1
    assert sigma12_hat(as_paired([0.0, 1.0], [0.0, 1.0])) == 0.5


def test_sigma12_matches_numpy():
    rng = np.random.default_rng(2)
    a, b = rng.uniform(size=500), rng.uniform(size=500)
    assert sigma12_hat(as_paired(a, b)) == pytest.approx(np.cov(a, b)[0, 1], abs=1e-15)


def test_sigma12_errors():
    with pytest.raises(ValueError, match="at least 2"):
        sigma12_hat(as_paired([0.1], [0.2]))
    with pytest.raises(ValueError, match="covariance bound requires p-values"):
        sigma12_hat(as_paired([1.0, 3.0], [2.0, 5.0], Direction.LARGE_IS_SIGNIFICANT))


def test_twice_sigma12_bounded_by_shared_proportion():
    cfg = ScenarioConfig.from_proportions(100_000, 0.005, 0.005, 0.005)
    sc = Scenario.build(cfg)
    for r in range(5):
        assert 2 * sigma12_hat(sc.replicate(r)) <= 0.005 + 0.02


unit = st.floats(0.0, 1.0, allow_nan=False)
inst = st.integers(2, 50).flatmap(
    lambda n: st.tuples(arrays(np.float64, n, elements=unit), arrays(np.float64, n, elements=unit))
)


@given(inst, unit, unit)
def test_zero_covariance_reduces_to_standard(pair, t1, t2):
    d = as_paired(*pair)
    assert fdr_hat_powerful(d, None, t1, t2, 0.0).value == fdr_hat_u(d, None, t1, t2).value


@given(inst, unit, unit, st.floats(0.0, 0.5))
def test_positive_covariance_never_raises_estimate(pair, t1, t2, sigma):
    d = as_paired(*pair)
    assert fdr_hat_powerful(d, None, t1, t2, sigma).value <= fdr_hat_u(d, None, t1, t2).value


@given(inst, unit, unit)
def test_matches_ecdf_definition(pair, t1, t2):
    d = as_paired(*pair)
    est = fdr_hat_u(d, build_rank_index(d), t1, t2)
    g = bivariate_ecdf(d, t1, t2)
    if g == 0:
        assert est.value == 0.0
    else:
        ref = marginal_ecdf(d, 1, t1) * marginal_ecdf(d, 2, t2) / g
        assert est.value == pytest.approx(ref, rel=1e-12)


@given(inst, unit, unit, st.integers(2, 5))
def test_scale_free_under_replication(pair, t1, t2, m):
    d = as_paired(*pair)
    big = as_paired(np.tile(pair[0], m), np.tile(pair[1], m))
    assert fdr_hat_u(big, None, t1, t2).value == pytest.approx(fdr_hat_u(d, None, t1, t2).value, rel=1e-12)


def test_complete_null_concentrates_near_one():
    vals = []
    for r in range(100):
        rng = np.random.default_rng(r)
        d = as_paired(rng.uniform(size=10_000), rng.uniform(size=10_000))
        vals.append(fdr_hat_u(d, None, 0.05, 0.1).value)
    assert np.mean(vals) >= 0.9


def test_estimate_dispatch():
    rng = np.random.default_rng(4)
    d = as_paired(rng.uniform(size=200), rng.uniform(size=200))
    s = sigma12_hat(d)
    assert estimate(d, None, 0.3, 0.4, Estimator.POWERFUL).value == fdr_hat_powerful(d, None, 0.3, 0.4, s).value
    assert estimate(d, None, 0.3, 0.4).value == fdr_hat_u(d, None, 0.3, 0.4).value
