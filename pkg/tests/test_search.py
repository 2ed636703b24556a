import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simsig import _kernels
from simsig.empirical import Direction, PairedStatistics, as_paired, bivariate_ecdf, build_rank_index
from simsig.estimator import Estimator, estimate
from simsig.search import (
    BRUTE_FORCE_LIMIT,
    SearchConfig,
    TieRule,
    brute_force_search,
    enumerate_tie_set,
    search,
)
from simsig.simulation import Scenario, ScenarioConfig


def random_instance(rng, p, ties=False, statistic=False):
    """Null uniforms with a random block of signals in one, the other, or both studies."""
    s1, s2 = rng.uniform(size=p), rng.uniform(size=p)
    k = int(rng.integers(0, p // 3 + 1))
    j = int(rng.integers(0, p // 3 + 1))
    s1[:k] *= 10.0 ** rng.uniform(-6, -1, k)
    s2[: k // 2] *= 10.0 ** rng.uniform(-6, -1, k // 2)
    s2[k: k + j] *= 10.0 ** rng.uniform(-6, -1, min(j, p - k))
    if ties:
        s1, s2 = np.round(s1, 2), np.round(s2, 2)
    if statistic:
        return PairedStatistics.from_arrays(-np.log(s1 + 1e-300), -np.log(s2 + 1e-300), Direction.LARGE_IS_SIGNIFICANT)
    return as_paired(s1, s2)


def same(a, b):
    return (a.t1, a.t2, a.n_discoveries, a.achieved_at_grid) == (b.t1, b.t2, b.n_discoveries, b.achieved_at_grid)


def test_nothing_feasible_gives_empty_region():
    rng = np.random.default_rng(0)
    d = as_paired(rng.uniform(0.9, 1.0, 200), rng.uniform(0.9, 1.0, 200))
    th = search(d)
    assert th.is_empty and th.n_discoveries == 0 and th.fdr_estimate == 0.0


def test_forty_features_match_exhaustive():
    rng = np.random.default_rng(40)
    d = random_instance(rng, 40)
    assert same(search(d), brute_force_search(d))


def test_single_feature_infeasible():
    d = as_paired([0.01], [0.01])
    assert brute_force_search(d, SearchConfig(alpha=0.5)).is_empty
    assert search(d, config=SearchConfig(alpha=0.5)).is_empty


def test_alpha_one_takes_everything():
    rng = np.random.default_rng(5)
    d = as_paired(rng.uniform(size=30), rng.uniform(size=30))
    for f in (search, brute_force_search):
        th = f(d, config=SearchConfig(alpha=1.0)) if f is search else f(d, SearchConfig(alpha=1.0))
        assert th.n_discoveries == 30


def test_brute_force_guard():
    d = as_paired(np.linspace(0, 1, BRUTE_FORCE_LIMIT + 1), np.linspace(0, 1, BRUTE_FORCE_LIMIT + 1))
    with pytest.raises(ValueError, match="brute force"):
        brute_force_search(d)


@pytest.mark.parametrize("kw", [{"alpha": 0.0}, {"alpha": 1.5}, {"m1": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SearchConfig(**kw)


@settings(max_examples=250)
@given(
    seed=st.integers(0, 2**32 - 1),
    p=st.integers(10, 300),
    ties=st.booleans(),
    statistic=st.booleans(),
    tie=st.sampled_from(list(TieRule)),
    alpha=st.sampled_from([0.01, 0.05, 0.1, 0.3]),
)
def test_search_equals_exhaustive(seed, p, ties, statistic, tie, alpha):
    d = random_instance(np.random.default_rng(seed), p, ties, statistic)
    cfg = SearchConfig(alpha=alpha, tie_rule=tie)
    assert same(search(d, config=cfg), brute_force_search(d, cfg))


@settings(max_examples=100)
@given(seed=st.integers(0, 2**32 - 1), p=st.integers(10, 200), tie=st.sampled_from(list(TieRule)))
def test_powerful_search_equals_exhaustive(seed, p, tie):
    d = random_instance(np.random.default_rng(seed), p, ties=seed % 2 == 0)
    cfg = SearchConfig(alpha=0.1, tie_rule=tie, estimator=Estimator.POWERFUL)
    assert same(search(d, config=cfg), brute_force_search(d, cfg))


@given(seed=st.integers(0, 2**32 - 1), p=st.integers(5, 400), est=st.sampled_from(list(Estimator)))
def test_selected_region_is_feasible_and_tie_rules_agree(seed, p, est):
    d = random_instance(np.random.default_rng(seed), p, ties=seed % 3 == 0)
    big = search(d, config=SearchConfig(estimator=est))
    small = search(d, config=SearchConfig(estimator=est, tie_rule=TieRule.SMALLEST_AREA))
    assert big.n_discoveries == small.n_discoveries
    assert small.area <= big.area
    for th in (big, small):
        if not th.is_empty:
            e = estimate(d, None, th.t1, th.t2, est)
            assert e.value <= 0.05
            assert e.n12 == th.n_discoveries == round(bivariate_ecdf(d, th.t1, th.t2) * d.p)


@given(seed=st.integers(0, 2**32 - 1), p=st.integers(20, 400))
def test_truncation_keeps_an_optimum_inside_the_depths(seed, p):
    d = random_instance(np.random.default_rng(seed), p)
    full = search(d)
    u, v = full.achieved_at_grid
    if full.is_empty:
        return
    trunc = search(d, config=SearchConfig(m1=u, m2=v))
    if all(th.achieved_at_grid[0] <= u and th.achieved_at_grid[1] <= v for th in enumerate_tie_set(d)):
        assert same(trunc, full)
    else:
        assert trunc.n_discoveries == full.n_discoveries


def test_incremental_counts_match_ecdf():
    rng = np.random.default_rng(9)
    d = random_instance(rng, 2000)
    idx = build_rank_index(d)
    for u, v in rng.integers(1, d.p + 1, size=(1000, 2)):
        c = _kernels.incremental_counts(idx.cross, int(u), int(v))[-1]
        g = bivariate_ecdf(d, idx.sorted1[u - 1], idx.sorted2[v - 1])
        assert c == round(g * d.p)


def test_tie_set_members_share_count():
    rng = np.random.default_rng(12)
    d = random_instance(rng, 300, ties=True)
    tset = enumerate_tie_set(d)
    assert len({t.n_discoveries for t in tset}) == 1
    assert search(d).achieved_at_grid in {t.achieved_at_grid for t in tset}
    assert search(d, config=SearchConfig(tie_rule=TieRule.SMALLEST_AREA)).achieved_at_grid in {
        t.achieved_at_grid for t in tset
    }


def test_strict_optimum_has_single_member():
    # 30 shared signals far below 970 uniform nulls; at alpha = 30 * 30 / (1000 * 30)
    # any grid step beyond (30, 30) raises the estimate without adding a discovery
    rng = np.random.default_rng(0)
    s1 = np.r_[rng.uniform(0, 1e-4, 30), rng.uniform(size=970)]
    s2 = np.r_[rng.uniform(0, 1e-4, 30), rng.uniform(size=970)]
    tset = enumerate_tie_set(as_paired(s1, s2), SearchConfig(alpha=0.03))
    assert len(tset) == 1
    assert tset[0].n_discoveries == 30 and tset[0].achieved_at_grid == (30, 30)


def test_fig1_style_scenario_has_multiple_optima():
    sizes = []
    for seed in range(40):
        cfg = ScenarioConfig(p=1000, p10=5, p01=5, p11=5, signal_model="normal", signal_mean=9.0,
                             signal_sd=0.0, seed=seed)
        d = Scenario.build(cfg).replicate(0)
        tset = enumerate_tie_set(d)
        assert len({t.n_discoveries for t in tset}) == 1
        sizes.append(len(tset))
    assert max(sizes) >= 2


def test_empty_tie_set_is_the_empty_region():
    d = as_paired([0.95, 0.99], [0.97, 0.98])
    tset = enumerate_tie_set(d)
    assert len(tset) == 1 and tset[0].is_empty


def test_statistic_mode_mirrors_pvalue_mode_counts():
    rng = np.random.default_rng(21)
    d = random_instance(rng, 500)
    stat = PairedStatistics.from_arrays(1 - d.s1, 1 - d.s2, Direction.LARGE_IS_SIGNIFICANT)
    assert search(stat).n_discoveries == search(d).n_discoveries


def test_thresholds_dict():
    th = search(as_paired([0.001, 0.002, 0.5], [0.001, 0.003, 0.6]), config=SearchConfig(alpha=0.9))
    assert th.to_dict()["n_discoveries"] == th.n_discoveries
