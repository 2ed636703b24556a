import numpy as np
import pytest
from scipy import special, stats

from simsig.estimator import fdr_hat_u, sigma12_hat
from simsig.simulation import (
    PopulationLimits,
    Scenario,
    ScenarioConfig,
    SignalModel,
    aggregates_tsv,
    appendix_bj_scenarios,
    appendix_t4_scenarios,
    conservativeness_gap,
    fdr_infinity,
    generate_bj_scenario,
    generate_t4_scenario,
    oracle_fdr,
    oracle_fdr_numerator,
    run_replications,
    scenario_limits,
    two_sided_normal_limits,
)
from simsig.simulation.config import parse_scenarios
from simsig.simulation.runner import ReplicationSummary
from simsig.simulation.scenarios import ar1_normals, t4_two_sided_pvalue

# P(two-sided t4 p-value < 0.05) for noncentrality 6, by 40-digit quadrature of
# the normal tail against the chi-square(4) mixing density
NCT4_MU6_POWER = 0.99095842806998339


def test_config_invariants():
    with pytest.raises(ValueError):
        ScenarioConfig(p=100, p10=50, p01=50, p11=1)
    with pytest.raises(ValueError):
        ScenarioConfig(rho=1.0)
    with pytest.raises(ValueError):
        ScenarioConfig.signal_counts(50, 100, 60)
    cfg = ScenarioConfig.signal_counts(100, 100, 50)
    assert (cfg.p10, cfg.p01, cfg.p11) == (50, 50, 50)
    assert cfg.pi["00"] == pytest.approx(0.985)


def test_null_pvalues_uniform():
    d, truth = generate_t4_scenario(ScenarioConfig(p=10_000, p10=0, p01=0, p11=0))
    assert not truth.I1.any()
    assert stats.kstest(d.s1, "uniform").statistic < 0.02
    assert stats.kstest(d.s2, "uniform").statistic < 0.02


def test_t4_closed_form_cdf():
    t = np.linspace(-30, 30, 2001)
    closed = 0.5 + t * (t * t + 6) / (2 * (t * t + 4) ** 1.5)
    np.testing.assert_allclose(special.stdtr(4, t), closed, atol=1e-12)
    np.testing.assert_allclose(t4_two_sided_pvalue(t), 2 * (1 - closed) * (t >= 0) + 2 * closed * (t < 0), atol=1e-12)


def test_noncentral_power_against_quadrature():
    c = stats.t.isf(0.025, 4)
    assert stats.nct.sf(c, 4, 6) + stats.nct.cdf(-c, 4, 6) == pytest.approx(NCT4_MU6_POWER, abs=1e-12)
    cfg = ScenarioConfig(p=200_000, p10=200_000, p01=0, p11=0, signal_sd=0.0)
    d, _ = generate_t4_scenario(cfg)
    freq = np.mean(d.s1 < 0.05)
    se = np.sqrt(NCT4_MU6_POWER * (1 - NCT4_MU6_POWER) / cfg.p)
    assert abs(freq - NCT4_MU6_POWER) < 4 * se


def test_design_fixed_noise_varies():
    sc = Scenario.build(ScenarioConfig.signal_counts(100, 100, 50))
    assert sc.truth.I1.sum() == 100 and sc.truth.simultaneous.sum() == 50
    again = Scenario.build(ScenarioConfig.signal_counts(100, 100, 50))
    np.testing.assert_array_equal(sc.means[0], again.means[0])
    np.testing.assert_array_equal(sc.replicate(3).s1, again.replicate(3).s1)
    assert not np.array_equal(sc.replicate(0).s1, sc.replicate(1).s1)


def test_signal_means_follow_law():
    sc = Scenario.build(ScenarioConfig.signal_counts(2000, 2000, 1000, p=10_000))
    mu = sc.means[0][sc.truth.I1]
    assert abs(mu.mean() - 6.0) < 0.1 and abs(mu.std() - 1.0) < 0.1
    assert np.all(sc.means[0][~sc.truth.I1] == 0.0)


@pytest.mark.parametrize("rho,lag1,lag2,tol1,tol2", [(0.0, 0.0, 0.0, 0.01, 0.01), (0.7, 0.7, 0.49, 0.01, 0.02)])
def test_ar1_correlations(rho, lag1, lag2, tol1, tol2):
    z = ar1_normals(np.random.default_rng(0), 20_000, 50, rho)
    r1 = np.corrcoef(z[:, :-1].ravel(), z[:, 1:].ravel())[0, 1]
    r2 = np.corrcoef(z[:, :-2].ravel(), z[:, 2:].ravel())[0, 1]
    assert abs(r1 - lag1) < tol1 and abs(r2 - lag2) < tol2
    assert abs(z.var() - 1.0) < 0.01


def test_bj_scenario_layout():
    cfg = ScenarioConfig.signal_counts(100, 100, 50, signal_model="berk-jones", rho=0.5, p=2000)
    d, truth = generate_bj_scenario(cfg)
    assert d.direction.value == "statistic" and d.p == 2000
    sc = Scenario.build(cfg)
    shifted = (sc.means[0] != 0).sum(axis=1)
    assert set(shifted[truth.I1]) == {25} and set(shifted[~truth.I1]) == {0}
    assert np.median(d.s1[truth.I1]) > np.quantile(d.s1[~truth.I1], 0.99)


def test_appendix_designs():
    labels = [c.label() for c in appendix_t4_scenarios()]
    assert "t4:100,100/50" in labels and "t4:50,50/25" in labels
    bj = appendix_bj_scenarios()
    assert {c.rho for c in bj} == {0.5, 0.7} and all(c.p11 == 50 for c in bj)


def test_replication_summary_invariants():
    s = ReplicationSummary("m", 0, 10, 7)
    assert s.false_discoveries + s.true_positives == s.discoveries and s.fdp == 0.3
    assert ReplicationSummary("m", 0, 0, 0).fdp == 0.0
    with pytest.raises(ValueError):
        ReplicationSummary("m", 0, 3, 4)


def test_runner_deterministic_and_worker_invariant():
    cfg = ScenarioConfig.signal_counts(100, 100, 50, replications=6)
    a = run_replications(cfg)
    b = run_replications(cfg, workers=2)
    assert a.summaries == b.summaries
    assert aggregates_tsv(a) == aggregates_tsv(run_replications(cfg))


def test_global_null_has_few_discoveries():
    res = run_replications(ScenarioConfig(p10=0, p01=0, p11=0, methods=("proposed-max",)), 100)
    assert res.aggregate("proposed-max").mean_discoveries < 0.5


def test_tsv_columns():
    res = run_replications(ScenarioConfig.signal_counts(100, 100, 50, methods=("proposed-max", "max-p")), 3)
    lines = aggregates_tsv(res).splitlines()
    assert lines[0].split("\t")[:4] == ["scenario", "method", "FDR", "discoveries"]
    assert len(lines) == 3


def test_unknown_or_invalid_methods():
    with pytest.raises(ValueError, match="unknown"):
        run_replications(ScenarioConfig(methods=("magic",)), 1)
    with pytest.raises(ValueError, match="p-values"):
        run_replications(ScenarioConfig(signal_model="berk-jones", methods=("powerful-max",)), 1)


def test_bj_maxp_needs_calibration(tmp_path, monkeypatch):
    monkeypatch.setenv("SIMSIG_CACHE_DIR", str(tmp_path))
    cfg = ScenarioConfig.signal_counts(100, 100, 50, signal_model="berk-jones", p=500, bj_null_B=123)
    with pytest.raises(FileNotFoundError, match="calibrate-bj"):
        run_replications(cfg, 1)


# population limits


def fig1_limits():
    return two_sided_normal_limits(0.005, 0.005, 0.005, mean=9.0)


def test_limits_basic_identities():
    lim = fig1_limits()
    assert lim.joint(1.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert oracle_fdr_numerator(lim, 1.0, 1.0) == pytest.approx(lim.pi00 + lim.pi01 + lim.pi10)
    assert lim.positively_dependent


def test_numerator_normal_mixture_value():
    # 0.985 * 0.01**2 + 2 * 0.005 * 0.01 * F1(0.01), F1 from 40-digit normal tails
    assert oracle_fdr_numerator(fig1_limits(), 0.01, 0.01) == pytest.approx(1.9849999999337048e-4, rel=1e-12)


def test_fully_null_limit_is_one():
    lim = two_sided_normal_limits(0.0, 0.0, 0.0)
    for t in (0.01, 0.3, 1.0):
        assert fdr_infinity(lim, t, 0.5) == pytest.approx(1.0, rel=1e-12)


def test_fdr_infinity_undefined_where_joint_is_zero():
    with pytest.raises(ValueError, match="undefined"):
        fdr_infinity(fig1_limits(), 0.0, 0.5)


def test_limit_conservative_pointwise():
    lim = fig1_limits()
    t = np.logspace(-6, 0, 50)
    t1, t2 = np.meshgrid(t, t)
    assert np.all(fdr_infinity(lim, t1, t2) >= oracle_fdr(lim, t1, t2) - 1e-15)


def test_joint_dominates_mixture_terms():
    lim = fig1_limits()
    t = np.logspace(-6, 0, 30)
    t1, t2 = np.meshgrid(t, t)
    g = lim.joint(t1, t2)
    assert np.all(g >= oracle_fdr_numerator(lim, t1, t2))
    assert np.all(g >= lim.pi11 * lim.alt_joint(t1, t2))


def test_scenario_limits_t4_marginal():
    sc = Scenario.build(ScenarioConfig.signal_counts(100, 100, 50))
    lim = scenario_limits(sc)
    # per-study CDF at 0.05 from the scenario's own noncentralities
    mu = sc.means[0][sc.truth.I1]
    c = stats.t.isf(0.025, 4)
    alt = np.mean(stats.nct.sf(c, 4, mu) + stats.nct.sf(c, 4, -mu))
    assert lim.marginal(1, 0.05) == pytest.approx(0.99 * 0.05 + 0.01 * alt, rel=1e-10)
    with pytest.raises(ValueError):
        scenario_limits(Scenario.build(ScenarioConfig(signal_model="berk-jones", p=200, p10=1, p01=1, p11=1)))


def test_estimate_converges_to_limit():
    errs = []
    for p in (1_000, 10_000, 100_000):
        k = p // 200
        cfg = ScenarioConfig(p=p, p10=k, p01=k, p11=k, signal_model="normal", signal_mean=9.0, signal_sd=0.0)
        sc = Scenario.build(cfg)
        lim = two_sided_normal_limits(k / p, k / p, k / p, 9.0)
        target = fdr_infinity(lim, 0.05, 0.05)
        errs.append(np.median([abs(fdr_hat_u(sc.replicate(r), None, 0.05, 0.05).value - target) for r in range(50)]))
    assert errs[0] > errs[1] > errs[2]


def test_conservativeness_gap_mean_nonnegative():
    grid = [0.05, 0.1, 0.2, 0.5, 1.0]
    for n1, n2, n11 in ((100, 100, 50), (50, 50, 50)):
        cfg = ScenarioConfig.signal_counts(n1 * 10, n2 * 10, n11 * 10, p=100_000)
        sc = Scenario.build(cfg)
        gaps = [conservativeness_gap(sc.replicate(r), sc.truth.simultaneous, grid) for r in range(10)]
        assert np.mean(gaps) >= -0.01


def test_sigma12_bound_over_replications():
    cfg = ScenarioConfig.signal_counts(1000, 1000, 500, p=100_000)
    sc = Scenario.build(cfg)
    assert all(2 * sigma12_hat(sc.replicate(r)) <= 0.005 + 0.02 for r in range(10))


def test_population_limits_validation():
    with pytest.raises(ValueError):
        PopulationLimits(0.5, 0.1, 0.1, 0.1, np.sqrt, np.sqrt, lambda a, b: a * b)


# config files


def test_parse_scenarios():
    text = """
[DEFAULT]
replications = 7
seed = 3

[scenario:t4]
signals = 100,100,50
m = all

[scenario:bj]
pi10 = 0.01
pi11 = 0.005
model = berk-jones
rho = 0.7
methods = proposed-max, max-p
"""
    a, b = parse_scenarios(text)
    assert a.name == "t4" and a.p11 == 50 and a.m is None and a.replications == 7 and a.seed == 3
    assert b.signal_model is SignalModel.CORRELATED_BERK_JONES and b.p10 == 100 and b.p11 == 50
    assert b.methods == ("proposed-max", "max-p") and b.rho == 0.7


@pytest.mark.parametrize("text", ["[other]\np=1\n", "[scenario:x]\nbogus=1\n", ""])
def test_parse_scenarios_errors(text):
    with pytest.raises(ValueError):
        parse_scenarios(text)
