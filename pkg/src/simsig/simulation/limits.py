"""Population limits of the empirical quantities for scenarios with known alternatives.

These are oracles for testing: the numerator of the oracle FDR (expected share
of non-simultaneous signals inside the region) needs the alternative
distributions, which are never available to the procedure itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .scenarios import Scenario, SignalModel


def _uniform(t):
    return np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)


@dataclass(frozen=True)
class PopulationLimits:
    """Mixture model for p-values with uniform nulls.

    ``alt1``/``alt2`` are the limiting alternative CDFs of each study and
    ``alt_joint`` the limiting joint CDF of simultaneous signals.
    """

    pi00: float
    pi10: float
    pi01: float
    pi11: float
    alt1: Callable
    alt2: Callable
    alt_joint: Callable
    null1: Callable = _uniform
    null2: Callable = _uniform

    def __post_init__(self):
        total = self.pi00 + self.pi10 + self.pi01 + self.pi11
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"mixture proportions sum to {total}, not 1")

    @property
    def pi1(self) -> float:
        return self.pi10 + self.pi11

    @property
    def pi2(self) -> float:
        return self.pi01 + self.pi11

    @property
    def positively_dependent(self) -> bool:
        return self.pi11 > self.pi1 * self.pi2

    def marginal(self, k: int, t):
        null, alt, pik = (self.null1, self.alt1, self.pi1) if k == 1 else (self.null2, self.alt2, self.pi2)
        return (1.0 - pik) * null(t) + pik * alt(t)

    def joint(self, t1, t2):
        return self.oracle_numerator(t1, t2) + self.pi11 * self.alt_joint(t1, t2)

    def oracle_numerator(self, t1, t2):
        f01, f02 = self.null1(t1), self.null2(t2)
        return (
            self.pi00 * f01 * f02
            + self.pi01 * f01 * self.alt2(t2)
            + self.pi10 * self.alt1(t1) * f02
        )


def oracle_fdr_numerator(limits: PopulationLimits, t1, t2):
    return limits.oracle_numerator(t1, t2)


def fdr_infinity(limits: PopulationLimits, t1, t2):
    """Pointwise limit ``F1(t1) F2(t2) / G(t1, t2)`` of the conservative estimate."""
    g = np.asarray(limits.joint(t1, t2), dtype=np.float64)
    if np.any(g <= 0.0):
        raise ValueError("joint limit is zero at the requested point; the limit is undefined")
    out = limits.marginal(1, t1) * limits.marginal(2, t2) / g
    return float(out) if np.ndim(out) == 0 else out


def oracle_fdr(limits: PopulationLimits, t1, t2):
    """Limiting true FDR of the region: oracle numerator over ``G``."""
    return limits.oracle_numerator(t1, t2) / limits.joint(t1, t2)


def normal_alt_cdf(mean: float) -> Callable:
    """CDF of the two-sided p-value of ``N(mean, 1)``."""

    def cdf(t):
        t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
        c = stats.norm.isf(t / 2.0)
        return stats.norm.cdf(-c - mean) + stats.norm.cdf(mean - c)

    return cdf


def two_sided_normal_limits(pi10: float, pi01: float, pi11: float, mean: float = 9.0) -> PopulationLimits:
    alt = normal_alt_cdf(mean)
    return PopulationLimits(
        pi00=1.0 - pi10 - pi01 - pi11,
        pi10=pi10,
        pi01=pi01,
        pi11=pi11,
        alt1=alt,
        alt2=alt,
        alt_joint=lambda t1, t2: alt(t1) * alt(t2),
    )


def _t4_alt_cdf_per_feature(means: np.ndarray):
    means = np.asarray(means, dtype=np.float64)

    def cdf(t):
        t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
        c = stats.t.isf(t / 2.0, 4)
        c = np.expand_dims(c, -1)
        # lower tail written as an upper tail with negated noncentrality:
        # scipy's nct.cdf returns nan far into the left tail
        return stats.nct.sf(c, 4, means) + stats.nct.sf(c, 4, -means)

    return cdf


def scenario_limits(scenario: Scenario) -> PopulationLimits:
    """Limits implied by a built scenario's fixed effect sizes (p-value models only).

    Alternative CDFs are averages over the scenario's own signal features, the
    finite-p version of a mixture of per-feature alternatives.
    """
    cfg = scenario.config
    if cfg.signal_model is SignalModel.CORRELATED_BERK_JONES:
        raise ValueError("no closed form for Berk-Jones statistics")
    I1, I2 = scenario.truth.I1, scenario.truth.I2
    mu1, mu2 = scenario.means
    if cfg.signal_model is SignalModel.TWO_SIDED_NORMAL:
        per_feature = _normal_per_feature
    else:
        per_feature = _t4_alt_cdf_per_feature

    def per(means):
        f = per_feature(means)
        return lambda t: np.mean(f(t), axis=-1)

    both = I1 & I2
    f1_both, f2_both = per_feature(mu1[both]), per_feature(mu2[both])

    def joint(t1, t2):
        return np.mean(f1_both(t1) * f2_both(t2), axis=-1)

    pi = cfg.pi
    return PopulationLimits(
        pi00=pi["00"], pi10=pi["10"], pi01=pi["01"], pi11=pi["11"],
        alt1=per(mu1[I1]) if I1.any() else _uniform,
        alt2=per(mu2[I2]) if I2.any() else _uniform,
        alt_joint=joint if both.any() else (lambda t1, t2: _uniform(t1) * _uniform(t2)),
    )


def _normal_per_feature(means: np.ndarray):
    means = np.asarray(means, dtype=np.float64)

    def cdf(t):
        t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
        c = np.expand_dims(stats.norm.isf(t / 2.0), -1)
        return stats.norm.cdf(-c - means) + stats.norm.cdf(means - c)

    return cdf
