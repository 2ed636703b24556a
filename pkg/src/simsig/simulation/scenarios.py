"""Synthetic two-study scenarios with known signal indicators.

Quantities that the design holds fixed across replications (which features
are signals, their effect sizes, which Z-score components are shifted) come
from one seeded stream; each replication draws its noise from its own stream
``SeedSequence(seed, spawn_key=(1, r))`` so results do not depend on the order
in which replications run.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from ..baselines import berk_jones_rows
from ..empirical import Direction, PairedStatistics


class SignalModel(str, enum.Enum):
    NONCENTRAL_T4 = "t4"
    CORRELATED_BERK_JONES = "berk-jones"
    TWO_SIDED_NORMAL = "normal"


_DEFAULT_MEAN = {
    SignalModel.NONCENTRAL_T4: 6.0,
    SignalModel.CORRELATED_BERK_JONES: 1.5,
    SignalModel.TWO_SIDED_NORMAL: 9.0,
}
_DEFAULT_SD = {
    SignalModel.NONCENTRAL_T4: 1.0,
    SignalModel.CORRELATED_BERK_JONES: 1.0,
    SignalModel.TWO_SIDED_NORMAL: 1.0,
}


@dataclass(frozen=True)
class ScenarioConfig:
    p: int = 10_000
    p10: int = 50
    p01: int = 50
    p11: int = 50
    signal_model: SignalModel = SignalModel.NONCENTRAL_T4
    signal_mean: float | None = None
    signal_sd: float | None = None
    rho: float = 0.5
    block: int = 50
    nonzero: int = 25
    alpha: float = 0.05
    replications: int = 200
    seed: int = 1
    m: int | None = 5000
    name: str = ""
    methods: tuple[str, ...] | None = None
    bj_null_B: int = 10_000

    def __post_init__(self):
        model = SignalModel(self.signal_model)
        object.__setattr__(self, "signal_model", model)
        if self.signal_mean is None:
            object.__setattr__(self, "signal_mean", _DEFAULT_MEAN[model])
        if self.signal_sd is None:
            object.__setattr__(self, "signal_sd", _DEFAULT_SD[model])
        if self.methods is not None:
            object.__setattr__(self, "methods", tuple(self.methods))
        if min(self.p10, self.p01, self.p11) < 0:
            raise ValueError("signal counts must be nonnegative")
        if self.p10 + self.p01 + self.p11 > self.p:
            raise ValueError("p10 + p01 + p11 exceeds p")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if not 0 < self.nonzero <= self.block:
            raise ValueError("nonzero must lie in 1..block")

    @classmethod
    def from_proportions(cls, p: int, pi10: float, pi01: float, pi11: float, **kw) -> "ScenarioConfig":
        return cls(p=p, p10=round(pi10 * p), p01=round(pi01 * p), p11=round(pi11 * p), **kw)

    @classmethod
    def signal_counts(cls, n1: int, n2: int, n11: int, **kw) -> "ScenarioConfig":
        """Scenario from per-study signal totals ``n1``, ``n2`` of which ``n11`` are shared."""
        if n11 > min(n1, n2):
            raise ValueError("shared signals exceed a study's total")
        return cls(p10=n1 - n11, p01=n2 - n11, p11=n11, **kw)

    @property
    def pi(self) -> dict[str, float]:
        p = self.p
        return {
            "00": (p - self.p10 - self.p01 - self.p11) / p,
            "10": self.p10 / p,
            "01": self.p01 / p,
            "11": self.p11 / p,
        }

    @property
    def direction(self) -> Direction:
        if self.signal_model is SignalModel.CORRELATED_BERK_JONES:
            return Direction.LARGE_IS_SIGNIFICANT
        return Direction.SMALL_IS_SIGNIFICANT

    def label(self) -> str:
        if self.name:
            return self.name
        return (
            f"{self.signal_model.value}:{self.p10 + self.p11},{self.p01 + self.p11}"
            f"/{self.p11}"
        )

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class Truth:
    I1: np.ndarray
    I2: np.ndarray

    @property
    def simultaneous(self) -> np.ndarray:
        return self.I1 & self.I2


def t4_two_sided_pvalue(t) -> np.ndarray:
    """Two-sided p-value of central t with 4 degrees of freedom."""
    return 2.0 * special.stdtr(4, -np.abs(np.asarray(t, dtype=np.float64)))


def normal_two_sided_pvalue(z) -> np.ndarray:
    return special.erfc(np.abs(np.asarray(z, dtype=np.float64)) / np.sqrt(2.0))


def ar1_normals(rng: np.random.Generator, rows: int, block: int, rho: float) -> np.ndarray:
    """Standard normal rows with covariance ``rho**|u - v|`` via the one-lag recursion."""
    e = rng.standard_normal((rows, block))
    if rho == 0.0:
        return e
    z = np.empty_like(e)
    z[:, 0] = e[:, 0]
    scale = np.sqrt(1.0 - rho * rho)
    for t in range(1, block):
        z[:, t] = rho * z[:, t - 1] + scale * e[:, t]
    return z


def _indicators(rng, cfg: ScenarioConfig):
    perm = rng.permutation(cfg.p)
    I1 = np.zeros(cfg.p, dtype=bool)
    I2 = np.zeros(cfg.p, dtype=bool)
    a, b, c = cfg.p11, cfg.p11 + cfg.p10, cfg.p11 + cfg.p10 + cfg.p01
    I1[perm[:b]] = True
    I2[perm[:a]] = True
    I2[perm[b:c]] = True
    return I1, I2


@dataclass(frozen=True, eq=False)
class Scenario:
    """A scenario with its fixed design drawn; call :meth:`replicate` for data."""

    config: ScenarioConfig
    truth: Truth
    means: tuple[np.ndarray, np.ndarray]  # per-feature means, or (p, block) shifts for Berk-Jones
    feature_ids: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, config: ScenarioConfig) -> "Scenario":
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0,)))
        I1, I2 = _indicators(rng, config)
        means = []
        for I in (I1, I2):
            if config.signal_model is SignalModel.CORRELATED_BERK_JONES:
                mu = np.zeros((config.p, config.block))
                for j in np.flatnonzero(I):
                    pos = rng.choice(config.block, config.nonzero, replace=False)
                    mu[j, pos] = rng.normal(config.signal_mean, config.signal_sd, config.nonzero)
            else:
                mu = np.zeros(config.p)
                mu[I] = rng.normal(config.signal_mean, config.signal_sd, int(I.sum()))
            means.append(mu)
        ids = np.array([f"f{j}" for j in range(config.p)], dtype=object)
        return cls(config, Truth(I1, I2), (means[0], means[1]), ids)

    def rng(self, replication: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.config.seed, spawn_key=(1, replication))
        )

    def _study(self, rng, mu) -> np.ndarray:
        cfg = self.config
        if cfg.signal_model is SignalModel.NONCENTRAL_T4:
            z = rng.standard_normal(cfg.p) + mu
            v = rng.chisquare(4, cfg.p)
            return t4_two_sided_pvalue(z / np.sqrt(v / 4.0))
        if cfg.signal_model is SignalModel.TWO_SIDED_NORMAL:
            return normal_two_sided_pvalue(rng.standard_normal(cfg.p) + mu)
        z = ar1_normals(rng, cfg.p, cfg.block, cfg.rho) + mu
        return berk_jones_rows(z)

    def replicate(self, replication: int) -> PairedStatistics:
        rng = self.rng(replication)
        s1 = self._study(rng, self.means[0])
        s2 = self._study(rng, self.means[1])
        return PairedStatistics(self.feature_ids, s1, s2, self.config.direction)


def generate_t4_scenario(config: ScenarioConfig, replication: int = 0):
    if config.signal_model is not SignalModel.NONCENTRAL_T4:
        config = config.with_(signal_model=SignalModel.NONCENTRAL_T4, signal_mean=None, signal_sd=None)
    sc = Scenario.build(config)
    return sc.replicate(replication), sc.truth


def generate_bj_scenario(config: ScenarioConfig, replication: int = 0):
    if config.signal_model is not SignalModel.CORRELATED_BERK_JONES:
        config = config.with_(signal_model=SignalModel.CORRELATED_BERK_JONES, signal_mean=None, signal_sd=None)
    sc = Scenario.build(config)
    return sc.replicate(replication), sc.truth
