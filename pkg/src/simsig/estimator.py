"""Conservative FDR estimates for rectangular rejection regions.

The estimate at ``(t1, t2)`` is ``F1(t1) * F2(t2) / G(t1, t2)`` built from the
empirical marginals and the bivariate empirical CDF, with the value defined as
0 when the region is empty. All arithmetic is done from integer counts, in a
fixed order, so that the compiled search kernel reproduces these values bit
for bit (see :mod:`simsig._kernels`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .empirical import PairedStatistics, RankIndex, build_rank_index


class Estimator(str, enum.Enum):
    STANDARD = "standard"
    POWERFUL = "powerful"


@dataclass(frozen=True)
class FdrEstimate:
    value: float
    numerator: float
    denominator: float
    variant: Estimator
    n1: int = 0
    n2: int = 0
    n12: int = 0


def standard_value(n1: int, n2: int, n12: int, p: int) -> float:
    if n12 == 0:
        return 0.0
    return float(n1 * n2) / float(p * n12)


def _powerful_scaled(n1: int, n2: int, p: int, two_sigma: float, t1: float, t2: float) -> float:
    # p**2 times the refined numerator; the covariance bound stands in for the
    # simultaneous-signal proportion, which enters multiplied by the null CDFs
    # t1 * t2. With a zero bound this is exactly float(n1 * n2), so the value
    # below reproduces standard_value bit for bit.
    num = float(n1 * n2) - ((two_sigma * t1) * t2) * float(p * p)
    return num if num > 0.0 else 0.0


def powerful_numerator(n1: int, n2: int, p: int, two_sigma: float, t1: float, t2: float) -> float:
    return _powerful_scaled(n1, n2, p, two_sigma, t1, t2) / float(p * p)


def powerful_value(n1: int, n2: int, n12: int, p: int, two_sigma: float, t1: float, t2: float) -> float:
    if n12 == 0:
        return 0.0
    return _powerful_scaled(n1, n2, p, two_sigma, t1, t2) / float(p * n12)


def _counts(data: PairedStatistics, index: RankIndex | None, t1: float, t2: float):
    if index is None:
        index = build_rank_index(data)
    k1, k2 = data.to_key(t1), data.to_key(t2)
    n1 = index.count1(k1)
    n2 = index.count2(k2)
    # only the n1 most significant study-1 features can be jointly inside
    n12 = int(np.count_nonzero(index.rank2[index.order1[:n1]] <= n2))
    return n1, n2, n12


def fdr_hat_u(data: PairedStatistics, index: RankIndex | None, t1: float, t2: float) -> FdrEstimate:
    n1, n2, n12 = _counts(data, index, t1, t2)
    p = data.p
    return FdrEstimate(
        value=standard_value(n1, n2, n12, p),
        numerator=(n1 / p) * (n2 / p),
        denominator=n12 / p,
        variant=Estimator.STANDARD,
        n1=n1,
        n2=n2,
        n12=n12,
    )


def sigma12_hat(data: PairedStatistics) -> float:
    """Sample covariance of the paired p-values (denominator ``p - 1``).

    Twice this value is asymptotically a lower bound on the proportion of
    simultaneous signals, which is what the powerful estimator subtracts.
    """
    if not data.is_pvalue:
        raise ValueError("covariance bound requires p-values")
    if data.p < 2:
        raise ValueError("covariance needs at least 2 features")
    d1 = data.s1 - data.s1.mean()
    d2 = data.s2 - data.s2.mean()
    return float(np.dot(d1, d2) / (data.p - 1))


def fdr_hat_powerful(
    data: PairedStatistics, index: RankIndex | None, t1: float, t2: float, sigma12: float
) -> FdrEstimate:
    if not data.is_pvalue:
        raise ValueError("covariance bound requires p-values")
    n1, n2, n12 = _counts(data, index, t1, t2)
    p = data.p
    two_sigma = 2.0 * sigma12
    return FdrEstimate(
        value=powerful_value(n1, n2, n12, p, two_sigma, t1, t2),
        numerator=powerful_numerator(n1, n2, p, two_sigma, t1, t2),
        denominator=n12 / p,
        variant=Estimator.POWERFUL,
        n1=n1,
        n2=n2,
        n12=n12,
    )


def estimate(
    data: PairedStatistics,
    index: RankIndex | None,
    t1: float,
    t2: float,
    estimator: Estimator = Estimator.STANDARD,
    sigma12: float | None = None,
) -> FdrEstimate:
    if Estimator(estimator) is Estimator.POWERFUL:
        if sigma12 is None:
            sigma12 = sigma12_hat(data)
        return fdr_hat_powerful(data, index, t1, t2, sigma12)
    return fdr_hat_u(data, index, t1, t2)
