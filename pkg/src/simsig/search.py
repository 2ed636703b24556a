"""Optimal rectangular rejection region over the order-statistic grid.

The candidate set is the empty region plus every pair of observed order
statistics ``(s1_(u), s2_(v))`` with ``u <= m1`` and ``v <= m2``. Among the
points whose estimated FDR is at most ``alpha`` the search keeps those with
the most discoveries, then applies the tie rule on geometric area, then the
lexicographically smallest ``(u, v)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .empirical import PairedStatistics, RankIndex, build_rank_index
from .estimator import Estimator, estimate, powerful_value, sigma12_hat, standard_value

DEFAULT_MAX_DEPTH = 100_000
BRUTE_FORCE_LIMIT = 2000


class TieRule(str, enum.Enum):
    LARGEST_AREA = "largest-area"
    SMALLEST_AREA = "smallest-area"


@dataclass(frozen=True)
class SearchConfig:
    alpha: float = 0.05
    m1: int | None = None
    m2: int | None = None
    tie_rule: TieRule = TieRule.LARGEST_AREA
    estimator: Estimator = Estimator.STANDARD

    def __post_init__(self):
        object.__setattr__(self, "tie_rule", TieRule(self.tie_rule))
        object.__setattr__(self, "estimator", Estimator(self.estimator))
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        for name in ("m1", "m2"):
            m = getattr(self, name)
            if m is not None and m < 1:
                raise ValueError(f"{name} must be a positive integer, got {m}")

    def depths(self, p: int) -> tuple[int, int]:
        default = min(p, DEFAULT_MAX_DEPTH)
        m1 = default if self.m1 is None else min(self.m1, p)
        m2 = default if self.m2 is None else min(self.m2, p)
        return m1, m2


@dataclass(frozen=True)
class RejectionThresholds:
    """Selected region. ``t1 = t2 = None`` is the empty region."""

    t1: float | None
    t2: float | None
    n_discoveries: int
    fdr_estimate: float
    area: float
    achieved_at_grid: tuple[int, int]

    @property
    def is_empty(self) -> bool:
        return self.t1 is None

    def to_dict(self) -> dict:
        return {
            "t1": self.t1,
            "t2": self.t2,
            "n_discoveries": self.n_discoveries,
            "fdr_estimate": self.fdr_estimate,
            "area": self.area,
            "grid_u": self.achieved_at_grid[0],
            "grid_v": self.achieved_at_grid[1],
        }


EMPTY = RejectionThresholds(None, None, 0, 0.0, 0.0, (0, 0))


def _area_coords(data: PairedStatistics, index: RankIndex):
    # p-value mode: the threshold values themselves; statistic mode: the ranks
    if data.is_pvalue:
        return index.sorted1.astype(np.float64), index.sorted2.astype(np.float64)
    r = np.arange(1, data.p + 1, dtype=np.float64)
    return r, r.copy()


def _kernel_args(data: PairedStatistics, index: RankIndex, config: SearchConfig, sigma12):
    m1, m2 = config.depths(data.p)
    # a truncation landing inside a run of ties keeps the whole run
    ubound = int(index.tie_end1[m1 - 1])
    vbound = int(index.tie_end2[m2 - 1])
    powerful = config.estimator is Estimator.POWERFUL
    if powerful:
        if sigma12 is None:
            sigma12 = sigma12_hat(data)
        two_sigma = 2.0 * float(sigma12)
    else:
        two_sigma = 0.0
    rank2_by_rank1 = np.ascontiguousarray(index.rank2[index.order1])
    return ubound, vbound, powerful, two_sigma, rank2_by_rank1, sigma12


def _thresholds_at(data, index, config, u, v, count, sigma12) -> RejectionThresholds:
    if count == 0:
        return EMPTY
    t1 = float(data.from_key(index.sorted1[u - 1]))
    t2 = float(data.from_key(index.sorted2[v - 1]))
    a1, a2 = _area_coords(data, index)
    est = estimate(data, index, t1, t2, config.estimator, sigma12)
    if est.n12 != count:
        raise AssertionError(f"incremental count {count} != direct count {est.n12} at ({u}, {v})")
    if est.value > config.alpha:
        raise AssertionError(f"selected region has estimate {est.value} > alpha {config.alpha}")
    return RejectionThresholds(t1, t2, count, est.value, float(a1[u - 1] * a2[v - 1]), (u, v))


def search(
    data: PairedStatistics,
    index: RankIndex | None = None,
    config: SearchConfig | None = None,
    sigma12: float | None = None,
) -> RejectionThresholds:
    """Largest feasible region by the incremental row scan.

    The selected region is re-evaluated with the direct estimator before it is
    returned, so a disagreement with the incremental counts raises.
    """
    config = config or SearchConfig()
    index = index or build_rank_index(data)
    ubound, vbound, powerful, two_sigma, r21, sigma12 = _kernel_args(data, index, config, sigma12)
    a1, a2 = _area_coords(data, index)
    count, u, v, _ = _kernels.scan_best(
        index.cross, r21, index.tie_end1, index.tie_end2, a1, a2, data.p,
        ubound, vbound, float(config.alpha), powerful, two_sigma,
        config.tie_rule is TieRule.SMALLEST_AREA,
    )
    return _thresholds_at(data, index, config, int(u), int(v), int(count), sigma12)


def enumerate_tie_set(
    data: PairedStatistics,
    config: SearchConfig | None = None,
    index: RankIndex | None = None,
    sigma12: float | None = None,
) -> list[RejectionThresholds]:
    """Every grid point attaining the maximal feasible discovery count.

    When no non-empty region is feasible the set is just the empty region.
    """
    config = config or SearchConfig()
    index = index or build_rank_index(data)
    best = search(data, index, config, sigma12)
    if best.is_empty:
        return [EMPTY]
    ubound, vbound, powerful, two_sigma, r21, sigma12 = _kernel_args(data, index, config, sigma12)
    a1, a2 = _area_coords(data, index)
    pts = _kernels.scan_ties(
        index.cross, r21, index.tie_end1, index.tie_end2, a1, a2, data.p,
        ubound, vbound, float(config.alpha), powerful, two_sigma, best.n_discoveries,
    )
    out = []
    for u, v in pts:
        u, v = int(u), int(v)
        t1 = float(data.from_key(index.sorted1[u - 1]))
        t2 = float(data.from_key(index.sorted2[v - 1]))
        if powerful:
            val = powerful_value(u, v, best.n_discoveries, data.p, two_sigma, t1, t2)
        else:
            val = standard_value(u, v, best.n_discoveries, data.p)
        out.append(
            RejectionThresholds(t1, t2, best.n_discoveries, val, float(a1[u - 1] * a2[v - 1]), (u, v))
        )
    return out


def brute_force_search(
    data: PairedStatistics,
    config: SearchConfig | None = None,
    sigma12: float | None = None,
) -> RejectionThresholds:
    """Exhaustive evaluation over the full grid (``m1 = m2 = p``).

    Counts are formed by direct comparison against every threshold value, with
    no running updates, so this is an independent check on :func:`search`.
    """
    config = replace(config or SearchConfig(), m1=None, m2=None)
    p = data.p
    if p > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to p <= {BRUTE_FORCE_LIMIT}, got {p}")
    powerful = config.estimator is Estimator.POWERFUL
    two_sigma = 0.0
    if powerful:
        if sigma12 is None:
            sigma12 = sigma12_hat(data)
        two_sigma = 2.0 * float(sigma12)
    k1, k2 = data.keys(1), data.keys(2)
    t1_keys = np.unique(k1)
    t2_keys = np.unique(k2)
    n1 = (k1[None, :] <= t1_keys[:, None]).sum(axis=1)
    n2 = (k2[None, :] <= t2_keys[:, None]).sum(axis=1)
    best = None  # (count, area, u, v, t1key, t2key)
    smallest = config.tie_rule is TieRule.SMALLEST_AREA
    n2f = n2.astype(np.float64)
    for i, tk1 in enumerate(t1_keys):
        inside1 = k1 <= tk1
        counts = (k2[inside1][:, None] <= t2_keys[None, :]).sum(axis=0)
        u = int(n1[i])
        with np.errstate(divide="ignore", invalid="ignore"):
            if powerful:
                sub = ((two_sigma * float(tk1)) * t2_keys) * float(p * p)
                num = np.maximum(u * n2f - sub, 0.0)
                vals = num / (float(p) * counts.astype(np.float64))
            else:
                vals = (u * n2f) / (float(p) * counts.astype(np.float64))
        ok = np.flatnonzero((counts > 0) & (vals <= config.alpha))
        if ok.size == 0:
            continue
        top = counts[ok].max()
        ok = ok[counts[ok] == top]
        if data.is_pvalue:
            areas = float(tk1) * t2_keys[ok].astype(np.float64)
        else:
            areas = float(u) * n2f[ok]
        j = ok[np.argmin(areas)] if smallest else ok[np.argmax(areas)]
        area = float(tk1) * float(t2_keys[j]) if data.is_pvalue else float(u) * float(n2[j])
        cand = (int(top), area, u, int(n2[j]), tk1, t2_keys[j], float(vals[j]))
        if best is None or _better(cand, best, smallest):
            best = cand
    if best is None:
        return EMPTY
    c, area, u, v, tk1, tk2, val = best
    return RejectionThresholds(
        float(data.from_key(tk1)), float(data.from_key(tk2)), c, val, area, (u, v)
    )


def _better(cand, best, smallest) -> bool:
    if cand[0] != best[0]:
        return cand[0] > best[0]
    if cand[1] != best[1]:
        return cand[1] < best[1] if smallest else cand[1] > best[1]
    return (cand[2], cand[3]) < (best[2], best[3])
