"""Thresholds for K >= 2 studies controlling the FDR over all study pairs.

Each study ``k`` gets one p-value threshold ``t_k``; a feature is discovered
for the pair ``(a, b)`` when it is below both ``t_a`` and ``t_b``. The overall
estimate is

    sum_{a<b} F_a(t_a) F_b(t_b) / sum_{a<b} G_ab(t_a, t_b),

which is unchanged when both sums run over ordered pairs. The search
maximizes the total ``sum_{a<b} G_ab`` subject to that estimate being at most
``alpha``. Two heuristics are offered, neither with an optimality claim:

* ``coordinate``: start from the best two-study region (other studies empty),
  then cycle over studies re-optimizing one threshold on its order-statistic
  grid with the rest fixed, until a full cycle changes nothing;
* ``symmetric``: one common threshold for every study, optimized exactly over
  all observed values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .empirical import Direction, PairedStatistics, _tie_ends
from .search import SearchConfig, TieRule, search

MAX_CYCLES = 1000


@dataclass(frozen=True, eq=False)
class MultiStudy:
    """``K`` p-value sequences over a common, ordered feature set."""

    feature_ids: np.ndarray
    pvalues: np.ndarray  # (K, p)
    names: tuple[str, ...]
    dropped: dict = field(default_factory=dict)

    def __post_init__(self):
        pv = np.asarray(self.pvalues, dtype=np.float64)
        if pv.ndim != 2 or pv.shape[0] < 2:
            raise ValueError("need a (K, p) array with K >= 2")
        if pv.shape[1] == 0:
            raise ValueError("no features")
        if len(self.feature_ids) != pv.shape[1]:
            raise ValueError("feature_ids length does not match the p-values")
        if not np.all(np.isfinite(pv)) or pv.min() < 0.0 or pv.max() > 1.0:
            raise ValueError("p-values must be finite and lie in [0, 1]")
        if len(self.names) != pv.shape[0]:
            raise ValueError("one name per study is required")
        object.__setattr__(self, "pvalues", pv)
        object.__setattr__(self, "feature_ids", np.asarray(self.feature_ids, dtype=object))

    @property
    def K(self) -> int:
        return self.pvalues.shape[0]

    @property
    def p(self) -> int:
        return self.pvalues.shape[1]

    @classmethod
    def from_aligned(cls, studies: Sequence[tuple], names=None) -> "MultiStudy":
        """Studies given as ``(ids, pvalues)`` that must list the same IDs in the same order."""
        ids0 = np.asarray(studies[0][0], dtype=object)
        for k, (ids, _) in enumerate(studies[1:], start=1):
            ids = np.asarray(ids, dtype=object)
            if ids.shape != ids0.shape or not np.array_equal(ids, ids0):
                raise ValueError(f"study {k} is not aligned with study 0 on feature IDs")
        names = tuple(names) if names is not None else tuple(f"study{k}" for k in range(len(studies)))
        return cls(ids0, np.vstack([np.asarray(pv, dtype=np.float64) for _, pv in studies]), names)

    @classmethod
    def align(cls, studies: Sequence[tuple], names=None) -> "MultiStudy":
        """Intersect studies on feature ID, sorted by ID; ``dropped`` counts the rest per study."""
        names = tuple(names) if names is not None else tuple(f"study{k}" for k in range(len(studies)))
        maps = []
        for name, (ids, pv) in zip(names, studies):
            ids = [str(x) for x in ids]
            if len(set(ids)) != len(ids):
                raise ValueError(f"{name}: duplicate feature IDs")
            maps.append(dict(zip(ids, np.asarray(pv, dtype=np.float64))))
        common = set(maps[0])
        for m in maps[1:]:
            common &= set(m)
        if not common:
            raise ValueError("studies share no feature IDs")
        order = sorted(common)
        pv = np.array([[m[i] for i in order] for m in maps])
        dropped = {name: len(m) - len(order) for name, m in zip(names, maps)}
        return cls(np.array(order, dtype=object), pv, names, dropped)

    def pair(self, a: int, b: int) -> PairedStatistics:
        return PairedStatistics(self.feature_ids, self.pvalues[a], self.pvalues[b], Direction.SMALL_IS_SIGNIFICANT)


@dataclass(frozen=True)
class MultiseqResult:
    thresholds: tuple  # per study; None is the empty threshold
    ranks: tuple[int, ...]
    pair_counts: dict  # (a, b) -> simultaneous discoveries, a < b
    overall_estimate: float
    objective: int
    strategy: str
    trace: tuple[int, ...]  # objective after initialization and each cycle

    @property
    def total_discoveries(self) -> int:
        return self.objective


class _Ranks:
    def __init__(self, data: MultiStudy):
        self.p = data.p
        self.order = np.argsort(data.pvalues, axis=1, kind="stable")
        self.sorted = np.take_along_axis(data.pvalues, self.order, axis=1)
        self.rank = np.empty_like(self.order)
        rows = np.arange(data.K)[:, None]
        self.rank[rows, self.order] = np.arange(1, data.p + 1)
        self.tie_end = np.vstack([_tie_ends(s) for s in self.sorted])


def _pair_count(ranks: _Ranks, a: int, b: int, ua: int, ub: int) -> int:
    if ua == 0 or ub == 0:
        return 0
    return int(np.count_nonzero((ranks.rank[a] <= ua) & (ranks.rank[b] <= ub)))


def _value(num: int, den: int, p: int) -> float:
    if den == 0:
        return 0.0
    return float(num) / float(p * den)


def _num(u: Sequence[int]) -> int:
    return sum(int(u[a]) * int(u[b]) for a, b in itertools.combinations(range(len(u)), 2))


def _coordinate_step(ranks: _Ranks, u: list[int], k: int, depth: int, alpha: float) -> int:
    K, p = len(u), ranks.p
    # a depth inside a run of ties keeps the whole run
    depth = max(int(ranks.tie_end[k][depth - 1]), u[k])
    others = [b for b in range(K) if b != k]
    s = sum(u[b] for b in others)
    c_rest = sum(u[a] * u[b] for a, b in itertools.combinations(others, 2))
    d_rest = sum(_pair_count(ranks, a, b, u[a], u[b]) for a, b in itertools.combinations(others, 2))
    den = np.zeros(depth + 1, dtype=np.int64)
    for b in others:
        inside = ranks.rank[b][ranks.order[k][:depth]] <= u[b]
        den[1:] += np.cumsum(inside)
    den += d_rest
    cand = np.arange(depth + 1, dtype=np.int64)
    num = cand * s + c_rest
    valid = np.zeros(depth + 1, dtype=bool)
    valid[0] = True
    valid[1:] = ranks.tie_end[k][:depth] == np.arange(1, depth + 1)
    # float(num) / float(p * den) with the integer product formed exactly, as in _value
    pden = np.int64(p) * den
    val = np.zeros(depth + 1)
    nz = den > 0
    val[nz] = num[nz].astype(np.float64) / pden[nz].astype(np.float64)
    feasible = valid & (val <= alpha)
    best = int(den[feasible].max())
    current = int(den[u[k]])
    if best == current:
        return u[k]
    return int(np.flatnonzero(feasible & (den == best))[-1])


def _coordinate(data: MultiStudy, ranks: _Ranks, alpha: float, depth: int):
    K = data.K
    u = [0] * K
    best = None
    for a, b in itertools.combinations(range(K), 2):
        th = search(data.pair(a, b), config=SearchConfig(alpha=alpha, m1=depth, m2=depth,
                                                       tie_rule=TieRule.LARGEST_AREA))
        if best is None or th.n_discoveries > best[0]:
            best = (th.n_discoveries, a, b, th.achieved_at_grid)
    if best[0] > 0:
        _, a, b, (ua, ub) = best
        u[a], u[b] = ua, ub
    trace = [_objective(ranks, u)]
    for _ in range(MAX_CYCLES):
        changed = False
        for k in range(K):
            new = _coordinate_step(ranks, u, k, depth, alpha)
            if new != u[k]:
                u[k] = new
                changed = True
        obj = _objective(ranks, u)
        if obj < trace[-1]:
            raise AssertionError("coordinate ascent decreased the objective")
        trace.append(obj)
        if not changed:
            break
    return u, trace


def _symmetric(data: MultiStudy, ranks: _Ranks, alpha: float):
    K, p = data.K, data.p
    cand = np.unique(data.pvalues)
    n = np.vstack([np.searchsorted(ranks.sorted[k], cand, side="right") for k in range(K)]).astype(np.int64)
    num = np.zeros(cand.size, dtype=np.int64)
    den = np.zeros(cand.size, dtype=np.int64)
    for a, b in itertools.combinations(range(K), 2):
        num += n[a] * n[b]
        both = np.sort(np.maximum(data.pvalues[a], data.pvalues[b]))
        den += np.searchsorted(both, cand, side="right")
    val = np.zeros(cand.size)
    nz = den > 0
    val[nz] = num[nz].astype(np.float64) / (np.int64(p) * den[nz]).astype(np.float64)
    feasible = (val <= alpha) & (den > 0)
    if not feasible.any():
        return [0] * K, [0]
    best = int(den[feasible].max())
    i = int(np.flatnonzero(feasible & (den == best))[-1])
    return [int(n[k, i]) for k in range(K)], [best]


def _objective(ranks: _Ranks, u) -> int:
    return sum(_pair_count(ranks, a, b, u[a], u[b]) for a, b in itertools.combinations(range(len(u)), 2))


def overall_estimate(data: MultiStudy, thresholds) -> float:
    """Direct evaluation of the overall estimate at value thresholds (``None`` = empty)."""
    inside = [
        np.zeros(data.p, dtype=bool) if t is None else data.pvalues[k] <= t
        for k, t in enumerate(thresholds)
    ]
    num = sum(int(inside[a].sum()) * int(inside[b].sum()) for a, b in itertools.combinations(range(data.K), 2))
    den = sum(int((inside[a] & inside[b]).sum()) for a, b in itertools.combinations(range(data.K), 2))
    return _value(num, den, data.p)


def multiseq_search(
    data: MultiStudy | Sequence[tuple],
    alpha: float = 0.05,
    strategy: str = "coordinate",
    depth: int | None = None,
) -> MultiseqResult:
    if not isinstance(data, MultiStudy):
        data = MultiStudy.from_aligned(data)
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    ranks = _Ranks(data)
    depth = data.p if depth is None else min(int(depth), data.p)
    if strategy == "coordinate":
        u, trace = _coordinate(data, ranks, alpha, depth)
    elif strategy == "symmetric":
        u, trace = _symmetric(data, ranks, alpha)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    thresholds = tuple(None if uk == 0 else float(ranks.sorted[k][uk - 1]) for k, uk in enumerate(u))
    pairs = {(a, b): _pair_count(ranks, a, b, u[a], u[b]) for a, b in itertools.combinations(range(data.K), 2)}
    objective = sum(pairs.values())
    internal = _value(_num(u), objective, data.p)
    direct = overall_estimate(data, thresholds)
    if abs(direct - internal) > 1e-12:
        raise AssertionError(f"overall estimate {internal} disagrees with direct evaluation {direct}")
    if direct > alpha:
        raise AssertionError(f"overall estimate {direct} exceeds alpha {alpha}")
    return MultiseqResult(thresholds, tuple(int(x) for x in u), pairs, direct, objective, strategy, tuple(trace))


def pair_discoveries(data: MultiStudy, result: MultiseqResult) -> dict:
    """Feature IDs discovered for each study pair."""
    out = {}
    for (a, b) in result.pair_counts:
        ta, tb = result.thresholds[a], result.thresholds[b]
        if ta is None or tb is None:
            out[(a, b)] = []
            continue
        mask = (data.pvalues[a] <= ta) & (data.pvalues[b] <= tb)
        out[(a, b)] = [str(x) for x in data.feature_ids[mask]]
    return out
