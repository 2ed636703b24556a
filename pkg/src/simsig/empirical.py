"""Paired statistics and their empirical marginal / bivariate distribution functions.

Everything downstream works on *keys*: the statistics oriented so that small
means significant. In p-value mode the key is the p-value itself; in statistic
mode it is the negated statistic. Counting ``key <= threshold_key`` is then the
same operation in both modes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class Direction(str, enum.Enum):
    SMALL_IS_SIGNIFICANT = "pvalue"
    LARGE_IS_SIGNIFICANT = "statistic"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PairedStatistics:
    """Aligned per-feature statistics from two independent studies."""

    feature_ids: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    direction: Direction = Direction.SMALL_IS_SIGNIFICANT

    def __post_init__(self):
        ids = np.asarray(self.feature_ids, dtype=object)
        s1 = np.array(self.s1, dtype=np.float64)
        s2 = np.array(self.s2, dtype=np.float64)
        direction = Direction(self.direction)
        if s1.ndim != 1 or s2.ndim != 1 or ids.ndim != 1:
            raise ValueError("feature_ids, s1 and s2 must be one-dimensional")
        if not (len(ids) == len(s1) == len(s2)):
            raise ValueError(
                f"length mismatch: {len(ids)} ids, {len(s1)} s1, {len(s2)} s2"
            )
        if len(s1) == 0:
            raise ValueError("no features")
        for name, s in (("s1", s1), ("s2", s2)):
            bad = np.flatnonzero(~np.isfinite(s))
            if bad.size:
                raise ValueError(
                    f"{name} has non-finite value at feature {ids[bad[0]]!r}"
                )
            if direction is Direction.SMALL_IS_SIGNIFICANT:
                bad = np.flatnonzero((s < 0) | (s > 1))
                if bad.size:
                    raise ValueError(
                        f"{name} p-value {s[bad[0]]!r} outside [0, 1] "
                        f"at feature {ids[bad[0]]!r}"
                    )
        if len(set(ids.tolist())) != len(ids):
            raise ValueError("feature_ids are not unique")
        object.__setattr__(self, "feature_ids", _readonly(ids))
        object.__setattr__(self, "s1", _readonly(s1))
        object.__setattr__(self, "s2", _readonly(s2))
        object.__setattr__(self, "direction", direction)

    @classmethod
    def from_arrays(cls, s1, s2, direction=Direction.SMALL_IS_SIGNIFICANT, feature_ids=None):
        """Convenience constructor; ids default to ``0..p-1``."""
        if feature_ids is None:
            feature_ids = np.arange(len(s1))
        return cls(feature_ids, s1, s2, direction)

    @property
    def p(self) -> int:
        return len(self.s1)

    @property
    def is_pvalue(self) -> bool:
        return self.direction is Direction.SMALL_IS_SIGNIFICANT

    def study(self, k: int) -> np.ndarray:
        if k == 1:
            return self.s1
        if k == 2:
            return self.s2
        raise ValueError(f"study index must be 1 or 2, got {k}")

    def keys(self, k: int) -> np.ndarray:
        s = self.study(k)
        return s if self.is_pvalue else -s

    def to_key(self, t: float) -> float:
        return t if self.is_pvalue else -t

    def from_key(self, key: float) -> float:
        return key if self.is_pvalue else -key

    def subset(self, mask) -> "PairedStatistics":
        return PairedStatistics(
            self.feature_ids[mask], self.s1[mask], self.s2[mask], self.direction
        )


@dataclass(frozen=True, eq=False)
class RankIndex:
    """Sort orders and cross ranks of a :class:`PairedStatistics`.

    Positions are 0-based in ``order1``/``order2``; ranks are 1-based, so the
    feature at ``order1[i]`` has ``rank1 == i + 1``. ``cross[v - 1]`` is the
    study-1 rank of the feature holding study-2 rank ``v``; this is what the
    incremental bivariate count consumes. ``tie_end1[i]`` is the largest rank
    sharing the value at rank ``i + 1`` (equal to ``i + 1`` for untied values).
    """

    order1: np.ndarray
    order2: np.ndarray
    sorted1: np.ndarray
    sorted2: np.ndarray
    rank1: np.ndarray
    rank2: np.ndarray
    cross: np.ndarray
    tie_end1: np.ndarray
    tie_end2: np.ndarray
    p: int = field(default=0)

    def count1(self, key: float) -> int:
        return int(np.searchsorted(self.sorted1, key, side="right"))

    def count2(self, key: float) -> int:
        return int(np.searchsorted(self.sorted2, key, side="right"))


def _tie_ends(sorted_keys: np.ndarray) -> np.ndarray:
    p = len(sorted_keys)
    # last rank of each run of equal values, broadcast over the run
    is_end = np.ones(p, dtype=bool)
    is_end[:-1] = sorted_keys[1:] != sorted_keys[:-1]
    ends = np.flatnonzero(is_end) + 1
    run = np.concatenate(([0], np.cumsum(is_end)[:-1]))
    return ends[run].astype(np.int64)


def build_rank_index(data: PairedStatistics) -> RankIndex:
    if data.p == 0:
        raise ValueError("no features")
    k1, k2 = data.keys(1), data.keys(2)
    order1 = np.argsort(k1, kind="stable").astype(np.int64)
    order2 = np.argsort(k2, kind="stable").astype(np.int64)
    rank1 = np.empty(data.p, dtype=np.int64)
    rank1[order1] = np.arange(1, data.p + 1)
    rank2 = np.empty(data.p, dtype=np.int64)
    rank2[order2] = np.arange(1, data.p + 1)
    sorted1, sorted2 = k1[order1], k2[order2]
    arrays = dict(
        order1=order1,
        order2=order2,
        sorted1=sorted1,
        sorted2=sorted2,
        rank1=rank1,
        rank2=rank2,
        cross=rank1[order2],
        tie_end1=_tie_ends(sorted1),
        tie_end2=_tie_ends(sorted2),
    )
    return RankIndex(**{k: _readonly(np.ascontiguousarray(v)) for k, v in arrays.items()}, p=data.p)


def marginal_count(data: PairedStatistics, k: int, t: float) -> int:
    return int(np.count_nonzero(data.keys(k) <= data.to_key(t)))


def joint_count(data: PairedStatistics, t1: float, t2: float) -> int:
    inside = (data.keys(1) <= data.to_key(t1)) & (data.keys(2) <= data.to_key(t2))
    return int(np.count_nonzero(inside))


def marginal_ecdf(data: PairedStatistics, k: int, t: float) -> float:
    """Fraction of study-``k`` statistics on the significant side of ``t``, inclusive."""
    return marginal_count(data, k, t) / data.p


def bivariate_ecdf(data: PairedStatistics, t1: float, t2: float) -> float:
    """Fraction of features significant in both studies at ``(t1, t2)``."""
    return joint_count(data, t1, t2) / data.p


def region_mask(data: PairedStatistics, t1: float | None, t2: float | None) -> np.ndarray:
    """Boolean mask of features inside the rectangle; ``None`` is the empty region."""
    if t1 is None or t2 is None:
        return np.zeros(data.p, dtype=bool)
    return (data.keys(1) <= data.to_key(t1)) & (data.keys(2) <= data.to_key(t2))


def as_paired(
    s1: Sequence[float],
    s2: Sequence[float],
    direction: Direction | str = Direction.SMALL_IS_SIGNIFICANT,
    feature_ids=None,
) -> PairedStatistics:
    return PairedStatistics.from_arrays(s1, s2, Direction(direction), feature_ids)
