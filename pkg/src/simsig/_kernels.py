"""Compiled grid scans for the rectangular-region search.

Grid coordinates are 1-based ranks ``(u, v)``; the region ``(u, v)`` holds the
features whose study-1 rank is at most ``u`` and study-2 rank at most ``v``.
Only ranks closing a run of tied values are valid thresholds, otherwise the
rank count would disagree with the value-based ECDF.

Row ``u`` is scanned in ``v`` with the running count
``c(u, v) = c(u, v - 1) + [cross[v - 1] <= u]``. Two exact prunes keep the
scan small, both relying on correctly rounded division being monotone:

* standard estimator: ``c <= min(u, v)`` so a point can only be feasible when
  ``fl(u / p) <= alpha`` and ``fl(v / p) <= alpha``;
* any estimator: ``c(u, v) <= R(u)``, the row total, so once a lower bound
  on the value at ``(u, v, R(u))`` that is nondecreasing in ``v`` exceeds
  alpha nothing further right in the row is feasible. For the covariance
  adjusted estimator the subtracted term ``(2 sigma t1) t2`` is bounded by
  ``max(0, 2 sigma t1)`` since p-value thresholds never exceed 1.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _value(n1, n2, c, p, powerful, two_sigma, t1, t2):
    if c == 0:
        return 0.0
    if powerful:
        num = float(n1 * n2) - ((two_sigma * t1) * t2) * float(p * p)
        if num < 0.0:
            num = 0.0
        return num / float(p * c)
    return float(n1 * n2) / float(p * c)


@njit(cache=True, inline="always")
def _row_bound(n1, n2, total, p, powerful, sub):
    if powerful:
        num = float(n1 * n2) - sub * float(p * p)
        if num < 0.0:
            num = 0.0
        return num / float(p * total)
    return float(n1 * n2) / float(p * total)


@njit(cache=True)
def _bounds(p, ubound, vbound, alpha, powerful):
    if not powerful:
        cap = int(alpha * p) + 1
        ubound = min(ubound, cap)
        vbound = min(vbound, cap)
        while ubound > 0 and float(ubound) / float(p) > alpha:
            ubound -= 1
        while vbound > 0 and float(vbound) / float(p) > alpha:
            vbound -= 1
    return ubound, vbound


@njit(cache=True)
def _row_totals(rank2_by_rank1, ubound, vbound):
    tot = np.zeros(ubound + 1, dtype=np.int64)
    for u in range(1, ubound + 1):
        tot[u] = tot[u - 1] + (1 if rank2_by_rank1[u - 1] <= vbound else 0)
    return tot


@njit(cache=True)
def _row_stop(u, total, p, vbound, alpha, powerful, two_sigma, t1):
    # largest v in [0, vbound] whose row lower bound is <= alpha
    sub = two_sigma * t1
    if sub < 0.0:
        sub = 0.0
    lo, hi = 0, vbound
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _row_bound(u, mid, total, p, powerful, sub) <= alpha:
            lo = mid
        else:
            hi = mid - 1
    return lo


@njit(cache=True)
def scan_best(cross, rank2_by_rank1, tie_end1, tie_end2, area1, area2, p,
              ubound, vbound, alpha, powerful, two_sigma, smallest):
    """Return ``(count, u, v, area)`` of the selected optimum; ``(0, 0, 0, 0.0)`` if none."""
    ubound, vbound = _bounds(p, ubound, vbound, alpha, powerful)
    tot = _row_totals(rank2_by_rank1, ubound, vbound)
    best = 0
    bu = 0
    bv = 0
    barea = 0.0
    for u in range(1, ubound + 1):
        if tie_end1[u - 1] != u:
            continue
        total = tot[u]
        if total == 0 or total < best:
            continue
        a1 = area1[u - 1]
        vstop = _row_stop(u, total, p, vbound, alpha, powerful, two_sigma, a1)
        c = 0
        for v in range(1, vstop + 1):
            if cross[v - 1] <= u:
                c += 1
            if c < best or c == 0 or tie_end2[v - 1] != v:
                continue
            a2 = area2[v - 1]
            if _value(u, v, c, p, powerful, two_sigma, a1, a2) > alpha:
                continue
            area = a1 * a2
            if c > best:
                best = c
                bu = u
                bv = v
                barea = area
            elif smallest:
                if area < barea:
                    bu = u
                    bv = v
                    barea = area
            elif area > barea:
                bu = u
                bv = v
                barea = area
    return best, bu, bv, barea


@njit(cache=True)
def scan_ties(cross, rank2_by_rank1, tie_end1, tie_end2, area1, area2, p,
              ubound, vbound, alpha, powerful, two_sigma, target):
    """All valid grid points with count ``target`` that are feasible."""
    ubound, vbound = _bounds(p, ubound, vbound, alpha, powerful)
    tot = _row_totals(rank2_by_rank1, ubound, vbound)
    us = []
    vs = []
    for u in range(1, ubound + 1):
        if tie_end1[u - 1] != u:
            continue
        total = tot[u]
        if total < target:
            continue
        a1 = area1[u - 1]
        vstop = _row_stop(u, total, p, vbound, alpha, powerful, two_sigma, a1)
        c = 0
        for v in range(1, vstop + 1):
            if cross[v - 1] <= u:
                c += 1
            if c > target:
                break
            if c < target or tie_end2[v - 1] != v:
                continue
            if _value(u, v, c, p, powerful, two_sigma, a1, area2[v - 1]) <= alpha:
                us.append(u)
                vs.append(v)
    out = np.empty((len(us), 2), dtype=np.int64)
    for i in range(len(us)):
        out[i, 0] = us[i]
        out[i, 1] = vs[i]
    return out


@njit(cache=True)
def incremental_counts(cross, u, vmax):
    """Counts ``c(u, 1..vmax)`` by the running recurrence (for verification)."""
    out = np.empty(vmax, dtype=np.int64)
    c = 0
    for v in range(1, vmax + 1):
        if cross[v - 1] <= u:
            c += 1
        out[v - 1] = c
    return out
