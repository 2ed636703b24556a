"""Rectangular rejection regions for finding features significant in two studies."""

from .baselines import benjamini_hochberg, berk_jones, berk_jones_pvalue
from .empirical import Direction, PairedStatistics, RankIndex, as_paired, build_rank_index
from .estimator import Estimator, FdrEstimate, estimate, fdr_hat_powerful, fdr_hat_u, sigma12_hat
from .search import (
    RejectionThresholds,
    SearchConfig,
    TieRule,
    brute_force_search,
    enumerate_tie_set,
    search,
)

__version__ = "0.1.0"
