"""Replicated simulation runs: every procedure on every replication, then averages."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..baselines import benjamini_hochberg, berk_jones_pvalue, get_null_table, max_p_combine
from ..empirical import PairedStatistics, build_rank_index, region_mask
from ..estimator import Estimator, fdr_hat_u, sigma12_hat
from ..search import SearchConfig, TieRule, search
from .scenarios import Scenario, ScenarioConfig, SignalModel

PVALUE_METHODS = ("proposed-max", "proposed-min", "powerful-max", "powerful-min", "max-p")
STATISTIC_METHODS = ("proposed-max", "proposed-min", "max-p")

_SEARCH_METHODS = {
    "proposed-max": (Estimator.STANDARD, TieRule.LARGEST_AREA),
    "proposed-min": (Estimator.STANDARD, TieRule.SMALLEST_AREA),
    "powerful-max": (Estimator.POWERFUL, TieRule.LARGEST_AREA),
    "powerful-min": (Estimator.POWERFUL, TieRule.SMALLEST_AREA),
}


def default_methods(config: ScenarioConfig) -> tuple[str, ...]:
    if config.signal_model is SignalModel.CORRELATED_BERK_JONES:
        return STATISTIC_METHODS
    return PVALUE_METHODS


def resolve_methods(config: ScenarioConfig) -> tuple[str, ...]:
    methods = config.methods or default_methods(config)
    for m in methods:
        if m not in _SEARCH_METHODS and m != "max-p":
            raise ValueError(f"unknown method {m!r}")
        if m.startswith("powerful") and config.signal_model is SignalModel.CORRELATED_BERK_JONES:
            raise ValueError("the covariance-adjusted estimator needs p-values")
    return tuple(methods)


@dataclass(frozen=True)
class ReplicationSummary:
    """Outcome of one method on one replication."""

    method: str
    replication: int
    discoveries: int
    true_positives: int

    def __post_init__(self):
        if not 0 <= self.true_positives <= self.discoveries:
            raise ValueError("true positives must lie in 0..discoveries")

    @property
    def false_discoveries(self) -> int:
        return self.discoveries - self.true_positives

    @property
    def fdp(self) -> float:
        return self.false_discoveries / max(1, self.discoveries)


@dataclass(frozen=True)
class MethodAggregate:
    method: str
    replications: int
    fdr: float
    fdr_se: float
    mean_discoveries: float
    discoveries_se: float
    power: float


@dataclass
class SimulationResult:
    config: ScenarioConfig
    summaries: list[ReplicationSummary] = field(default_factory=list)

    def by_method(self, method: str) -> list[ReplicationSummary]:
        rows = [s for s in self.summaries if s.method == method]
        return sorted(rows, key=lambda s: s.replication)

    @property
    def methods(self) -> tuple[str, ...]:
        seen = []
        for s in self.summaries:
            if s.method not in seen:
                seen.append(s.method)
        return tuple(seen)

    def discoveries(self, method: str) -> np.ndarray:
        return np.array([s.discoveries for s in self.by_method(method)], dtype=np.int64)

    def fdp(self, method: str) -> np.ndarray:
        return np.array([s.fdp for s in self.by_method(method)], dtype=np.float64)

    def aggregate(self, method: str) -> MethodAggregate:
        rows = self.by_method(method)
        n = len(rows)
        fdp = self.fdp(method)
        disc = self.discoveries(method).astype(np.float64)
        tp = np.array([s.true_positives for s in rows], dtype=np.float64)
        se = lambda x: float(x.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
        n_sim = self.config.p11
        return MethodAggregate(
            method=method,
            replications=n,
            fdr=float(fdp.mean()),
            fdr_se=se(fdp),
            mean_discoveries=float(disc.mean()),
            discoveries_se=se(disc),
            power=float(tp.mean() / n_sim) if n_sim else float("nan"),
        )

    def aggregates(self) -> list[MethodAggregate]:
        return [self.aggregate(m) for m in self.methods]


class _Evaluator:
    """Applies each configured method to one replication's data."""

    def __init__(self, scenario: Scenario, methods, null_table=None):
        self.scenario = scenario
        self.methods = methods
        self.null_table = null_table
        self.simultaneous = scenario.truth.simultaneous
        cfg = scenario.config
        if "max-p" in methods and cfg.signal_model is SignalModel.CORRELATED_BERK_JONES and null_table is None:
            self.null_table = get_null_table(cfg.block, cfg.bj_null_B, cfg.seed)

    def _max_p(self, data: PairedStatistics) -> np.ndarray:
        if data.is_pvalue:
            combined = max_p_combine(data)
        else:
            n = self.scenario.config.block
            combined = np.maximum(
                berk_jones_pvalue(data.s1, n, self.null_table),
                berk_jones_pvalue(data.s2, n, self.null_table),
            )
        return benjamini_hochberg(combined, self.scenario.config.alpha).rejected

    def run(self, replication: int) -> list[ReplicationSummary]:
        cfg = self.scenario.config
        data = self.scenario.replicate(replication)
        index = build_rank_index(data)
        sigma12 = None
        out = []
        for method in self.methods:
            if method == "max-p":
                rejected = self._max_p(data)
            else:
                estimator, tie = _SEARCH_METHODS[method]
                if estimator is Estimator.POWERFUL and sigma12 is None:
                    sigma12 = sigma12_hat(data)
                sc = SearchConfig(alpha=cfg.alpha, m1=cfg.m, m2=cfg.m, tie_rule=tie, estimator=estimator)
                th = search(data, index, sc, sigma12)
                rejected = region_mask(data, th.t1, th.t2)
            out.append(
                ReplicationSummary(
                    method, replication, int(rejected.sum()), int((rejected & self.simultaneous).sum())
                )
            )
        return out


def _run_chunk(args):
    config, methods, reps, null_table = args
    ev = _Evaluator(Scenario.build(config), methods, null_table)
    out = []
    for r in reps:
        out.extend(ev.run(r))
    return out


def run_replications(
    config: ScenarioConfig,
    replications: int | None = None,
    workers: int = 1,
    null_table=None,
) -> SimulationResult:
    """Run every method on replications ``0..n-1``.

    Each replication has its own random stream, so the result is the same for
    any ``workers``; summaries are stored in replication order.
    """
    n = config.replications if replications is None else replications
    methods = resolve_methods(config)
    if "max-p" in methods and config.signal_model is SignalModel.CORRELATED_BERK_JONES and null_table is None:
        null_table = get_null_table(config.block, config.bj_null_B, config.seed)
    if workers <= 1 or n < 2:
        summaries = _run_chunk((config, methods, range(n), null_table))
    else:
        chunks = [list(range(n))[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [(config, methods, c, null_table) for c in chunks])
            summaries = [s for part in parts for s in part]
    order = {m: i for i, m in enumerate(methods)}
    summaries.sort(key=lambda s: (s.replication, order[s.method]))
    return SimulationResult(config, summaries)


TSV_COLUMNS = ("scenario", "method", "FDR", "discoveries", "FDR_se", "discoveries_se", "power", "replications")


def aggregates_tsv(results, out=None) -> str:
    """One row per scenario and method: ``scenario, method, FDR, discoveries, ...``."""
    if isinstance(results, SimulationResult):
        results = [results]
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(TSV_COLUMNS)
    for res in results:
        for a in res.aggregates():
            w.writerow([
                res.config.label(), a.method, f"{a.fdr:.3f}", f"{a.mean_discoveries:.3f}",
                f"{a.fdr_se:.4f}", f"{a.discoveries_se:.3f}", f"{a.power:.4f}", a.replications,
            ])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def sigma12_by_replication(config: ScenarioConfig, replications: int) -> np.ndarray:
    sc = Scenario.build(config)
    return np.array([sigma12_hat(sc.replicate(r)) for r in range(replications)])


def conservativeness_gap(data: PairedStatistics, simultaneous: np.ndarray, grid) -> float:
    """Smallest ``estimate - realized FDP`` over the threshold pairs in ``grid``.

    The realized FDP uses the known simultaneous-signal indicators.
    """
    gaps = []
    for t1 in grid:
        for t2 in grid:
            mask = region_mask(data, t1, t2)
            r = int(mask.sum())
            fdp = int((mask & ~simultaneous).sum()) / max(1, r)
            gaps.append(fdr_hat_u(data, None, t1, t2).value - fdp)
    return float(min(gaps))


def appendix_t4_scenarios(**kw) -> list[ScenarioConfig]:
    """Signal totals (study 1, study 2) crossed with simultaneous counts, t4 signals."""
    out = []
    for n1, n2 in ((100, 100), (100, 50), (50, 50)):
        for n11 in (50, 25):
            out.append(ScenarioConfig.signal_counts(n1, n2, n11, signal_model=SignalModel.NONCENTRAL_T4, **kw))
    return out


def appendix_bj_scenarios(**kw) -> list[ScenarioConfig]:
    """Signal totals crossed with ``rho`` in {0.5, 0.7}; 50 simultaneous signals."""
    out = []
    for n1, n2 in ((100, 100), (100, 50), (50, 50)):
        for rho in (0.5, 0.7):
            out.append(
                ScenarioConfig.signal_counts(
                    n1, n2, 50, signal_model=SignalModel.CORRELATED_BERK_JONES, rho=rho, **kw
                )
            )
    return out
