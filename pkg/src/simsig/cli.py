"""Command-line entry point ``simsig``.

Exit codes: 0 when the run completed (zero discoveries included), 1 for
input or runtime errors, 2 for usage errors, 3 when ``verify`` finds a
disagreement.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .baselines import build_null_table, cache_dir, null_table_path, save_null_table
from .empirical import Direction, build_rank_index, region_mask
from .estimator import Estimator, estimate, sigma12_hat
from .io import (
    DiscoveryReport,
    IngestError,
    ingest,
    odds_ratio_diagnostic,
    verify_report,
    write_discoveries,
    write_plot_data,
)
from .multiseq import MultiStudy, multiseq_search, pair_discoveries
from .search import SearchConfig, TieRule, enumerate_tie_set, search

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        if getattr(self, "_json_errors", False):
            _emit_error("usage", message, True)
            sys.exit(EXIT_USAGE)
        super().error(message)


def _emit_error(kind: str, message: str, as_json: bool):
    if as_json:
        print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    else:
        print(f"simsig: error: {message}", file=sys.stderr)


def _column(text: str):
    return int(text) if text.isdigit() else text


def _add_input_args(p: argparse.ArgumentParser):
    p.add_argument("--id-col", default="0", help="ID column name or 0-based index (default 0)")
    p.add_argument("--p-col", default="1", help="value column name or index (default 1)")
    p.add_argument("--id-col-b", default=None, help="ID column in the second file, if different")
    p.add_argument("--p-col-b", default=None, help="value column in the second file, if different")
    p.add_argument("--sep", default=None, help="delimiter; auto-detected from the header by default")
    p.add_argument("--statistics", action="store_true",
                   help="values are test statistics (large is significant), not p-values")
    p.add_argument("--drop-invalid", action="store_true",
                   help="drop non-finite or out-of-range rows instead of failing")


def _read_pair(args):
    return ingest(
        args.file_a, args.file_b, _column(args.id_col), _column(args.p_col),
        id_column_b=None if args.id_col_b is None else _column(args.id_col_b),
        p_column_b=None if args.p_col_b is None else _column(args.p_col_b),
        sep=args.sep,
        direction=Direction.LARGE_IS_SIGNIFICANT if args.statistics else Direction.SMALL_IS_SIGNIFICANT,
        strict=not args.drop_invalid,
    )


def _build_parser() -> _Parser:
    ap = _Parser(prog="simsig", description="Simultaneous-signal discovery across two studies.")
    ap.add_argument("--version", action="version", version=f"simsig {__version__}")
    ap.add_argument("--json-errors", action="store_true", help="print errors as JSON on stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("discover", help="find the optimal rejection region for two input files")
    d.add_argument("file_a")
    d.add_argument("file_b")
    _add_input_args(d)
    d.add_argument("--alpha", type=float, default=0.05)
    d.add_argument("--tie", choices=[t.value for t in TieRule], default=TieRule.LARGEST_AREA.value)
    d.add_argument("--estimator", choices=[e.value for e in Estimator], default=Estimator.STANDARD.value)
    d.add_argument("--m1", type=int, default=None, help="search depth in study 1")
    d.add_argument("--m2", type=int, default=None, help="search depth in study 2")
    d.add_argument("--report", default="-", help="JSON report path ('-' for stdout)")
    d.add_argument("--discoveries", default=None, help="TSV of discovered features")
    d.add_argument("--plot-data", default=None, help="TSV of per-feature plot coordinates")
    d.add_argument("--no-tie-set", action="store_true", help="skip counting the optimal tie set")

    v = sub.add_parser("verify", help="recompute a discovery report from its inputs")
    v.add_argument("report")
    v.add_argument("file_a")
    v.add_argument("file_b")
    _add_input_args(v)

    s = sub.add_parser("simulate", help="run scenarios from an INI config file")
    s.add_argument("config")
    s.add_argument("--replications", type=int, default=None, help="override every scenario's count")
    s.add_argument("--full", action="store_true", help="use 1000 replications")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default="-", help="TSV path ('-' for stdout)")
    s.add_argument("--build-null", action="store_true",
                   help="build missing Berk-Jones null tables instead of failing")

    c = sub.add_parser("calibrate-bj", help="build a Monte-Carlo Berk-Jones null table")
    c.add_argument("--n", type=int, default=50, help="Z-scores per feature")
    c.add_argument("--B", type=int, default=10_000, help="null draws")
    c.add_argument("--seed", type=int, default=1)
    c.add_argument("--dir", default=None, help=f"output directory (default {cache_dir()})")

    m = sub.add_parser("multiseq", help="thresholds for K >= 2 studies")
    m.add_argument("files", nargs="+")
    m.add_argument("--id-col", default="0")
    m.add_argument("--p-col", default="1")
    m.add_argument("--sep", default=None)
    m.add_argument("--alpha", type=float, default=0.05)
    m.add_argument("--strategy", choices=["coordinate", "symmetric"], default="coordinate")
    m.add_argument("--depth", type=int, default=None)
    m.add_argument("--report", default="-")

    b = sub.add_parser("bench", help="time the search on synthetic data")
    b.add_argument("--p", type=int, default=1_000_000)
    b.add_argument("--m", type=int, default=100_000)
    b.add_argument("--estimator", choices=[e.value for e in Estimator], default=Estimator.STANDARD.value)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--tie-set", action="store_true", help="also enumerate the optimal tie set")
    return ap


def _write_json(obj, dest: str):
    text = json.dumps(obj, indent=2) + "\n"
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text)


def cmd_discover(args) -> int:
    t0 = time.perf_counter()
    res = _read_pair(args)
    data = res.data
    t1 = time.perf_counter()
    config = SearchConfig(args.alpha, args.m1, args.m2, TieRule(args.tie), Estimator(args.estimator))
    index = build_rank_index(data)
    sigma12 = sigma12_hat(data) if data.is_pvalue and data.p >= 2 else None
    th = search(data, index, config, sigma12)
    t2 = time.perf_counter()
    tie_size = -1 if args.no_tie_set else len(enumerate_tie_set(data, config, index, sigma12))
    t3 = time.perf_counter()
    mask = region_mask(data, th.t1, th.t2)
    if th.is_empty:
        n1 = n2 = 0
    else:
        est = estimate(data, index, th.t1, th.t2, config.estimator, sigma12)
        n1, n2 = est.n1, est.n2
    report = DiscoveryReport(
        config={
            "file_a": str(args.file_a), "file_b": str(args.file_b),
            "alpha": config.alpha, "tie_rule": config.tie_rule.value,
            "m1": config.depths(data.p)[0], "m2": config.depths(data.p)[1],
            "direction": data.direction.value,
        },
        t1=th.t1, t2=th.t2, grid_u=th.achieved_at_grid[0], grid_v=th.achieved_at_grid[1],
        estimator=config.estimator.value,
        n_features=data.p,
        n_discoveries=th.n_discoveries,
        fdr_estimate=th.fdr_estimate,
        marginal_counts=(n1, n2),
        discovered_ids=sorted(str(x) for x in data.feature_ids[mask]),
        sigma12=sigma12,
        odds_ratio=odds_ratio_diagnostic(data) if data.is_pvalue else None,
        tie_set_size=tie_size,
        seconds={"ingest": t1 - t0, "search": t2 - t1, "tie_set": t3 - t2},
        ingest=vars(res.report),
    )
    if args.report == "-":
        sys.stdout.write(report.to_json())
    else:
        report.to_json(args.report)
    if args.discoveries:
        write_discoveries(data, mask, args.discoveries)
    if args.plot_data:
        write_plot_data(data, mask, args.plot_data)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = DiscoveryReport.load(args.report)
    data = _read_pair(args).data
    problems = verify_report(report, data)
    _write_json({"ok": not problems, "problems": problems}, "-")
    return EXIT_OK if not problems else EXIT_VERIFY


def cmd_simulate(args) -> int:
    from .baselines import get_null_table
    from .simulation.config import load_scenarios
    from .simulation.runner import aggregates_tsv, resolve_methods, run_replications
    from .simulation.scenarios import SignalModel

    results = []
    for cfg in load_scenarios(args.config):
        n = 1000 if args.full else args.replications
        table = None
        if cfg.signal_model is SignalModel.CORRELATED_BERK_JONES and "max-p" in resolve_methods(cfg):
            table = get_null_table(cfg.block, cfg.bj_null_B, cfg.seed, build=args.build_null)
        results.append(run_replications(cfg, n, workers=args.workers, null_table=table))
    text = aggregates_tsv(results)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    t0 = time.perf_counter()
    table = build_null_table(args.n, args.B, args.seed)
    path = save_null_table(table, null_table_path(args.n, args.B, args.seed, args.dir))
    _write_json({"path": str(path), "n": args.n, "B": args.B, "seed": args.seed,
                 "seconds": time.perf_counter() - t0}, "-")
    return EXIT_OK


def cmd_multiseq(args) -> int:
    from .io import read_study

    if len(args.files) < 2:
        raise ValueError("multiseq needs at least two files")
    studies = []
    for f in args.files:
        df = read_study(f, _column(args.id_col), _column(args.p_col), args.sep)
        studies.append((df["id"].to_numpy(dtype=object), df["value"].to_numpy()))
    data = MultiStudy.align(studies, names=[str(f) for f in args.files])
    res = multiseq_search(data, args.alpha, args.strategy, args.depth)
    disc = pair_discoveries(data, res)
    _write_json({
        "schema_version": 1,
        "files": list(data.names),
        "alpha": args.alpha,
        "strategy": res.strategy,
        "n_features": data.p,
        "dropped": data.dropped,
        "thresholds": list(res.thresholds),
        "overall_fdr_estimate": res.overall_estimate,
        "total_discoveries": res.objective,
        "pairs": [
            {"a": data.names[a], "b": data.names[b], "n_discoveries": c, "discovered_ids": disc[(a, b)]}
            for (a, b), c in res.pair_counts.items()
        ],
        "objective_trace": list(res.trace),
    }, args.report)
    return EXIT_OK


def bench_data(p: int, seed: int = 1):
    """Two-sided t4 p-values, 0.5% signals in each of the three signal classes."""
    from .simulation.scenarios import Scenario, ScenarioConfig

    k = max(1, p // 200)
    cfg = ScenarioConfig(p=p, p10=k, p01=k, p11=k, seed=seed)
    return Scenario.build(cfg).replicate(0)


def cmd_bench(args) -> int:
    t0 = time.perf_counter()
    data = bench_data(args.p, args.seed)
    t1 = time.perf_counter()
    config = SearchConfig(0.05, args.m, args.m, TieRule.LARGEST_AREA, Estimator(args.estimator))
    index = build_rank_index(data)
    t2 = time.perf_counter()
    th = search(data, index, config)
    t3 = time.perf_counter()
    out = {
        "p": args.p, "m": args.m, "estimator": args.estimator,
        "n_discoveries": th.n_discoveries, "fdr_estimate": th.fdr_estimate,
        "seconds": {"generate": t1 - t0, "index": t2 - t1, "search": t3 - t2, "total": t3 - t0},
    }
    if args.tie_set:
        tt = time.perf_counter()
        out["tie_set_size"] = len(enumerate_tie_set(data, config, index))
        out["seconds"]["tie_set"] = time.perf_counter() - tt
        out["seconds"]["total"] = time.perf_counter() - t0
    _write_json(out, "-")
    return EXIT_OK


_COMMANDS = {
    "discover": cmd_discover,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "calibrate-bj": cmd_calibrate,
    "multiseq": cmd_multiseq,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    as_json = "--json-errors" in argv
    if as_json:
        parser._json_errors = True
        for action in parser._subparsers._group_actions:
            for sp in action.choices.values():
                sp._json_errors = True
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (IngestError, ValueError, FileNotFoundError, OSError) as e:
        _emit_error(type(e).__name__, str(e), as_json)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
