"""Reading summary-statistic files and writing discovery reports.

Input files are delimited text with a header row; the delimiter (tab, comma,
or whitespace) is detected from the header unless given. Values are parsed
with correctly rounded conversion so that a written file re-reads bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .empirical import Direction, PairedStatistics, build_rank_index, region_mask
from .estimator import Estimator, estimate

SCHEMA_VERSION = 1


class IngestError(ValueError):
    pass


def detect_delimiter(path) -> str:
    with open(path) as fh:
        header = fh.readline()
    if "\t" in header:
        return "\t"
    if "," in header:
        return ","
    return r"\s+"


def _resolve_column(columns, col, path) -> str:
    if isinstance(col, int) or (isinstance(col, str) and col not in columns and col.isdigit()):
        i = int(col)
        if not 0 <= i < len(columns):
            raise IngestError(f"{path}: column index {i} out of range (file has {len(columns)} columns)")
        return columns[i]
    if col not in columns:
        raise IngestError(f"{path}: missing column {col!r}; available: {list(columns)}")
    return col


def read_study(path, id_column=0, value_column=1, sep: str | None = None) -> pd.DataFrame:
    """Two-column frame ``id`` (str) and ``value`` (float), in file order, with 1-based file lines."""
    path = Path(path)
    sep = sep or detect_delimiter(path)
    engine = "python" if len(sep) > 1 else "c"
    try:
        raw = pd.read_csv(path, sep=sep, engine=engine, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise IngestError(f"{path}: empty file") from e
    cols = list(raw.columns)
    idc = _resolve_column(cols, id_column, path)
    vc = _resolve_column(cols, value_column, path)
    # IDs are kept verbatim; values go through Python's correctly rounded
    # float() so that repr-written files re-read bit for bit
    values = np.array([_parse_float(x) for x in raw[vc]], dtype=np.float64)
    df = pd.DataFrame({"id": raw[idc].str.strip(), "value": values, "line": np.arange(2, len(raw) + 2)})
    dup = df["id"].duplicated(keep=False)
    if dup.any():
        first = df.loc[dup, "id"].iloc[0]
        raise IngestError(f"{path}: duplicate ID {first!r} ({int(dup.sum())} rows share duplicated IDs)")
    return df


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return math.nan


@dataclass
class IngestReport:
    rows_a: int
    rows_b: int
    invalid_a: int
    invalid_b: int
    unmatched_a: int
    unmatched_b: int
    joined: int


@dataclass
class IngestResult:
    data: PairedStatistics
    report: IngestReport


def _check_values(df: pd.DataFrame, path, direction: Direction, strict: bool):
    v = df["value"].to_numpy()
    bad = ~np.isfinite(v)
    if direction is Direction.SMALL_IS_SIGNIFICANT:
        with np.errstate(invalid="ignore"):
            bad |= (v < 0.0) | (v > 1.0)
    if bad.any() and strict:
        i = int(np.flatnonzero(bad)[0])
        row = df.iloc[i]
        what = "non-finite value" if not np.isfinite(row["value"]) else f"p-value {row['value']!r} outside [0, 1]"
        raise IngestError(f"{path}: line {row['line']} (ID {row['id']!r}): {what}")
    return df.loc[~bad], int(bad.sum())


def ingest(
    file_a,
    file_b,
    id_column=0,
    p_column=1,
    *,
    id_column_b=None,
    p_column_b=None,
    sep: str | None = None,
    direction: Direction | str = Direction.SMALL_IS_SIGNIFICANT,
    strict: bool = True,
) -> IngestResult:
    """Inner-join two studies on feature ID, sorted by ID.

    With ``strict`` an invalid value is an error naming its line; otherwise
    such rows are dropped and counted in the report.
    """
    direction = Direction(direction)
    a = read_study(file_a, id_column, p_column, sep)
    b = read_study(file_b, id_column if id_column_b is None else id_column_b,
                   p_column if p_column_b is None else p_column_b, sep)
    rows_a, rows_b = len(a), len(b)
    a, inv_a = _check_values(a, file_a, direction, strict)
    b, inv_b = _check_values(b, file_b, direction, strict)
    joined = a.merge(b, on="id", how="inner", suffixes=("_a", "_b"))
    if joined.empty:
        raise IngestError(f"{file_a} and {file_b} share no feature IDs")
    joined = joined.sort_values("id", kind="stable")
    data = PairedStatistics(
        joined["id"].to_numpy(dtype=object),
        joined["value_a"].to_numpy(dtype=np.float64),
        joined["value_b"].to_numpy(dtype=np.float64),
        direction,
    )
    report = IngestReport(rows_a, rows_b, inv_a, inv_b, len(a) - len(joined), len(b) - len(joined), len(joined))
    return IngestResult(data, report)


def write_paired(data: PairedStatistics, path, sep: str = "\t") -> Path:
    """Columns ``id``, ``s1``, ``s2``; re-read with ``ingest(path, path, "id", "s1", p_column_b="s2")``."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(sep.join(("id", "s1", "s2")) + "\n")
        for i, x, y in zip(data.feature_ids, data.s1, data.s2):
            fh.write(f"{i}{sep}{float(x)!r}{sep}{float(y)!r}\n")
    return path


def odds_ratio_diagnostic(data: PairedStatistics, cutoff: float = 0.05) -> float:
    """Odds ratio of the 2x2 table of ``P1 <= cutoff`` by ``P2 <= cutoff``.

    Adds 0.5 to every cell when any cell is empty.
    """
    if not data.is_pvalue:
        raise ValueError("odds-ratio diagnostic requires p-values")
    x, y = data.s1 <= cutoff, data.s2 <= cutoff
    n11 = float(np.sum(x & y))
    n10 = float(np.sum(x & ~y))
    n01 = float(np.sum(~x & y))
    n00 = float(np.sum(~x & ~y))
    if min(n11, n10, n01, n00) == 0.0:
        n11, n10, n01, n00 = n11 + 0.5, n10 + 0.5, n01 + 0.5, n00 + 0.5
    return (n11 * n00) / (n10 * n01)


@dataclass
class DiscoveryReport:
    config: dict
    t1: float | None
    t2: float | None
    grid_u: int
    grid_v: int
    estimator: str
    n_features: int
    n_discoveries: int
    fdr_estimate: float
    marginal_counts: tuple[int, int]
    discovered_ids: list[str]
    sigma12: float | None
    odds_ratio: float | None
    tie_set_size: int
    seconds: dict = field(default_factory=dict)
    ingest: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = asdict(self)
        d["marginal_counts"] = list(self.marginal_counts)
        return d

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, allow_nan=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "DiscoveryReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {d.get('schema_version')!r}")
        d = dict(d)
        d["marginal_counts"] = tuple(d["marginal_counts"])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "DiscoveryReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def write_discoveries(data: PairedStatistics, mask: np.ndarray, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("id\ts1\ts2\n")
        for i in np.flatnonzero(mask):
            fh.write(f"{data.feature_ids[i]}\t{float(data.s1[i])!r}\t{float(data.s2[i])!r}\n")
    return path


def write_plot_data(data: PairedStatistics, mask: np.ndarray, path) -> Path:
    """Per-feature plotting coordinates: ``-log10`` p-values, or raw statistics."""
    path = Path(path)
    if data.is_pvalue:
        with np.errstate(divide="ignore"):
            x, y = -np.log10(data.s1), -np.log10(data.s2)
        header = "id\tneg_log10_p1\tneg_log10_p2\tdiscovered\n"
    else:
        x, y = data.s1, data.s2
        header = "id\tstat1\tstat2\tdiscovered\n"
    with open(path, "w") as fh:
        fh.write(header)
        for i in range(data.p):
            fh.write(f"{data.feature_ids[i]}\t{float(x[i])!r}\t{float(y[i])!r}\t{int(mask[i])}\n")
    return path


def verify_report(report: DiscoveryReport, data: PairedStatistics, tol: float = 1e-12) -> list[str]:
    """Recompute every derived report field from the inputs; returns the disagreements."""
    problems = []
    if report.n_features != data.p:
        problems.append(f"n_features {report.n_features} != {data.p}")
    mask = region_mask(data, report.t1, report.t2)
    ids = sorted(str(x) for x in data.feature_ids[mask])
    if sorted(report.discovered_ids) != ids:
        problems.append("discovered_ids differ from the features inside the region")
    if report.n_discoveries != int(mask.sum()):
        problems.append(f"n_discoveries {report.n_discoveries} != {int(mask.sum())}")
    if report.t1 is None:
        if report.n_discoveries != 0 or report.fdr_estimate != 0.0:
            problems.append("empty region must report zero discoveries and estimate 0")
        return problems
    index = build_rank_index(data)
    est = estimate(data, index, report.t1, report.t2, Estimator(report.estimator), report.sigma12)
    if (est.n1, est.n2) != tuple(report.marginal_counts):
        problems.append(f"marginal counts {report.marginal_counts} != {(est.n1, est.n2)}")
    if abs(est.value - report.fdr_estimate) > tol:
        problems.append(f"fdr_estimate {report.fdr_estimate} != recomputed {est.value}")
    alpha = report.config.get("alpha")
    if alpha is not None and est.value > alpha:
        problems.append(f"estimate {est.value} exceeds alpha {alpha}")
    if data.is_pvalue and report.odds_ratio is not None:
        if abs(odds_ratio_diagnostic(data) - report.odds_ratio) > tol * max(1.0, abs(report.odds_ratio)):
            problems.append("odds_ratio differs from recomputed value")
    return problems
