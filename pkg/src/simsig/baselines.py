"""Reference procedures: Benjamini-Hochberg on max p-values, and Berk-Jones.

Berk-Jones p-values come from a Monte-Carlo null table (independent standard
normal Z-scores) that is cached on disk; see :func:`null_table_path` for the
file layout.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special

from .empirical import PairedStatistics

NULL_TABLE_VERSION = 1
CACHE_ENV = "SIMSIG_CACHE_DIR"


@dataclass(frozen=True)
class BhResult:
    rejected: np.ndarray
    k_star: int
    threshold: float

    @property
    def n_rejected(self) -> int:
        return int(self.rejected.sum())


def benjamini_hochberg(pvalues, alpha: float = 0.05) -> BhResult:
    """Step-up rule: reject the ``k*`` smallest p-values, ``k* = max{i : p_(i) <= i alpha / m}``."""
    pv = np.asarray(pvalues, dtype=np.float64)
    m = pv.size
    if m == 0:
        return BhResult(np.zeros(0, dtype=bool), 0, 0.0)
    srt = np.sort(pv)
    below = np.flatnonzero(srt <= np.arange(1, m + 1) * alpha / m)
    if below.size == 0:
        return BhResult(np.zeros(m, dtype=bool), 0, 0.0)
    k_star = int(below[-1]) + 1
    threshold = float(srt[k_star - 1])
    return BhResult(pv <= threshold, k_star, threshold)


def max_p_combine(data: PairedStatistics) -> np.ndarray:
    if not data.is_pvalue:
        raise ValueError("max-p combination requires p-values")
    return np.maximum(data.s1, data.s2)


def chi2_1_cdf(x):
    """CDF and survival function of chi-square(1): ``erf(sqrt(x/2))`` and its complement."""
    r = np.sqrt(np.maximum(np.asarray(x, dtype=np.float64), 0.0) / 2.0)
    return special.erf(r), special.erfc(r)


def _bj_from_sorted(x_sorted: np.ndarray, cdf, sf) -> np.ndarray:
    n = x_sorted.shape[-1]
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    # the empirical CDF jumps at each order statistic: compare both its value
    # there and its left limit against F0 at that point
    kl_upper = special.rel_entr(upper, cdf) + special.rel_entr(1.0 - upper, sf)
    kl_lower = special.rel_entr(lower, cdf) + special.rel_entr(1.0 - lower, sf)
    return np.maximum(kl_upper.max(axis=-1), kl_lower.max(axis=-1))


def berk_jones(z_scores, null_cdf=None) -> float:
    """Berk-Jones statistic of the squared scores against ``null_cdf`` (chi-square(1) by default)."""
    z = np.asarray(z_scores, dtype=np.float64).ravel()
    if z.size == 0:
        raise ValueError("Berk-Jones needs a nonempty sample")
    x = np.sort(z * z)
    if null_cdf is None:
        cdf, sf = chi2_1_cdf(x)
    else:
        cdf = np.asarray(null_cdf(x), dtype=np.float64)
        sf = 1.0 - cdf
    return float(_bj_from_sorted(x, cdf, sf))


def berk_jones_rows(z: np.ndarray) -> np.ndarray:
    """Row-wise Berk-Jones statistics with the chi-square(1) null, for a ``(features, n)`` array."""
    x = np.sort(np.square(z), axis=1)
    cdf, sf = chi2_1_cdf(x)
    return _bj_from_sorted(x, cdf, sf)


@dataclass(frozen=True, eq=False)
class NullTable:
    n: int
    B: int
    seed: int
    values: np.ndarray  # sorted ascending


def build_null_table(n: int, B: int = 10_000, seed: int = 0, chunk: int = 2000) -> NullTable:
    rng = np.random.default_rng([seed, n, B])
    out = []
    left = B
    while left > 0:
        k = min(chunk, left)
        out.append(berk_jones_rows(rng.standard_normal((k, n))))
        left -= k
    return NullTable(n, B, seed, np.sort(np.concatenate(out)))


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "simsig"))


def null_table_path(n: int, B: int, seed: int, directory: Path | str | None = None) -> Path:
    """``bj_null_n{n}_B{B}_seed{seed}.txt``: ``#`` header lines with
    ``format_version``, ``n``, ``B`` and ``seed``, then one sorted value per line."""
    directory = Path(directory) if directory is not None else cache_dir()
    return directory / f"bj_null_n{n}_B{B}_seed{seed}.txt"


def save_null_table(table: NullTable, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        fh.write("# simsig berk-jones null table\n")
        fh.write(f"# format_version={NULL_TABLE_VERSION}\n")
        fh.write(f"# n={table.n}\n# B={table.B}\n# seed={table.seed}\n")
        for v in table.values:
            fh.write(f"{float(v)!r}\n")
    os.replace(tmp, path)
    return path


def load_null_table(path: Path | str) -> NullTable:
    path = Path(path)
    header = {}
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    k, v = line[1:].strip().split("=", 1)
                    header[k.strip()] = v.strip()
                continue
            values.append(float(line))
    version = int(header.get("format_version", -1))
    if version != NULL_TABLE_VERSION:
        raise ValueError(f"{path}: unsupported null table format_version {version}")
    table = NullTable(int(header["n"]), int(header["B"]), int(header["seed"]), np.array(values))
    if table.values.size != table.B:
        raise ValueError(f"{path}: header says B={table.B} but found {table.values.size} values")
    return table


def get_null_table(
    n: int, B: int = 10_000, seed: int = 0, directory=None, build: bool = False
) -> NullTable:
    path = null_table_path(n, B, seed, directory)
    if path.exists():
        return load_null_table(path)
    if not build:
        raise FileNotFoundError(
            f"no Berk-Jones null table at {path}; "
            f"run `simsig calibrate-bj --n {n} --B {B} --seed {seed}` first"
        )
    table = build_null_table(n, B, seed)
    save_null_table(table, path)
    return table


def berk_jones_pvalue(stat, n: int, null_table: NullTable | None):
    """Right-tail Monte-Carlo p-value ``(r + 1) / (B + 1)``, ``r = #{null >= stat}``."""
    if null_table is None:
        raise FileNotFoundError(
            f"no Berk-Jones null table for n={n}; run `simsig calibrate-bj --n {n}` first"
        )
    if null_table.n != n:
        raise ValueError(f"null table built for n={null_table.n}, not n={n}")
    stat = np.asarray(stat, dtype=np.float64)
    r = null_table.B - np.searchsorted(null_table.values, stat, side="left")
    out = (r + 1.0) / (null_table.B + 1.0)
    return float(out) if out.ndim == 0 else out
