"""Gene-set enrichment over gene scores via the two-sample KS statistic.

For a gene set S, the statistic is the sup over t of the absolute difference
between the empirical CDFs of scores inside and outside S.  Significance is
assessed by permuting the in-set/out-set labels (add-one smoothed p-value),
with the classical asymptotic two-sample KS p-value reported alongside.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov

from ._rng import string_key
from ._tsv import format_float, write_tsv

DEFAULT_MIN_SIZE = 10
DEFAULT_PERM_REPS = 999


@dataclass(frozen=True)
class GeneSet:
    """A named gene set and the GMT line it came from."""

    set_id: str
    members: frozenset[str]
    source_line: int = 0

    def __post_init__(self):
        if not self.members:
            raise ValueError(f"gene set {self.set_id!r} has no members")


@dataclass(frozen=True)
class GseaResult:
    """One gene set's statistic and p-values."""

    set_id: str
    k: int  # scored genes inside the set
    k_prime: int  # scored genes outside the set
    ks_stat: float
    p_perm: float
    p_asymptotic: float


def read_gmt(path) -> list[GeneSet]:
    """Read gene sets from a GMT file: set_id<TAB>description<TAB>gene...

    Every line must carry at least one gene; duplicate genes within a line
    and duplicate set ids are errors naming the offending line.
    """
    sets: list[GeneSet] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise ValueError(
                    f"{path}:{lineno}: expected set_id, description, and at least one gene"
                )
            set_id, genes = fields[0], fields[2:]
            if set_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate set id: {set_id!r}")
            seen.add(set_id)
            if len(set(genes)) != len(genes):
                raise ValueError(f"{path}:{lineno}: duplicate gene within set {set_id!r}")
            sets.append(GeneSet(set_id=set_id, members=frozenset(genes), source_line=lineno))
    if not sets:
        raise ValueError(f"{path}: no gene sets found")
    return sets


def _check_scores(scores: dict[str, float]) -> None:
    for gene, value in scores.items():
        if not math.isfinite(value):
            raise ValueError(f"score for gene {gene!r} is not finite")


def _split_counts(scores: dict[str, float], members: frozenset[str]) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Sorted pooled values, in-set indicator aligned to them, and side sizes.

    Ties are ordered by gene id so the indicator layout (and hence the
    permutation stream consumption) is a pure function of the inputs.
    """
    items = sorted(scores.items(), key=lambda kv: (kv[1], kv[0]))
    values = np.array([v for _, v in items])
    indicator = np.array([g in members for g, _ in items], dtype=np.int64)
    k = int(indicator.sum())
    return values, indicator, k, values.shape[0] - k


def _tie_mask(values: np.ndarray) -> np.ndarray:
    """True at the last index of each run of equal values."""
    mask = np.ones(values.shape[0], dtype=bool)
    mask[:-1] = values[1:] != values[:-1]
    return mask


def _ks_numerator(indicator: np.ndarray, mask: np.ndarray, k: int, k_prime: int) -> int:
    """max |cum_in*k' - cum_out*k| over tie-group ends; D = this / (k*k')."""
    cum_in = np.cumsum(indicator)
    ranks = np.arange(1, indicator.shape[0] + 1)
    diff = np.abs(cum_in * k_prime - (ranks - cum_in) * k)
    return int(diff[mask].max())


def ks_statistic(scores: dict[str, float], gene_set: GeneSet) -> float:
    """Two-sample KS statistic between in-set and out-of-set scores.

    The sup runs over the pooled score values; tied values contribute a
    single evaluation point after all of them are consumed, which makes the
    statistic symmetric under swapping the set with its complement.
    """
    _check_scores(scores)
    values, indicator, k, k_prime = _split_counts(scores, gene_set.members)
    if k == 0 or k_prime == 0:
        raise ValueError(
            f"gene set {gene_set.set_id!r} needs scored genes on both sides, "
            f"got {k} inside and {k_prime} outside"
        )
    return _ks_numerator(indicator, _tie_mask(values), k, k_prime) / (k * k_prime)


def _perm_numerators(
    indicator: np.ndarray, mask: np.ndarray, k: int, k_prime: int, reps: int, rng
) -> np.ndarray:
    perms = rng.permuted(np.tile(indicator, (reps, 1)), axis=1)
    cum_in = np.cumsum(perms, axis=1)
    ranks = np.arange(1, indicator.shape[0] + 1)
    diff = np.abs(cum_in * k_prime - (ranks - cum_in) * k)
    return diff[:, mask].max(axis=1)


def run_gsea(
    scores: dict[str, float],
    sets: list[GeneSet],
    min_size: int = DEFAULT_MIN_SIZE,
    perm_reps: int = DEFAULT_PERM_REPS,
    seed: int = 0,
    threads: int | None = None,
) -> list[GseaResult]:
    """Score every sufficiently large gene set against the score map.

    Sets are first restricted to members that actually have scores; sets
    with fewer than min_size scored members, or with no scored gene outside
    them, are excluded.  Each surviving set gets an independent permutation
    stream keyed by (seed, set id), so results do not depend on evaluation
    order or thread count.  Results sort by ascending permutation p-value,
    then descending statistic, then set id.
    """
    if min_size < 1:
        raise ValueError(f"min_size must be >= 1, got {min_size}")
    if perm_reps < 1:
        raise ValueError(f"perm_reps must be >= 1, got {perm_reps}")
    _check_scores(scores)
    n = len(scores)
    survivors = [s for s in sets if min_size <= len(s.members.intersection(scores)) < n]
    if not survivors:
        raise ValueError("no gene set has enough scored members")

    items = sorted(scores.items(), key=lambda kv: (kv[1], kv[0]))
    values = np.array([v for _, v in items])
    genes = [g for g, _ in items]
    mask = _tie_mask(values)
    ranks = np.arange(1, n + 1)

    def one(gene_set: GeneSet) -> GseaResult:
        indicator = np.array([g in gene_set.members for g in genes], dtype=np.int64)
        k = int(indicator.sum())
        k_prime = n - k
        cum_in = np.cumsum(indicator)
        observed = int(np.abs(cum_in * k_prime - (ranks - cum_in) * k)[mask].max())
        rng = np.random.default_rng([seed, string_key(gene_set.set_id)])
        permuted = _perm_numerators(indicator, mask, k, k_prime, perm_reps, rng)
        exceed = int(np.count_nonzero(permuted >= observed))
        d = observed / (k * k_prime)
        effective = math.sqrt(k * k_prime / (k + k_prime))
        return GseaResult(
            set_id=gene_set.set_id,
            k=k,
            k_prime=k_prime,
            ks_stat=d,
            p_perm=(1 + exceed) / (1 + perm_reps),
            p_asymptotic=float(kolmogorov(d * effective)),
        )

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, survivors))
    else:
        results = [one(s) for s in survivors]
    results.sort(key=lambda r: (r.p_perm, -r.ks_stat, r.set_id))
    return results


def write_gsea_tsv(results: list[GseaResult], path, comments: list[str] | None = None) -> None:
    """Serialize enrichment results in significance order."""
    rows = [
        (
            r.set_id,
            str(r.k),
            format_float(r.ks_stat),
            format_float(r.p_perm),
            format_float(r.p_asymptotic),
        )
        for r in results
    ]
    write_tsv(path, ["set_id", "k", "ks_stat", "p_perm", "p_asymptotic"], rows, comments)
