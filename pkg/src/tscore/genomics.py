"""GWAS x eQTL pipeline: panel ingestion, gene scoring, permutation nulls.

A GWAS panel carries one z-score per SNP for the trait; an eQTL panel
carries, per gene, z-scores for the same SNPs' association with that gene's
expression.  Genes are ranked by the normalized T-score

    t_hat / (||theta||_2 ||mu||_2),

with both norms moment-estimated from the panels themselves.  Null
distributions come from re-scoring against permuted GWAS panels, either by
full random permutation or by per-chromosome circular rotation (which
preserves local dependence among neighboring SNPs).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed, string_key
from ._tsv import format_float, read_rows, write_tsv
from ._validation import as_float_vector
from .estimators import EstimatorKind, ZPanel, estimate_tscore, l2_norm_estimate
from .poly import ApproxConfig

logger = logging.getLogger(__name__)

DEFAULT_MIN_SNPS = 100


@dataclass(frozen=True)
class GwasPanel:
    """Per-SNP trait z-scores, with optional chromosome labels."""

    snp_ids: tuple[str, ...]
    z: np.ndarray
    chrom: tuple[str, ...] | None = None

    def __post_init__(self):
        z = as_float_vector(self.z, "z")
        object.__setattr__(self, "z", z)
        if len(self.snp_ids) != z.shape[0]:
            raise ValueError("snp_ids and z must have equal length")
        if len(set(self.snp_ids)) != len(self.snp_ids):
            raise ValueError("snp_ids must be unique")
        if self.chrom is not None and len(self.chrom) != z.shape[0]:
            raise ValueError("chrom and z must have equal length")

    def __len__(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class EqtlPanel:
    """Per-gene z-score vectors aligned to a GWAS panel's SNP order."""

    gene_ids: tuple[str, ...]
    z: np.ndarray  # shape (genes, snps)

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        if z.ndim != 2:
            raise ValueError(f"z must be 2-D (genes x snps), got shape {z.shape}")
        if not np.all(np.isfinite(z)):
            raise ValueError("z contains NaN or infinite entries")
        if len(self.gene_ids) != z.shape[0]:
            raise ValueError("gene_ids and z rows must match")
        if len(set(self.gene_ids)) != len(self.gene_ids):
            raise ValueError("gene_ids must be unique")
        object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class GeneScore:
    """One gene's estimate, norm estimates, normalized score, and rank."""

    gene_id: str
    t_hat: float
    theta_norm: float
    mu_norm: float
    normalized: float
    rank: int
    status: str  # "ok" or "undefined" (a zero norm estimate)


@dataclass(frozen=True)
class NullDistribution:
    """Permutation null scores, one row per gene, one column per replicate."""

    mode: str
    reps: int
    gene_ids: tuple[str, ...]
    scores: np.ndarray  # shape (genes, reps)

    def __post_init__(self):
        if self.scores.shape != (len(self.gene_ids), self.reps):
            raise ValueError("scores must have shape (genes, reps)")


def _parse_float(text: str, path, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"{path}:{lineno}: non-finite z-score: {text!r}")
    return value


def read_gwas(path) -> GwasPanel:
    """Read a GWAS TSV: header snp_id[<TAB>chrom]<TAB>z."""
    header, rows = read_rows(path)
    if header == ["snp_id", "chrom", "z"]:
        has_chrom = True
    elif header == ["snp_id", "z"]:
        has_chrom = False
    else:
        raise ValueError(f"{path}: expected header snp_id[\\tchrom]\\tz, got {header}")
    snp_ids, chrom, z = [], [], []
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        snp_ids.append(fields[0])
        if has_chrom:
            chrom.append(fields[1])
        z.append(_parse_float(fields[-1], path, lineno))
    if len(set(snp_ids)) != len(snp_ids):
        dup = sorted({s for s in snp_ids if snp_ids.count(s) > 1})[0]
        raise ValueError(f"{path}: duplicate SNP id: {dup!r}")
    return GwasPanel(
        snp_ids=tuple(snp_ids),
        z=np.array(z),
        chrom=tuple(chrom) if has_chrom else None,
    )


def _read_eqtl_long(path, rows) -> dict[str, dict[str, float]]:
    by_gene: dict[str, dict[str, float]] = {}
    for lineno, fields in rows:
        if len(fields) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(fields)}")
        gene, snp, value = fields
        gene_map = by_gene.setdefault(gene, {})
        if snp in gene_map:
            raise ValueError(f"{path}:{lineno}: duplicate (gene, SNP) pair ({gene!r}, {snp!r})")
        gene_map[snp] = _parse_float(value, path, lineno)
    return by_gene


def _read_eqtl_matrix(path, header, rows) -> dict[str, dict[str, float]]:
    genes = header[1:]
    if len(set(genes)) != len(genes):
        raise ValueError(f"{path}: duplicate gene column")
    by_gene: dict[str, dict[str, float]] = {g: {} for g in genes}
    seen = set()
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        snp = fields[0]
        if snp in seen:
            raise ValueError(f"{path}:{lineno}: duplicate SNP id: {snp!r}")
        seen.add(snp)
        for gene, text in zip(genes, fields[1:]):
            by_gene[gene][snp] = _parse_float(text, path, lineno)
    return by_gene


def load_panels(gwas_path, eqtl_path, n_min: int = DEFAULT_MIN_SNPS) -> tuple[GwasPanel, EqtlPanel]:
    """Load and align the two panels onto a common SNP set.

    The eQTL file is long format (header gene_id/snp_id/z) or matrix format
    (header snp_id followed by one column per gene), auto-detected.  Genes
    with fewer than n_min SNPs matched to the GWAS panel are dropped (count
    logged as a warning); the common set is the intersection of the GWAS
    SNPs with every surviving gene's SNPs, kept in GWAS file order.
    """
    gwas = read_gwas(gwas_path)
    header, rows = read_rows(eqtl_path)
    if header == ["gene_id", "snp_id", "z"]:
        by_gene = _read_eqtl_long(eqtl_path, rows)
    elif len(header) >= 2 and header[0] == "snp_id":
        by_gene = _read_eqtl_matrix(eqtl_path, header, rows)
    else:
        raise ValueError(
            f"{eqtl_path}: expected header gene_id\\tsnp_id\\tz (long) or snp_id\\t<genes...> (matrix)"
        )

    gwas_set = set(gwas.snp_ids)
    kept, dropped = [], 0
    for gene, gene_map in by_gene.items():
        matched = len(gwas_set.intersection(gene_map))
        if matched >= n_min:
            kept.append(gene)
        else:
            dropped += 1
    if dropped:
        logger.warning("dropped %d gene(s) with fewer than %d matched SNPs", dropped, n_min)
    if not kept:
        raise ValueError("no gene has enough SNPs matched to the GWAS panel")

    common = set(gwas.snp_ids)
    for gene in kept:
        common.intersection_update(by_gene[gene])
    if not common:
        raise ValueError("empty SNP intersection between the GWAS and eQTL panels")
    keep_idx = [i for i, snp in enumerate(gwas.snp_ids) if snp in common]
    snp_order = [gwas.snp_ids[i] for i in keep_idx]

    aligned_gwas = GwasPanel(
        snp_ids=tuple(snp_order),
        z=gwas.z[keep_idx],
        chrom=tuple(gwas.chrom[i] for i in keep_idx) if gwas.chrom is not None else None,
    )
    matrix = np.array([[by_gene[gene][snp] for snp in snp_order] for gene in kept])
    return aligned_gwas, EqtlPanel(gene_ids=tuple(kept), z=matrix)


def gene_seed(seed: int, gene_id: str) -> int:
    """The splitting seed used for one gene's estimate under a pipeline seed."""
    return derive_seed(seed, string_key(gene_id))


def _rank_scores(raw: list[tuple[str, float, float, float, float, str]]) -> list[GeneScore]:
    """Assign dense descending ranks; undefined scores sort after all defined."""
    defined = [r for r in raw if r[5] == "ok"]
    undefined = [r for r in raw if r[5] != "ok"]
    defined.sort(key=lambda r: (-r[4], r[0]))
    undefined.sort(key=lambda r: r[0])
    scores: list[GeneScore] = []
    rank = 0
    previous: float | None = None
    for gene_id, t_hat, tn, mn, norm, status in defined:
        if previous is None or norm != previous:
            rank += 1
            previous = norm
        scores.append(GeneScore(gene_id, t_hat, tn, mn, norm, rank, status))
    undefined_rank = rank + 1
    for gene_id, t_hat, tn, mn, norm, status in undefined:
        scores.append(GeneScore(gene_id, t_hat, tn, mn, norm, undefined_rank, status))
    return scores


def score_genes(
    gwas: GwasPanel,
    eqtl: EqtlPanel,
    kind: EstimatorKind | str = EstimatorKind.HYBRID_THRESH_NOSPLIT,
    cfg: ApproxConfig | None = None,
    seed: int = 0,
    threads: int | None = None,
) -> list[GeneScore]:
    """Estimate and rank the normalized T-score of every gene.

    Each gene's estimate uses the splitting seed gene_seed(seed, gene_id),
    so a single gene rescored in isolation reproduces its t_hat exactly.
    Genes whose norm estimate is zero get status "undefined" and sort after
    all defined genes.
    """
    kind = EstimatorKind(kind)
    if cfg is None:
        cfg = ApproxConfig(n=len(gwas))
    y = ZPanel(z=gwas.z, ids=gwas.snp_ids)
    mu_norm = l2_norm_estimate(gwas.z)

    def one(i: int) -> tuple[str, float, float, float, float, str]:
        gid = eqtl.gene_ids[i]
        x = ZPanel(z=eqtl.z[i], ids=gwas.snp_ids)
        t_hat = estimate_tscore(x, y, kind=kind, cfg=cfg, seed=gene_seed(seed, gid)).value
        theta_norm = l2_norm_estimate(eqtl.z[i])
        if theta_norm > 0 and mu_norm > 0:
            return (gid, t_hat, theta_norm, mu_norm, t_hat / (theta_norm * mu_norm), "ok")
        return (gid, t_hat, theta_norm, mu_norm, math.nan, "undefined")

    indices = range(len(eqtl.gene_ids))
    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(one, indices))
    else:
        raw = [one(i) for i in indices]
    return _rank_scores(raw)


def permute_random(gwas: GwasPanel, rng: np.random.Generator) -> GwasPanel:
    """Uniformly permute the z-vector; ids and chromosome labels stay put."""
    return GwasPanel(snp_ids=gwas.snp_ids, z=rng.permutation(gwas.z), chrom=gwas.chrom)


def permute_cyclic(gwas: GwasPanel, rng: np.random.Generator) -> GwasPanel:
    """Rotate each chromosome's z-subvector by an independent random offset.

    Preserves the within-chromosome circular adjacency of z values, so local
    dependence survives while the z-to-SNP matching is broken.
    """
    if gwas.chrom is None:
        raise ValueError("cyclic permutation requires chromosome labels")
    z = gwas.z.copy()
    chrom = np.asarray(gwas.chrom)
    seen: list[str] = []
    for label in chrom:
        if label not in seen:
            seen.append(label)
    for label in seen:
        idx = np.flatnonzero(chrom == label)
        offset = int(rng.integers(idx.shape[0]))
        z[idx] = np.roll(gwas.z[idx], -offset)
    return GwasPanel(snp_ids=gwas.snp_ids, z=z, chrom=gwas.chrom)


def null_distribution(
    gwas: GwasPanel,
    eqtl: EqtlPanel,
    mode: str = "random",
    reps: int = 50,
    kind: EstimatorKind | str = EstimatorKind.HYBRID_THRESH_NOSPLIT,
    cfg: ApproxConfig | None = None,
    seed: int = 0,
    threads: int | None = None,
) -> NullDistribution:
    """Normalized scores of every gene against permuted GWAS panels.

    Replicate r permutes with the stream keyed by (seed, r) and scores with
    the pipeline seed derived from (seed, r), so columns are independent and
    the whole distribution is reproducible.
    """
    if mode not in ("random", "cyclic"):
        raise ValueError(f"mode must be 'random' or 'cyclic', got {mode!r}")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    permute = permute_random if mode == "random" else permute_cyclic
    columns = []
    for rep in range(reps):
        rng = np.random.default_rng([seed, rep])
        permuted = permute(gwas, rng)
        scores = score_genes(
            permuted, eqtl, kind=kind, cfg=cfg, seed=derive_seed(seed, rep), threads=threads
        )
        by_gene = {s.gene_id: s.normalized for s in scores}
        columns.append([by_gene[g] for g in eqtl.gene_ids])
    return NullDistribution(
        mode=mode,
        reps=reps,
        gene_ids=eqtl.gene_ids,
        scores=np.array(columns).T,
    )


def write_scores_tsv(scores: list[GeneScore], path, comments: list[str] | None = None) -> None:
    """Serialize gene scores in rank order."""
    rows = [
        (
            s.gene_id,
            format_float(s.t_hat),
            format_float(s.theta_norm),
            format_float(s.mu_norm),
            format_float(s.normalized),
            str(s.rank),
            s.status,
        )
        for s in scores
    ]
    write_tsv(
        path,
        ["gene_id", "t_hat", "theta_norm", "mu_norm", "normalized", "rank", "status"],
        rows,
        comments,
    )


def read_scores_tsv(path) -> list[GeneScore]:
    """Read a gene-score TSV written by write_scores_tsv."""
    header, rows = read_rows(path)
    expected = ["gene_id", "t_hat", "theta_norm", "mu_norm", "normalized", "rank", "status"]
    if header != expected:
        raise ValueError(f"{path}: expected header {expected}, got {header}")
    scores = []
    for lineno, fields in rows:
        if len(fields) != 7:
            raise ValueError(f"{path}:{lineno}: expected 7 fields, got {len(fields)}")
        try:
            scores.append(
                GeneScore(
                    gene_id=fields[0],
                    t_hat=float(fields[1]),
                    theta_norm=float(fields[2]),
                    mu_norm=float(fields[3]),
                    normalized=float(fields[4]),
                    rank=int(fields[5]),
                    status=fields[6],
                )
            )
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed row: {exc}") from None
    return scores


def write_null_tsv(null: NullDistribution, path, comments: list[str] | None = None) -> None:
    """Serialize a null distribution long-form: one row per (gene, replicate)."""
    rows = []
    for i, gene in enumerate(null.gene_ids):
        for rep in range(null.reps):
            rows.append((gene, str(rep + 1), format_float(null.scores[i, rep])))
    write_tsv(path, ["gene_id", "rep", "normalized"], rows, comments)
