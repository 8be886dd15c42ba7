"""Command-line surface: simulate, estimate, rank, permute, gsea.

Every subcommand writes one UTF-8 TSV whose leading `#` comment lines record
the fully resolved configuration plus a timestamp; given the same flags and
seed, two runs differ only in the timestamp line.  Exit codes: 0 on success,
1 on data errors (single-line diagnostic on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone

from .estimators import EstimatorKind, ZPanel, estimate_tscore
from .genomics import (
    DEFAULT_MIN_SNPS,
    load_panels,
    null_distribution,
    read_gwas,
    read_scores_tsv,
    score_genes,
    write_null_tsv,
    write_scores_tsv,
)
from .gsea import DEFAULT_MIN_SIZE, DEFAULT_PERM_REPS, read_gmt, run_gsea, write_gsea_tsv
from .poly import ApproxConfig
from .simulation import CovSpec, SignalSpec, SimStudySpec, run_study, write_rmse_tsv
from ._tsv import format_float, write_tsv

ESTIMATOR_CHOICES = [kind.value for kind in EstimatorKind]


def _resolve_threads(flag_value: int | None) -> int:
    """TSCORE_THREADS beats --threads beats the core count."""
    env = os.environ.get("TSCORE_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"TSCORE_THREADS must be an integer, got {env!r}") from None
    elif flag_value is not None:
        value = flag_value
    else:
        value = os.cpu_count() or 1
    if value < 1:
        raise ValueError(f"thread count must be >= 1, got {value}")
    return value


def _header(command: str, resolved: dict) -> list[str]:
    lines = [f"command: {command}"]
    lines.extend(f"{key}={resolved[key]}" for key in sorted(resolved))
    lines.append(f"timestamp: {datetime.now(timezone.utc).isoformat()}")
    return lines


def _cmd_simulate(args) -> int:
    threads = _resolve_threads(args.threads)
    spec = SimStudySpec(
        signal=SignalSpec(n=args.n, s=args.s, seed=args.seed),
        cov=CovSpec(args.cov),
        reps=args.reps,
        K=args.k,
    )
    table = run_study(spec, threads=threads)
    resolved = {
        "cov": args.cov,
        "k": args.k,
        "n": args.n,
        "out": args.out,
        "reps": args.reps,
        "s": args.s,
        "seed": args.seed,
        "threads": threads,
    }
    write_rmse_tsv(table, args.out, comments=_header("simulate", resolved))
    return 0


def _aligned_panels(x_path, y_path) -> tuple[ZPanel, ZPanel]:
    first = read_gwas(x_path)
    second = read_gwas(y_path)
    shared = set(first.snp_ids).intersection(second.snp_ids)
    if not shared:
        raise ValueError("the two panels share no ids")
    ids = tuple(s for s in first.snp_ids if s in shared)
    position = {s: j for j, s in enumerate(second.snp_ids)}
    keep = [i for i, s in enumerate(first.snp_ids) if s in shared]
    return (
        ZPanel(z=first.z[keep], ids=ids),
        ZPanel(z=second.z[[position[s] for s in ids]], ids=ids),
    )


def _cmd_estimate(args) -> int:
    threads = _resolve_threads(args.threads)
    x, y = _aligned_panels(args.x, args.y)
    cfg = ApproxConfig(n=x.z.shape[0], K=args.k)
    result = estimate_tscore(x, y, kind=EstimatorKind(args.estimator), cfg=cfg, seed=args.seed)
    resolved = {
        "estimator": args.estimator,
        "k": args.k,
        "out": args.out,
        "seed": args.seed,
        "threads": threads,
        "x": args.x,
        "y": args.y,
    }
    write_tsv(
        args.out,
        ["estimator", "k", "n", "t_hat"],
        [(args.estimator, str(args.k), str(x.z.shape[0]), format_float(result.value))],
        comments=_header("estimate", resolved),
    )
    return 0


def _cmd_rank(args) -> int:
    threads = _resolve_threads(args.threads)
    gwas, eqtl = load_panels(args.gwas, args.eqtl, n_min=args.n_min)
    cfg = ApproxConfig(n=len(gwas), K=args.k)
    scores = score_genes(
        gwas,
        eqtl,
        kind=EstimatorKind(args.estimator),
        cfg=cfg,
        seed=args.seed,
        threads=threads,
    )
    resolved = {
        "eqtl": args.eqtl,
        "estimator": args.estimator,
        "gwas": args.gwas,
        "k": args.k,
        "n_min": args.n_min,
        "out": args.out,
        "seed": args.seed,
        "threads": threads,
    }
    write_scores_tsv(scores, args.out, comments=_header("rank", resolved))
    return 0


def _cmd_permute(args) -> int:
    threads = _resolve_threads(args.threads)
    gwas, eqtl = load_panels(args.gwas, args.eqtl, n_min=args.n_min)
    cfg = ApproxConfig(n=len(gwas), K=args.k)
    null = null_distribution(
        gwas,
        eqtl,
        mode=args.mode,
        reps=args.reps,
        kind=EstimatorKind(args.estimator),
        cfg=cfg,
        seed=args.seed,
        threads=threads,
    )
    resolved = {
        "eqtl": args.eqtl,
        "estimator": args.estimator,
        "gwas": args.gwas,
        "k": args.k,
        "mode": args.mode,
        "n_min": args.n_min,
        "out": args.out,
        "reps": args.reps,
        "seed": args.seed,
        "threads": threads,
    }
    write_null_tsv(null, args.out, comments=_header("permute", resolved))
    return 0


def _cmd_gsea(args) -> int:
    threads = _resolve_threads(args.threads)
    scores = read_scores_tsv(args.scores)
    score_map = {s.gene_id: s.normalized for s in scores if s.status == "ok"}
    if not score_map:
        raise ValueError(f"{args.scores}: no genes with a defined normalized score")
    sets = read_gmt(args.gmt)
    results = run_gsea(
        score_map,
        sets,
        min_size=args.min_size,
        perm_reps=args.perm,
        seed=args.seed,
        threads=threads,
    )
    resolved = {
        "gmt": args.gmt,
        "min_size": args.min_size,
        "out": args.out,
        "perm": args.perm,
        "scores": args.scores,
        "seed": args.seed,
        "threads": threads,
    }
    write_gsea_tsv(results, args.out, comments=_header("gsea", resolved))
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    sub.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: all cores; TSCORE_THREADS overrides)",
    )
    sub.add_argument("--out", required=True, help="output TSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tscore",
        description="Estimate and rank absolute inner products of z-score panels.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="RMSE benchmark of all estimators")
    sim.add_argument("--n", type=int, required=True, help="panel length")
    sim.add_argument("--s", type=int, required=True, help="support size")
    sim.add_argument(
        "--cov", choices=[c.value for c in CovSpec], default="identity", help="noise covariance"
    )
    sim.add_argument("--reps", type=int, default=100, help="replicates (default 100)")
    sim.add_argument("--k", type=int, default=8, help="polynomial degree parameter (default 8)")
    _add_common(sim)
    sim.set_defaults(func=_cmd_simulate)

    est = commands.add_parser("estimate", help="one estimate from two panel files")
    est.add_argument("--x", required=True, help="first panel TSV (snp_id[\\tchrom]\\tz)")
    est.add_argument("--y", required=True, help="second panel TSV")
    est.add_argument("--estimator", choices=ESTIMATOR_CHOICES, default="hybrid-thresh-nosplit")
    est.add_argument("--k", type=int, default=8)
    _add_common(est)
    est.set_defaults(func=_cmd_estimate)

    rank = commands.add_parser("rank", help="score and rank genes against a GWAS panel")
    rank.add_argument("--gwas", required=True, help="GWAS TSV (snp_id[\\tchrom]\\tz)")
    rank.add_argument("--eqtl", required=True, help="eQTL TSV (long or matrix form)")
    rank.add_argument("--estimator", choices=ESTIMATOR_CHOICES, default="hybrid-thresh-nosplit")
    rank.add_argument("--k", type=int, default=8)
    rank.add_argument(
        "--n-min", dest="n_min", type=int, default=DEFAULT_MIN_SNPS,
        help=f"minimum matched SNPs per gene (default {DEFAULT_MIN_SNPS})",
    )
    _add_common(rank)
    rank.set_defaults(func=_cmd_rank)

    perm = commands.add_parser("permute", help="permutation null scores for every gene")
    perm.add_argument("--gwas", required=True)
    perm.add_argument("--eqtl", required=True)
    perm.add_argument("--mode", choices=["random", "cyclic"], default="random")
    perm.add_argument("--reps", type=int, default=50, help="permutations (default 50)")
    perm.add_argument("--estimator", choices=ESTIMATOR_CHOICES, default="hybrid-thresh-nosplit")
    perm.add_argument("--k", type=int, default=8)
    perm.add_argument(
        "--n-min", dest="n_min", type=int, default=DEFAULT_MIN_SNPS,
        help=f"minimum matched SNPs per gene (default {DEFAULT_MIN_SNPS})",
    )
    _add_common(perm)
    perm.set_defaults(func=_cmd_permute)

    gsea = commands.add_parser("gsea", help="gene-set enrichment over ranked scores")
    gsea.add_argument("--scores", required=True, help="gene-score TSV from `rank`")
    gsea.add_argument("--gmt", required=True, help="gene sets in GMT format")
    gsea.add_argument("--min-size", dest="min_size", type=int, default=DEFAULT_MIN_SIZE)
    gsea.add_argument("--perm", type=int, default=DEFAULT_PERM_REPS)
    _add_common(gsea)
    gsea.set_defaults(func=_cmd_gsea)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
