"""Minimax estimation of the absolute inner product of two mean vectors.

Given paired z-score panels x_i ~ N(theta_i, 1) and y_i ~ N(mu_i, 1), the
target is T = sum_i |theta_i mu_i|.  The package provides the estimator
family (polynomial-approximation hybrids, thresholding variants, and the
naive plug-in), a simulation benchmark, a GWAS x eQTL gene-ranking pipeline
with permutation nulls, and KS-based gene-set enrichment.
"""

from ._rng import derive_seed, keyed_normals, string_key
from .estimators import (
    EstimatorKind,
    PROPOSED_KINDS,
    SplitPanel,
    TScoreEstimate,
    TScoreEstimator,
    ZPanel,
    estimate_tscore,
    l2_norm_estimate,
    split_panel,
    true_tscore,
    u_simple,
    v_hybrid,
    v_hybrid_thresh,
)
from .genomics import (
    EqtlPanel,
    GeneScore,
    GwasPanel,
    NullDistribution,
    gene_seed,
    load_panels,
    null_distribution,
    permute_cyclic,
    permute_random,
    read_gwas,
    read_scores_tsv,
    score_genes,
    write_null_tsv,
    write_scores_tsv,
)
from .gsea import GeneSet, GseaResult, ks_statistic, read_gmt, run_gsea, write_gsea_tsv
from .poly import (
    ApproxConfig,
    ChebCoeffs,
    HermiteTable,
    cheb_coeffs,
    delta_k,
    gk_coeffs,
    hermite_eval,
    hermite_values,
    k_from_rate,
    s_k,
    uniform_bound,
)
from .simulation import (
    CovSpec,
    RmseTable,
    SignalSpec,
    SimStudySpec,
    gen_means,
    rmse,
    run_study,
    sample_mvn,
    tent_weights,
    write_rmse_tsv,
)

__version__ = "0.1.0"

__all__ = [
    "ApproxConfig",
    "ChebCoeffs",
    "CovSpec",
    "EqtlPanel",
    "EstimatorKind",
    "GeneScore",
    "GeneSet",
    "GseaResult",
    "GwasPanel",
    "HermiteTable",
    "NullDistribution",
    "PROPOSED_KINDS",
    "RmseTable",
    "SignalSpec",
    "SimStudySpec",
    "SplitPanel",
    "TScoreEstimate",
    "TScoreEstimator",
    "ZPanel",
    "cheb_coeffs",
    "delta_k",
    "derive_seed",
    "estimate_tscore",
    "gen_means",
    "gene_seed",
    "gk_coeffs",
    "hermite_eval",
    "hermite_values",
    "k_from_rate",
    "keyed_normals",
    "ks_statistic",
    "l2_norm_estimate",
    "load_panels",
    "null_distribution",
    "permute_cyclic",
    "permute_random",
    "read_gmt",
    "read_gwas",
    "read_scores_tsv",
    "rmse",
    "run_gsea",
    "run_study",
    "s_k",
    "sample_mvn",
    "score_genes",
    "split_panel",
    "string_key",
    "tent_weights",
    "true_tscore",
    "u_simple",
    "uniform_bound",
    "v_hybrid",
    "v_hybrid_thresh",
    "write_gsea_tsv",
    "write_null_tsv",
    "write_rmse_tsv",
    "write_scores_tsv",
]
