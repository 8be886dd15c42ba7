"""Release gate: ten end-to-end checks, one test per criterion.

Each test prints its measured numbers; the pytest -v line is the pass/fail
record.  Criteria 4-6 share one 9-cell benchmark run through a module-scoped
fixture, so the suite pays the Monte Carlo cost once.
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial.hermite_e import hermegauss

from tscore.estimators import (
    EstimatorKind,
    PROPOSED_KINDS,
    ZPanel,
    estimate_tscore,
    split_panel,
)
from tscore.genomics import EqtlPanel, GwasPanel, null_distribution, score_genes
from tscore.gsea import GeneSet, run_gsea
from tscore.poly import ApproxConfig, gk_coeffs, hermite_values, s_k, uniform_bound
from tscore.simulation import CovSpec, SignalSpec, SimStudySpec, gen_means, run_study

GRID_N = 150000
GRID_REPS = 100
NODES, WEIGHTS = hermegauss(200)
SQRT_2PI = math.sqrt(2.0 * math.pi)

PROPOSED_TOKENS = [kind.value for kind in PROPOSED_KINDS]
RECOMMENDED = EstimatorKind.HYBRID_THRESH_NOSPLIT.value
NAIVE = EstimatorKind.NAIVE.value


@pytest.fixture(scope="module")
def grid():
    """RMSE of all five estimators on {s=100,400,700} x three covariances."""
    t0 = time.perf_counter()
    rows = {}
    cells = list(itertools.product((100, 400, 700), tuple(CovSpec)))
    for i, (s, cov) in enumerate(cells):
        spec = SimStudySpec(
            signal=SignalSpec(n=GRID_N, s=s, seed=i), cov=cov, reps=GRID_REPS, K=8
        )
        rows.update(run_study(spec, threads=1).rows)
    return rows, time.perf_counter() - t0


def gauss_mean(values_at_nodes):
    """E[f(N(theta,1))] from f evaluated at theta + NODES."""
    return float(values_at_nodes @ WEIGHTS) / SQRT_2PI


def test_01_polynomial_uniform_bound():
    t0 = time.perf_counter()
    x = np.linspace(-1.0, 1.0, 10_000)
    worst_slack = math.inf
    for K in range(1, 13):
        err = float(np.max(np.abs(gk_coeffs(K).evaluate(x) - np.abs(x))))
        bound = uniform_bound(K)
        worst_slack = min(worst_slack, bound + 1e-9 - err)
        assert err <= bound + 1e-9, (K, err, bound)
    elapsed = time.perf_counter() - t0
    print(f"criterion 1: min slack {worst_slack:.3e} over K=1..12, {elapsed:.2f}s")
    assert elapsed < 1.0


def test_02_hermite_moment_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for theta in (0.0, 0.5, 1.0, 3.0):
        table = hermite_values(8, theta + NODES)
        for k in range(9):
            err = abs(gauss_mean(table[k]) - theta**k)
            tol = 1e-8 * max(1.0, abs(theta) ** k)
            worst = max(worst, err / tol)
            assert err <= tol, (k, theta, err)
    elapsed = time.perf_counter() - t0
    print(f"criterion 2: worst error {worst:.3e} of tolerance, {elapsed:.2f}s")
    assert elapsed < 1.0


def test_03_polynomial_statistic_bias_bound():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (100, 10_000):
        for K in (1, 8):
            cfg = ApproxConfig(n=n, K=K)
            bound = 4.0 * cfg.m_n / (math.pi * (2 * K + 1))
            for theta in np.linspace(0.0, 4.0 * math.sqrt(2.0 * math.log(n)), 50):
                bias = abs(gauss_mean(s_k(theta + NODES, cfg)) - theta)
                worst = max(worst, bias / bound)
                assert bias <= bound, (n, K, theta, bias, bound)
    elapsed = time.perf_counter() - t0
    print(f"criterion 3: worst bias {worst:.3f} of bound, {elapsed:.2f}s")
    assert elapsed < 5.0


def test_04_benchmark_reference_cell(grid):
    rows, elapsed = grid
    recommended = rows[(GRID_N, 100, "identity", RECOMMENDED)]
    naive = rows[(GRID_N, 100, "identity", NAIVE)]
    per_cell = elapsed / 9.0
    print(
        f"criterion 4: recommended {recommended:.3f} (4.091 +-25%), "
        f"naive {naive:.1f} (954.4 +-10%), {per_cell:.0f}s/cell"
    )
    assert abs(recommended - 4.091) <= 0.25 * 4.091
    assert abs(naive - 954.4) <= 0.10 * 954.4
    assert per_cell < 300.0


def test_05_estimator_ordering_across_grid(grid):
    rows, elapsed = grid
    min_ratio = math.inf
    min_gap = math.inf
    for s in (100, 400, 700):
        for cov in CovSpec:
            cell = {kind: rows[(GRID_N, s, cov.value, kind)] for kind in PROPOSED_TOKENS}
            naive = rows[(GRID_N, s, cov.value, NAIVE)]
            recommended = cell[RECOMMENDED]
            others = [v for kind, v in cell.items() if kind != RECOMMENDED]
            min_ratio = min(min_ratio, naive / max(cell.values()))
            min_gap = min(min_gap, min(others) - recommended)
            assert naive >= 10.0 * max(cell.values()), (s, cov.value, naive, cell)
            assert all(recommended < v for v in others), (s, cov.value, cell)
    print(
        f"criterion 5: naive/proposed >= {min_ratio:.1f}x (need 10x), "
        f"recommended leads by >= {min_gap:.3f}, grid {elapsed:.0f}s"
    )
    assert elapsed < 1800.0


def test_06_covariance_robustness(grid):
    rows, _ = grid
    worst = 0.0
    for kind in PROPOSED_TOKENS + [NAIVE]:
        base = rows[(GRID_N, 100, "identity", kind)]
        for cov in ("toeplitz10", "exchangeable1000"):
            dev = abs(rows[(GRID_N, 100, cov, kind)] / base - 1.0)
            worst = max(worst, dev)
            assert dev <= 0.35, (kind, cov, dev)
    print(f"criterion 6: worst |RMSE ratio - 1| = {worst:.3f} (limit 0.35)")


def literal_g(K):
    """Even-monomial coefficients of G_K, assembled digit-for-digit from the
    Chebyshev recurrence T_{m+1} = 2x T_m - T_{m-1} and the alternating series
    (2/pi) T_0 + (4/pi) sum_k (-1)^(k+1) T_2k / (4k^2 - 1)."""
    polys = [[1], [0, 1]]
    for m in range(1, 2 * K):
        nxt = [0] * (m + 2)
        for i, c in enumerate(polys[m]):
            nxt[i + 1] += 2 * c
        for i, c in enumerate(polys[m - 1]):
            nxt[i] -= c
        polys.append(nxt)
    scaled = [Fraction(0)] * (2 * K + 1)
    scaled[0] += 2
    for k in range(1, K + 1):
        weight = Fraction(4 * (-1) ** (k + 1), 4 * k * k - 1)
        for m, c in enumerate(polys[2 * k]):
            scaled[m] += weight * c
    return [float(c) / math.pi for c in scaled]


def make_literal_rules(n, K):
    """Scalar per-coordinate rules written as plain formulas."""
    g = literal_g(K)
    m = 8.0 * math.sqrt(math.log(n))
    m_pow = [m ** (1 - 2 * k) for k in range(K + 1)]
    lower = math.sqrt(2.0 * math.log(n))
    upper = 2.0 * lower
    ceiling = float(n) ** 2

    def delta(x):
        h = [1.0, x]
        for k in range(1, 2 * K):
            h.append(x * h[k] - k * h[k - 1])
        s = math.fsum(g[2 * k] * m_pow[k] * h[2 * k] for k in range(1, K + 1))
        return min(s, ceiling)

    def hybrid(est, test):
        return abs(est) if abs(test) > upper else delta(est)

    def hybrid_band(est, test):
        a = abs(test)
        if a > upper:
            return abs(est)
        return delta(est) if a > lower else 0.0

    def simple(est, test):
        return abs(est) if abs(test) > upper else 0.0

    return hybrid, hybrid_band, simple


def test_07_straight_line_reimplementations():
    t0 = time.perf_counter()
    n, trials = 8, 1000
    cfg = ApproxConfig(n=n, K=8)
    hybrid, hybrid_band, simple = make_literal_rules(n, cfg.K)
    rng = np.random.default_rng(7)
    xs = 3.0 * rng.standard_normal((trials, n))
    ys = 3.0 * rng.standard_normal((trials, n))
    worst = 0.0

    def check(kind, got, want):
        nonlocal worst
        err = abs(got - want) / max(1.0, abs(want))
        worst = max(worst, err)
        assert err <= 1e-12, (kind, got, want)

    for t in range(trials):
        x, y = xs[t], ys[t]
        xl, yl = x.tolist(), y.tolist()
        check(
            "naive",
            estimate_tscore(x, y, kind="naive", cfg=cfg).value,
            math.fsum(abs(a * b) for a, b in zip(xl, yl)),
        )
        check(
            "hybrid-thresh-nosplit",
            estimate_tscore(x, y, kind="hybrid-thresh-nosplit", cfg=cfg).value,
            math.fsum(hybrid(a, a) * hybrid(b, b) for a, b in zip(xl, yl)),
        )
        sx = split_panel(ZPanel(z=x), seed=t, stream=0)
        sy = split_panel(ZPanel(z=y), seed=t, stream=1)
        halves = (
            sx.first.tolist(),
            sx.second.tolist(),
            sy.first.tolist(),
            sy.second.tolist(),
        )
        for kind, rule in (
            ("hybrid-thresh", hybrid_band),
            ("simple-thresh", simple),
            ("hybrid-nothresh", hybrid),
        ):
            want = 2.0 * math.fsum(
                rule(e1, t1) * rule(e2, t2) for e1, t1, e2, t2 in zip(*halves)
            )
            check(kind, estimate_tscore(x, y, kind=kind, cfg=cfg, seed=t).value, want)
    elapsed = time.perf_counter() - t0
    print(f"criterion 7: worst mismatch {worst:.2e} (limit 1e-12), {elapsed:.2f}s")
    assert elapsed < 1.0


def test_08_zero_signal_exact_zero():
    t0 = time.perf_counter()
    n, reps = 10_000, 200
    zeros = 0
    for rep in range(reps):
        rng = np.random.default_rng([808, rep])
        est = estimate_tscore(
            rng.standard_normal(n),
            rng.standard_normal(n),
            kind="simple-thresh",
            seed=rep,
        )
        zeros += est.value == 0.0
    elapsed = time.perf_counter() - t0
    print(f"criterion 8: {zeros}/{reps} exact zeros (need >= 199), {elapsed:.1f}s")
    assert zeros >= 199
    assert elapsed < 10.0


def test_09_planted_gene_beats_permutation_nulls():
    t0 = time.perf_counter()
    n, s = 10_000, 100
    rng = np.random.default_rng(909)
    theta, mu = gen_means(SignalSpec(n=n, s=s, seed=0), rng)
    gwas = GwasPanel(
        snp_ids=tuple(f"rs{i}" for i in range(n)),
        z=theta + rng.standard_normal(n),
        chrom=("1",) * n,
    )
    gene_ids = ("planted",) + tuple(f"null{i:02d}" for i in range(50))
    zmat = rng.standard_normal((51, n))
    zmat[0] += mu
    eqtl = EqtlPanel(gene_ids=gene_ids, z=zmat)
    observed = {g.gene_id: g.normalized for g in score_genes(gwas, eqtl, seed=1)}
    worst_null = -math.inf
    for mode, seed in (("random", 2), ("cyclic", 3)):
        null = null_distribution(gwas, eqtl, mode=mode, reps=50, seed=seed)
        row = null.scores[null.gene_ids.index("planted")]
        assert np.all(np.isfinite(row))
        worst_null = max(worst_null, float(row.max()))
    elapsed = time.perf_counter() - t0
    print(
        f"criterion 9: planted {observed['planted']:.4f} vs worst of 100 nulls "
        f"{worst_null:.4f}, {elapsed:.0f}s"
    )
    assert observed["planted"] > worst_null
    assert elapsed < 120.0


def test_10_ks_permutation_calibration():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1010)
    scores = {f"g{i:03d}": float(v) for i, v in enumerate(rng.normal(size=200))}
    genes = sorted(scores)
    sets = [
        GeneSet(f"S{j:04d}", frozenset(rng.choice(genes, size=20, replace=False)), j + 1)
        for j in range(1000)
    ]
    results = run_gsea(scores, sets, min_size=10, perm_reps=999, seed=4)
    assert len(results) == 1000
    rate = float(np.mean([r.p_perm < 0.05 for r in results]))
    elapsed = time.perf_counter() - t0
    print(f"criterion 10: p<0.05 rate {rate:.3f} (need 0.05 +-0.02), {elapsed:.0f}s")
    assert 0.03 <= rate <= 0.07
    assert elapsed < 60.0
