"""KS statistic oracle tests and enrichment-pipeline tests."""

import math

import numpy as np
import pytest

from tscore.gsea import GeneSet, ks_statistic, read_gmt, run_gsea, write_gsea_tsv


def score_map(values):
    return {f"g{i}": float(v) for i, v in enumerate(values)}


def brute_force_ks(scores, members):
    """Sup of the ECDF difference over a dense t-grid (step 1e-6 of the range)."""
    inside = np.sort([v for g, v in scores.items() if g in members])
    outside = np.sort([v for g, v in scores.items() if g not in members])
    values = np.concatenate([inside, outside])
    lo, hi = values.min(), values.max()
    span = hi - lo if hi > lo else 1.0
    grid = np.arange(lo, hi + span * 1e-6, span * 1e-6)
    f_in = np.searchsorted(inside, grid, side="right") / inside.shape[0]
    f_out = np.searchsorted(outside, grid, side="right") / outside.shape[0]
    return float(np.max(np.abs(f_in - f_out)))


def test_ks_full_separation():
    scores = score_map([1.0, 2.0, 3.0, 4.0])
    assert ks_statistic(scores, GeneSet("s", frozenset({"g2", "g3"}))) == 1.0


def test_ks_interleaved():
    scores = score_map([1.0, 2.0, 3.0, 4.0])
    assert ks_statistic(scores, GeneSet("s", frozenset({"g0", "g2"}))) == 0.5


def test_ks_identical_multisets_is_zero():
    scores = {"a": 1.0, "b": 2.0, "c": 1.0, "d": 2.0}
    assert ks_statistic(scores, GeneSet("s", frozenset({"a", "b"}))) == 0.0


def test_ks_empty_side_error():
    scores = score_map([1.0, 2.0])
    with pytest.raises(ValueError, match="both sides"):
        ks_statistic(scores, GeneSet("s", frozenset({"g0", "g1"})))
    with pytest.raises(ValueError, match="both sides"):
        ks_statistic(scores, GeneSet("s", frozenset({"nope"})))


def test_ks_rejects_non_finite_scores():
    with pytest.raises(ValueError, match="not finite"):
        ks_statistic({"a": 1.0, "b": math.nan}, GeneSet("s", frozenset({"a"})))


def test_ks_matches_dense_grid_oracle():
    rng = np.random.default_rng(0)
    for trial in range(200):
        pooled = int(rng.integers(2, 11))
        k = int(rng.integers(1, pooled))
        values = np.round(rng.uniform(0.0, 1.0, size=pooled), 3)
        scores = score_map(values)
        members = frozenset(rng.choice(sorted(scores), size=k, replace=False))
        ours = ks_statistic(scores, GeneSet("s", members))
        assert abs(ours - brute_force_ks(scores, members)) <= 1e-12, (trial, values, members)


def test_ks_swap_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(100):
        pooled = int(rng.integers(3, 30))
        k = int(rng.integers(1, pooled))
        values = np.round(rng.normal(size=pooled), 2)  # rounding forces some ties
        scores = score_map(values)
        genes = sorted(scores)
        members = frozenset(rng.choice(genes, size=k, replace=False))
        complement = frozenset(genes) - members
        assert ks_statistic(scores, GeneSet("s", members)) == ks_statistic(
            scores, GeneSet("c", complement)
        )


def test_ks_monotone_transform_invariance():
    rng = np.random.default_rng(2)
    for _ in range(50):
        values = rng.normal(size=25)
        scores = score_map(values)
        members = frozenset(rng.choice(sorted(scores), size=8, replace=False))
        base = ks_statistic(scores, GeneSet("s", members))
        warped = {g: math.exp(v) + v**3 for g, v in scores.items()}
        assert ks_statistic(warped, GeneSet("s", members)) == base
        assert 0.0 <= base <= 1.0


def test_gene_set_requires_members():
    with pytest.raises(ValueError):
        GeneSet("empty", frozenset())


def test_read_gmt(tmp_path):
    path = tmp_path / "sets.gmt"
    path.write_text("SET1\tdesc one\tg1\tg2\tg3\n\nSET2\t-\tg9\n")
    sets = read_gmt(path)
    assert [s.set_id for s in sets] == ["SET1", "SET2"]
    assert sets[0].members == frozenset({"g1", "g2", "g3"})
    assert sets[0].source_line == 1
    assert sets[1].source_line == 3


def test_read_gmt_errors(tmp_path):
    no_genes = tmp_path / "a.gmt"
    no_genes.write_text("SET1\tdesc\tg1\nSET2\tdesc only\n")
    with pytest.raises(ValueError, match=r"a\.gmt:2"):
        read_gmt(no_genes)
    dup_gene = tmp_path / "b.gmt"
    dup_gene.write_text("SET1\tdesc\tg1\tg1\n")
    with pytest.raises(ValueError, match=r"b\.gmt:1.*duplicate gene"):
        read_gmt(dup_gene)
    dup_set = tmp_path / "c.gmt"
    dup_set.write_text("SET1\tdesc\tg1\nSET1\tdesc\tg2\n")
    with pytest.raises(ValueError, match="duplicate set id"):
        read_gmt(dup_set)
    empty = tmp_path / "d.gmt"
    empty.write_text("\n")
    with pytest.raises(ValueError, match="no gene sets"):
        read_gmt(empty)


def big_fixture(n=120, seed=3):
    rng = np.random.default_rng(seed)
    scores = score_map(rng.normal(size=n))
    genes = sorted(scores)
    top = sorted(scores, key=scores.get, reverse=True)
    sets = [
        GeneSet("separated", frozenset(top[:20]), 1),
        GeneSet("null_a", frozenset(rng.choice(genes, size=15, replace=False)), 2),
        GeneSet("null_b", frozenset(rng.choice(genes, size=25, replace=False)), 3),
        GeneSet("tiny", frozenset(top[:5]), 4),
    ]
    return scores, sets


def test_run_gsea_min_size_filter():
    scores, sets = big_fixture()
    results = run_gsea(scores, sets, min_size=10, perm_reps=49, seed=0)
    assert {r.set_id for r in results} == {"separated", "null_a", "null_b"}
    with pytest.raises(ValueError, match="no gene set"):
        run_gsea(scores, [GeneSet("tiny", frozenset(list(scores)[:5]), 1)], min_size=10)


def test_run_gsea_separated_set_gets_minimal_p():
    scores, sets = big_fixture()
    results = run_gsea(scores, sets, min_size=10, perm_reps=999, seed=0)
    top = results[0]
    assert top.set_id == "separated"
    assert top.ks_stat == 1.0
    assert top.p_perm == 1.0 / 1000.0
    assert 0.0 < top.p_asymptotic < 1e-6


def test_run_gsea_sorted_and_counts_consistent():
    scores, sets = big_fixture()
    results = run_gsea(scores, sets, min_size=10, perm_reps=99, seed=5)
    keys = [(r.p_perm, -r.ks_stat, r.set_id) for r in results]
    assert keys == sorted(keys)
    for r in results:
        assert r.k + r.k_prime == len(scores)
        assert 0.0 < r.p_perm <= 1.0
        assert 0.0 < r.p_asymptotic <= 1.0


def test_run_gsea_independent_of_set_order_and_threads():
    scores, sets = big_fixture()
    base = run_gsea(scores, sets, min_size=10, perm_reps=99, seed=7)
    shuffled = run_gsea(scores, sets[::-1], min_size=10, perm_reps=99, seed=7)
    assert base == shuffled
    threaded = run_gsea(scores, sets, min_size=10, perm_reps=99, seed=7, threads=3)
    assert base == threaded


def test_run_gsea_validation():
    scores, sets = big_fixture()
    with pytest.raises(ValueError):
        run_gsea(scores, sets, min_size=0)
    with pytest.raises(ValueError):
        run_gsea(scores, sets, perm_reps=0)


def test_write_gsea_tsv(tmp_path):
    scores, sets = big_fixture()
    results = run_gsea(scores, sets, min_size=10, perm_reps=49, seed=0)
    path = tmp_path / "gsea.tsv"
    write_gsea_tsv(results, path, comments=["fixture"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# fixture"
    assert lines[1] == "set_id\tk\tks_stat\tp_perm\tp_asymptotic"
    assert len(lines) == 2 + len(results)
    assert lines[2].split("\t")[0] == results[0].set_id
