"""Acceptance criteria, one test each; the docstring's first line names the criterion."""

import time

import numpy as np
import pytest

from expertsel import (
    CellList,
    ClassPriors,
    FeatureProbabilityTable,
    PerturbationConfig,
    StoppingRule,
    class_supports,
    classify,
    compare_rank_tables,
    error_of_subset,
    evaluate_error,
    exhaustive_best_subset,
    expand_list,
    find_counterexample,
    no_improvement_test,
    run_sensitivity,
    sensitivity_specificity,
    sfs_select,
)
from expertsel.selector import BEST_NOT_IN_BEST_PAIR
from expertsel.sensitivity import STUDY_SIGMAS, reference_rank_table
from expertsel.synthetic import random_table, separated_table

from oracles import confusion, enumerate_error, subset_error


def test_worked_example_supports(signs_table, equal_priors):
    """Worked example: x=(1,0,1) supports 0.072 / 0.014, labelled class 1."""
    s1, s2 = class_supports(signs_table, equal_priors, (1, 0, 1))
    assert s1 == pytest.approx(0.072, abs=1e-15)
    assert s2 == pytest.approx(0.014, abs=1e-15)
    assert classify(signs_table, equal_priors, (1, 0, 1)) == 1


def test_list_expansion_fixture():
    """List fixture: [(0.3,0.7)] expanded by (0.15,0.75) gives two cells and error 0.22."""
    cells = expand_list(CellList.from_pairs([(0.3, 0.7)]), 0.15, 0.75)
    got = cells.pairs()
    assert len(got) == 2
    for (a, b), (ea, eb) in zip(got, [(0.045, 0.525), (0.255, 0.175)]):
        assert a == pytest.approx(ea, abs=1e-15) and b == pytest.approx(eb, abs=1e-15)
    assert evaluate_error(cells).error == pytest.approx(0.22, abs=1e-15)


def test_nonmonotone_reduction(dot_triangle_table):
    """Non-monotone reduction: errors 0.3 -> 0.22 -> 0.123, drops 0.08 then 0.097."""
    trace = sfs_select(dot_triangle_table, ClassPriors(0.3, 0.7), StoppingRule(target_count=2))
    assert trace.initial_error == pytest.approx(0.3, abs=1e-12)
    assert trace.errors == pytest.approx([0.22, 0.123], abs=1e-12)
    assert trace.reductions == pytest.approx([0.08, 0.097], abs=1e-12)
    assert trace.reductions[1] > trace.reductions[0]


def test_region_escape():
    """Region escape: (0.1,0.8) is neutral for (0.1,0.5) but not for its alpha=5/6 child."""
    a, b = 0.1, 0.5
    assert not no_improvement_test(a, b, 0.4, 0.9)
    assert no_improvement_test(a, b, 0.1, 0.8)
    children = expand_list(CellList.from_pairs([(a, b)]), 0.4, 0.9).pairs()
    alphas = sorted(cb / ca for ca, cb in children)
    assert alphas[0] == pytest.approx(5 / 6, abs=1e-12)
    assert alphas[1] == pytest.approx(11.25, abs=1e-12)
    low = min(children, key=lambda cell: cell[1] / cell[0])
    assert not no_improvement_test(low[0], low[1], 0.1, 0.8)
    high = max(children, key=lambda cell: cell[1] / cell[0])
    assert no_improvement_test(high[0], high[1], 0.1, 0.8)


def test_oracle_equivalence():
    """Oracle equivalence: 200 random tables (n <= 12, random priors) match 2^n enumeration."""
    rng = np.random.default_rng(2024)
    for k in range(200):
        n = int(rng.integers(1, 13))
        table = random_table(n, seed=int(rng.integers(2**32)))
        p = float(rng.uniform(0.01, 0.99))
        pr = ClassPriors(p, 1.0 - p)
        got = error_of_subset(table, pr, range(n))
        err, fp, fn = enumerate_error(table.p1.tolist(), table.p2.tolist(), pr.as_tuple())
        assert got.error == pytest.approx(err, abs=1e-12), k
        assert got.false_positive == pytest.approx(fp, abs=1e-12), k
        assert got.false_negative == pytest.approx(fn, abs=1e-12), k


def test_monotonicity_suite():
    """Monotonicity: adding a feature never raises the error (1000 random triples)."""
    rng = np.random.default_rng(7)
    for k in range(1000):
        n = int(rng.integers(2, 11))
        table = random_table(n, seed=int(rng.integers(2**32)))
        p = float(rng.uniform(0.01, 0.99))
        pr = ClassPriors(p, 1.0 - p)
        perm = rng.permutation(n)
        size = int(rng.integers(0, n))
        subset, extra = perm[:size].tolist(), int(perm[size])
        before = error_of_subset(table, pr, subset).error
        after = error_of_subset(table, pr, [*subset, extra]).error
        assert after <= before + 1e-12, k


def test_non_optimality_witness():
    """Non-optimality witness: certified n=3 table where the best feature is not in the best pair."""
    res = find_counterexample(BEST_NOT_IN_BEST_PAIR, grid_step=0.05, budget=50_000, seed=0)
    assert res.found
    table, pr = res.table, res.priors
    assert len(table) == 3
    on_grid = np.concatenate([table.p1, table.p2]) / 0.05
    assert np.allclose(on_grid, np.round(on_grid), atol=1e-9)
    singles = [subset_error(table, pr, [j]) for j in range(3)]
    best = int(np.argmin(singles))
    assert sorted(singles)[1] > singles[best] + 1e-12
    pair, pair_err = exhaustive_best_subset(table, pr, 2)
    assert best not in pair
    assert pair_err.error == pytest.approx(subset_error(table, pr, pair), abs=1e-12)
    for other in range(3):
        if other != best:
            assert subset_error(table, pr, [best, other]) > pair_err.error + 1e-12


def test_sensitivity_protocol():
    """Sensitivity protocol: d=10, R=1000 on 30 features; rank sums, zero noise, top-10 overlap."""
    table = separated_table(n=30, n_strong=10, seed=0)
    pr = ClassPriors(0.5, 0.5)
    d, runs = 10, 1000
    zero = run_sensitivity(table, pr, PerturbationConfig(sigma=0.0, runs=runs, d=d, seed=0))
    picks = sfs_select(table, pr, StoppingRule(target_count=d)).selected
    expected = np.zeros(len(table), dtype=np.int64)
    for pos, j in enumerate(picks, start=1):
        expected[j] = runs * (d - pos + 1)
    assert np.array_equal(zero.total_rank, expected)
    assert int(zero.total_rank.sum()) == 55_000

    tables = [run_sensitivity(table, pr, PerturbationConfig(sigma=s, runs=runs, d=d, seed=0),
                              workers=4)
              for s in STUDY_SIGMAS]
    for t in tables:
        assert int(t.total_rank.sum()) == 55_000
        assert len(t.top(10)) == 10
    report = compare_rank_tables(tables, 10, reference=reference_rank_table(table, pr, d))
    assert len(report.pairwise) == 3
    assert report.min_intersection() >= 8
    assert all(len(report.top[lab]) == 10 for lab in report.labels)


def test_scale_check():
    """Scale check: SFS picks 15 of 285 features in under 60 s with non-increasing error."""
    table = random_table(285, seed=5, prefix="sign")
    pr = ClassPriors(0.5, 0.5)
    start = time.perf_counter()
    trace = sfs_select(table, pr, StoppingRule(target_count=15))
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    assert len(trace.selected) == 15
    errs = [trace.initial_error, *trace.errors]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


def _confusion_rates(table, pr, subset):
    tp, fn, fp, tn = confusion([table.p1[j] for j in subset], [table.p2[j] for j in subset],
                               pr.as_tuple())
    return fp, fn, tp / (tp + fn), tn / (tn + fp)


def test_error_decomposition_rates(dot_triangle_table):
    """Error split: fp+fn=e on every trace step; sensitivity/specificity match the confusion oracle."""
    cases = [(dot_triangle_table, ClassPriors(0.3, 0.7), 2)]
    rng = np.random.default_rng(99)
    for _ in range(25):
        n = int(rng.integers(2, 10))
        p = float(rng.uniform(0.05, 0.95))
        cases.append((random_table(n, seed=int(rng.integers(2**32))), ClassPriors(p, 1 - p),
                      int(rng.integers(1, n + 1))))
    cases.append((FeatureProbabilityTable.from_arrays(["a", "b"], [1.0, 0.0], [0.0, 0.5]),
                  ClassPriors(0.4, 0.6), 2))
    for table, pr, d in cases:
        trace = sfs_select(table, pr, StoppingRule(target_count=d))
        for k, step in enumerate(trace.steps):
            assert step.false_positive + step.false_negative == pytest.approx(
                step.cumulative_error, abs=1e-12)
            fp, fn, sens, spec = _confusion_rates(table, pr, trace.selected[:k + 1])
            assert step.false_positive == pytest.approx(fp, abs=1e-12)
            assert step.false_negative == pytest.approx(fn, abs=1e-12)
            assert step.sensitivity == pytest.approx(sens, abs=1e-12)
            assert step.specificity == pytest.approx(spec, abs=1e-12)
            again = sensitivity_specificity(
                error_of_subset(table, pr, trace.selected[:k + 1]), pr)
            assert again == pytest.approx((step.sensitivity, step.specificity), abs=1e-12)
