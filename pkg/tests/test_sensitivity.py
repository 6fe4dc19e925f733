import numpy as np
import pytest

from expertsel import (
    ClassPriors,
    InvalidInputError,
    PerturbationConfig,
    RankTable,
    StoppingRule,
    compare_rank_tables,
    perturb_table,
    run_sensitivity,
    sfs_select,
)
from expertsel.sensitivity import reference_rank_table, run_stream, truncated_normal
from expertsel.synthetic import random_table, separated_table


def test_sigma_zero_is_identity(signs_table):
    assert perturb_table(signs_table, 0.0, run_stream(0, 0)) is signs_table


def test_negative_sigma(signs_table):
    with pytest.raises(InvalidInputError):
        perturb_table(signs_table, -0.1, run_stream(0, 0))
    with pytest.raises(InvalidInputError):
        PerturbationConfig(sigma=-1)


def test_truncation_bounds():
    rng = run_stream(1, 0)
    x = truncated_normal(np.full(50_000, 0.99), 0.3, rng)
    assert x.min() >= 0.0 and x.max() <= 1.0
    assert x.mean() < 0.99


def test_truncated_mean_near_centre():
    x = truncated_normal(np.full(100_000, 0.5), 0.1, run_stream(7, 0))
    assert abs(x.mean() - 0.5) < 0.01


def test_perturbed_table_valid(signs_table):
    t = perturb_table(signs_table, 0.3, run_stream(3, 0))
    assert t.names == signs_table.names
    assert ((t.p1 >= 0) & (t.p1 <= 1)).all() and ((t.p2 >= 0) & (t.p2 <= 1)).all()
    assert not np.array_equal(t.p1, signs_table.p1)


def test_streams_independent_of_order():
    a = run_stream(5, 3).normal(size=4)
    run_stream(5, 2).normal(size=100)
    assert np.array_equal(a, run_stream(5, 3).normal(size=4))
    assert not np.array_equal(a, run_stream(5, 4).normal(size=4))


@pytest.mark.parametrize("sigma", [0.05, 0.2])
def test_rank_conservation(sigma):
    table = random_table(12, seed=4)
    cfg = PerturbationConfig(sigma=sigma, runs=60, d=5, seed=9)
    rt = run_sensitivity(table, ClassPriors(0.4, 0.6), cfg)
    assert rt.total_rank.sum() == cfg.runs * cfg.d * (cfg.d + 1) // 2
    assert rt.selection_count.sum() == cfg.runs * cfg.d
    assert rt.runs == 60


def test_zero_noise_collapses_to_sfs():
    table = random_table(10, seed=8)
    pr = ClassPriors(0.5, 0.5)
    d = 4
    rt = run_sensitivity(table, pr, PerturbationConfig(sigma=0.0, runs=25, d=d))
    picks = sfs_select(table, pr, StoppingRule(target_count=d)).selected
    expected = np.zeros(10, dtype=np.int64)
    for k, j in enumerate(picks, start=1):
        expected[j] = 25 * (d - k + 1)
    assert np.array_equal(rt.total_rank, expected)
    assert rt.top(d) == picks


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_worker_count_does_not_matter(workers):
    table = random_table(15, seed=6)
    cfg = PerturbationConfig(sigma=0.2, runs=40, d=4, seed=123)
    serial = run_sensitivity(table, ClassPriors(), cfg, workers=1)
    parallel = run_sensitivity(table, ClassPriors(), cfg, workers=workers)
    assert np.array_equal(serial.total_rank, parallel.total_rank)
    assert np.array_equal(serial.selection_count, parallel.selection_count)


def test_seed_changes_result():
    table = random_table(15, seed=6)
    a = run_sensitivity(table, ClassPriors(), PerturbationConfig(0.3, runs=30, d=4, seed=1))
    b = run_sensitivity(table, ClassPriors(), PerturbationConfig(0.3, runs=30, d=4, seed=2))
    assert not np.array_equal(a.total_rank, b.total_rank)


def test_ten_thousand_total():
    # 1000 runs x d=4 distributes 1000 * (4+3+2+1) rank points
    table = separated_table(n=12, n_strong=4, seed=1)
    rt = run_sensitivity(table, ClassPriors(), PerturbationConfig(0.1, runs=1000, d=4))
    assert int(rt.total_rank.sum()) == 10_000


def test_merge_and_order():
    names = ("a", "b", "c")
    x = RankTable(names, [3, 0, 3], [1, 0, 1], 1, 3)
    y = RankTable(names, [0, 2, 1], [0, 1, 1], 1, 3)
    m = x.merge(y)
    assert list(m.total_rank) == [3, 2, 4] and m.runs == 2
    assert m.order() == [2, 0, 1]
    assert RankTable(names, [1, 1, 0], [1, 1, 0], 1, 2).order() == [0, 1, 2]
    with pytest.raises(InvalidInputError):
        x.merge(RankTable(names, [0, 0, 0], [0, 0, 0], 1, 2))


def test_rank_table_read_only():
    rt = RankTable(("a",), [1], [1], 1, 1)
    with pytest.raises(ValueError):
        rt.total_rank[0] = 5


class TestCompare:
    names = tuple("abcdefgh")

    def _rt(self, ranks, sigma=None):
        return RankTable(self.names, ranks, [int(r > 0) for r in ranks], 1, 4, sigma)

    def test_identical(self):
        t = self._rt([4, 3, 2, 1, 0, 0, 0, 0])
        rep = compare_rank_tables([t, t, t], 4, labels=["x", "y", "z"])
        assert set(rep.pairwise.values()) == {4}
        assert rep.min_intersection() == 4
        assert rep.union == ["a", "b", "c", "d"]

    def test_disjoint(self):
        t1 = self._rt([4, 3, 2, 1, 0, 0, 0, 0], 0.1)
        t2 = self._rt([0, 0, 0, 0, 4, 3, 2, 1], 0.2)
        rep = compare_rank_tables([t1, t2], 4)
        assert rep.pairwise == {("sigma=0.1", "sigma=0.2"): 0}
        assert len(rep.union) == 8
        assert rep.entering["sigma=0.2"] == ["e", "f", "g", "h"]
        assert rep.dropping["sigma=0.2"] == ["a", "b", "c", "d"]

    def test_mismatched_features(self):
        other = RankTable(tuple("abcdefgz"), [0] * 8, [0] * 8, 1, 4)
        with pytest.raises(InvalidInputError):
            compare_rank_tables([self._rt([1] * 8), other], 3)

    def test_bad_k(self):
        with pytest.raises(InvalidInputError):
            compare_rank_tables([self._rt([1] * 8)], 9)


def test_reference_table(dot_triangle_table):
    rt = reference_rank_table(dot_triangle_table, ClassPriors(0.3, 0.7), 2)
    assert list(rt.total_rank) == [2, 1]
