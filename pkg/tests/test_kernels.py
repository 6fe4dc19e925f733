import numpy as np
import pytest

import expertsel.kernels as kernels
from expertsel import ClassPriors, build_list
from expertsel.synthetic import random_table

from oracles import enumerate_error


def _backends():
    out = [kernels.get_backend("python")]
    try:
        out.append(kernels.get_backend("cython"))
    except ImportError:
        pass
    return out


def _reference(a, b, c, d):
    err, fp = [], []
    for cc, dd in zip(c, d):
        e = f = 0.0
        for x, y in ((a * cc, b * dd), (a * (1 - cc), b * (1 - dd))):
            m = y <= x
            e += np.where(m, y, x).sum()
            f += y[m].sum()
        err.append(e)
        fp.append(f)
    return np.array(err), np.array(fp)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_active_backend_name():
    assert kernels.BACKEND in ("python", "cython")


@pytest.mark.parametrize("impl", _backends(), ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("m", [1, 7, 300])
def test_matches_reference(impl, m):
    rng = np.random.default_rng(m)
    a, b = rng.uniform(0, 0.01, m), rng.uniform(0, 0.01, m)
    c, d = rng.uniform(size=50), rng.uniform(size=50)
    err, fp = impl.score_candidates(a, b, c, d)
    ref_err, ref_fp = _reference(a, b, c, d)
    np.testing.assert_allclose(err, ref_err, atol=1e-12, rtol=0)
    np.testing.assert_allclose(fp, ref_fp, atol=1e-12, rtol=0)


def test_backends_agree_on_tables():
    impls = _backends()
    if len(impls) < 2:
        pytest.skip("compiled extension not built")
    table = random_table(40, seed=5)
    cells = build_list(table, ClassPriors(0.4, 0.6), range(12))
    outs = [impl.score_candidates(cells.a, cells.b, table.p1, table.p2) for impl in impls]
    np.testing.assert_allclose(outs[0][0], outs[1][0], atol=1e-12, rtol=0)
    np.testing.assert_allclose(outs[0][1], outs[1][1], atol=1e-12, rtol=0)


@pytest.mark.parametrize("impl", _backends(), ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_ties_count_as_false_positive(impl):
    a = np.array([0.2, 0.3])
    b = np.array([0.2, 0.1])
    err, fp = impl.score_candidates(a, b, np.array([1.0]), np.array([1.0]))
    assert err[0] == pytest.approx(0.3)
    assert fp[0] == pytest.approx(0.3)


@pytest.mark.parametrize("impl", _backends(), ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_adding_feature_matches_enumeration(impl):
    table = random_table(6, seed=2)
    pr = ClassPriors(0.3, 0.7)
    cells = build_list(table, pr, [0, 1, 2])
    err, _ = impl.score_candidates(cells.a, cells.b, table.p1[3:], table.p2[3:])
    for k, j in enumerate(range(3, 6)):
        sub = [0, 1, 2, j]
        e, _, _ = enumerate_error(table.p1[sub], table.p2[sub], pr.as_tuple())
        assert err[k] == pytest.approx(e, abs=1e-15)


def test_python_blocking(monkeypatch):
    py = kernels.get_backend("python")
    rng = np.random.default_rng(0)
    a, b = rng.uniform(size=33), rng.uniform(size=33)
    c, d = rng.uniform(size=17), rng.uniform(size=17)
    whole = py.score_candidates(a, b, c, d)
    monkeypatch.setattr(py, "_BLOCK_ELEMENTS", 40)
    np.testing.assert_allclose(py.score_candidates(a, b, c, d)[0], whole[0], atol=1e-12, rtol=0)


def test_empty_candidates():
    for impl in _backends():
        err, fp = impl.score_candidates(np.ones(3), np.ones(3), np.empty(0), np.empty(0))
        assert err.shape == fp.shape == (0,)
