import pytest

import expertsel.kernels as kernels
from expertsel import ClassPriors, FeatureProbabilityTable

_ACCEPTANCE = []


@pytest.fixture
def signs_table():
    """Three-sign, two-disease example table."""
    return FeatureProbabilityTable.from_arrays(["x1", "x2", "x3"], [0.3, 0.4, 0.8], [0.1, 0.6, 0.7])


@pytest.fixture
def dot_triangle_table():
    """The dot (0.15, 0.75) and triangle (0.90, 0.30) features."""
    return FeatureProbabilityTable.from_arrays(["x1", "x2"], [0.15, 0.90], [0.75, 0.30])


@pytest.fixture
def equal_priors():
    return ClassPriors(0.5, 0.5)


def _available_backends():
    names = ["python"]
    try:
        kernels.get_backend("cython")
        names.append("cython")
    except ImportError:
        pass
    return names


@pytest.fixture(params=_available_backends())
def backend(request, monkeypatch):
    impl = kernels.get_backend(request.param)
    monkeypatch.setattr(kernels, "score_candidates", impl.score_candidates)
    return request.param


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.module.__name__.endswith("test_acceptance"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE.append((rep.outcome.upper(), doc))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for outcome, doc in _ACCEPTANCE:
            terminalreporter.write_line(f"{'PASS' if outcome == 'PASSED' else 'FAIL'}  {doc}")
