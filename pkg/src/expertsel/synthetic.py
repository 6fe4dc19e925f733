"""Synthetic probability tables for tests, benchmarks and demos."""

import numpy as np

from .model import FeatureProbabilityTable


def random_table(n, seed=0, prefix="f"):
    """Probabilities drawn uniformly from [0, 1]."""
    rng = np.random.default_rng(seed)
    return FeatureProbabilityTable.from_arrays(
        [f"{prefix}{j + 1}" for j in range(n)], rng.uniform(size=n), rng.uniform(size=n))


def separated_table(n=30, n_strong=10, seed=0):
    """``n_strong`` clearly discriminative features followed by near-diagonal ones.

    Strong features sit near the (1, 0) or (0, 1) corners with gaps that
    shrink with their index, so their individual order is well defined; the
    rest have ``|p1 - p2| <= 0.05``.
    """
    rng = np.random.default_rng(seed)
    p1 = np.empty(n)
    p2 = np.empty(n)
    for j in range(n_strong):
        gap = 0.85 - 0.3 * j / max(1, n_strong - 1)
        lo = (1.0 - gap) / 2
        hi, lo = lo + gap, lo
        p1[j], p2[j] = (hi, lo) if j % 2 == 0 else (lo, hi)
    mid = rng.uniform(0.2, 0.8, size=n - n_strong)
    p1[n_strong:] = mid
    p2[n_strong:] = np.clip(mid + rng.uniform(-0.05, 0.05, size=n - n_strong), 0, 1)
    names = [f"s{j + 1}" for j in range(n_strong)] + [f"u{j + 1}" for j in range(n - n_strong)]
    return FeatureProbabilityTable.from_arrays(names, p1, p2)
