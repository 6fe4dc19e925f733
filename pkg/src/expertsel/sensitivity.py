"""Stability of SFS under perturbed expert estimates.

Each run perturbs every probability of the table independently with a
normal draw centred on the estimate and truncated to [0, 1], reruns SFS for
``d`` features and scores the selection: the first pick gets rank ``d``, the
last rank 1, unselected features 0. Ranks are summed over runs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .model import DEFAULT_MAX_DEPTH, ClassPriors, FeatureProbabilityTable, InvalidInputError
from .selector import StoppingRule, sfs_select

STUDY_SIGMAS = (0.1, 0.2, 0.3)


@dataclass(frozen=True)
class PerturbationConfig:
    sigma: float
    runs: int = 1000
    d: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise InvalidInputError("sigma must be >= 0")
        if self.runs < 1:
            raise InvalidInputError("runs must be >= 1")
        if self.d < 1:
            raise InvalidInputError("d must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")


def run_stream(seed, run):
    """Independent generator for run ``run``; does not depend on execution order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(run,)))


def truncated_normal(mean, sigma, rng):
    """Normal draws around ``mean`` kept inside [0, 1] by redrawing."""
    mean = np.asarray(mean, dtype=np.float64)
    x = rng.normal(mean, sigma)
    bad = (x < 0.0) | (x > 1.0)
    while bad.any():
        x[bad] = rng.normal(mean[bad], sigma)
        bad = (x < 0.0) | (x > 1.0)
    return x


def perturb_table(table: FeatureProbabilityTable, sigma, rng) -> FeatureProbabilityTable:
    if sigma < 0:
        raise InvalidInputError("sigma must be >= 0")
    if sigma == 0:
        return table
    p1 = truncated_normal(table.p1, sigma, rng)
    p2 = truncated_normal(table.p2, sigma, rng)
    return table.with_probabilities(p1, p2)


@dataclass(frozen=True, eq=False)
class RankTable:
    names: tuple[str, ...]
    total_rank: np.ndarray
    selection_count: np.ndarray
    runs: int
    d: int
    sigma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        for attr in ("total_rank", "selection_count"):
            arr = np.array(getattr(self, attr), dtype=np.int64)
            arr.flags.writeable = False
            object.__setattr__(self, attr, arr)

    @classmethod
    def empty(cls, names, d, sigma=None):
        n = len(names)
        return cls(names, np.zeros(n), np.zeros(n), 0, d, sigma)

    def merge(self, other: RankTable) -> RankTable:
        if self.names != other.names or self.d != other.d:
            raise InvalidInputError("rank tables over different features or d cannot be merged")
        return RankTable(self.names, self.total_rank + other.total_rank,
                         self.selection_count + other.selection_count,
                         self.runs + other.runs, self.d, self.sigma)

    def order(self):
        """Feature indices by total rank, highest first; ties by index."""
        return sorted(range(len(self.names)), key=lambda j: (-int(self.total_rank[j]), j))

    def top(self, k):
        return self.order()[:k]

    def rows(self):
        for j in self.order():
            yield j, self.names[j], int(self.total_rank[j]), int(self.selection_count[j])


def _run_block(table, priors, config, runs, max_depth):
    total = np.zeros(len(table), dtype=np.int64)
    count = np.zeros(len(table), dtype=np.int64)
    stop = StoppingRule(target_count=config.d)
    for run in runs:
        perturbed = perturb_table(table, config.sigma, run_stream(config.seed, run))
        trace = sfs_select(perturbed, priors, stop, max_depth=max_depth)
        for pos, j in enumerate(trace.selected):
            total[j] += config.d - pos
            count[j] += 1
    return RankTable(table.names, total, count, len(runs), config.d, config.sigma)


def run_sensitivity(table: FeatureProbabilityTable, priors: ClassPriors,
                    config: PerturbationConfig, workers=1,
                    max_depth=DEFAULT_MAX_DEPTH) -> RankTable:
    """Accumulate selection ranks over ``config.runs`` perturbed SFS runs.

    Priors are not perturbed. Runs are split into contiguous blocks across
    ``workers`` threads; the integer merge makes the result independent of
    the split.
    """
    workers = max(1, int(workers))
    all_runs = range(config.runs)
    if workers == 1 or config.runs == 1:
        return _run_block(table, priors, config, all_runs, max_depth)
    size = -(-config.runs // workers)
    blocks = [all_runs[i:i + size] for i in range(0, config.runs, size)]
    result = RankTable.empty(table.names, config.d, config.sigma)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(lambda r: _run_block(table, priors, config, r, max_depth), blocks):
            result = result.merge(part)
    return result


def reference_rank_table(table, priors, d, max_depth=DEFAULT_MAX_DEPTH) -> RankTable:
    """One-run rank table of the unperturbed SFS selection."""
    return run_sensitivity(table, priors, PerturbationConfig(sigma=0.0, runs=1, d=d),
                           max_depth=max_depth)


@dataclass(frozen=True)
class OverlapReport:
    """How far the top-``k`` lists of several rank tables agree.

    ``entering[label]`` lists features in that table's top-k but not in the
    reference top-k; ``dropping[label]`` the reverse.
    """

    k: int
    labels: tuple[str, ...]
    top: dict
    reference_top: list
    pairwise: dict
    union: list
    entering: dict = field(default_factory=dict)
    dropping: dict = field(default_factory=dict)

    def min_intersection(self):
        return min(self.pairwise.values()) if self.pairwise else self.k


def compare_rank_tables(tables, k, reference: RankTable | None = None, labels=None) -> OverlapReport:
    tables = list(tables)
    if not tables:
        raise InvalidInputError("nothing to compare")
    reference = reference if reference is not None else tables[0]
    names = reference.names
    for t in tables:
        if t.names != names:
            raise InvalidInputError("rank tables are over different feature sets")
    if not 1 <= k <= len(names):
        raise InvalidInputError(f"k must lie in [1, {len(names)}]")
    if labels is None:
        labels = [f"sigma={t.sigma:g}" if t.sigma is not None else f"table{i}"
                  for i, t in enumerate(tables)]
    labels = tuple(labels)
    if len(set(labels)) != len(labels):
        labels = tuple(f"{lab}#{i}" for i, lab in enumerate(labels))
    tops = {lab: [names[j] for j in t.top(k)] for lab, t in zip(labels, tables)}
    ref_top = [names[j] for j in reference.top(k)]
    pairwise = {(x, y): len(set(tops[x]) & set(tops[y])) for x, y in combinations(labels, 2)}
    seen = []
    for lab in labels:
        seen.extend(f for f in tops[lab] if f not in seen)
    entering = {lab: [f for f in tops[lab] if f not in ref_top] for lab in labels}
    dropping = {lab: [f for f in ref_top if f not in tops[lab]] for lab in labels}
    return OverlapReport(k, labels, tops, ref_top, pairwise, seen, entering, dropping)
