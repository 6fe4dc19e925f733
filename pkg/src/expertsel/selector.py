"""Sequential forward selection over the exact Naive Bayes error.

Every SFS step keeps the current cell list and scores all remaining
candidates against it in one kernel call, so a step costs ``n * 2^k``
multiply-min operations instead of rebuilding each candidate subset.
Ties between candidates (errors within ``TIE_TOL``) go to the lowest table
index everywhere in this module.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import (
    DEFAULT_MAX_DEPTH,
    TIE_TOL,
    CapacityError,
    CellList,
    ClassPriors,
    FeatureProbabilityTable,
    InvalidInputError,
    NoImprovementRegion,
    RegionUndefinedError,
    error_of_subset,
    evaluate_error,
    expand_list,
    region_parallelogram,
    score_candidates,
    sensitivity_specificity,
)

REACHED_D = "reached_d"
REACHED_ERROR_TARGET = "reached_error_target"
EXHAUSTED_FEATURES = "exhausted_features"

SINGLE_FEATURE_ERROR = "single_feature_error"
ABSOLUTE_DIFFERENCE = "absolute_difference"

# C(20, 6): the default n <= 20, d <= 6 envelope for the exhaustive oracle
DEFAULT_EVALUATION_BUDGET = math.comb(20, 6)

BEST_NOT_IN_BEST_PAIR = "best_not_in_best_pair"
INDIVIDUALLY_BEST_PAIR_NOT_BEST_PAIR = "individually_best_pair_not_best_pair"
NONMONOTONE_REDUCTION = "nonmonotone_reduction"
COUNTEREXAMPLE_KINDS = (BEST_NOT_IN_BEST_PAIR, INDIVIDUALLY_BEST_PAIR_NOT_BEST_PAIR,
                        NONMONOTONE_REDUCTION)


class BudgetError(CapacityError):
    """The exhaustive oracle would need more evaluations than allowed."""


@dataclass(frozen=True)
class SelectionStep:
    feature_index: int
    feature_name: str
    cumulative_error: float
    sensitivity: float | None
    specificity: float | None
    reduction: float
    forced: bool
    false_positive: float = 0.0
    false_negative: float = 0.0
    pruned_error_bound: float = 0.0


@dataclass(frozen=True)
class SelectionTrace:
    steps: tuple[SelectionStep, ...]
    priors: ClassPriors
    stop_reason: str
    initial_error: float

    @property
    def selected(self):
        return [s.feature_index for s in self.steps]

    @property
    def names(self):
        return [s.feature_name for s in self.steps]

    @property
    def errors(self):
        return [s.cumulative_error for s in self.steps]

    @property
    def reductions(self):
        return [s.reduction for s in self.steps]


@dataclass(frozen=True)
class StoppingRule:
    """When to stop SFS.

    ``min_reduction`` never stops the search: reductions are not monotone
    along a run, so a small drop says little about the next one. It only
    triggers a warning when a non-forced step falls below it.
    """

    target_count: int | None = None
    target_error: float | None = None
    min_reduction: float | None = None

    def __post_init__(self):
        if self.target_count is None and self.target_error is None:
            raise InvalidInputError("a stopping rule needs target_count or target_error")
        if self.target_count is not None and self.target_count < 1:
            raise InvalidInputError("target_count must be >= 1")
        if self.target_error is not None and not 0.0 <= self.target_error <= 1.0:
            raise InvalidInputError("target_error must lie in [0, 1]")


def _first_min(values, tol=TIE_TOL):
    """Position of the first value within ``tol`` of the minimum."""
    values = np.asarray(values)
    return int(np.flatnonzero(values <= values.min() + tol)[0])


def _order_with_ties(scores, tol=TIE_TOL):
    """Positions sorted ascending by score; near-equal runs keep position order."""
    scores = np.asarray(scores, dtype=np.float64)
    order = list(np.argsort(scores, kind="stable"))
    out = []
    i = 0
    while i < len(order):
        head = scores[order[i]]
        j = i + 1
        while j < len(order) and scores[order[j]] - head <= tol:
            j += 1
        out.extend(sorted(order[i:j]))
        i = j
    return [int(k) for k in out]


def rank_individual(table: FeatureProbabilityTable, priors: ClassPriors,
                    criterion=SINGLE_FEATURE_ERROR):
    """Features best-first as ``[(index, score), ...]``.

    ``single_feature_error`` scores by the error of the feature alone
    (ascending); ``absolute_difference`` by ``|p1 - p2|`` (descending).
    """
    if criterion == SINGLE_FEATURE_ERROR:
        scores, _ = score_candidates(CellList.initial(priors), table.p1, table.p2)
        order = _order_with_ties(scores)
    elif criterion == ABSOLUTE_DIFFERENCE:
        scores = np.abs(table.p1 - table.p2)
        order = _order_with_ties(-scores)
    else:
        raise InvalidInputError(f"unknown ranking criterion {criterion!r}")
    return [(j, float(scores[j])) for j in order]


def select_among_nonimproving(candidates, region: NoImprovementRegion | None):
    """Pick the candidate ``(index, c, d)`` closest to the region boundary.

    Distance is Euclidean, to the boundary lines clipped to the unit square.
    Without a region (error already zero) the lowest index wins.
    """
    candidates = sorted((int(j), float(c), float(d)) for j, c, d in candidates)
    if not candidates:
        raise InvalidInputError("no candidates to choose from")
    if region is None:
        return candidates[0][0]
    dist = [region.distance(c, d) for _, c, d in candidates]
    return candidates[_first_min(dist)][0]


def sfs_select(table: FeatureProbabilityTable, priors: ClassPriors, stop: StoppingRule,
               max_depth=DEFAULT_MAX_DEPTH, prune_threshold=None) -> SelectionTrace:
    """Greedy forward selection minimising the exact error.

    When no remaining candidate lowers the error and the stopping rule is not
    met, the step is forced: the candidate nearest the boundary of the
    current no-improvement region is taken and the step is flagged.
    """
    n = len(table)
    if stop.target_count is not None:
        if stop.target_count > max_depth:
            raise CapacityError(
                f"target count {stop.target_count} exceeds the width cap exponent {max_depth}")
        if stop.target_count > n:
            raise InvalidInputError(
                f"target count {stop.target_count} exceeds the {n} available features")
    prune = 0.0 if prune_threshold is None else float(prune_threshold)
    p1, p2 = table.p1, table.p2

    cells = CellList.initial(priors, max_depth=max_depth)
    current = evaluate_error(cells)
    initial_error = current.error
    remaining = list(range(n))
    steps = []
    while True:
        if stop.target_count is not None and len(steps) >= stop.target_count:
            reason = REACHED_D
            break
        if stop.target_error is not None and current.error <= stop.target_error:
            reason = REACHED_ERROR_TARGET
            break
        if not remaining:
            reason = EXHAUSTED_FEATURES
            break
        idx = np.array(remaining)
        errs, _ = score_candidates(cells, p1[idx], p2[idx])
        forced = bool(np.all(current.error - errs <= TIE_TOL))
        if forced:
            try:
                region = region_parallelogram(cells)
            except RegionUndefinedError:
                region = None
            j = select_among_nonimproving(((k, p1[k], p2[k]) for k in remaining), region)
        else:
            j = remaining[_first_min(errs)]
        cells = expand_list(cells, p1[j], p2[j], prune=prune)
        new = evaluate_error(cells)
        sens, spec = sensitivity_specificity(new, priors)
        step = SelectionStep(
            feature_index=j, feature_name=table.names[j], cumulative_error=new.error,
            sensitivity=sens, specificity=spec, reduction=current.error - new.error,
            forced=forced, false_positive=new.false_positive,
            false_negative=new.false_negative, pruned_error_bound=new.pruned_error_bound)
        if stop.min_reduction is not None and not forced and step.reduction < stop.min_reduction:
            warnings.warn(
                f"step {len(steps) + 1} reduced the error by {step.reduction:.3g}, below "
                f"min_reduction={stop.min_reduction}; later steps can still reduce it more, "
                "so selection continues", stacklevel=2)
        steps.append(step)
        remaining.remove(j)
        current = new
    return SelectionTrace(tuple(steps), priors, reason, initial_error)


def exhaustive_best_subset(table: FeatureProbabilityTable, priors: ClassPriors, d: int,
                           max_evaluations=DEFAULT_EVALUATION_BUDGET,
                           max_depth=DEFAULT_MAX_DEPTH):
    """Minimum-error subset of size ``d`` by full enumeration.

    Subsets are visited in lexicographic order and only a strictly better
    error (beyond ``TIE_TOL``) replaces the incumbent, so ties resolve to the
    lexicographically smallest index set. Returns ``(subset, ErrorBreakdown)``.
    """
    n = len(table)
    if not 0 <= d <= n:
        raise InvalidInputError(f"subset size {d} not in [0, {n}]")
    needed = math.comb(n, d)
    if needed > max_evaluations:
        raise BudgetError(
            f"exhaustive search over C({n}, {d}) = {needed} subsets exceeds the "
            f"evaluation budget of {max_evaluations}")
    if d > max_depth:
        raise CapacityError(f"subset size {d} exceeds the width cap exponent {max_depth}")
    if d == 0:
        return (), error_of_subset(table, priors, (), max_depth=max_depth)

    p1, p2 = table.p1, table.p2
    best_err = math.inf
    best = None

    def walk(cells, chosen, start):
        nonlocal best_err, best
        if len(chosen) == d - 1:
            cand = np.arange(start, n)
            errs, _ = score_candidates(cells, p1[cand], p2[cand])
            for j, e in zip(cand.tolist(), errs.tolist()):
                if e < best_err - TIE_TOL:
                    best_err = e
                    best = (*chosen, j)
            return
        for j in range(start, n - (d - 1 - len(chosen))):
            walk(expand_list(cells, p1[j], p2[j], prune=0.0), (*chosen, j), j + 1)

    walk(CellList.initial(priors, max_depth=max_depth), (), 0)
    return best, error_of_subset(table, priors, best, max_depth=max_depth)


@dataclass(frozen=True)
class Counterexample:
    """Outcome of :func:`find_counterexample`; ``found`` is False when exhausted."""

    kind: str
    found: bool
    examined: int
    table: FeatureProbabilityTable | None = None
    priors: ClassPriors | None = None
    certificate: dict = field(default_factory=dict)


def _certify_best_not_in_best_pair(table, priors):
    ranking = rank_individual(table, priors)
    (best, e_best), (_, e_next) = ranking[0], ranking[1]
    if e_next - e_best <= TIE_TOL:
        return None
    pair, pair_err = exhaustive_best_subset(table, priors, 2)
    if best in pair:
        return None
    with_best = min(error_of_subset(table, priors, (best, k)).error
                    for k in range(len(table)) if k != best)
    if with_best - pair_err.error <= TIE_TOL:
        return None
    trace = sfs_select(table, priors, StoppingRule(target_count=2))
    return {
        "best_feature": best,
        "best_feature_error": e_best,
        "best_pair": list(pair),
        "best_pair_error": pair_err.error,
        "best_error_with_best_feature": with_best,
        "sfs_pair": trace.selected,
        "sfs_pair_error": trace.errors[-1],
    }


def _certify_top_pair_not_best(table, priors):
    ranking = rank_individual(table, priors)
    if len(ranking) > 2 and ranking[2][1] - ranking[1][1] <= TIE_TOL:
        return None
    top = tuple(sorted((ranking[0][0], ranking[1][0])))
    top_err = error_of_subset(table, priors, top).error
    pair, pair_err = exhaustive_best_subset(table, priors, 2)
    if top_err - pair_err.error <= TIE_TOL:
        return None
    return {
        "individually_best": [ranking[0][0], ranking[1][0]],
        "individual_errors": [ranking[0][1], ranking[1][1]],
        "individually_best_pair_error": top_err,
        "best_pair": list(pair),
        "best_pair_error": pair_err.error,
    }


def _certify_nonmonotone(table, priors):
    trace = sfs_select(table, priors, StoppingRule(target_count=len(table)))
    drops = trace.reductions
    for k in range(len(drops) - 1):
        if drops[k + 1] - drops[k] > TIE_TOL:
            return {
                "selected": trace.selected,
                "errors": [trace.initial_error, *trace.errors],
                "drops": drops,
                "step": k + 2,
            }
    return None


_CERTIFIERS = {
    BEST_NOT_IN_BEST_PAIR: _certify_best_not_in_best_pair,
    INDIVIDUALLY_BEST_PAIR_NOT_BEST_PAIR: _certify_top_pair_not_best,
    NONMONOTONE_REDUCTION: _certify_nonmonotone,
}


def find_counterexample(kind, grid_step=0.05, budget=10_000, seed=0, priors=None,
                        seed_tables=()) -> Counterexample:
    """Search three-feature tables on a probability grid for a certified pathology.

    Each candidate table draws its six probabilities uniformly from the
    interior grid ``{step, 2 step, ..., 1 - step}``. ``seed_tables`` are
    checked first; every table examined, seeded or drawn, counts against
    ``budget``.
    """
    if kind not in _CERTIFIERS:
        raise InvalidInputError(f"unknown counterexample kind {kind!r}")
    if budget < 0:
        raise InvalidInputError("budget must be >= 0")
    levels = round(1.0 / grid_step)
    if levels < 2 or abs(levels * grid_step - 1.0) > 1e-9:
        raise InvalidInputError(f"grid step {grid_step} must divide 1 into at least 2 parts")
    priors = priors or ClassPriors()
    certify = _CERTIFIERS[kind]
    grid = np.round(np.arange(1, levels) * grid_step, 12)
    rng = np.random.default_rng(seed)

    def tables():
        yield from seed_tables
        while True:
            v = grid[rng.integers(0, grid.size, size=6)]
            yield FeatureProbabilityTable.from_arrays(("x1", "x2", "x3"), v[0::2], v[1::2])

    examined = 0
    for table in tables():
        if examined >= budget:
            break
        examined += 1
        cert = certify(table, priors)
        if cert is not None:
            return Counterexample(kind, True, examined, table, priors, cert)
    return Counterexample(kind, False, examined)
