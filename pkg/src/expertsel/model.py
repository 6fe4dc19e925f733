"""Probability tables, cell lists and the exact two-class Naive Bayes error.

A *cell* is one element x of the current feature space {0,1}^k with its two
joint masses ``a = P(w1) P(x|w1)`` and ``b = P(w2) P(x|w2)``. The list of all
cells is the exact joint distribution, and the Bayes error is the sum of
``min(a, b)`` over it. Adding a feature with ``c = P(x=1|w1)`` and
``d = P(x=1|w2)`` splits every cell into ``(a c, b d)`` and
``(a (1-c), b (1-d))``.

Class w1 is the class of interest ("disease"). A cell is labelled w1 when
``a >= b`` (ties go to w1), so its error mass ``b`` is a false positive;
otherwise the error mass ``a`` is a false negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels

PRIOR_TOL = 1e-12
# reductions and error differences at or below this are treated as zero / ties
TIE_TOL = 1e-12
DEFAULT_MAX_DEPTH = 25
# patterns are packed into uint64
MAX_PATTERN_DEPTH = 64


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class CapacityError(RuntimeError):
    """A computation would exceed the configured size limit."""


class RegionUndefinedError(ValueError):
    """No cell has both masses positive, so the error is already zero."""


def _check_probability(value, what):
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise InvalidInputError(f"{what} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class ClassPriors:
    p_omega1: float = 0.5
    p_omega2: float = 0.5

    def __post_init__(self):
        p1 = _check_probability(self.p_omega1, "p_omega1")
        p2 = _check_probability(self.p_omega2, "p_omega2")
        if abs(p1 + p2 - 1.0) > PRIOR_TOL:
            raise InvalidInputError(f"priors must sum to 1, got {p1} + {p2}")
        object.__setattr__(self, "p_omega1", p1)
        object.__setattr__(self, "p_omega2", p2)

    def as_tuple(self):
        return (self.p_omega1, self.p_omega2)


@dataclass(frozen=True)
class Feature:
    name: str
    p1: float
    p2: float


@dataclass(frozen=True)
class FeatureProbabilityTable:
    """Per-feature ``P(x_j=1|w1)`` and ``P(x_j=1|w2)``, in table order."""

    features: tuple[Feature, ...]

    def __post_init__(self):
        feats = tuple(self.features)
        if not feats:
            raise InvalidInputError("a probability table needs at least one feature")
        seen = set()
        clean = []
        for f in feats:
            if not isinstance(f, Feature):
                f = Feature(*f)
            name = str(f.name)
            if not name:
                raise InvalidInputError("feature names must be non-empty")
            if name in seen:
                raise InvalidInputError(f"duplicate feature name {name!r}")
            seen.add(name)
            p1 = _check_probability(f.p1, f"P(x=1|w1) of feature {name!r}")
            p2 = _check_probability(f.p2, f"P(x=1|w2) of feature {name!r}")
            clean.append(Feature(name, p1, p2))
        object.__setattr__(self, "features", tuple(clean))

    @classmethod
    def from_arrays(cls, names, p1, p2):
        return cls(tuple(Feature(n, a, b) for n, a, b in zip(names, p1, p2, strict=True)))

    def __len__(self):
        return len(self.features)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @cached_property
    def p1(self) -> np.ndarray:
        arr = np.array([f.p1 for f in self.features], dtype=np.float64)
        arr.flags.writeable = False
        return arr

    @cached_property
    def p2(self) -> np.ndarray:
        arr = np.array([f.p2 for f in self.features], dtype=np.float64)
        arr.flags.writeable = False
        return arr

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidInputError(f"unknown feature {name!r}") from None

    def with_probabilities(self, p1, p2):
        """Same feature names with replaced probabilities."""
        return FeatureProbabilityTable.from_arrays(self.names, p1, p2)


class Cell(NamedTuple):
    a: float
    b: float
    pattern: str | None = None


@dataclass(frozen=True)
class ErrorBreakdown:
    """Bayes error split into false-positive and false-negative mass.

    ``pruned_error_bound`` is nonzero only after thresholded pruning; the true
    error then lies in ``[error, upper]``.
    """

    error: float
    false_positive: float
    false_negative: float
    pruned_error_bound: float = 0.0

    @property
    def upper(self):
        return self.error + self.pruned_error_bound


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class CellList:
    """Exact joint distribution over the selected-feature space.

    Masses removed by pruning are kept in ``pruned_a`` / ``pruned_b`` so that
    ``a.sum() + pruned_a == P(w1)`` still holds.
    """

    a: np.ndarray
    b: np.ndarray
    depth: int = 0
    pruned_a: float = 0.0
    pruned_b: float = 0.0
    pruned_error_bound: float = 0.0
    patterns: np.ndarray | None = None
    max_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        a = _frozen(self.a)
        b = _frozen(self.b)
        if a.shape != b.shape or a.ndim != 1:
            raise InvalidInputError("cell masses must be two 1-d arrays of equal length")
        if a.size and (a.min() < 0 or b.min() < 0):
            raise InvalidInputError("cell masses must be non-negative")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.patterns is not None:
            pats = np.ascontiguousarray(self.patterns, dtype=np.uint64)
            pats.flags.writeable = False
            object.__setattr__(self, "patterns", pats)

    @classmethod
    def initial(cls, priors: ClassPriors, track_patterns=False, max_depth=DEFAULT_MAX_DEPTH):
        """The one-cell list of the empty feature set."""
        pats = np.zeros(1, dtype=np.uint64) if track_patterns else None
        return cls(np.array([priors.p_omega1]), np.array([priors.p_omega2]),
                   patterns=pats, max_depth=max_depth)

    @classmethod
    def from_pairs(cls, pairs, depth=None, max_depth=DEFAULT_MAX_DEPTH):
        pairs = list(pairs)
        a = np.array([p[0] for p in pairs], dtype=np.float64)
        b = np.array([p[1] for p in pairs], dtype=np.float64)
        if depth is None:
            depth = max(0, math.ceil(math.log2(len(pairs)))) if pairs else 0
        return cls(a, b, depth=depth, max_depth=max_depth)

    def __len__(self):
        return self.a.shape[0]

    @property
    def pruned_mass(self):
        return self.pruned_a + self.pruned_b

    @property
    def tracks_patterns(self):
        return self.patterns is not None

    @property
    def cells(self) -> list[Cell]:
        if self.patterns is None:
            return [Cell(float(x), float(y)) for x, y in zip(self.a, self.b)]
        out = []
        for x, y, p in zip(self.a, self.b, self.patterns):
            bits = "".join("1" if (int(p) >> k) & 1 else "0" for k in range(self.depth))
            out.append(Cell(float(x), float(y), bits))
        return out

    def pairs(self):
        return list(zip(self.a.tolist(), self.b.tolist()))


def prior_error(priors: ClassPriors) -> ErrorBreakdown:
    """Error of the classifier that only sees the priors."""
    p1, p2 = priors.as_tuple()
    if p2 <= p1:
        return ErrorBreakdown(p2, p2, 0.0)
    return ErrorBreakdown(p1, 0.0, p1)


def expand_list(cells: CellList, c, d, prune=None) -> CellList:
    """Fold one more feature into the list.

    The result holds the ``x=1`` children of every cell first, then the
    ``x=0`` children. ``prune`` is a threshold passed to :func:`prune_list`
    after the split; ``None`` disables pruning entirely.
    """
    c = _check_probability(c, "c")
    d = _check_probability(d, "d")
    new_count = 2 * len(cells)
    if new_count > (1 << cells.max_depth):
        raise CapacityError(
            f"expanding to {new_count} cells exceeds the width cap of "
            f"2^{cells.max_depth} cells (max depth {cells.max_depth})")
    a = np.concatenate((cells.a * c, cells.a * (1.0 - c)))
    b = np.concatenate((cells.b * d, cells.b * (1.0 - d)))
    pats = None
    if cells.patterns is not None:
        if cells.depth >= MAX_PATTERN_DEPTH:
            raise CapacityError(f"pattern tracking is limited to {MAX_PATTERN_DEPTH} features")
        bit = np.uint64(1) << np.uint64(cells.depth)
        pats = np.concatenate((cells.patterns | bit, cells.patterns))
    out = CellList(a, b, depth=cells.depth + 1, pruned_a=cells.pruned_a,
                   pruned_b=cells.pruned_b, pruned_error_bound=cells.pruned_error_bound,
                   patterns=pats, max_depth=cells.max_depth)
    if prune is not None:
        out = prune_list(out, prune)
    return out


def evaluate_error(cells: CellList) -> ErrorBreakdown:
    a, b = cells.a, cells.b
    labelled_w1 = b <= a
    fp = float(b[labelled_w1].sum())
    fn = float(a[~labelled_w1].sum())
    return ErrorBreakdown(fp + fn, fp, fn, cells.pruned_error_bound)


def prune_list(cells: CellList, threshold) -> CellList:
    """Drop cells whose error mass ``min(a, b)`` is at most ``threshold``.

    Cells with ``min(a, b) == 0`` can be dropped exactly: none of their
    descendants carries error. Cells dropped with a positive minimum add it to
    ``pruned_error_bound``, which bounds the error they would have contributed.
    """
    threshold = float(threshold)
    if threshold < 0:
        raise InvalidInputError("prune threshold must be >= 0")
    m = np.minimum(cells.a, cells.b)
    drop = m <= threshold
    if not drop.any():
        return cells
    keep = ~drop
    return CellList(
        cells.a[keep], cells.b[keep], depth=cells.depth,
        pruned_a=cells.pruned_a + float(cells.a[drop].sum()),
        pruned_b=cells.pruned_b + float(cells.b[drop].sum()),
        pruned_error_bound=cells.pruned_error_bound + float(m[drop].sum()),
        patterns=None if cells.patterns is None else cells.patterns[keep],
        max_depth=cells.max_depth)


def _check_subset(table, subset, max_depth):
    subset = [int(j) for j in subset]
    n = len(table)
    for j in subset:
        if not 0 <= j < n:
            raise InvalidInputError(f"feature index {j} out of range for {n} features")
    if len(set(subset)) != len(subset):
        raise InvalidInputError(f"duplicate feature indices in {subset}")
    if len(subset) > max_depth:
        raise CapacityError(
            f"subset of {len(subset)} features exceeds the width cap exponent {max_depth}")
    return subset


def build_list(table: FeatureProbabilityTable, priors: ClassPriors, subset: Sequence[int],
               max_depth=DEFAULT_MAX_DEPTH, prune_threshold=None, track_patterns=False):
    """Cell list of ``subset``, folded in the given order.

    Zero-min cells are always pruned; ``prune_threshold`` raises the cut.
    """
    subset = _check_subset(table, subset, max_depth)
    prune = 0.0 if prune_threshold is None else float(prune_threshold)
    cells = CellList.initial(priors, track_patterns=track_patterns, max_depth=max_depth)
    for j in subset:
        cells = expand_list(cells, table.p1[j], table.p2[j], prune=prune)
    return cells


def error_of_subset(table, priors, subset, max_depth=DEFAULT_MAX_DEPTH,
                    prune_threshold=None) -> ErrorBreakdown:
    cells = build_list(table, priors, subset, max_depth=max_depth,
                       prune_threshold=prune_threshold)
    return evaluate_error(cells)


def class_supports(table, priors, x):
    """``(P(w1) P(x|w1), P(w2) P(x|w2))`` for a full binary vector ``x``."""
    x = np.asarray(x)
    if x.shape != (len(table),) or not np.isin(x, (0, 1)).all():
        raise InvalidInputError(f"x must be a 0/1 vector of length {len(table)}")
    s1 = priors.p_omega1
    s2 = priors.p_omega2
    for xj, p, q in zip(x.tolist(), table.p1.tolist(), table.p2.tolist()):
        s1 *= p if xj else 1.0 - p
        s2 *= q if xj else 1.0 - q
    return s1, s2


def classify(table, priors, x):
    """Naive Bayes label (1 or 2) for ``x``; ties go to class 1."""
    s1, s2 = class_supports(table, priors, x)
    return 1 if s1 >= s2 else 2


def reduction_closed_form(a, b, c, d):
    """Error reduction of one cell ``(a, b)`` when a feature ``(c, d)`` is added.

    Works elementwise on numpy arrays as well as on scalars.
    """
    big_a = a - b
    big_b = a * c - b * d
    return 0.5 * (abs(big_a - big_b) - abs(big_a) + abs(big_b))


def reduction_surface(a, b, resolution=101):
    """Reduction over a ``resolution x resolution`` grid of ``(c, d)``.

    Returns ``(c_values, d_values, delta)`` with ``delta[i, j]`` taken at
    ``(c_values[i], d_values[j])``.
    """
    grid = np.linspace(0.0, 1.0, resolution)
    cc, dd = np.meshgrid(grid, grid, indexing="ij")
    return grid, grid.copy(), reduction_closed_form(a, b, cc, dd)


def _inside(alpha, c, d, tol):
    # For alpha >= 1 the cell keeps label w2 in both children iff
    # c <= alpha d and (1-c) <= alpha (1-d); for alpha < 1 the inequalities flip.
    # This is the ratio condition with x/0 = +inf and 0/0 = alpha.
    if alpha >= 1.0:
        return c <= alpha * d + tol and (1.0 - c) <= alpha * (1.0 - d) + tol
    return c >= alpha * d - tol and (1.0 - c) >= alpha * (1.0 - d) - tol


def no_improvement_test(a, b, c, d, tol=TIE_TOL) -> bool:
    """True when adding ``(c, d)`` leaves the error of cell ``(a, b)`` unchanged.

    ``c/d`` and ``(1-c)/(1-d)`` are compared with ``alpha = b/a``: both on the
    same side means no improvement. The comparison is made on the masses
    (``a c`` against ``b d``), which avoids the ratios and makes ``tol`` an
    absolute bound on the reduction. A cell with ``a == 0`` carries no error
    and always returns True.
    """
    a, b, c, d = float(a), float(b), float(c), float(d)
    if a <= 0.0:
        return True
    if a <= b:
        return a * c - b * d <= tol and a * (1.0 - c) - b * (1.0 - d) <= tol
    return b * d - a * c <= tol and b * (1.0 - d) - a * (1.0 - c) <= tol


@dataclass(frozen=True)
class NoImprovementRegion:
    """Intersection of the per-cell no-improvement regions.

    ``alpha_hi`` is the smallest cell ratio ``b/a`` that is >= 1 and
    ``alpha_lo`` the largest one below 1; either is None when no cell
    qualifies. A cell with ratio exactly 1 pins the region to the diagonal.
    """

    alpha_lo: float | None
    alpha_hi: float | None

    def contains(self, c, d, tol=TIE_TOL) -> bool:
        c = float(c)
        d = float(d)
        if self.alpha_hi is not None and not _inside(self.alpha_hi, c, d, tol):
            return False
        if self.alpha_lo is not None and not _inside(self.alpha_lo, c, d, tol):
            return False
        return True

    def boundary_segments(self):
        """Boundary lines clipped to the unit square, as ``((c0, d0), (c1, d1))``.

        For each alpha: ``c = alpha d`` through (0, 0) and
        ``1 - c = alpha (1 - d)`` through (1, 1).
        """
        segs = []
        for alpha in (self.alpha_lo, self.alpha_hi):
            if alpha is None:
                continue
            t = min(1.0, 1.0 / alpha) if alpha > 0 else 1.0
            segs.append(((0.0, 0.0), (alpha * t, t)))
            segs.append(((1.0, 1.0), (1.0 - alpha * t, 1.0 - t)))
        return segs

    def distance(self, c, d):
        """Euclidean distance from ``(c, d)`` to the nearest boundary segment."""
        best = math.inf
        p = np.array([c, d], dtype=np.float64)
        for s0, s1 in self.boundary_segments():
            p0 = np.array(s0)
            v = np.array(s1) - p0
            vv = float(v @ v)
            t = 0.0 if vv == 0.0 else min(1.0, max(0.0, float((p - p0) @ v) / vv))
            best = min(best, float(np.hypot(*(p - p0 - t * v))))
        return best


def region_parallelogram(cells: CellList) -> NoImprovementRegion:
    a, b = cells.a, cells.b
    live = (a > 0) & (b > 0)
    if not live.any():
        raise RegionUndefinedError("no cell has both masses positive; the error is already 0")
    alpha = b[live] / a[live]
    hi = alpha[alpha >= 1.0]
    lo = alpha[alpha < 1.0]
    return NoImprovementRegion(
        alpha_lo=float(lo.max()) if lo.size else None,
        alpha_hi=float(hi.min()) if hi.size else None)


def sensitivity_specificity(e: ErrorBreakdown, priors: ClassPriors, tol=TIE_TOL):
    """``((P(w1) - e_fn) / P(w1), (P(w2) - e_fp) / P(w2))``.

    A measure whose prior is zero is returned as None.
    """
    out = []
    for prior, err, what in ((priors.p_omega1, e.false_negative, "false negative"),
                             (priors.p_omega2, e.false_positive, "false positive")):
        if err > prior + tol:
            raise InvalidInputError(f"{what} mass {err} exceeds its class prior {prior}")
        if prior == 0.0:
            if err > tol:
                raise InvalidInputError(f"{what} mass {err} with a zero class prior")
            out.append(None)
        else:
            out.append(min(1.0, max(0.0, (prior - err) / prior)))
    return tuple(out)


def score_candidates(cells: CellList, c, d):
    """Error and false-positive mass after adding each candidate ``(c[j], d[j])``.

    Pruned mass is not included, matching :func:`evaluate_error`.
    """
    return kernels.score_candidates(cells.a, cells.b,
                                    np.ascontiguousarray(c, dtype=np.float64),
                                    np.ascontiguousarray(d, dtype=np.float64))

