"""Reading probability tables and writing reports.

Input tables are UTF-8, comma-delimited, with a header row::

    feature,p_class1,p_class2          (two-class)
    feature,ClassA,ClassB,ClassC,...   (multi-class)
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np

from .model import (
    ClassPriors,
    Feature,
    FeatureProbabilityTable,
    InvalidInputError,
    NoImprovementRegion,
)
from .selector import SelectionStep, SelectionTrace

TWO_CLASS = "two_class"
MULTI_CLASS = "multi_class"
TABULAR = "tabular"
STRUCTURED = "structured"
REPORT_FORMAT = "expertsel.run_report"

_ANSI_FORCED = "\x1b[33m"
_ANSI_RESET = "\x1b[0m"


class TableFormatError(InvalidInputError):
    """A table file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class MultiClassTable:
    features: tuple[str, ...]
    classes: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        feats, classes = tuple(self.features), tuple(self.classes)
        if probs.shape != (len(feats), len(classes)):
            raise InvalidInputError("probability matrix shape does not match names")
        if len(classes) < 2:
            raise InvalidInputError("a multi-class table needs at least 2 classes")
        for what, names in (("feature", feats), ("class", classes)):
            if len(set(names)) != len(names):
                raise InvalidInputError(f"duplicate {what} names")
            if any(not n for n in names):
                raise InvalidInputError(f"empty {what} name")
        if not feats:
            raise InvalidInputError("a probability table needs at least one feature")
        if not ((probs >= 0) & (probs <= 1)).all():
            raise InvalidInputError("probabilities must lie in [0, 1]")
        probs.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "probs", probs)


def _parse_probability(text, feature, line):
    try:
        value = float(text)
    except ValueError:
        raise TableFormatError(f"cannot parse {text!r} as a number (feature {feature!r})",
                               line) from None
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise TableFormatError(f"probability {text!r} of feature {feature!r} is outside [0, 1]",
                               line)
    return value


def _clamp(value, eps):
    return value if eps is None else min(max(value, eps), 1.0 - eps)


def parse_table(text, kind=TWO_CLASS, clamp_epsilon=None):
    """Parse table text; see :func:`load_table`."""
    if kind not in (TWO_CLASS, MULTI_CLASS):
        raise InvalidInputError(f"unknown table kind {kind!r}")
    if clamp_epsilon is not None and not 0.0 <= clamp_epsilon < 0.5:
        raise InvalidInputError("clamp epsilon must lie in [0, 0.5)")
    rows = [(n, r) for n, r in enumerate(csv.reader(io.StringIO(text)), start=1)
            if r and any(cell.strip() for cell in r)]
    if not rows:
        raise TableFormatError("empty table: a header row is required", 1)
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    if kind == TWO_CLASS:
        width = 3
        if len(header) != width:
            raise TableFormatError(
                f"expected header 'feature,p_class1,p_class2', got {len(header)} columns",
                header_line)
        classes = None
    else:
        classes = header[1:]
        width = len(header)
        if len(classes) < 2:
            raise TableFormatError("multi-class header needs at least 2 class names", header_line)
    if len(rows) == 1:
        raise TableFormatError("table has a header but no feature rows", header_line)
    names, values, seen = [], [], set()
    for line, row in rows[1:]:
        row = [cell.strip() for cell in row]
        if len(row) != width:
            raise TableFormatError(f"expected {width} columns, got {len(row)}", line)
        name = row[0]
        if not name:
            raise TableFormatError("empty feature name", line)
        if name in seen:
            raise TableFormatError(f"duplicate feature name {name!r}", line)
        seen.add(name)
        names.append(name)
        values.append([_clamp(_parse_probability(v, name, line), clamp_epsilon)
                       for v in row[1:]])
    if kind == TWO_CLASS:
        return FeatureProbabilityTable(tuple(Feature(n, p, q) for n, (p, q) in zip(names, values)))
    return MultiClassTable(tuple(names), tuple(classes), np.array(values))


def load_table(path, kind=TWO_CLASS, clamp_epsilon=None):
    """Read a two-class or multi-class probability table from a CSV file.

    ``clamp_epsilon`` maps every value p to ``min(max(p, eps), 1 - eps)``.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise TableFormatError(f"{path} is not valid UTF-8") from exc
    return parse_table(text, kind, clamp_epsilon)


def dump_table(table) -> str:
    """CSV text that :func:`parse_table` reads back exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(table, MultiClassTable):
        w.writerow(["feature", *table.classes])
        for name, row in zip(table.features, table.probs.tolist()):
            w.writerow([name, *(repr(v) for v in row)])
    else:
        w.writerow(["feature", "p_class1", "p_class2"])
        for f in table.features:
            w.writerow([f.name, repr(f.p1), repr(f.p2)])
    return buf.getvalue()


def table_fingerprint(table) -> str:
    return hashlib.sha256(dump_table(table).encode("utf-8")).hexdigest()


def collapse_multiclass(table: MultiClassTable, target: str) -> FeatureProbabilityTable:
    """Target class against the unweighted mean of all other classes."""
    if target not in table.classes:
        raise InvalidInputError(
            f"unknown target class {target!r}; classes are {', '.join(table.classes)}")
    t = table.classes.index(target)
    others = [k for k in range(len(table.classes)) if k != t]
    feats = []
    for name, row in zip(table.features, table.probs.tolist()):
        rest = [row[k] for k in others]
        # exact rational mean, rounded once: equal inputs give that value back
        feats.append(Feature(name, row[t], float(sum(map(Fraction, rest)) / len(rest))))
    return FeatureProbabilityTable(tuple(feats))


@dataclass(frozen=True)
class RunReport:
    trace: SelectionTrace
    table_fingerprint: str
    config: dict
    timestamp: str | None = None


_CENT = Decimal("0.01")


def _pct(value):
    """100 x value, rounded half-to-even on the exact binary value."""
    if value is None:
        return "NA"
    return str((Decimal(value) * 100).quantize(_CENT, rounding=ROUND_HALF_EVEN))


def emit_report(report: RunReport, fmt=TABULAR, color=False) -> bytes:
    """Render a run report.

    Tabular output is TSV with percentages at 2 decimals; structured output is
    JSON holding every value at full precision.
    """
    trace = report.trace
    if fmt == STRUCTURED:
        doc = {
            "format": REPORT_FORMAT,
            "version": 1,
            "table_sha256": report.table_fingerprint,
            "config": report.config,
            "trace": {
                "priors": list(trace.priors.as_tuple()),
                "stop_reason": trace.stop_reason,
                "initial_error": trace.initial_error,
                "steps": [asdict(s) for s in trace.steps],
            },
        }
        if report.timestamp is not None:
            doc["timestamp"] = report.timestamp
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    if fmt != TABULAR:
        raise InvalidInputError(f"unknown report format {fmt!r}")
    lines = [
        f"# table_sha256\t{report.table_fingerprint}",
        f"# priors\t{trace.priors.p_omega1!r},{trace.priors.p_omega2!r}",
        f"# stop_reason\t{trace.stop_reason}",
        f"# initial_error_pct\t{_pct(trace.initial_error)}",
    ]
    if report.timestamp is not None:
        lines.append(f"# timestamp\t{report.timestamp}")
    lines.append("step\tfeature\terror_pct\tsensitivity_pct\tspecificity_pct\treduction\tforced")
    for k, s in enumerate(trace.steps, start=1):
        row = (f"{k}\t{s.feature_name}\t{_pct(s.cumulative_error)}\t{_pct(s.sensitivity)}\t"
               f"{_pct(s.specificity)}\t{s.reduction:.6g}\t{int(s.forced)}")
        if color and s.forced:
            row = _ANSI_FORCED + row + _ANSI_RESET
        lines.append(row)
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_report(data) -> RunReport:
    """Read back a structured report written by :func:`emit_report`."""
    doc = json.loads(data)
    if doc.get("format") != REPORT_FORMAT:
        raise InvalidInputError("not an expertsel run report")
    t = doc["trace"]
    trace = SelectionTrace(
        steps=tuple(SelectionStep(**s) for s in t["steps"]),
        priors=ClassPriors(*t["priors"]),
        stop_reason=t["stop_reason"],
        initial_error=t["initial_error"])
    return RunReport(trace, doc["table_sha256"], doc["config"], doc.get("timestamp"))


def parse_tabular_report(data):
    """Rows of a tabular report as dicts of strings (comment lines skipped)."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    body = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(body, delimiter="\t"))


def emit_scatter(table: FeatureProbabilityTable, selected=(),
                 region: NoImprovementRegion | None = None) -> bytes:
    """``feature,c,d,selected`` rows for plotting features in the (c, d) square.

    With a region, ``# boundary`` comment rows follow, one per boundary line,
    giving its alpha and its two endpoints inside the unit square.
    """
    chosen = {int(j) for j in selected}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "c", "d", "selected"])
    for j, f in enumerate(table.features):
        w.writerow([f.name, repr(f.p1), repr(f.p2), int(j in chosen)])
    if region is not None:
        buf.write(f"# region,alpha_lo,{'NA' if region.alpha_lo is None else repr(region.alpha_lo)}\n")
        buf.write(f"# region,alpha_hi,{'NA' if region.alpha_hi is None else repr(region.alpha_hi)}\n")
        buf.write("# boundary,bound,line,alpha,c0,d0,c1,d1\n")
        for bound, alpha in (("alpha_lo", region.alpha_lo), ("alpha_hi", region.alpha_hi)):
            if alpha is None:
                continue
            seg = NoImprovementRegion(alpha_lo=alpha, alpha_hi=None).boundary_segments()
            for line, ((c0, d0), (c1, d1)) in zip(("c=alpha*d", "1-c=alpha*(1-d)"), seg):
                buf.write(f"# boundary,{bound},{line},{alpha!r},{c0!r},{d0!r},{c1!r},{d1!r}\n")
    return buf.getvalue().encode("utf-8")


def _rank_tables_doc(tables, labels):
    return [{"label": lab, "runs": t.runs, "d": t.d, "sigma": t.sigma,
             "features": [{"feature": name, "total_rank": tr, "selection_count": sc}
                          for _, name, tr, sc in t.rows()]}
            for lab, t in zip(labels, tables)]


def emit_rank_tables(tables, labels, fmt=TABULAR) -> bytes:
    if fmt == STRUCTURED:
        return (json.dumps(_rank_tables_doc(tables, labels), indent=2) + "\n").encode("utf-8")
    lines = []
    for lab, t in zip(labels, tables):
        lines.append(f"# rank_table\t{lab}\truns={t.runs}\td={t.d}")
        lines.append("position\tfeature\ttotal_rank\tselection_count")
        for pos, (_, name, tr, sc) in enumerate(t.rows(), start=1):
            lines.append(f"{pos}\t{name}\t{tr}\t{sc}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _overlap_doc(report):
    return {
        "k": report.k,
        "labels": list(report.labels),
        "reference_top": report.reference_top,
        "top": report.top,
        "pairwise_intersection": [{"a": a, "b": b, "size": n}
                                  for (a, b), n in report.pairwise.items()],
        "union": report.union,
        "entering": report.entering,
        "dropping": report.dropping,
    }


def emit_overlap(report, fmt=TABULAR) -> bytes:
    if fmt == STRUCTURED:
        return (json.dumps(_overlap_doc(report), indent=2) + "\n").encode("utf-8")
    lines = [f"# overlap\tk={report.k}",
             f"reference_top\t{','.join(report.reference_top)}"]
    lines += [f"top\t{lab}\t{','.join(report.top[lab])}" for lab in report.labels]
    lines += [f"intersection\t{a}\t{b}\t{n}" for (a, b), n in report.pairwise.items()]
    lines.append(f"union\t{','.join(report.union)}")
    lines += [f"entering\t{lab}\t{','.join(report.entering[lab])}" for lab in report.labels]
    lines += [f"dropping\t{lab}\t{','.join(report.dropping[lab])}" for lab in report.labels]
    return ("\n".join(lines) + "\n").encode("utf-8")


def emit_sensitivity(tables, labels, overlap, fmt=TABULAR) -> bytes:
    """Rank tables followed by the overlap report; one JSON document when structured."""
    if fmt == STRUCTURED:
        doc = {"format": "expertsel.sensitivity", "version": 1,
               "rank_tables": _rank_tables_doc(tables, labels), "overlap": _overlap_doc(overlap)}
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    return emit_rank_tables(tables, labels, fmt) + emit_overlap(overlap, fmt)
