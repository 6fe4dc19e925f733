"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 input validation, 4 capacity/budget.
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys

from . import dataio
from .model import (
    DEFAULT_MAX_DEPTH,
    CapacityError,
    ClassPriors,
    InvalidInputError,
    RegionUndefinedError,
    build_list,
    region_parallelogram,
)
from .selector import (
    ABSOLUTE_DIFFERENCE,
    COUNTEREXAMPLE_KINDS,
    DEFAULT_EVALUATION_BUDGET,
    SINGLE_FEATURE_ERROR,
    StoppingRule,
    exhaustive_best_subset,
    find_counterexample,
    rank_individual,
    sfs_select,
)
from .sensitivity import (
    STUDY_SIGMAS,
    PerturbationConfig,
    compare_rank_tables,
    reference_rank_table,
    run_sensitivity,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_CAPACITY = 4


def _parse_priors(text):
    try:
        p1, p2 = (float(v) for v in text.split(","))
    except ValueError:
        raise InvalidInputError(f"--priors expects P1,P2, got {text!r}") from None
    return ClassPriors(p1, p2)


def _sigmas(values):
    if not values:
        return list(STUDY_SIGMAS)
    out = []
    for v in values:
        out.extend(float(x) for x in v.split(",") if x.strip())
    return out


def _table(args):
    if args.multiclass_target:
        mt = dataio.load_table(args.input, dataio.MULTI_CLASS, args.clamp_epsilon)
        return dataio.collapse_multiclass(mt, args.multiclass_target)
    return dataio.load_table(args.input, dataio.TWO_CLASS, args.clamp_epsilon)


def _write(args, data: bytes):
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _use_color(args):
    return (not args.out and "NO_COLOR" not in os.environ
            and getattr(sys.stdout, "isatty", lambda: False)())


def _config_echo(args, table, priors):
    return {
        "command": args.command,
        "input": str(args.input) if args.input else None,
        "multiclass_target": args.multiclass_target,
        "priors": list(priors.as_tuple()),
        "max_depth": args.max_depth,
        "clamp_epsilon": args.clamp_epsilon,
        "n_features": len(table),
    }


def cmd_select(args):
    table = _table(args)
    priors = _parse_priors(args.priors)
    if args.d is None and args.target_error is None:
        raise InvalidInputError("select needs --d and/or --target-error")
    stop = StoppingRule(target_count=args.d, target_error=args.target_error,
                        min_reduction=args.min_reduction)
    trace = sfs_select(table, priors, stop, max_depth=args.max_depth,
                       prune_threshold=args.prune_threshold)
    config = _config_echo(args, table, priors)
    config.update(d=args.d, target_error=args.target_error,
                  prune_threshold=args.prune_threshold, min_reduction=args.min_reduction)
    stamp = dt.datetime.now(dt.timezone.utc).isoformat() if args.stamp else None
    report = dataio.RunReport(trace, dataio.table_fingerprint(table), config, stamp)
    _write(args, dataio.emit_report(report, args.format, color=_use_color(args)))


def cmd_rank(args):
    table = _table(args)
    priors = _parse_priors(args.priors)
    criterion = SINGLE_FEATURE_ERROR if args.criterion == "error" else ABSOLUTE_DIFFERENCE
    ranking = rank_individual(table, priors, criterion)
    if args.format == dataio.STRUCTURED:
        import json
        doc = {"criterion": criterion, "priors": list(priors.as_tuple()),
               "ranking": [{"feature": table.names[j], "index": j, "score": s}
                           for j, s in ranking]}
        _write(args, (json.dumps(doc, indent=2) + "\n").encode())
        return
    lines = [f"# criterion\t{criterion}", "position\tfeature\tscore"]
    lines += [f"{k}\t{table.names[j]}\t{s:.10g}" for k, (j, s) in enumerate(ranking, start=1)]
    _write(args, ("\n".join(lines) + "\n").encode())


def cmd_sensitivity(args):
    table = _table(args)
    priors = _parse_priors(args.priors)
    if args.d > args.max_depth:
        raise CapacityError(f"--d {args.d} exceeds the width cap exponent {args.max_depth}")
    sigmas = _sigmas(args.sigma)
    tables = [run_sensitivity(table, priors,
                              PerturbationConfig(sigma=s, runs=args.runs, d=args.d, seed=args.seed),
                              workers=args.threads, max_depth=args.max_depth)
              for s in sigmas]
    labels = [f"sigma={s:g}" for s in sigmas]
    reference = reference_rank_table(table, priors, args.d, max_depth=args.max_depth)
    k = args.top_k or args.d
    overlap = compare_rank_tables(tables, min(k, len(table)), reference=reference, labels=labels)
    _write(args, dataio.emit_sensitivity(tables, labels, overlap, args.format))


def cmd_region(args):
    table = _table(args)
    priors = _parse_priors(args.priors)
    if args.features:
        selected = [table.index(name.strip()) for name in args.features.split(",") if name.strip()]
    elif args.d is not None:
        selected = sfs_select(table, priors, StoppingRule(target_count=args.d),
                              max_depth=args.max_depth).selected
    else:
        selected = []
    cells = build_list(table, priors, selected, max_depth=args.max_depth)
    try:
        region = region_parallelogram(cells)
    except RegionUndefinedError as exc:
        print(f"note: {exc}", file=sys.stderr)
        region = None
    _write(args, dataio.emit_scatter(table, selected, region))


def cmd_oracle(args):
    table = _table(args)
    priors = _parse_priors(args.priors)
    subset, err = exhaustive_best_subset(table, priors, args.d, max_evaluations=args.budget,
                                         max_depth=args.max_depth)
    sfs = sfs_select(table, priors, StoppingRule(target_count=args.d), max_depth=args.max_depth)
    lines = [
        "method\tfeatures\terror",
        f"exhaustive\t{','.join(table.names[j] for j in subset)}\t{err.error!r}",
        f"sfs\t{','.join(sfs.names)}\t{(sfs.errors[-1] if sfs.steps else sfs.initial_error)!r}",
    ]
    _write(args, ("\n".join(lines) + "\n").encode())


def cmd_pathology(args):
    import json
    priors = _parse_priors(args.priors)
    seeds = [dataio.load_table(args.input, dataio.TWO_CLASS, args.clamp_epsilon)] if args.input else []
    result = find_counterexample(args.kind, grid_step=args.grid_step, budget=args.budget,
                                 seed=args.seed, priors=priors, seed_tables=seeds)
    doc = {"kind": result.kind, "found": result.found, "examined": result.examined}
    if result.found:
        doc["priors"] = list(result.priors.as_tuple())
        doc["table"] = [{"feature": f.name, "p1": f.p1, "p2": f.p2}
                        for f in result.table.features]
        doc["certificate"] = result.certificate
    _write(args, (json.dumps(doc, indent=2) + "\n").encode())


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="probability table (CSV)")
    common.add_argument("--multiclass-target", help="collapse a multi-class table onto this class")
    common.add_argument("--priors", default="0.5,0.5", help="P(w1),P(w2) (default 0.5,0.5)")
    common.add_argument("--clamp-epsilon", type=float, default=None,
                        help="clamp every probability into [eps, 1-eps] at load time")
    common.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH,
                        help="width cap exponent: at most 2^max-depth cells")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=[dataio.TABULAR, dataio.STRUCTURED],
                        default=dataio.TABULAR)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    parser = argparse.ArgumentParser(
        prog="expertsel",
        description="Select binary features for two-class Naive Bayes from probability tables.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", parents=[common], help="sequential forward selection")
    p.add_argument("--d", type=int)
    p.add_argument("--target-error", type=float)
    p.add_argument("--min-reduction", type=float, help="warn when a step drops less than this")
    p.add_argument("--prune-threshold", type=float, default=None)
    p.add_argument("--stamp", action="store_true", help="include a timestamp in the report")
    p.set_defaults(func=cmd_select, needs_input=True)

    p = sub.add_parser("rank", parents=[common], help="rank features individually")
    p.add_argument("--criterion", choices=["error", "absdiff"], default="error")
    p.set_defaults(func=cmd_rank, needs_input=True)

    p = sub.add_parser("sensitivity", parents=[common], help="perturbation rank analysis")
    p.add_argument("--sigma", action="append",
                   help="noise sd; repeat or comma-separate (default 0.1,0.2,0.3)")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top-k", type=int, default=None)
    p.set_defaults(func=cmd_sensitivity, needs_input=True)

    p = sub.add_parser("region", parents=[common], help="scatter and no-improvement region")
    p.add_argument("--d", type=int, help="select this many features with SFS first")
    p.add_argument("--features", help="comma-separated selected features instead of SFS")
    p.set_defaults(func=cmd_region, needs_input=True)

    p = sub.add_parser("oracle", parents=[common], help="exhaustive best subset")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_EVALUATION_BUDGET)
    p.set_defaults(func=cmd_oracle, needs_input=True)

    p = sub.add_parser("pathology", parents=[common], help="counterexample search (n = 3)")
    p.add_argument("--kind", choices=COUNTEREXAMPLE_KINDS, required=True)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.set_defaults(func=cmd_pathology, needs_input=False)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.needs_input and not args.input:
        parser.error(f"{args.command}: --input is required")
    try:
        args.func(args)
    except CapacityError as exc:
        print(f"expertsel: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InvalidInputError as exc:
        print(f"expertsel: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
