"""Command-line interface: one-shot calibration on score files, bound
queries, and the figure-experiment drivers.

Commands
--------
- ``groupcp calibrate data.csv --q 0.5,0.5 --alpha 0.1 --method gwcp``
- ``groupcp bound thm1 --K 10 --q uniform --counts 1x10 --alpha 0.2``
- ``groupcp experiment fig2 --seed 7 --out fig2.csv``

Data goes to stdout (or ``--out``), diagnostics to stderr; the exit code is
0 exactly when no error occurred.  Infinite thresholds are rendered as the
token ``inf``.  Experiment output is CSV with header
``experiment,regime,param,method,value,ci_half_width,trials,seed``, rows
sorted by (regime, param, method), byte-deterministic given flags and seed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import bounds as bounds_mod
from . import simulate
from .conformal import (
    GroupSimplex,
    GroupedScores,
    ThresholdRule,
    corrected_gwcp_thresholds,
    gwcp_threshold,
    gwcp_unobserved_threshold,
)

__all__ = ["main", "run", "format_value", "experiment_table_to_csv", "read_calibration_file"]

CSV_HEADER = "experiment,regime,param,method,value,ci_half_width,trials,seed"

_EXPERIMENTS = {
    "fig1": (simulate.figure1_experiment, 100),
    "fig2": (simulate.figure2_experiment, 2000),
    "fig3": (simulate.figure3_experiment, 100),
    "fig4": (simulate.figure4_experiment, 2000),
    "fig5": (simulate.figure5_experiment, 2000),
}


class CliError(Exception):
    """User-facing command failure; message printed to stderr, exit code 1."""


def format_value(x: float) -> str:
    """Render a float for output; +inf becomes the token ``inf``."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


# --------------------------------------------------------------------------
# Input parsing

def read_calibration_file(path: str, n_groups: Optional[int] = None) -> GroupedScores:
    """Parse a ``group,score`` CSV; every malformed row is reported with its
    line number.  The number of groups defaults to the largest label seen."""
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise CliError(f"{path}: empty file")
    errors = []
    if lines[0].strip() != "group,score":
        errors.append(f"line 1: expected header 'group,score', got {lines[0]!r}")
    labels: list[int] = []
    scores: list[float] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            errors.append(f"line {lineno}: blank line")
            continue
        parts = raw.split(",")
        if len(parts) != 2:
            errors.append(f"line {lineno}: expected 'group,score', got {raw!r}")
            continue
        try:
            group = int(parts[0])
            if group < 1:
                raise ValueError
        except ValueError:
            errors.append(f"line {lineno}: group must be an integer >= 1, got {parts[0]!r}")
            continue
        try:
            score = float(parts[1])
            if not math.isfinite(score):
                raise ValueError
        except ValueError:
            errors.append(f"line {lineno}: score must be a finite number, got {parts[1]!r}")
            continue
        labels.append(group)
        scores.append(score)
    if errors:
        raise CliError(f"{path}:\n" + "\n".join(errors))
    if not labels:
        raise CliError(f"{path}: no calibration rows")
    try:
        return GroupedScores.from_labels(labels, scores, n_groups)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from exc


def parse_probs(text: str, n_groups: Optional[int]) -> GroupSimplex:
    """Parse a probability vector: ``uniform``, a comma list, or ``@file``."""
    if text == "uniform":
        if n_groups is None:
            raise CliError("'uniform' needs the number of groups (--groups/--K)")
        return GroupSimplex.uniform(n_groups)
    if text.startswith("@"):
        try:
            with open(text[1:]) as fh:
                text = ",".join(fh.read().split())
        except OSError as exc:
            raise CliError(f"cannot read {text[1:]}: {exc}") from exc
    try:
        probs = np.array([float(tok) for tok in text.split(",") if tok != ""])
    except ValueError as exc:
        raise CliError(f"bad probability vector {text!r}") from exc
    try:
        simplex = GroupSimplex(probs)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if n_groups is not None and simplex.n_groups != n_groups:
        raise CliError(
            f"probability vector has {simplex.n_groups} entries, expected {n_groups}"
        )
    return simplex


def parse_counts(text: str) -> list[int]:
    """Parse counts like ``1,2,3`` or ``1x10`` or ``100x4,1,100x5``."""
    out: list[int] = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "x" in tok:
            value, _, repeat = tok.partition("x")
            try:
                out.extend([int(value)] * int(repeat))
            except ValueError as exc:
                raise CliError(f"bad counts token {tok!r}") from exc
        else:
            try:
                out.append(int(tok))
            except ValueError as exc:
                raise CliError(f"bad counts token {tok!r}") from exc
    if not out:
        raise CliError("empty counts")
    return out


def _write_output(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            with open(out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError(f"cannot write {out}: {exc}") from exc


# --------------------------------------------------------------------------
# calibrate

def _threshold_report(rule: ThresholdRule, as_json: bool) -> str:
    if rule.kind == "global":
        if as_json:
            return json.dumps({"kind": "global", "threshold": _json_value(rule.global_threshold)}) + "\n"
        return format_value(rule.global_threshold) + "\n"
    if as_json:
        return (
            json.dumps(
                {
                    "kind": "per_group",
                    "thresholds": [_json_value(t) for t in rule.group_thresholds],
                }
            )
            + "\n"
        )
    lines = [
        f"{k},{format_value(t)}" for k, t in enumerate(rule.group_thresholds, start=1)
    ]
    return "\n".join(lines) + "\n"


def _json_value(x: float):
    return "inf" if math.isinf(x) and x > 0 else float(x)


def cmd_calibrate(args: argparse.Namespace) -> int:
    grouped = read_calibration_file(args.input, args.groups)
    if args.method == "unobserved":
        rule = gwcp_unobserved_threshold(grouped, args.alpha)
    else:
        if args.q is None:
            raise CliError(f"method {args.method!r} needs --q")
        q = parse_probs(args.q, grouped.n_groups)
        try:
            if args.method == "gwcp":
                rule = gwcp_threshold(grouped, q, args.alpha)
            else:  # corrected
                rule = corrected_gwcp_thresholds(grouped, q, args.alpha)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    _write_output(_threshold_report(rule, args.json), args.out)
    return 0


# --------------------------------------------------------------------------
# bound

def cmd_bound(args: argparse.Namespace) -> int:
    name = args.name
    try:
        if name == "thm1":
            if args.counts is None:
                raise CliError("thm1 needs --counts")
            counts = parse_counts(args.counts)
            q = parse_probs(args.q or "uniform", args.K or len(counts))
            est = bounds_mod.thm1_bound(q, counts, args.alpha)
        elif name == "thm2":
            if args.n is None:
                raise CliError("thm2 needs --n")
            p = parse_probs(args.p or "uniform", args.K)
            q = parse_probs(args.q or "uniform", p.n_groups)
            est = bounds_mod.thm2_closed_bound(q, p, args.n, args.alpha)
        elif name == "corollary":
            if args.n is None:
                raise CliError("corollary needs --n")
            p = parse_probs(args.p or "uniform", args.K)
            est = bounds_mod.corollary_closed_bound(p, args.n, args.alpha)
        elif name == "corollary-mc":
            if args.n is None:
                raise CliError("corollary-mc needs --n")
            p = parse_probs(args.p or "uniform", args.K)
            est = bounds_mod.corollary_empirical_bound(
                p, args.n, args.alpha, trials=args.trials, seed=args.seed
            )
        elif name == "lei-mc":
            if args.n is None:
                raise CliError("lei-mc needs --n")
            p = parse_probs(args.p or "uniform", args.K)
            q = parse_probs(args.q or "uniform", p.n_groups)
            est = bounds_mod.lei_bound_empirical(
                p, q, args.n, args.alpha, trials=args.trials, seed=args.seed
            )
        elif name == "tight":
            if args.K is None or args.n1 is None:
                raise CliError("tight needs --K and --n1")
            value = bounds_mod.tight_example_coverage(args.K, args.n1, args.alpha)
            _write_output(format_value(value) + "\n", args.out)
            return 0
        else:  # unreachable; argparse restricts choices
            raise CliError(f"unknown bound {name!r}")
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if est.form == "monte_carlo":
        _write_output(f"{format_value(est.value)} {format_value(est.std_error)}\n", args.out)
    else:
        _write_output(format_value(est.value) + "\n", args.out)
    return 0


# --------------------------------------------------------------------------
# experiment

def _row_sort_key(row: simulate.ExperimentRow):
    return (row.regime, row.param, row.method)


def experiment_table_to_csv(table: simulate.ExperimentTable) -> str:
    lines = [CSV_HEADER]
    for r in sorted(table.rows, key=_row_sort_key):
        lines.append(
            ",".join(
                (
                    r.experiment,
                    r.regime,
                    str(r.param),
                    r.method,
                    format_value(r.value),
                    format_value(r.ci_half_width),
                    str(r.trials),
                    str(r.seed),
                )
            )
        )
    return "\n".join(lines) + "\n"


def experiment_table_to_json(table: simulate.ExperimentTable) -> str:
    rows = []
    for r in sorted(table.rows, key=_row_sort_key):
        row = {
            "experiment": r.experiment,
            "regime": r.regime,
            "param": r.param,
            "method": r.method,
            "value": r.value,
            "ci_half_width": r.ci_half_width,
            "trials": r.trials,
            "seed": r.seed,
        }
        if r.attempted_trials is not None:
            row["attempted_trials"] = r.attempted_trials
        rows.append(row)
    return json.dumps(rows, indent=2) + "\n"


def cmd_experiment(args: argparse.Namespace) -> int:
    driver, default_trials = _EXPERIMENTS[args.figure]
    trials = args.trials if args.trials is not None else default_trials
    if trials < 1:
        raise CliError("trials must be at least 1")
    table = driver(seed=args.seed, trials=trials)
    text = experiment_table_to_json(table) if args.json else experiment_table_to_csv(table)
    _write_output(text, args.out)
    return 0


# --------------------------------------------------------------------------
# Parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupcp",
        description="Group-weighted conformal calibration, coverage bounds, and experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="compute a threshold from a group,score CSV")
    cal.add_argument("input", help="calibration CSV with header 'group,score'")
    cal.add_argument("--q", help="target group probabilities: 'uniform', a comma list, or @file")
    cal.add_argument("--alpha", type=float, required=True)
    cal.add_argument(
        "--method", choices=("gwcp", "unobserved", "corrected"), default="gwcp"
    )
    cal.add_argument("--groups", type=int, help="number of groups (default: max label)")
    cal.add_argument("--json", action="store_true", help="emit JSON instead of text")
    cal.add_argument("--out", help="write to this path instead of stdout")
    cal.set_defaults(func=cmd_calibrate)

    bnd = sub.add_parser("bound", help="evaluate a coverage lower bound")
    bnd.add_argument(
        "name", choices=("thm1", "thm2", "corollary", "corollary-mc", "lei-mc", "tight")
    )
    bnd.add_argument("--alpha", type=float, required=True)
    bnd.add_argument("--K", type=int)
    bnd.add_argument("--q", help="target probabilities ('uniform', comma list, @file)")
    bnd.add_argument("--p", help="training probabilities ('uniform', comma list, @file)")
    bnd.add_argument("--counts", help="group counts, e.g. '1x10' or '100x4,1'")
    bnd.add_argument("--n", type=int, help="calibration sample size")
    bnd.add_argument("--n1", type=int, help="smallest group size (tight)")
    bnd.add_argument("--trials", type=int, default=100)
    bnd.add_argument("--seed", type=int, default=0)
    bnd.add_argument("--out", help="write to this path instead of stdout")
    bnd.set_defaults(func=cmd_bound)

    exp = sub.add_parser("experiment", help="run a figure experiment, writing CSV")
    exp.add_argument("figure", choices=sorted(_EXPERIMENTS))
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--trials", type=int, help="override the default trial count")
    exp.add_argument("--out", help="write to this path instead of stdout")
    exp.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())
