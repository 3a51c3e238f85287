"""Command-line interface: ``dms-changepoint {test,simulate,calibrate}``.

Exit status says whether the computation ran, never what it decided:
0 = completed, 2 = input error, 3 = calibration/variance failure,
4 = configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np
from scipy.stats import norm

from .adaptive import METHOD_LABELS, dms_test, wzwy_stat, wzwy_threshold
from .config import load_document, parse_calibration, parse_experiment
from .core_stats import DataMatrix, compute_cusum_field, difference_variance
from .exceptions import CalibrationError, ConfigError, InputError
from .max_test import default_lambda, max_stat_weighted, max_test
from .simulation import (
    generate_dataset,
    null_calibration,
    results_table,
    run_experiment,
    write_results_csv,
    write_results_json,
)
from .sum_test import sum_test

log = logging.getLogger("dms_changepoint")

EXIT_OK, EXIT_INPUT, EXIT_CALIBRATION, EXIT_CONFIG = 0, 2, 3, 4
VARIANTS = ("dms0", "dms05", "max0", "max05", "sum", "wzwy")


def read_matrix(path) -> tuple[np.ndarray, list | None]:
    """Parse a comma- or whitespace-delimited numeric file.

    A first row with any non-numeric cell is taken as a header. Error
    messages give 1-based file line ("row") and column numbers.
    """
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    numbered = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not numbered:
        raise InputError(f"{path} is empty")
    comma = "," in numbered[0][1]

    def split(line):
        return [c.strip() for c in line.split(",")] if comma else line.split()

    header = None
    first = split(numbered[0][1])
    try:
        [float(c) for c in first]
    except ValueError:
        header = first
        numbered = numbered[1:]
    rows = []
    width = len(header) if header else None
    for lineno, line in numbered:
        cells = split(line)
        if width is None:
            width = len(cells)
        if len(cells) != width:
            raise InputError(f"row {lineno}: expected {width} columns, found {len(cells)}")
        vals = []
        for j, c in enumerate(cells):
            try:
                v = float(c)
            except ValueError:
                raise InputError(f"row {lineno}, column {j + 1}: cannot parse {c!r} as a number") from None
            if not math.isfinite(v):
                raise InputError(f"row {lineno}, column {j + 1}: non-finite value {c!r}")
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise InputError(f"{path} has no data rows")
    return np.array(rows, dtype=float), header


def run_single(X: DataMatrix, variant: str, alpha: float, lambda_n: int | None) -> dict:
    """Report dictionary for one method; see README for the schema."""
    if variant in ("dms0", "dms05"):
        rep = dms_test(X, variant, lambda_n=lambda_n, alpha=alpha)
        d = rep.to_dict()
        d["p_value"] = rep.p_combined
        return d
    base = {"method": variant, "status": "ok", "message": "", "n": X.n, "p": X.p, "alpha": alpha}
    if variant in ("max0", "max05"):
        kind = "unweighted_gamma0" if variant == "max0" else "weighted_gamma05"
        rep = max_test(X, kind, lambda_n=lambda_n)
        return {**base, "p_value": rep.p_value, "decision": rep.p_value < alpha,
                "max_test": rep.to_dict()}
    scales = difference_variance(X)
    f05 = compute_cusum_field(X, 0.5, scales)
    srep = sum_test(X, field=f05)
    if variant == "sum":
        return {**base, "p_value": srep.p_value, "decision": srep.p_value < alpha,
                "sum_test": srep.to_dict()}
    lam = default_lambda(X.n) if lambda_n is None else lambda_n
    M_dag = max_stat_weighted(f05, lam)
    h = wzwy_threshold(X.n, X.p)
    z = wzwy_stat(srep.statistic_raw, srep.variance_hat, M_dag, X.n, X.p, h_np=h)
    pv = float(norm.sf(z))
    return {**base, "p_value": pv, "decision": pv < alpha, "statistic": z,
            "max_weighted": M_dag, "lambda_n": lam, "threshold": h,
            "enhanced": bool(M_dag > h), "sum_test": srep.to_dict()}


def _flatten(d: dict, prefix="") -> list:
    out = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(_flatten(v, key + "."))
        else:
            out.append((key, v))
    return out


def format_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in _flatten(report):
            w.writerow([k, "" if v is None else v])
        return buf.getvalue()
    lines = [f"{METHOD_LABELS.get(report.get('method'), report.get('method'))} test"]
    for k, v in _flatten(report):
        if k == "method":
            continue
        if isinstance(v, float):
            v = f"{v:.6g}"
        lines.append(f"  {k:<28} {v}")
    return "\n".join(lines) + "\n"


def _emit(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_test(args) -> int:
    values, _ = read_matrix(args.input)
    X = DataMatrix(values)
    try:
        report = run_single(X, args.variant, args.alpha, args.lambda_n)
    except CalibrationError as exc:
        report = {"method": args.variant, "status": "calibration_error", "message": str(exc),
                  "n": X.n, "p": X.p, "alpha": args.alpha, "p_value": None, "decision": None}
    _emit(format_report(report, args.format), args.output)
    if report["status"] != "ok":
        print(f"error: {report['message']}", file=sys.stderr)
        return EXIT_CALIBRATION
    return EXIT_OK


def _write_dataset(X: DataMatrix, path):
    buf = io.StringIO()
    np.savetxt(buf, X.values, delimiter=",", fmt="%.17g")
    _emit(buf.getvalue(), path)


def cmd_simulate(args) -> int:
    if args.config is None:
        if not args.emit_one:
            raise ConfigError("simulate needs a config file (or --emit-one)")
        doc = {"scenario": "I", "n": 200, "p": 100}
    else:
        doc = load_document(args.config)
    plan = parse_experiment(doc, seed=args.seed)
    if args.emit_one:
        _write_dataset(generate_dataset(plan.cells[0]), args.emit_one)
        return EXIT_OK
    threads = args.threads or plan.threads
    results = []
    for i, cell in enumerate(plan.cells, 1):
        log.info("cell %d/%d: %s n=%d p=%d tau=%.2f k=%d delta=%g", i, len(plan.cells),
                 cell.label, cell.n, cell.p, cell.tau_frac, cell.sparsity_k, cell.delta_norm_sq)
        results.append(run_experiment(cell, plan.methods, plan.reps, plan.alpha,
                                      lambda_n=plan.lambda_n, threads=threads))
    rows = results_table(results, timing=args.timing)
    fmt = args.format or ("json" if str(args.output).endswith(".json") else "csv")
    text = write_results_json(rows) if fmt == "json" else write_results_csv(rows)
    _emit(text, args.output)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    plan = parse_calibration(load_document(args.config), seed=args.seed)
    cal = null_calibration(plan.config, plan.reps, lambda_n=plan.lambda_n, scales=plan.scales,
                           threads=args.threads or plan.threads)
    for w in cal.warnings:
        print(f"warning: {w}", file=sys.stderr)
    d = cal.to_dict()
    if args.format == "json":
        text = json.dumps(d, indent=2) + "\n"
    else:
        text = "\n".join(f"{k:<26} {v}" for k, v in d.items() if k != "config") + "\n"
    _emit(text, args.output)
    return EXIT_OK


def _alpha(s):
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dms-changepoint", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test a data file for a mean change")
    t.add_argument("input", help="delimited numeric file, rows = time, columns = dimensions")
    t.add_argument("--alpha", type=_alpha, default=0.05)
    t.add_argument("--variant", choices=VARIANTS, default="dms05")
    t.add_argument("--lambda-n", type=int, default=None, help="boundary removal (default floor(0.2 n))")
    t.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
    t.add_argument("--output", default=None, help="report path (default stdout)")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="run a size/power experiment grid")
    s.add_argument("config", nargs="?", default=None,
                   help="TOML/JSON config, or a bundled name: table2, figure1")
    s.add_argument("--output", default=None)
    s.add_argument("--format", choices=("csv", "json"), default=None)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--seed", type=int, default=None, help="override the base seed")
    s.add_argument("--emit-one", metavar="PATH", default=None,
                   help="write one dataset of the first cell as CSV and exit")
    s.add_argument("--timing", action="store_true",
                   help="fill seconds_total (makes output run-dependent)")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", help="null-distribution diagnostics")
    c.add_argument("config", help="TOML/JSON config, or the bundled name: calibrate")
    c.add_argument("--output", default=None)
    c.add_argument("--format", choices=("json", "pretty"), default="json")
    c.add_argument("--threads", type=int, default=None)
    c.add_argument("--seed", type=int, default=None)
    c.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CalibrationError as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
