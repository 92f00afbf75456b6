"""Command-line front end.

Exit status is 0 when every check passes, 1 when a check fails and 2 on
errors (bad input, I/O problems, numerical breakdown).
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fuzz
from .audit import (
    audit,
    check_records,
    linearization_report,
    pointwise_v_monotone,
    random_direction,
)
from .errors import HsflowError
from .flow import run
from .gauge import limit_prediction
from .io import RunSpec, fmt, parse_config, read_snapshots, write_run, write_series
from .presets import PRESETS

RICHARDSON_MIN_RATIO = 50.0
SYMBOL_TOL = 1e-14


def _spec(args):
    spec = parse_config(Path(args.config).read_text()) if args.config else RunSpec()
    if args.preset:
        spec.preset = args.preset
        spec.snapshot = None
    return spec


def _report(name, ok, value):
    print(f"{'PASS' if ok else 'FAIL'}  {name:<18} {fmt(value)}")
    return ok


def _check_run(records, trajectory):
    results = check_records(records)
    results["v_pointwise"] = pointwise_v_monotone(trajectory)
    return all([_report(name, ok, worst) for name, (ok, worst) in results.items()])


def cmd_run(args):
    spec = _spec(args)
    result = run(spec.config, spec.initial_data())
    write_run(args.out, spec, result)
    last = result.records[-1]
    print(f"t = {fmt(result.t_final)}  converged = {result.converged}  rows = {len(result.records)}")
    print(f"v = {fmt(last.v)}  torsion_max = {fmt(last.torsion_max)}  qhat_dist = {fmt(last.qhat_dist)}")
    return 0 if _check_run(result.records, result.trajectory) else 1


def cmd_audit(args):
    out = Path(args.out)
    manifest = json.loads((out / "manifest.json").read_text())
    scheme = manifest["config"]["scheme"]
    states = read_snapshots(out / "snapshots.jsonl")
    records = [audit(s, states[0], scheme) for s in states]
    write_series(out / "audit_series.csv", records)
    print(f"recomputed {len(records)} records from {out / 'snapshots.jsonl'}")
    return 0 if _check_run(records, states) else 1


def cmd_predict_limit(args):
    spec = _spec(args)
    pred = limit_prediction(spec.initial_data())
    print(f"v_inf = {fmt(pred.v_inf)}")
    print("Qhat_inf =")
    for row in pred.qhat_inf:
        print("  " + " ".join(fmt(x) for x in row))
    return 0


def cmd_lemma_fuzz(args):
    results = fuzz.run_all(args.seed, args.trials)
    return 0 if all([_report(n, ok, w) for n, (ok, w) in results.items()]) else 1


def cmd_linearize_audit(args):
    spec = _spec(args)
    alpha = spec.initial_data()
    if np.any(alpha.values != np.swapaxes(alpha.values, 1, 2)):
        raise HsflowError("linearize-audit needs a symmetric coefficient field")
    beta = random_direction(alpha.grid, np.random.default_rng(args.seed))
    rep = linearization_report(alpha, beta, scheme=spec.config.scheme)
    print(f"fd error eps=1e-3: {fmt(rep.err_coarse)}  eps=1e-4: {fmt(rep.err_fine)}")
    checks = [
        _report("richardson_ratio", rep.ratio >= RICHARDSON_MIN_RATIO, rep.ratio),
        _report("symbol_null", rep.symbol_null <= SYMBOL_TOL, rep.symbol_null),
        _report("symbol_homog", rep.symbol_homogeneity <= SYMBOL_TOL, rep.symbol_homogeneity),
    ]
    return 0 if all(checks) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="hsflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def data_opts(p):
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--preset", choices=PRESETS, help="initial data preset")

    p = sub.add_parser("run", help="integrate the flow and write output files")
    data_opts(p)
    p.add_argument("--out", metavar="DIR", default="out", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="recompute diagnostics from stored snapshots")
    p.add_argument("--out", metavar="DIR", default="out", help="directory of a previous run")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("predict-limit", help="print the limit fixed by the initial data")
    data_opts(p)
    p.set_defaults(func=cmd_predict_limit)

    p = sub.add_parser("lemma-fuzz", help="randomized matrix identity checks")
    p.add_argument("--seed", type=int, default=0, metavar="U64")
    p.add_argument("--trials", type=int, default=100_000, metavar="N")
    p.set_defaults(func=cmd_lemma_fuzz)

    p = sub.add_parser("linearize-audit", help="finite-difference check of the linearization")
    data_opts(p)
    p.add_argument("--seed", type=int, default=0, metavar="U64")
    p.set_defaults(func=cmd_linearize_audit)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HsflowError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
