"""Command-line harness: run verification suites, sample positive tuples,
evaluate cross-ratio files, scan collar residuals."""

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import crossratio as cr
from . import flags as fl
from . import groups as gr
from . import harness as hx
from . import positivity as po
from . import reps as rp
from .errors import CapabilityError, DomainError, PoslabError

USAGE_EXIT = 2
FAILURE_EXIT = 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="poslab",
        description="desk-scale verification of flag cross-ratio positivity, "
                    "photon identities and collar inequalities")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a verification suite")
    run.add_argument("--suite", required=True)
    run.add_argument("--group", default="SL3")
    run.add_argument("--samples", type=int, default=100)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--tol", type=float, default=1e-10)
    run.add_argument("--backend", default="float", choices=("float", "exact"))
    run.add_argument("--out", default=None)
    run.add_argument("--format", dest="fmt", default="json",
                     choices=("json", "csv"))

    sample = sub.add_parser("sample", help="emit a certified positive tuple")
    sample.add_argument("--group", default="SL3")
    sample.add_argument("--count", type=int, default=4)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--out", default=None)

    cross = sub.add_parser("crossratio", help="evaluate a quadruple file")
    cross.add_argument("--input", required=True)
    cross.add_argument("--eta", default=None,
                       help='weight-form coefficients as JSON, e.g. {"1": 1}')
    cross.add_argument("--out", default=None)

    collar = sub.add_parser("collar", help="collar residual scan")
    collar.add_argument("--group", default="SL3")
    collar.add_argument("--samples", type=int, default=20)
    collar.add_argument("--seed", type=int, default=0)
    collar.add_argument("--trace-min", type=float, default=2.2)
    collar.add_argument("--trace-max", type=float, default=5.0)
    collar.add_argument("--out", default=None)
    return parser


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as handle:
            handle.write(text)


def _cmd_run(args):
    config = hx.SuiteConfig(suite=args.suite, group=gr.GroupSpec.parse(args.group),
                            samples=args.samples, seed=args.seed,
                            tol=args.tol, backend=args.backend)
    report = hx.run_suite(config)
    _write(hx.emit_report(report, args.fmt), args.out)
    print(f"[poslab] suite={report.suite} group={report.group} "
          f"trials={report.trials} passes={report.passes} "
          f"failures={len(report.failures)} "
          f"min_margin={report.min_margin:.3e} wall={report.wall_time_s:.2f}s",
          file=sys.stderr)
    return 0 if not report.failures else FAILURE_EXIT


def _cmd_sample(args):
    spec = gr.GroupSpec.parse(args.group)
    rng = np.random.default_rng(args.seed)
    tup = po.sample_positive_tuple(spec, args.count, rng)
    payload = {"spec": spec.to_json(), "flags": [f.to_json() for f in tup]}
    _write(hx._canon(payload) + "\n", args.out)
    return 0


def _cmd_crossratio(args):
    with open(args.input) as handle:
        data = json.load(handle)
    spec = gr.GroupSpec.from_json(data["spec"])
    quad_flags = [fl.Flag.from_json(f) for f in data["quadruple"]]
    quad = cr.Quadruple(*quad_flags)
    coeffs = data.get("eta")
    if args.eta is not None:
        coeffs = json.loads(args.eta)
    if coeffs is None:
        coeffs = {str(spec.theta[0]): 1}
    eta = gr.WeightForm.make(
        spec, {int(k): (Fraction(v) if isinstance(v, str) else v)
               for k, v in coeffs.items()})
    value = cr.form_cr(spec, eta, quad)
    swapped = cr.form_cr(spec, eta, cr.Quadruple(quad.y, quad.x, quad.X, quad.Y))
    payload = {"value": float(value),
               "inversion_residual": abs(float(value) * float(swapped) - 1.0)}
    _write(hx._canon(payload) + "\n", args.out)
    return 0


def _cmd_collar(args):
    spec = gr.GroupSpec.parse(args.group)
    rng = np.random.default_rng(args.seed)
    rows = []
    for _ in range(args.samples):
        pair = rp.sample_hyperbolic_pair(rng, (args.trace_min, args.trace_max))
        rep = rp.hitchin_rep(pair, spec.size) if spec.family == "SL" \
            else rp.maximal_rep(pair, spec.size)
        for i in spec.theta:
            eta = gr.WeightForm.fundamental(spec, i)
            rows.append({"theta": i,
                         "residual": rp.collar_residual(rep, "a", "b", i, eta),
                         "baseline": rp.hyperbolic_baseline(pair),
                         "traces": [float(np.trace(m)) for m in pair]})
    worst = max(r["residual"] for r in rows)
    payload = {"rows": rows, "worst_residual": worst,
               "all_below_one": bool(worst < 1.0)}
    _write(hx._canon(payload) + "\n", args.out)
    return 0 if worst < 1.0 else FAILURE_EXIT


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    command = {"run": _cmd_run, "sample": _cmd_sample,
               "crossratio": _cmd_crossratio, "collar": _cmd_collar}[args.command]
    try:
        return command(args)
    except (CapabilityError, DomainError) as exc:
        print(f"poslab: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except PoslabError as exc:
        print(f"poslab: {exc}", file=sys.stderr)
        return FAILURE_EXIT


if __name__ == "__main__":
    sys.exit(main())
