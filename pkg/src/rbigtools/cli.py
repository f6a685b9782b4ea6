"""Command-line front-end: ``rbigtools bench | estimate | model``.

Exit status is 0 on success, 2 on usage errors and 1 on runtime errors.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__, bench, rbig
from .errors import RbigError, UsageError
from .rbig import RbigConfig

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key!r} needs a numeric value") from None


def _add_config_flags(p):
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--max-layers", type=int, default=None)
    p.add_argument("--rotation", choices=rbig.ROTATIONS, default=None)
    p.add_argument("--entropy-est", choices=("histogram_mm", "spacing"), default=None)


def _config(args):
    kw = {"rng_seed": args.seed}
    if args.max_layers is not None:
        kw["max_layers"] = args.max_layers
    if args.rotation is not None:
        kw["rotation_kind"] = args.rotation
    if args.entropy_est is not None:
        kw["entropy_estimator"] = args.entropy_est
    try:
        return RbigConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser():
    parser = _Parser(prog="rbigtools", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bench", help="run a synthetic benchmark grid")
    b.add_argument("--measure", required=True, choices=sorted(bench.SUPPORTED))
    b.add_argument("--family", required=True)
    b.add_argument("--dims", type=_int_list, default=[3, 10, 50, 100])
    b.add_argument("--samples", type=_int_list, default=[10_000])
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--estimators", type=_str_list, default=["rbig", "expf", "knn"])
    b.add_argument("--param", type=_param, action="append", default=[],
                   help="family parameter, e.g. --param nu=20 (repeatable)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default=None, help="output path (default: stdout)")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    b.add_argument("--no-timing", action="store_true",
                   help="leave wall times null so repeated runs are byte-identical")
    b.add_argument("--workers", type=int, default=1)

    e = sub.add_parser("estimate", help="estimate a measure from CSV files",
                       description="Estimate one measure in nats. For kl the value is "
                                   "KL(P_x || P_y): the divergence of the --x sample's "
                                   "distribution from the --y sample's.")
    e.add_argument("--measure", required=True, choices=sorted(bench.SUPPORTED))
    e.add_argument("--x", required=True, help="CSV file (rows = samples)")
    e.add_argument("--y", default=None, help="second CSV file for kl (reference P_y) and mi")
    e.add_argument("--estimator", choices=("rbig", "expf", "knn"), default="rbig")
    _add_config_flags(e)

    m = sub.add_parser("model", help="fit and save, or load and apply, an RBIG model")
    msub = m.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ms = msub.add_parser("save", help="fit a model on a CSV file and save it")
    ms.add_argument("--x", required=True)
    ms.add_argument("--out", required=True)
    _add_config_flags(ms)
    ml = msub.add_parser("load", help="load a model, print its summary, optionally transform data")
    ml.add_argument("--model", required=True)
    ml.add_argument("--transform", default=None, help="CSV file to push through the model")
    ml.add_argument("--inverse", action="store_true", help="apply the inverse transform instead")
    ml.add_argument("--out", default=None, help="CSV output for transformed data (default: stdout)")
    return parser


def _cmd_bench(args):
    reports = bench.run_benchmark(
        args.measure, args.family, args.dims, args.samples, args.trials, args.estimators,
        args.seed, params=dict(args.param), record_timing=not args.no_timing, workers=args.workers,
    )
    text = bench.emit_report(reports, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)


def _cmd_estimate(args):
    record = bench.estimate_from_files(args.measure, args.x, args.y, args.estimator, _config(args))
    print(json.dumps(record))


def _model_summary(model):
    return {
        "format": rbig.FORMAT_TAG,
        "dims": model.dims,
        "n_layers": model.n_layers,
        "n_fit_samples": model.n_fit_samples,
        "total_correlation": model.total_correlation(),
        "noise_floor": model.noise_floor,
        "stop_reason": model.stop_reason,
    }


def _cmd_model(args):
    if args.action == "save":
        model = rbig.fit(bench.read_csv_matrix(args.x), _config(args))
        rbig.save_model(model, args.out)
        print(json.dumps(_model_summary(model)))
        return
    model = rbig.load_model(args.model)
    if args.transform is None:
        print(json.dumps(_model_summary(model)))
        return
    data = bench.read_csv_matrix(args.transform)
    out = model.inverse_transform(data) if args.inverse else model.transform(data)
    np.savetxt(args.out if args.out is not None else sys.stdout, out, delimiter=",", fmt="%.17g")


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"rbigtools: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"bench": _cmd_bench, "estimate": _cmd_estimate, "model": _cmd_model}
    try:
        handlers[args.command](args)
    except UsageError as exc:
        print(f"rbigtools: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RbigError, OSError, np.linalg.LinAlgError) as exc:
        print(f"rbigtools: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
