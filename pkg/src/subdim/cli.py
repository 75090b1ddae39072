"""Command-line interface: ``subdim {pca,fobi,sir,estimate,simulate}``.

Exit status is 0 on success, 1 for usage errors, 2 for data errors and 3 for
numerical failures; messages go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings

from . import __version__
from .bootstrap import derive_seed, estimate_dimension, new_seed
from .exceptions import DataError, NumericalError, SubdimError, UsageError
from .io import load_table
from .results import _jsonable

logger = logging.getLogger("subdim")

META = {
    "covariance_divisor": "n",
    "pvalue_rule": "bootstrap p = (#{T* >= T} + 1) / (M + 1)",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _threads(text):
    if text == "auto":
        return -1
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'auto'") from None
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer or 'auto'")
    return v


def _schedule(text):
    try:
        n0, a0 = text.split(",")
        return int(n0), float(a0)
    except ValueError:
        raise argparse.ArgumentTypeError("expected n0,alpha0 such as 100,0.05") from None


def _common(p):
    p.add_argument("--seed", type=int, help="master seed (random when omitted; always reported)")
    p.add_argument("--threads", type=_threads, default=1, help="worker count or 'auto'")
    p.add_argument("--strict-sequential", action="store_true",
                   help="run everything in one process in a fixed order")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def _data_args(p, response_required=False):
    p.add_argument("data", help="CSV file with a header row")
    p.add_argument("--columns", help="comma-separated predictor columns (default: all)")
    p.add_argument("--response", required=response_required, help="response column name")


def _pca_args(p):
    p.add_argument("--scatter", choices=("cov", "tyler", "tyler3"), default="cov")
    p.add_argument("--statistic", choices=("T", "L"), default="T")
    p.add_argument("--tyler-steps", type=int, default=3)


def _sir_args(p):
    p.add_argument("--slices", type=int, default=10)
    p.add_argument("--freeze-slices", action="store_true")
    p.add_argument("--slice-method", default="linear",
                   help="numpy quantile method for slice edges (default: linear)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subdim", description="Tests and estimates of signal subspace dimension.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pca", help="subsphericity test for PCA")
    _data_args(p)
    p.add_argument("--k", type=int, required=True)
    _pca_args(p)
    p.add_argument("--method", choices=("asymp", "boot1", "boot2"), default="asymp")
    p.add_argument("--M", type=int, default=500)
    _common(p)

    p = sub.add_parser("fobi", help="non-Gaussian dimension test with FOBI")
    _data_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--variant", choices=("ica", "ngca"), default="ica")
    p.add_argument("--method", choices=("asymp", "boot1", "boot2"), default="asymp")
    p.add_argument("--M", type=int, default=500)
    _common(p)

    p = sub.add_parser("sir", help="SIR dimension test")
    _data_args(p, response_required=True)
    p.add_argument("--k", type=int, required=True)
    _sir_args(p)
    p.add_argument("--method", choices=("asymp", "boot"), default="asymp")
    p.add_argument("--M", type=int, default=500)
    _common(p)

    p = sub.add_parser("estimate", help="sequential estimate of the dimension")
    _data_args(p)
    p.add_argument("--family", choices=("pca", "fobi", "sir"), required=True)
    p.add_argument("--strategy", choices=("bottom-up", "top-down", "divide-conquer"), default="bottom-up")
    lvl = p.add_mutually_exclusive_group()
    lvl.add_argument("--alpha", type=float, default=0.05)
    lvl.add_argument("--alpha-schedule", type=_schedule, metavar="N0,ALPHA0")
    p.add_argument("--method", default="asymp", help="asymp, boot1, boot2 (boot for sir)")
    p.add_argument("--M", type=int, default=500)
    _pca_args(p)
    p.add_argument("--variant", choices=("ica", "ngca"), default="ica")
    _sir_args(p)
    _common(p)

    p = sub.add_parser("simulate", help="rejection rates on a simulation model")
    p.add_argument("--model", required=True,
                   help="pca-m1, pca-m2, pca-m3, ica-m1, ica-m2, sir-m1 or sir-m2")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--M", type=int, default=200)
    p.add_argument("--methods", default="asymp", help="comma-separated method list")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--k", help="comma-separated hypotheses (default: the true dimension)")
    p.add_argument("--scatter", choices=("cov", "tyler", "tyler3"), default="cov")
    p.add_argument("--slices", type=int, default=10)
    p.add_argument("--mix", action="store_true", help="apply a random affine map to the data")
    _common(p)
    return parser


def _load(args):
    cols = args.columns.split(",") if args.columns else None
    return load_table(args.data, response_column=args.response, columns=cols)


def _n_jobs(args):
    return 1 if args.strict_sequential else args.threads


def _run_test(args, table, k, seed):
    from .fobi import fobi_test
    from .pca import pca_test
    from .sir import sir_test

    X = table.X
    par = {"n_jobs": _n_jobs(args), "strict_sequential": args.strict_sequential}
    family = getattr(args, "family", None) or args.command
    boot = args.method != "asymp"
    if family == "pca":
        extra = dict(par, tyler_steps=args.tyler_steps) if boot else {}
        return pca_test(X, k, args.method, args.scatter, args.statistic, args.M, seed, **extra)
    if family == "fobi":
        return fobi_test(X, k, args.method, args.variant, args.M, seed, **(par if boot else {}))
    if table.y is None:
        raise UsageError("SIR needs --response")
    extra = dict(par, freeze_slices=args.freeze_slices) if boot else {}
    return sir_test(X, table.y, k, args.method, args.slices, args.M, seed,
                    slice_method=args.slice_method, **extra)


def _flat_csv(d: dict) -> str:
    flat = {}
    for key, val in d.items():
        flat[key] = json.dumps(val) if isinstance(val, (dict, list)) else val
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
    w.writeheader()
    w.writerow(flat)
    return buf.getvalue()


def _emit(text: str, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_test(args):
    table = _load(args)
    seed = new_seed() if args.seed is None else args.seed
    res = _run_test(args, table, args.k, seed)
    d = res.to_dict()
    d["meta"] = dict(META, columns=table.column_names)
    if args.command == "fobi":
        d["meta"]["assumption"] = "finite eighth moments"
    return json.dumps(d, indent=2) + "\n" if args.format != "csv" else _flat_csv(d)


def _cmd_estimate(args):
    table = _load(args)
    n, p = table.X.shape
    seed = new_seed() if args.seed is None else args.seed
    if args.family == "pca":
        p_max = p - 1
        methods = ("asymp", "boot1", "boot2")
    elif args.family == "fobi":
        p_max = p
        methods = ("asymp", "boot1", "boot2")
    else:
        p_max = min(p, args.slices - 1)
        methods = ("asymp", "boot")
    if args.method not in methods:
        raise UsageError(f"method {args.method!r} is not available for {args.family}; choose from {methods}")

    def test(k):
        return _run_test(args, table, k, derive_seed(seed, k))

    est = estimate_dimension(test, p_max, args.strategy, args.alpha, args.alpha_schedule, n=n)
    d = est.to_dict()
    d.update({"family": args.family, "method": args.method, "n": n, "p": p, "seed": seed,
              "meta": dict(META, columns=table.column_names)})
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "statistic", "p_value", "level", "accept", "q_hat", "strategy"])
        for dec in d["decisions"]:
            w.writerow([dec["k"], dec["statistic"], dec["p_value"], dec["level"], dec["accept"],
                        d["q_hat"], d["strategy"]])
        return buf.getvalue()
    return json.dumps(_jsonable(d), indent=2) + "\n"


def _cmd_simulate(args):
    from .simulate import SimulationSpec, rejection_rate

    ks = tuple(int(v) for v in args.k.split(",")) if args.k else None
    spec = SimulationSpec(model=args.model, p=args.p, n=args.n, reps=args.reps, M=args.M,
                          methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
                          alpha=args.alpha, seed=args.seed, k=ks, scatter=args.scatter, H=args.slices,
                          mix=args.mix, n_jobs=_n_jobs(args), strict_sequential=args.strict_sequential)
    report = rejection_rate(spec)
    logger.info("simulation finished in %.1f s", report.seconds)
    if args.format == "json":
        return json.dumps(_jsonable(report.to_dict()), indent=2) + "\n"
    return report.to_csv()


COMMANDS = {"pca": _cmd_test, "fobi": _cmd_test, "sir": _cmd_test,
            "estimate": _cmd_estimate, "simulate": _cmd_simulate}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            text = COMMANDS[args.command](args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        _emit(text, args.out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except SubdimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
