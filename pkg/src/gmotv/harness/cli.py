"""Command-line interface: ``gmotv {train,denoise,deblur,bench,plot}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..mmkl import load_structure, save_structure
from .degrade import add_noise, gaussian_kernel, make_rng
from .experiment import (
    DEFAULT_LAMBDA_GRID,
    METHODS,
    ExperimentSpec,
    SolverSettings,
    make_restorer,
    parse_method,
    run_experiment,
    train_structure,
    tune_lambda,
)
from .io import load_signal, save_signal
from .metrics import isnr
from .plotting import overlay_figure, savefig
from .report import emit_outputs, markdown, plot_summary, read_csv
from ..restore import DegradationModel

log = logging.getLogger("gmotv")


def _lambda_arg(text):
    if text == "auto":
        return text
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("lambda must be positive or 'auto'")
    return value


def cmd_train(args):
    S = train_structure(args.input, args.order, eps_grad=args.eps, index_column=args.index_column)
    save_structure(args.out, S)
    print(f"wrote {args.order}x{args.order} structure matrix to {args.out}")


def cmd_restore(args):
    g = load_signal(args.input, args.index_column)
    kind, K = parse_method(args.method)
    S = None
    if kind == "gmo":
        if not args.structure:
            raise SystemExit(f"{args.method} needs --structure (see `gmotv train`)")
        S = load_structure(args.structure)
        if S.shape[0] != K:
            raise SystemExit(f"{args.structure} holds a {S.shape[0]}x{S.shape[0]} matrix, "
                             f"{args.method} needs {K}x{K}")
    if args.command == "deblur":
        if args.blur_variance is None:
            raise SystemExit("deblur needs --blur-variance")
        model = DegradationModel(gaussian_kernel(args.blur_variance))
    else:
        model = DegradationModel()
    if args.snr is not None:
        level, reference = args.snr, "signal-power"
    elif args.bsnr is not None:
        level, reference = args.bsnr, "blurred-variance"
    else:
        raise SystemExit("give the noise level with --snr or --bsnr")
    f = add_noise(model.forward(g), level, reference, make_rng(args.seed, level))
    restore = make_restorer(args.method, SolverSettings(), S)
    grid = DEFAULT_LAMBDA_GRID if args.lam == "auto" else [args.lam]
    tuned = tune_lambda([g], [f], model, restore, grid)
    gh = tuned.restored[0]
    save_signal(args.out, gh, header=f"{args.method} lambda={tuned.lam:.9g}")
    if args.degraded_out:
        save_signal(args.degraded_out, f, header=f"{reference} {level:g} dB")
    if args.plot:
        savefig(overlay_figure(g, f, gh, f"{args.method}, lambda {tuned.lam:.3g}"), args.plot)
    print(f"method={args.method} lambda={tuned.lam:.9g} isnr_db={isnr(g, f, gh):.9g}")


def cmd_bench(args):
    spec = ExperimentSpec.load(args.spec)
    table = run_experiment(spec, jobs=args.jobs)
    emit_outputs(table, args.out)
    print(markdown(table))


def cmd_plot(args):
    table = read_csv(args.results)
    for path in plot_summary(table, args.out):
        print(path)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmotv", description="Multi-order TV signal restoration")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit a structure matrix to clean training signals")
    t.add_argument("--input", nargs="+", required=True, help="training signal file(s)")
    t.add_argument("--order", type=int, required=True, choices=range(1, 5), metavar="K")
    t.add_argument("--out", required=True)
    t.add_argument("--eps", type=float, default=1e-6, help="gradient-norm tolerance")
    t.add_argument("--index-column", action="store_true")
    t.set_defaults(func=cmd_train)

    for name in ("denoise", "deblur"):
        r = sub.add_parser(name, help=f"degrade a clean signal, {name} it and report ISNR")
        r.add_argument("--input", required=True, help="clean signal file")
        r.add_argument("--structure", help="structure matrix file (GMO-TV methods)")
        r.add_argument("--method", required=True, choices=METHODS)
        r.add_argument("--lambda", dest="lam", type=_lambda_arg, default="auto")
        level = r.add_mutually_exclusive_group()
        level.add_argument("--snr", type=float)
        level.add_argument("--bsnr", type=float)
        r.add_argument("--blur-variance", type=float)
        r.add_argument("--seed", type=int, default=0)
        r.add_argument("--out", required=True, help="restored signal file")
        r.add_argument("--degraded-out")
        r.add_argument("--plot", help="overlay figure (SVG)")
        r.add_argument("--index-column", action="store_true")
        r.set_defaults(func=cmd_restore)

    b = sub.add_parser("bench", help="run an experiment grid")
    b.add_argument("--spec", required=True, help="TOML or JSON experiment file")
    b.add_argument("--out", required=True)
    b.add_argument("--jobs", type=int, default=1)
    b.set_defaults(func=cmd_bench)

    pl = sub.add_parser("plot", help="ISNR-vs-level figures from results.csv")
    pl.add_argument("--results", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"gmotv: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
