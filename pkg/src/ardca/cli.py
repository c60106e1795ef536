"""Command-line front end.

Subcommands::

    ardca gen        --kind lad --t 1000 --n 200 --seed 7 --out DIR
    ardca reference  --instance DIR --budget-mult 10
    ardca solve      --instance DIR --solver ardca-restart --passes 200 --trace FILE
    ardca race       --instance DIR --solvers ardca,rdca --seeds 1..5 --out FILE
    ardca repro-fig1 --out DIR        (also repro-fig2, -fig3, -fig4)

Exit status is 0 on success, 1 when an argument or input fails validation
and 2 when a solver hits a non-finite value.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import warnings
from pathlib import Path

from . import __version__, io
from .bench import (KINDS, NOISES, SOLVERS, InstanceConfig, RaceOptions, gen_instance,
                    instance_meta, reference_optimum, run_race, run_solver)
from .dual import ConfigurationError, build_dual
from .engine import DEFAULT_NU
from .trace import write_csv

log = logging.getLogger("ardca")

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 1, 2

# paper-scale sweeps behind the repro-fig* subcommands
_LAMBDAS = (1e-3, 1e-4, 1e-5)
_FIGURES = {
    "repro-fig1": ("l2_loss", "lam", _LAMBDAS, ("ardca-restart", "rdca", "adfga")),
    "repro-fig2": ("l1_loss", "lam", _LAMBDAS, ("ardca", "ardca-na", "rdca", "adfga")),
    "repro-fig3": ("linf_constrained", "tau", (1e-3, 1e-4, 1e-5),
                   ("ardca", "ardca-na", "rdca", "adfga")),
    "repro-fig4": ("lad", "lam", _LAMBDAS, ("rdca", "adfga")),
}
_FIG4_PERIODS = (2, 10, 40, 80)


class CliError(Exception):
    """Bad input detected before or during a run."""


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def parse_seeds(text: str) -> list[int]:
    """``"1..5"`` or ``"1,3,7"`` (ranges and single values may be mixed)."""
    seeds: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = (int(s) for s in part.split(".."))
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError("seeds must be non-negative")
    return seeds


def parse_solvers(text: str) -> list[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in SOLVERS]
    if bad or not names:
        raise argparse.ArgumentTypeError(
            f"unknown solver(s) {', '.join(bad) or text!r}; choose from {', '.join(SOLVERS)}")
    return names


def _kprime(text: str):
    if text == "auto":
        return None
    return _nonneg_int(text)


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance")
    g.add_argument("--kind", choices=KINDS, required=True, help="problem family")
    g.add_argument("--t", type=_positive_int, default=1000, help="primal dimension")
    g.add_argument("--n", type=_positive_int, default=200, help="number of data points")
    g.add_argument("--mu", type=_positive_float, default=0.1, help="strong convexity parameter")
    g.add_argument("--lam", "--lambda", dest="lam", type=_positive_float, default=1e-3,
                   help="regularization weight")
    g.add_argument("--tau", type=float, default=1e-3,
                   help="noise scale, and the constraint width for linf_constrained")
    g.add_argument("--sparsity", type=float, default=None,
                   help="fraction of nonzeros in the ground truth (kind default if omitted)")
    g.add_argument("--noise", choices=NOISES, default=None,
                   help="noise model (kind default if omitted)")
    g.add_argument("--noise-fraction", type=float, default=0.1,
                   help="fraction of corrupted entries for sparse_gaussian noise")
    g.add_argument("--seed", type=_nonneg_int, default=0, help="instance seed")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--passes", type=_positive_int, default=200, help="budget in passes")
    g.add_argument("--step-variant", choices=("paper", "standard"), default="paper",
                   help="coordinate step rule")
    g.add_argument("--nu", type=_positive_float, default=DEFAULT_NU,
                   help="checkpoint spacing of the primal average")
    g.add_argument("--k0", type=_nonneg_int, default=None,
                   help="explicit start index of the primal average")
    g.add_argument("--inner-k", type=_positive_int, default=None,
                   help="restart period in iterations (default 10 n_hat)")
    g.add_argument("--kprime", type=_kprime, default="auto",
                   help="warm-up length for ardca-erm: 'auto' or an iteration count")
    g.add_argument("--eps", type=_positive_float, default=1e-3,
                   help="target accuracy used by --kprime auto")
    g.add_argument("--M", dest="M", type=_positive_float, default=None,
                   help="loss Lipschitz constant override for --kprime auto")
    g.add_argument("--no-timing", action="store_true",
                   help="write wall_ms = 0 so traces are byte-reproducible")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="ardca", formatter_class=fmt,
                                     description="Accelerated randomized dual coordinate "
                                                 "ascent: instances, solvers, races.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen", formatter_class=fmt, help="generate an instance bundle")
    _add_instance_flags(p)
    p.add_argument("--out", required=True, help="bundle directory to write")

    p = sub.add_parser("reference", formatter_class=fmt,
                       help="estimate and store the optimal value of an instance")
    p.add_argument("--instance", required=True, help="bundle directory")
    p.add_argument("--passes", type=_positive_int, default=200, help="race budget in passes")
    p.add_argument("--budget-mult", type=_positive_int, default=10,
                   help="reference budget as a multiple of the race budget")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="seed of the reference run")

    p = sub.add_parser("solve", formatter_class=fmt, help="run one solver on an instance")
    p.add_argument("--instance", required=True, help="bundle directory")
    p.add_argument("--solver", choices=SOLVERS, default="ardca", help="solver to run")
    p.add_argument("--seed", type=_nonneg_int, default=0, help="solver seed")
    p.add_argument("--trace", default=None, help="write the trace CSV here")
    _add_solver_flags(p)

    p = sub.add_parser("race", formatter_class=fmt, help="run several solvers and seeds")
    p.add_argument("--instance", required=True, help="bundle directory")
    p.add_argument("--solvers", type=parse_solvers, default="ardca,ardca-restart,rdca,adfga",
                   help="comma-separated solver names")
    p.add_argument("--seeds", type=parse_seeds, default="1..5", help="seed list, e.g. 1..5")
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker threads")
    p.add_argument("--out", required=True, help="trace CSV to write")
    _add_solver_flags(p)

    for name, (kind, swept, values, solvers) in _FIGURES.items():
        p = sub.add_parser(name, formatter_class=fmt,
                           help=f"{kind} sweep over {swept} in {values}")
        p.add_argument("--out", required=True, help="directory for bundles and traces")
        p.add_argument("--seeds", type=parse_seeds, default="1..5", help="seed list")
        p.add_argument("--jobs", type=_positive_int, default=1, help="worker threads")
        p.add_argument("--budget-mult", type=_positive_int, default=10,
                       help="reference budget as a multiple of the race budget")
        p.add_argument("--instance-seed", type=_nonneg_int, default=0, help="instance seed")
        _add_solver_flags(p)
    return parser


def _options(args) -> RaceOptions:
    return RaceOptions(step_variant=args.step_variant, nu=args.nu, k0=args.k0,
                       inner_k=args.inner_k, kprime=args.kprime, eps=args.eps, M=args.M,
                       timing=not args.no_timing)


def _load(directory):
    if not io.exists(directory):
        raise CliError(f"no instance bundle at {directory}")
    try:
        spec, _ = io.load_bundle(directory)
        model = build_dual(spec)
    except (io.BundleError, ConfigurationError, ValueError, OSError) as exc:
        raise CliError(str(exc)) from None
    ref = io.load_reference(directory)
    pair = (ref["F_star"], ref["D_star"]) if ref else None
    return model, pair


def _instance_config(args) -> InstanceConfig:
    try:
        return InstanceConfig(kind=args.kind, t=args.t, n=args.n, mu=args.mu, lam=args.lam,
                              tau=args.tau, sparsity=args.sparsity, noise=args.noise,
                              noise_fraction=args.noise_fraction, seed=args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _write_reference(directory, model, passes, seed):
    with warnings.catch_warnings():
        # reported once below, without the library's source location
        warnings.simplefilter("ignore", RuntimeWarning)
        ref = reference_optimum(model, passes=passes, seed=seed)
    if ref.flagged:
        log.warning("reference cross-check disagreement %.3g; consider a larger budget",
                    ref.discrepancy)
    io.save_reference(directory, {**ref.as_dict(), "passes": passes, "seed": seed})
    return ref


def cmd_gen(args) -> int:
    cfg = _instance_config(args)
    spec, truth = gen_instance(cfg)
    io.save_bundle(args.out, spec, instance_meta(cfg), truth)
    print(f"wrote {cfg.kind} instance (t={cfg.t}, n={cfg.n}) to {args.out}")
    return EXIT_OK


def cmd_reference(args) -> int:
    model, _ = _load(args.instance)
    ref = _write_reference(args.instance, model, args.passes * args.budget_mult, args.seed)
    flag = "  (cross-check flagged)" if ref.flagged else ""
    print(f"F_star = {ref.F_star:.17g}\nD_star = {ref.D_star:.17g}{flag}")
    return EXIT_OK


def _check_solver_args(model, args, solvers) -> None:
    if "ardca-erm" in solvers and (model.p or model.m):
        raise CliError("ardca-erm needs an unconstrained instance")
    if "ardca-erm" in solvers and args.passes < 4:
        raise CliError("ardca-erm needs at least 4 passes")


def cmd_solve(args) -> int:
    model, ref = _load(args.instance)
    _check_solver_args(model, args, [args.solver])
    try:
        out = run_solver(model, args.solver, args.passes, args.seed, ref, _options(args))
    except ValueError as exc:
        raise CliError(str(exc)) from None
    records = out[args.solver]
    if args.trace:
        write_csv(records, args.trace)
    last = records[-1]
    print(f"{args.solver}: pass {last.passes:g}  primal {last.primal_obj:.10g}  "
          f"dual {last.dual_obj:.10g}  status {last.status}")
    return EXIT_ABORT if last.status.startswith("abort") else EXIT_OK


def cmd_race(args) -> int:
    model, ref = _load(args.instance)
    _check_solver_args(model, args, args.solvers)
    if ref is None:
        log.warning("no reference optimum stored; gap columns will be NaN")
    try:
        records = run_race(model, args.solvers, args.passes, args.seeds, ref,
                           _options(args), jobs=args.jobs)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    write_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    aborted = any(r.status.startswith("abort") for r in records)
    return EXIT_ABORT if aborted else EXIT_OK


def cmd_figure(args) -> int:
    kind, swept, values, solvers = _FIGURES[args.command]
    root = Path(args.out)
    status = EXIT_OK
    for value in values:
        cfg = InstanceConfig(kind=kind, seed=args.instance_seed, **{swept: value})
        spec, truth = gen_instance(cfg)
        bundle = root / f"{kind}_{swept}{value:g}"
        io.save_bundle(bundle, spec, instance_meta(cfg), truth)
        model = build_dual(spec)
        log.info("reference for %s", bundle)
        ref = _write_reference(bundle, model, args.passes * args.budget_mult, 0).pair()
        records = run_race(model, solvers, args.passes, args.seeds, ref, _options(args),
                           jobs=args.jobs)
        if args.command == "repro-fig4":
            for mult in _FIG4_PERIODS:
                opts = dataclasses.replace(_options(args), inner_k=mult * model.n_hat)
                extra = run_race(model, ["ardca-restart"], args.passes, args.seeds, ref, opts,
                                 jobs=args.jobs)
                records += [r.replace(solver=f"ardca-restart-{mult}n") for r in extra]
        write_csv(records, bundle / "trace.csv")
        print(f"wrote {bundle / 'trace.csv'}")
        if any(r.status.startswith("abort") for r in records):
            status = EXIT_ABORT
    return status


_COMMANDS = {"gen": cmd_gen, "reference": cmd_reference, "solve": cmd_solve,
             "race": cmd_race}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map those to the validation code
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    handler = _COMMANDS.get(args.command, cmd_figure)
    try:
        return handler(args)
    except CliError as exc:
        print(f"ardca: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
