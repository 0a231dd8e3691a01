"""Command-line front end.

Subcommands: ``simulate`` (build a quantile table), ``fit`` (response
surfaces), ``pvalue``/``quantile`` (distribution lookups), ``test`` (run
the normality test on a data file), ``diagnose`` (moment oracle check).

Exit status: 0 success, 1 usage error, 2 data error, 3 numeric error.
Every run echoes its resolved configuration (seed included) to stderr so
results are reproducible from the log; timing lines on stdout carry a
``#`` prefix so deterministic output can be compared byte for byte.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__, dist, engine, moments, surface, tableio
from ._backend import backend_name

TINY_P_THRESHOLD = 2.2e-16


class UsageError(Exception):
    """Bad flags or grids; maps to exit status 1."""


class DataError(Exception):
    """Unreadable or invalid input data; maps to exit status 2."""


def _parse_count(text: str) -> int:
    """Accept plain or scientific notation for counts ('100000', '1e5')."""
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"invalid count {text!r}") from None
    if value < 1 or value != int(value):
        raise UsageError(f"count must be a positive integer (got {text!r})")
    return int(value)


def _parse_n(text: str):
    if text.lower() in ("inf", "infinite"):
        return dist.INFINITE
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"invalid sample size {text!r}") from None


def _echo_config(command: str, pairs: dict) -> None:
    body = " ".join(f"{k}={v}" for k, v in pairs.items())
    print(f"config: {command} {body}", file=sys.stderr)


def _read_data_file(path: str) -> list[float]:
    """One observation per line, decimal text; blank lines ignored."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"unreadable data file {path}: {exc}") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise DataError(
                f"unreadable data file {path}: bad value {line!r} on line {lineno}"
            ) from None
    if not values:
        raise DataError(f"unreadable data file {path}: no observations")
    return values


def _load_table(path: str):
    try:
        return tableio.load_table(path)
    except OSError as exc:
        raise DataError(f"cannot read table {path}: {exc}") from exc
    except tableio.TableIOError as exc:
        raise DataError(str(exc)) from exc


def _format_p(value: float) -> str:
    """Tiny p-values print in scientific notation, the tiniest as a bound."""
    if value < TINY_P_THRESHOLD:
        return "< 2.2e-16"
    if value < 1e-4:
        return f"= {value:.4e}"
    return f"= {value:.4f}"


def _format_finite_p(result: dist.PValueResult) -> str:
    return "NA" if result.is_na else f"{result.value:.4f}"


def cmd_simulate(args) -> int:
    if args.preset in ("full", "paper", None):
        n_grid = engine.default_n_grid()
        p_grid = engine.default_p_grid()
    else:
        n_grid = engine.quick_n_grid()
        p_grid = engine.quick_p_grid()
    if args.n is not None:
        n_grid = tuple(args.n)
    if args.p is not None:
        p_grid = tuple(args.p)
    try:
        cfg = engine.SimConfig(
            n_grid=n_grid,
            p_grid=p_grid,
            replications=args.replications,
            seed=args.seed,
            generator=args.generator,
            chunk_size=args.chunk_size,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _echo_config("simulate", {
        "seed": cfg.seed, "generator": cfg.generator,
        "replications": cfg.replications, "chunk_size": cfg.chunk_size,
        "n_grid": ",".join(map(str, cfg.n_grid)),
        "p_grid_size": len(cfg.p_grid), "workers": args.workers,
        "backend": backend_name(), "out": args.out,
    })

    progress = None
    if args.progress:
        def progress(done: int, total: int) -> None:
            print(f"# progress {done}/{total}", file=sys.stderr)

    start = time.perf_counter()
    table = engine.simulate_null(cfg, workers=args.workers, progress=progress)
    elapsed = time.perf_counter() - start
    for diag in table.diagnostics:
        print(
            f"n={diag.n} mean_b2={diag.mean_b2:.6f} (z={diag.z_mean_b2:+.2f}) "
            f"var_b2={diag.var_b2:.6f} (z={diag.z_var_b2:+.2f}) "
            f"var_sqrt_b1={diag.var_sqrt_b1:.6f} (z={diag.z_var_sqrt_b1:+.2f})"
        )
    try:
        tableio.save_table(table, args.out)
    except OSError as exc:
        raise DataError(f"cannot write table {args.out}: {exc}") from exc
    print(f"table written to {args.out}")
    print(f"# elapsed {elapsed:.2f} s")
    return 0


def cmd_test(args) -> int:
    _echo_config("test", {"data": args.data, "table": args.table, "kind": args.kind})
    values = _read_data_file(args.data)
    table = _load_table(args.table) if args.table else None
    try:
        result = dist.jb_test(values, table)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print("Jarque-Bera finite-sample normality test")
    print()
    print(f"data: {args.data}")
    print(f"n = {result.n}")
    print(f"LM = {result.lm:.4f}, ALM = {result.alm:.4f}")
    if args.kind in ("both", "lm"):
        print(f"LM p-value = {_format_finite_p(result.p_lm)}")
    if args.kind in ("both", "alm"):
        print(f"ALM p-value = {_format_finite_p(result.p_alm)}")
    print(f"p-value {_format_p(result.p_asymptotic)}")
    return 0


def _query_common(args):
    n = _parse_n(args.n)
    table = None
    if n != dist.INFINITE:
        if not args.table:
            raise UsageError("--table is required for finite n")
        table = _load_table(args.table)
    return n, table


def cmd_pvalue(args) -> int:
    _echo_config("pvalue", {"n": args.n, "kind": args.kind, "table": args.table})
    n, table = _query_common(args)
    for q in args.q:
        if q < 0:
            raise UsageError("statistic must be nonnegative")
        result = dist.pjb(q, n, args.kind, table)
        print("NA" if result.is_na else format(result.value, ".10g"))
    return 0


def cmd_quantile(args) -> int:
    _echo_config("quantile", {"n": args.n, "kind": args.kind, "table": args.table})
    n, table = _query_common(args)
    for p in args.p:
        if not 0.0 < p < 1.0:
            raise UsageError("probability must lie strictly inside (0, 1)")
        print(format(dist.qjb(p, n, args.kind, table), ".10g"))
    return 0


def cmd_fit(args) -> int:
    _echo_config("fit", {
        "table": args.table, "kind": args.kind, "order": args.order,
        "p": ",".join(f"{p:g}" for p in args.p),
        "min_n": args.min_n, "weighted": args.weighted, "out": args.out,
    })
    table = _load_table(args.table)
    fits = []
    for p in args.p:
        try:
            fit = surface.fit_surface(
                table, args.kind, p, order=args.order,
                min_n=args.min_n, weighted=args.weighted,
            )
        except surface.IllConditionedFitError:
            raise
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        fits.append(fit)
        print(
            f"kind={fit.kind} p={fit.p:g} K={fit.order} "
            f"rms_residual={fit.rms_residual:.6g} max_residual={fit.max_residual:.6g}"
        )
    try:
        surface.save_fits(fits, args.out)
        for fit in fits:
            plot_path = f"{args.out}.{fit.kind}.p{fit.p:g}.csv"
            with open(plot_path, "w", encoding="ascii") as handle:
                handle.write("n,observed,fitted\n")
                for n in table.config.n_grid:
                    observed = table.quantile_at(fit.kind, fit.p, n)
                    fitted = surface.eval_surface(fit, n)
                    handle.write(f"{n},{observed:.17g},{fitted:.17g}\n")
            print(f"plot data written to {plot_path}")
    except OSError as exc:
        raise DataError(f"cannot write fit output: {exc}") from exc
    print(f"fits written to {args.out}")
    return 0


def cmd_diagnose(args) -> int:
    _echo_config("diagnose", {
        "n": args.n, "replications": args.replications, "seed": args.seed,
        "generator": args.generator, "chunk_size": args.chunk_size,
        "workers": args.workers, "backend": backend_name(),
    })
    try:
        diag = engine.moment_diagnostics(
            args.n, args.replications, args.seed,
            generator=args.generator, chunk_size=args.chunk_size,
            workers=args.workers,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(f"n={diag.n} replications={diag.replications}")
    print(f"mean_sqrt_b1 = {diag.mean_sqrt_b1:+.6f}  expected 0         z = {diag.z_mean_sqrt_b1:+.3f}")
    print(f"var_sqrt_b1  = {diag.var_sqrt_b1:.6f}  c1 = {diag.c1:.7f}  z = {diag.z_var_sqrt_b1:+.3f}")
    print(f"mean_b2      = {diag.mean_b2:.6f}  c2 = {diag.c2:.7f}  z = {diag.z_mean_b2:+.3f}")
    print(f"var_b2       = {diag.var_b2:.6f}  c3 = {diag.c3:.7f}  z = {diag.z_var_b2:+.3f}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jbfinite", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate null distributions into a table file")
    sim.add_argument("--preset", choices=("full", "quick", "paper"),
                     help="grid preset: full (wide n and p grids) or quick (small CI-scale grids); 'paper' is an alias of full")
    sim.add_argument("--n", type=int, nargs="+", help="explicit n grid (ascending)")
    sim.add_argument("--p", type=float, nargs="+", help="explicit p grid (ascending)")
    sim.add_argument("--replications", type=_parse_count, default=1_000_000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--generator", choices=("counter", "mlfg1279"), default="counter")
    sim.add_argument("--chunk-size", type=_parse_count, default=10_000)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--progress", action="store_true")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit response surfaces q(p,N) = q_inf + sum beta_k N^-k")
    fit.add_argument("--table", required=True)
    fit.add_argument("--p", type=float, nargs="+", default=[0.90, 0.95, 0.99])
    fit.add_argument("--order", "-K", type=int, default=6)
    fit.add_argument("--kind", choices=("lm", "alm"), default="lm")
    fit.add_argument("--min-n", type=int, default=None,
                     help="drop grid sizes below this threshold before fitting")
    fit.add_argument("--weighted", action="store_true",
                     help="weight by inverse variance of the tabulated quantiles")
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=cmd_fit)

    pv = sub.add_parser("pvalue", help="distribution function P(S <= q)")
    pv.add_argument("--q", type=float, nargs="+", required=True)
    pv.add_argument("--n", default="inf")
    pv.add_argument("--kind", choices=("lm", "alm"), default="lm")
    pv.add_argument("--table")
    pv.set_defaults(func=cmd_pvalue)

    qt = sub.add_parser("quantile", help="quantile function of the null statistic")
    qt.add_argument("--p", type=float, nargs="+", required=True)
    qt.add_argument("--n", default="inf")
    qt.add_argument("--kind", choices=("lm", "alm"), default="lm")
    qt.add_argument("--table")
    qt.set_defaults(func=cmd_quantile)

    tst = sub.add_parser("test", help="run the normality test on a data file")
    tst.add_argument("--data", required=True, help="one observation per line")
    tst.add_argument("--table", help="quantile table for finite-sample p-values")
    tst.add_argument("--kind", choices=("both", "lm", "alm"), default="both")
    tst.set_defaults(func=cmd_test)

    dg = sub.add_parser("diagnose", help="Monte Carlo moment oracle z-scores")
    dg.add_argument("--n", type=int, required=True)
    dg.add_argument("--replications", type=_parse_count, default=100_000)
    dg.add_argument("--seed", type=int, default=0)
    dg.add_argument("--generator", choices=("counter", "mlfg1279"), default="counter")
    dg.add_argument("--chunk-size", type=_parse_count, default=10_000)
    dg.add_argument("--workers", type=int, default=1)
    dg.set_defaults(func=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except moments.DegenerateSampleError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (dist.TableRangeError, surface.IllConditionedFitError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
