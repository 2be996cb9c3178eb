"""Command-line interface: ``longmem <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical degeneracy. Errors are
written to stderr as JSON objects with a ``kind`` field.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .analysis import acov_trace_partial_sums, autocovariance
from .errors import DegenerateCovarianceError, LongMemError, ValidationError
from .experiments import bias_study, calibrate, validate_total_memory
from .gse import default_bandwidth, estimate, gph_estimate, objective_grid
from .inference import normalized_total_memory, total_memory, total_memory_test, wald_test
from .simulate import (
    NONLINEAR_MAPS,
    PRESETS,
    ArfimaSpec,
    ArmaSpec,
    FracDiffSpec,
    MarkovSpec,
    MtdSpec,
    MultiFdSpec,
    NonlinearArSpec,
    arfima,
    arma_series,
    fracdiff_noise,
    markov_series,
    mtd_series,
    multivariate_fd,
    nonlinear_ar_series,
)
from .spectral import as_series, log_periodogram_points, periodogram, smoothed_periodogram

SCHEMA = 1
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3


# -- parsing helpers ---------------------------------------------------------

def _floats(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _matrix(text: str) -> np.ndarray:
    """``"a,b;c,d"`` -> 2x2 matrix (rows separated by ``;``)."""
    rows = [_floats(r) for r in text.split(";")]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise argparse.ArgumentTypeError(f"ragged matrix {text!r}")
    return np.array(rows)


def _matrices(text: str) -> list[np.ndarray]:
    """``"M1|M2|..."`` with each block in :func:`_matrix` syntax."""
    return [_matrix(block) for block in text.split("|")]


def _bandwidth(text: str):
    if text == "sqrt":
        return "sqrt"
    try:
        m = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bandwidth must be 'sqrt' or a positive integer, got {text!r}") from None
    if m < 1:
        raise argparse.ArgumentTypeError("bandwidth must be positive")
    return m


def read_matrix(path: str) -> np.ndarray:
    """Read a CSV matrix (one time step per row) with an optional header line."""
    if path == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(path, newline="") as fh:
                text = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValidationError(f"{path}: rows have differing numbers of columns")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from None
    return as_series(data)


def _open_out(path: str | None):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def write_matrix(x: np.ndarray, path: str | None) -> None:
    fh, close = _open_out(path)
    try:
        fh.write(",".join(f"x{i + 1}" for i in range(x.shape[1])) + "\n")
        np.savetxt(fh, x, fmt="%.17g", delimiter=",")
    finally:
        if close:
            fh.close()


def write_table(header: list[str], rows, path: str | None, fmt: str = "csv") -> None:
    fh, close = _open_out(path)
    try:
        if fmt == "json":
            recs = [dict(zip(header, (_jsonable(v) for v in r))) for r in rows]
            json.dump({"schema": SCHEMA, "rows": recs}, fh, indent=2)
            fh.write("\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow(["" if isinstance(v, float) and math.isnan(v) else _cell(v) for v in r])
    finally:
        if close:
            fh.close()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(obj: dict, path: str | None) -> None:
    fh, close = _open_out(path)
    try:
        json.dump({"schema": SCHEMA, **{k: _jsonable(v) for k, v in obj.items()}}, fh, indent=2)
        fh.write("\n")
    finally:
        if close:
            fh.close()


def _resolve_bandwidth(rule, T: int) -> int:
    return default_bandwidth(T) if rule == "sqrt" else int(rule)


# -- subcommands ------------------------------------------------------------

def cmd_simulate(args) -> int:
    common = dict(length=args.length, seed=args.seed)
    model = args.model
    if model == "fd":
        x = fracdiff_noise(FracDiffSpec(d=args.d, burn_in=args.burn_in, sigma=args.sigma, **common))
    elif model == "arfima":
        x = arfima(ArfimaSpec(ar=args.ar, ma=args.ma, d=args.d, burn_in=args.burn_in, sigma=args.sigma, **common))
    elif model == "arma":
        x = arma_series(ArmaSpec(ar=args.ar, ma=args.ma, burn_in=args.burn_in, sigma=args.sigma, **common))
    elif model == "mfd":
        if args.d is not None:
            spec = MultiFdSpec(d=args.d, burn_in=args.burn_in, sigma=args.sigma, **common)
        elif args.preset is not None and args.p is not None:
            spec = MultiFdSpec(setting=args.preset, p=args.p, burn_in=args.burn_in, sigma=args.sigma, **common)
        else:
            raise ValidationError("mfd needs --d or both --preset and --p")
        x = multivariate_fd(spec)
    elif model == "markov":
        x = markov_series(MarkovSpec(transition=args.transition, values=args.values, **common))
    elif model == "mtd":
        x = mtd_series(MtdSpec(weights=args.weights, matrices=args.matrices, values=args.values, **common))
    else:
        x = nonlinear_ar_series(NonlinearArSpec(kind=args.kind, a=args.a, b=args.b, sigma=args.sigma,
                                                burn_in=args.burn_in, **common))
    write_matrix(x, args.output)
    return 0


def _fit(args):
    x = read_matrix(args.input)
    pg = periodogram(x)
    m = _resolve_bandwidth(args.bandwidth, x.shape[0])
    return x, pg, estimate(pg, bandwidth=m)


def _fit_report(x, fit) -> dict:
    return {
        "T": x.shape[0],
        "p": x.shape[1],
        "d_hat": fit.d_hat,
        "total_memory": total_memory(fit.d_hat),
        "normalized_total_memory": normalized_total_memory(fit.d_hat),
        "objective": fit.objective,
        "bandwidth": fit.bandwidth,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "grad_norm": fit.grad_norm,
        "active": list(fit.active),
    }


def cmd_estimate(args) -> int:
    x, pg, fit = _fit(args)
    report = _fit_report(x, fit)
    if args.gph:
        report["gph"] = [gph_estimate(pg, k, max(fit.bandwidth, 2)) for k in range(pg.dim)]
    write_json(report, args.output)
    return 0


def cmd_test(args) -> int:
    x, pg, fit = _fit(args)
    tm = total_memory_test(fit, null_value=args.null, alternative=args.alternative, alpha=args.alpha)
    report = {
        **_fit_report(x, fit),
        "test": "total_memory",
        "null": args.null,
        "alternative": tm.alternative,
        "alpha": tm.alpha,
        "statistic": tm.statistic,
        "variance": tm.df_or_variance,
        "p_value": tm.p_value,
        "reject": tm.reject,
    }
    if args.wald:
        w = wald_test(fit, alpha=args.alpha)
        report["wald"] = {"statistic": w.statistic, "df": w.df_or_variance, "p_value": w.p_value, "reject": w.reject}
    write_json(report, args.output)
    return 0


def cmd_periodogram(args) -> int:
    x = read_matrix(args.input)
    pg = periodogram(x)
    if args.smooth is not None:
        rows = smoothed_periodogram(pg, args.coord, args.smooth)
        write_table(["freq", "value"], rows.tolist(), args.output, args.format)
        return 0
    m = _resolve_bandwidth(args.m, x.shape[0])
    pts = log_periodogram_points(pg, args.coord, m)
    write_table(["neg2_log_freq", "log_periodogram"], pts.tolist(), args.output, args.format)
    return 0


def cmd_grid(args) -> int:
    x = read_matrix(args.input)
    pg = periodogram(x)
    m = _resolve_bandwidth(args.bandwidth, x.shape[0])
    n = int(round((args.stop - args.start) / args.step)) + 1
    if n < 1:
        raise ValidationError("grid is empty: stop must be >= start")
    axis = np.round(args.start + args.step * np.arange(n), 12)
    coords = args.coords
    if len(coords) == 1:
        grid = axis[:, None]
        header = ["d", "R"]
    elif len(coords) == 2:
        g1, g2 = np.meshgrid(axis, axis, indexing="ij")
        grid = np.column_stack([g1.ravel(), g2.ravel()])
        header = ["d1", "d2", "R"]
    else:
        raise ValidationError("--coords takes one or two coordinate indices")
    rows = objective_grid(pg, m, coords, grid)
    write_table(header, rows.tolist(), args.output, args.format)
    return 0


def cmd_acov(args) -> int:
    x = read_matrix(args.input)
    sums = acov_trace_partial_sums(autocovariance(x, args.max_lag))
    write_table(["lag", "partial_sum"], [[k, float(v)] for k, v in enumerate(sums)], args.output, args.format)
    return 0


def cmd_bias_study(args) -> int:
    ar = args.ar if args.model == "arfima" else []
    ma = args.ma if args.model == "arfima" else []
    rows = bias_study(ar, ma, args.d, args.sizes, n=args.n, seed=args.seed)
    header = ["N", "m", "cutoff", "d_hat", "d_sd", "n"]
    write_table(header, [[r.N, r.m, r.cutoff, r.d_hat, r.d_sd, r.n] for r in rows], args.output, args.format)
    return 0


def cmd_calibrate(args) -> int:
    rows = calibrate(args.p, args.length, args.m, args.n, alpha=args.alpha, seed=args.seed)
    header = ["m", "wald_type1", "tm_type1", "n", "degenerate"]
    write_table(header, [[r.m, r.wald_type1, r.tm_type1, r.n, r.degenerate] for r in rows], args.output, args.format)
    return 0


def cmd_validate_tm(args) -> int:
    m = None if args.bandwidth == "sqrt" else args.bandwidth
    s = validate_total_memory(args.setting, args.p, args.length, args.n, seed=args.seed, bandwidth=m)
    write_json(asdict(s), args.output)
    return 0


# -- parser -----------------------------------------------------------------

def _add_output(p, table: bool = False) -> None:
    p.add_argument("-o", "--output", default=None, help="output path (default: stdout)")
    if table:
        p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="longmem", description="Long-memory estimation and testing toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a series as CSV")
    sim_sub = sim.add_subparsers(dest="model", required=True)
    for name in ("fd", "arfima", "arma", "mfd", "markov", "mtd", "nlar"):
        sp = sim_sub.add_parser(name)
        sp.add_argument("--length", type=int, required=True)
        sp.add_argument("--seed", type=int, default=0)
        _add_output(sp)
        if name in ("fd", "arfima", "arma", "mfd", "nlar"):
            sp.add_argument("--burn-in", type=int, default=None)
            sp.add_argument("--sigma", type=float, default=1.0)
        if name in ("arfima", "arma"):
            sp.add_argument("--ar", type=_floats, default=[])
            sp.add_argument("--ma", type=_floats, default=[])
        if name in ("fd", "arfima"):
            sp.add_argument("--d", type=float, required=(name == "fd"), default=0.0)
        if name == "mfd":
            sp.add_argument("--d", type=_floats, default=None, help="comma-separated memory vector")
            sp.add_argument("--preset", choices=PRESETS, default=None)
            sp.add_argument("--p", type=int, default=None)
        if name in ("markov", "mtd"):
            sp.add_argument("--values", type=_floats, default=None, help="output value of each state")
        if name == "markov":
            sp.add_argument("--transition", type=_matrix, required=True,
                            help="column-stochastic matrix, rows ';'-separated")
        if name == "mtd":
            sp.add_argument("--weights", type=_floats, required=True)
            sp.add_argument("--matrices", type=_matrices, required=True, help="'|'-separated matrices")
        if name == "nlar":
            sp.add_argument("--kind", choices=sorted(NONLINEAR_MAPS), default="tanh")
            sp.add_argument("--a", type=float, default=0.5)
            sp.add_argument("--b", type=float, default=0.4)
        sp.set_defaults(func=cmd_simulate)

    def with_input(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("input", help="CSV matrix, or '-' for stdin")
        return sp

    est = with_input("estimate", "Gaussian semiparametric estimate of the memory vector")
    est.add_argument("--bandwidth", type=_bandwidth, default="sqrt")
    est.add_argument("--gph", action="store_true", help="add per-coordinate log-periodogram estimates")
    _add_output(est)
    est.set_defaults(func=cmd_estimate)

    tst = with_input("test", "total memory test (and optionally the Wald test)")
    tst.add_argument("--bandwidth", type=_bandwidth, default="sqrt")
    tst.add_argument("--null", type=float, default=0.0)
    tst.add_argument("--alternative", choices=("greater", "less", "two_sided"), default="greater")
    tst.add_argument("--alpha", type=float, default=0.05)
    tst.add_argument("--wald", action="store_true")
    _add_output(tst)
    tst.set_defaults(func=cmd_test)

    per = with_input("periodogram", "log periodogram near the origin (or smoothed periodogram)")
    per.add_argument("--coord", type=int, default=0)
    per.add_argument("--m", type=_bandwidth, default="sqrt", help="number of frequencies")
    per.add_argument("--smooth", type=int, default=None, metavar="HALFWIDTH")
    _add_output(per, table=True)
    per.set_defaults(func=cmd_periodogram)

    grd = with_input("grid", "objective over a grid of memory values")
    grd.add_argument("--coords", type=_ints, default=[0])
    grd.add_argument("--bandwidth", type=_bandwidth, default="sqrt")
    grd.add_argument("--start", type=float, default=-0.45)
    grd.add_argument("--stop", type=float, default=0.45)
    grd.add_argument("--step", type=float, default=0.01)
    _add_output(grd, table=True)
    grd.set_defaults(func=cmd_grid)

    acv = with_input("acov", "partial sums of the autocovariance trace")
    acv.add_argument("--max-lag", type=int, default=100)
    _add_output(acv, table=True)
    acv.set_defaults(func=cmd_acov)

    bias = sub.add_parser("bias-study", help="estimates on growing windows with m = sqrt(N)")
    bias.add_argument("--model", choices=("fd", "arfima"), default="arfima")
    bias.add_argument("--ar", type=_floats, default=[])
    bias.add_argument("--ma", type=_floats, default=[])
    bias.add_argument("--d", type=float, default=0.25)
    bias.add_argument("--sizes", type=_ints, required=True, help="comma-separated window lengths N")
    bias.add_argument("--n", type=int, default=1, help="Monte Carlo trials")
    bias.add_argument("--seed", type=int, default=0)
    _add_output(bias, table=True)
    bias.set_defaults(func=cmd_bias_study)

    cal = sub.add_parser("calibrate", help="type-I error of Wald vs total memory tests")
    cal.add_argument("--p", type=int, required=True)
    cal.add_argument("--length", type=int, required=True)
    cal.add_argument("--m", type=_ints, required=True, help="comma-separated bandwidths")
    cal.add_argument("--n", type=int, default=100)
    cal.add_argument("--alpha", type=float, default=0.05)
    cal.add_argument("--seed", type=int, default=0)
    _add_output(cal, table=True)
    cal.set_defaults(func=cmd_calibrate)

    val = sub.add_parser("validate-tm", help="total memory recovery on a preset")
    val.add_argument("--setting", required=True, help="one of zero, constant, subset, range")
    val.add_argument("--p", type=int, required=True)
    val.add_argument("--length", type=int, required=True)
    val.add_argument("--n", type=int, default=100)
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--bandwidth", type=_bandwidth, default="sqrt")
    _add_output(val)
    val.set_defaults(func=cmd_validate_tm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LongMemError as exc:
        code = EXIT_DEGENERATE if isinstance(exc, DegenerateCovarianceError) else EXIT_VALIDATION
        json.dump({"schema": SCHEMA, "error": {"kind": exc.kind, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return code


if __name__ == "__main__":
    sys.exit(main())
