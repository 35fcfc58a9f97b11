"""Command line interface: persistence curves, fits, the reference kappa table and the kappa slope.

Exit codes: 0 ok, 2 invalid configuration, 3 numerical failure, 4 fit failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings

from . import persistence as ps
from .airy1 import PrecisionWallError
from .fredholm import MAX_NODES

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_FIT = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _range(text, what):
    try:
        parts = [float(t) for t in text.split(":")]
    except ValueError:
        raise ConfigError(f"{what}: expected lo:hi:step, got {text!r}") from None
    if len(parts) != 3:
        raise ConfigError(f"{what}: expected lo:hi:step, got {text!r}")
    lo, hi, step = parts
    if not all(math.isfinite(p) for p in parts) or step <= 0 or hi < lo:
        raise ConfigError(f"{what}: empty or invalid range {text!r}")
    return ps.parse_grid(lo, hi, step)


def _pair(text, what):
    try:
        parts = [float(t) for t in text.replace(",", ":").split(":")]
    except ValueError:
        raise ConfigError(f"{what}: cannot parse {text!r}") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2 or not all(math.isfinite(p) for p in parts):
        raise ConfigError(f"{what}: expected one or two numbers, got {text!r}")
    return tuple(parts)


def _backend_kwargs(args):
    kw = {}
    if args.cutoff is not None:
        t = _pair(args.cutoff, "--cutoff")
        if min(t) <= 0:
            raise ConfigError("--cutoff must be positive")
        kw["cutoff"] = t
    if args.nodes is not None:
        if not 2 <= args.nodes <= MAX_NODES // 2:
            raise ConfigError(f"--nodes must lie in [2, {MAX_NODES // 2}]")
        kw["nodes"] = args.nodes
    return kw


def _check_common(args):
    if args.tol < 1e-12 or not math.isfinite(args.tol):
        raise ConfigError("--tol must be >= 1e-12")


def _window(args, process, c):
    if args.window is None:
        return ps.default_window(process, c)
    lo, hi = _pair(args.window, "--window")
    if not 0 < lo < hi:
        raise ConfigError("--window needs 0 < lo < hi")
    return lo, hi


def _c_values(args, default=None):
    if args.c is not None and args.c_range is not None:
        raise ConfigError("give either --c or --c-range")
    if args.c_range is not None:
        return _range(args.c_range, "--c-range")
    if args.c is not None:
        return [args.c]
    if default is None:
        raise ConfigError("--c or --c-range is required")
    return default


class _Writer:
    """CSV or JSON records to a file or stdout."""

    def __init__(self, args, columns, meta):
        self.fmt, self.columns, self.meta = args.format, columns, meta
        self.stream = open(args.out, "w", newline="") if args.out else sys.stdout
        self.rows = []
        if self.fmt == "csv":
            self.csv = csv.writer(self.stream, lineterminator="\n")
            self.csv.writerow(columns)

    def row(self, *values):
        self.rows.append(dict(zip(self.columns, values)))
        if self.fmt == "csv":
            self.csv.writerow([_fmt(v) for v in values])
            self.stream.flush()

    def comment(self, text):
        if self.fmt == "csv":
            self.stream.write(f"# {text}\n")

    def close(self, key="rows", row_columns=None):
        if self.fmt == "json":
            cols = row_columns or self.columns
            recs = [{k: r[k] for k in cols} for r in self.rows]
            json.dump({"meta": self.meta, key: recs}, self.stream, indent=2)
            self.stream.write("\n")
        if self.stream is not sys.stdout:
            self.stream.close()
        else:
            self.stream.flush()


def _config_meta(args, **extra):
    meta = {"process": args.process, "tol": args.tol, "cutoff": args.cutoff, "nodes": args.nodes}
    meta.update(extra)
    return meta


def cmd_curve(args):
    if args.L is None:
        raise ConfigError("--L lo:hi:step is required")
    grid = _range(args.L, "--L")
    cs = _c_values(args)
    kw = _backend_kwargs(args)
    w = _Writer(args, ["process", "c", "L", "p", "err"],
                _config_meta(args, c=cs[0] if len(cs) == 1 else cs, L=args.L))
    failed = False
    for c in cs:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ps.PersistenceWarning)
            pts = ps.curve(args.process, c, grid, args.tol, **kw)
        for msg in caught:
            print(f"warning: {msg.message}", file=sys.stderr)
            failed = True
        for pt in pts:
            w.row(args.process, float(c), pt.L, pt.p, pt.err)
    w.close("points", ["L", "p", "err"])
    return EXIT_NUMERICAL if failed else EXIT_OK


def _read_points(path):
    stream = sys.stdin if path == "-" else open(path, newline="")
    try:
        text = stream.read()
    finally:
        if stream is not sys.stdin:
            stream.close()
    text = text.strip()
    if text.startswith("{"):
        data = json.loads(text)
        meta = data.get("meta", {})
        pts = [ps.PersistencePoint(float(r["L"]), float(r["p"]), float(r["err"])) for r in data["points"]]
        return pts, meta.get("process"), meta.get("c")
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    reader = csv.DictReader(lines)
    pts, process, c = [], None, None
    for r in reader:
        pts.append(ps.PersistencePoint(float(r["L"]), float(r["p"]), float(r.get("err") or 0.0)))
        process = r.get("process", process)
        c = float(r["c"]) if r.get("c") not in (None, "") else c
    return pts, process, c


def cmd_fit(args):
    if args.input is not None:
        try:
            pts, process, c = _read_points(args.input)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read points: {exc}") from None
        process = process or args.process
        c = c if c is not None else (args.c if args.c is not None else float("nan"))
        window = _pair(args.window, "--window") if args.window else None
    else:
        if args.c is None:
            raise ConfigError("--c is required unless --input is given")
        process, c = args.process, args.c
        window = _window(args, process, c)
        grid = ps.parse_grid(window[0], window[1], args.step)
        pts = ps.curve(process, c, grid, args.tol, **_backend_kwargs(args))
    fit = ps.fit_exponential(pts, window)
    w = _Writer(args, ["process", "c", "kappa", "C", "residual", "L_lo", "L_hi"], _config_meta(args, c=c))
    w.row(process, c, fit.kappa, fit.C, fit.rms_residual, fit.window[0], fit.window[1])
    w.close()
    return EXIT_OK


def cmd_table1(args):
    if args.process != "airy1":
        raise ConfigError("table1 reproduces the Airy1 table; use --process airy1")
    ref = dict((round(c, 6), k) for c, k in ps.reference_table1())
    cs = _c_values(args, default=[c for c, _ in ps.reference_table1()])
    for c in cs:
        ps._check_c("airy1", c)
    kw = _backend_kwargs(args)
    w = _Writer(args, ["c", "kappa", "kappa_paper", "abs_diff"], _config_meta(args))
    worst = 0.0
    try:
        for c in cs:
            fit = ps.fit_curve("airy1", c, _window(args, "airy1", c), args.step, args.tol, **kw)
            k_ref = ref.get(round(c, 6), float("nan"))
            diff = abs(fit.kappa - k_ref)
            if math.isfinite(diff):
                worst = max(worst, diff)
            w.row(float(c), fit.kappa, k_ref, diff)
    finally:
        w.meta["max_abs_diff"] = worst
        w.comment(f"max_abs_diff={worst:.17g}")
        w.close()
    return EXIT_OK


def cmd_slope(args):
    c0 = -0.6033 if args.c is None else args.c
    if args.kappa_stub is not None:
        a, b = _pair(args.kappa_stub, "--kappa-stub")
        slope = ps.kappa_slope(args.process, c0, args.h, kappa_fn=lambda c: a + b * c)
    else:
        lo, hi = ps.validated_c_range(args.process)
        if not (lo <= c0 - args.h and c0 + args.h <= hi):
            raise ConfigError(f"c0 +- h must lie in [{lo}, {hi}]")
        kw = _backend_kwargs(args)
        window = None if args.window is None else _pair(args.window, "--window")
        slope = ps.kappa_slope(args.process, c0, args.h, window=window, step=args.step, tol=args.tol, **kw)
    w = _Writer(args, ["c0", "h", "slope"], _config_meta(args))
    w.row(float(c0), float(args.h), float(slope))
    w.close()
    return EXIT_OK


def cmd_selftest(args):
    from . import selftest

    ok = selftest.run(stream=sys.stdout, seed=args.seed)
    return EXIT_OK if ok else EXIT_NUMERICAL


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--process", choices=ps.PROCESSES, default="airy1")
    common.add_argument("--c", type=float, help="threshold")
    common.add_argument("--c-range", help="thresholds lo:hi:step")
    common.add_argument("--L", help="interval lengths lo:hi:step")
    common.add_argument("--tol", type=float, default=1e-10, help="absolute determinant tolerance")
    common.add_argument("--cutoff", help="truncation T, or T-,T+ for the two half lines")
    common.add_argument("--nodes", type=int, help="initial quadrature nodes per half line")
    common.add_argument("--window", help="fit window lo:hi")
    common.add_argument("--step", type=float, default=ps.DEFAULT_STEP, help="L step of fit curves")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--seed", type=int, default=12345, help="seed for Monte Carlo self tests only")

    p = argparse.ArgumentParser(prog="airy-persist", description="Persistence probabilities of Airy processes.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("curve", parents=[common], help="persistence probability on an L grid")
    f = sub.add_parser("fit", parents=[common], help="fit C exp(-kappa L)")
    f.add_argument("--input", help="CSV or JSON points file, '-' for stdin")
    sub.add_parser("table1", parents=[common], help="kappa for c = -1.00 (0.02) 0.00 against the published table")
    s = sub.add_parser("slope", parents=[common], help="central difference dkappa/dc")
    s.add_argument("--h", type=float, default=0.02)
    s.add_argument("--kappa-stub", help=argparse.SUPPRESS)
    sub.add_parser("selftest", parents=[common], help="run the built-in invariant checks")
    return p


_COMMANDS = {"curve": cmd_curve, "fit": cmd_fit, "table1": cmd_table1, "slope": cmd_slope, "selftest": cmd_selftest}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        _check_common(args)
        return _COMMANDS[args.command](args)
    except (ConfigError, PrecisionWallError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ps.FitError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ArithmeticError, ps.EvaluationError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
