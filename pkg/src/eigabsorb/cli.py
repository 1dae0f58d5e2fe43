"""Command-line front end.

Exit codes: 0 success, 1 a verification verdict failed, 2 input or usage
error, 3 numerical failure.  Every failure also prints one line
``error kind=<kind> reason=<text>`` to standard error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .casebook import VOLTERRA_HEADER, example62_models, volterra_verify
from .families import (FamilyParseError, ModelError, PRESETS, StructuredFamily, parse_family,
                       preset)
from .io import write_csv, write_kv
from .linalg import EigenSolverError, NotHermitianError, PreconditionError
from .numrange import (BOUNDARY_HEADER, REGION_HEADER, cap_check, essential_region,
                       numerical_range_boundary, omega, sigma_slope_check)
from .perturbation import (ABSORPTION_HEADER, TRAJECTORY_HEADER, AbsorptionOptions,
                           InsufficientDataError, IsolationError, NoKernelError, track,
                           verify_absorption)
from .secular import SecularError, crossing_locate, crossing_scan

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- argument handling ----------------------------------------------------

def _family_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", type=Path, help="family document (JSON)")
    src.add_argument("--preset", help=f"one of {', '.join(sorted(PRESETS))}")
    p.add_argument("--dim", type=int, help="truncation size for presets")


def _grid_args(p):
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--grid", type=int, help="number of grid points")
    p.add_argument("--log", action="store_true", help="log-spaced grid")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eigabsorb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("numrange", help="boundary of W(A0 + i A1) and the essential region")
    _family_args(p)
    common(p)
    p.add_argument("--angles", type=int, default=64)

    p = sub.add_parser("track", help="bottom eigenvalue branches over a t grid")
    _family_args(p)
    _grid_args(p)
    common(p)
    p.add_argument("--branches", type=int, default=1)

    p = sub.add_parser("absorb", help="threshold slopes versus predictor eigenvalues")
    _family_args(p)
    _grid_args(p)
    common(p)
    p.add_argument("--tol-kernel", type=float)
    p.add_argument("--level", type=float, help="threshold level for families without tail data")
    p.add_argument("--branches", type=int)

    p = sub.add_parser("secular", help="sign scan and crossings of the two secular functions")
    p.add_argument("--preset", default="example62", choices=["example62", "example62a", "example62b"])
    p.add_argument("--scan", default="5,7,9,11", help="comma-separated odd probe indices")
    p.add_argument("--locate", action="store_true", help="locate crossings between sign changes")
    p.add_argument("--n-max", type=int, default=30)
    common(p)

    p = sub.add_parser("volterra", help="discrete Volterra family against the closed form")
    p.add_argument("--dim", type=int, default=1024)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--tol-kernel", type=float, help="kernel tolerance as a multiple of h")
    common(p)

    p = sub.add_parser("capcheck", help="realize points of eps*W(T) + (1-eps)*<Tx,x>")
    _family_args(p)
    p.add_argument("--epsilon", type=float, default=0.3)
    p.add_argument("--targets", type=int, default=200)
    common(p)

    p = sub.add_parser("verify-all", help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion numbers or names")
    p.add_argument("--tol-override", type=float,
                   help="replace every numeric criterion tolerance (0 forces failures)")
    common(p)
    return parser


def _load_family(args, required=True):
    if args.input is not None:
        try:
            text = args.input.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {args.input}: {exc.strerror}") from exc
        fam = parse_family(text)
        if args.dim is not None:
            raise UsageError("--dim applies to presets only")
        return fam, None
    if args.preset is not None:
        return preset(args.preset, args.dim), args.preset
    if required:
        raise UsageError("one of --input or --preset is required")
    return None, None


def _grid(args, default):
    lo = args.t_min if args.t_min is not None else default[0]
    hi = args.t_max if args.t_max is not None else default[1]
    n = args.grid if args.grid is not None else default[2]
    log = args.log or (args.t_min is None and args.t_max is None and default[3])
    if not (lo < hi) or n < 2:
        raise UsageError(f"invalid grid: t-min {lo!r}, t-max {hi!r}, count {n}")
    if log:
        if lo <= 0:
            raise UsageError("log grid needs t-min > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _default_grid(name):
    if name in ("example62a", "example62b"):
        # lambda/t only settles to the predicted slope once t << e^{-dim}
        return (1e-280, 1e-200, 32, True)
    return (1e-6, 1e-4, 16, True)


# --- subcommands ----------------------------------------------------------

def cmd_numrange(args) -> int:
    fam, _ = _load_family(args)
    A0 = fam.evaluate(0.0).data
    try:
        A1 = fam.a1().data
    except ModelError:
        A1 = np.zeros_like(A0)
    b = numerical_range_boundary(A0 + 1j * A1, args.angles)
    write_csv(args.out / "boundary.csv", BOUNDARY_HEADER, b.rows())
    kv = [("dim", b.dim), ("angles", args.angles), ("support_defect", b.support_defect()),
          ("convexity_defect", b.convexity_defect())]
    if isinstance(fam, StructuredFamily):
        data = fam.essential_points()
        region = essential_region(data)
        write_csv(args.out / "region.csv", REGION_HEADER, region.rows())
        w = omega(region)
        rep = sigma_slope_check(data, np.geomspace(1e-6, 1e-2, 5))
        write_csv(args.out / "sigma.csv", ("t", "sigma_over_t"), rep.rows())
        kv += [("omega", "empty" if w is None else w), ("sigma_limit", rep.limit),
               ("sigma_status", rep.status)]
    write_kv(args.out / "numrange.txt", kv)
    return EXIT_OK


def cmd_track(args) -> int:
    fam, name = _load_family(args)
    t = _grid(args, _default_grid(name))
    traj = track(fam, t, args.branches)
    write_csv(args.out / "trajectory.csv", TRAJECTORY_HEADER, traj.rows())
    return EXIT_OK


def cmd_absorb(args) -> int:
    fam, name = _load_family(args)
    t = _grid(args, _default_grid(name))
    level = args.level
    if level is None and not isinstance(fam, StructuredFamily):
        level = 0.0
    opts = AbsorptionOptions(t_grid=tuple(t), n_branches=args.branches,
                             tol_kernel=args.tol_kernel, level=level)
    rep = verify_absorption(fam, 0.0, opts)
    write_kv(args.out / "absorption.txt", rep.key_values())
    write_csv(args.out / "absorption.csv", ABSORPTION_HEADER, rep.rows())
    write_csv(args.out / "trajectory.csv", TRAJECTORY_HEADER, rep.trajectory.rows())
    print(f"verdict={rep.verdict} betas={[round(s[1], 12) for s in rep.slopes]} "
          f"mu={[float(m) for m in rep.mu]}")
    if not rep.passed:
        _fail("verdict", rep.reason)
        return EXIT_VERDICT
    return EXIT_OK


def cmd_secular(args) -> int:
    try:
        ms = [int(m) for m in args.scan.split(",") if m.strip()]
    except ValueError as exc:
        raise UsageError(f"--scan expects integers: {args.scan!r}") from exc
    a, b = example62_models(args.n_max)
    try:
        rows = crossing_scan(a, b, ms)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_csv(args.out / "scan.csv",
              ("m", "lambda_probe", "f_a", "f_b", "sign", "bound_a_ok", "bound_b_ok"),
              [(r.m, r.lambda_probe, r.f_a, r.f_b, r.sign, r.bound_a_ok, r.bound_b_ok) for r in rows])
    print(" ".join(f"m={r.m}:{'+' if r.sign > 0 else '-'}" for r in rows))
    if args.locate:
        found = []
        for r, s in zip(rows, rows[1:]):
            if r.sign != s.sign:
                c = crossing_locate(a, b, (r.lambda_probe, s.lambda_probe))
                found.append((r.m, s.m, c.lambda_star, c.t_star, c.lambda_a, c.lambda_b,
                              int(c.consistent)))
        write_csv(args.out / "crossings.csv",
                  ("m_lo", "m_hi", "lambda_star", "t_star", "lambda_a", "lambda_b", "consistent"),
                  found)
        if not all(f[-1] for f in found):
            _fail("verdict", "crossing eigenvalues disagree")
            return EXIT_VERDICT
    if not all(r.bound_a_ok and r.bound_b_ok for r in rows):
        _fail("verdict", "probe bound violated")
        return EXIT_VERDICT
    return EXIT_OK


def cmd_volterra(args) -> int:
    factor = args.tol_kernel if args.tol_kernel is not None else 3.0
    rep = volterra_verify(args.dim, args.theta, args.count, kernel_factor=factor)
    write_csv(args.out / "volterra.csv", VOLTERRA_HEADER, rep.eig_rows)
    write_csv(args.out / "volterra_compression.csv", ("n", "predicted", "computed", "rel_error"),
              rep.compression_rows)
    write_kv(args.out / "volterra.txt", rep.key_values())
    if rep.max_rel_error > 1e-2 or rep.max_compression_error > 1e-2:
        _fail("verdict", "Volterra error above 1e-2")
        return EXIT_VERDICT
    return EXIT_OK


def cmd_capcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    fam, _ = _load_family(args, required=False)
    if fam is not None:
        A0 = fam.evaluate(0.0).data
        try:
            A1 = fam.a1().data
        except ModelError:
            A1 = np.zeros_like(A0)
        T = A0 + 1j * A1
    else:
        n = args.dim or 4
        T = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    x = rng.standard_normal(T.shape[0]) + 1j * rng.standard_normal(T.shape[0])
    x /= np.linalg.norm(x)
    rep = cap_check(T, x, args.epsilon, args.targets, rng)
    write_kv(args.out / "capcheck.txt",
             [("dim", T.shape[0]), ("epsilon", rep.epsilon), ("targets", rep.targets_checked),
              ("max_defect", rep.max_defect), ("threshold", rep.threshold),
              ("min_overlap", rep.min_overlap), ("failed_targets", len(rep.failed_targets)),
              ("pass", rep.passed)])
    if not rep.passed:
        _fail("verdict", f"{len(rep.failed_targets)} targets not realized")
        return EXIT_VERDICT
    return EXIT_OK


def cmd_verify_all(args) -> int:
    try:
        acceptance.select(args.only)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    results = acceptance.run_all(args.only, args.seed, args.out, args.tol_override,
                                 log=lambda r: print(r.line(), flush=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if failed:
        _fail("verdict", "criteria failed: " + ",".join(str(r.key) for r in failed))
        return EXIT_VERDICT
    return EXIT_OK


COMMANDS = {"numrange": cmd_numrange, "track": cmd_track, "absorb": cmd_absorb,
            "secular": cmd_secular, "volterra": cmd_volterra, "capcheck": cmd_capcheck,
            "verify-all": cmd_verify_all}


def _fail(kind, reason):
    reason = " ".join(str(reason).split())
    print(f"error kind={kind} reason={reason}", file=sys.stderr)


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "dim", None) is not None and args.dim < 1:
            raise UsageError("--dim must be positive")
        return COMMANDS[args.command](args)
    except (UsageError, FamilyParseError, ModelError, NotHermitianError, PreconditionError,
            json.JSONDecodeError, InsufficientDataError) as exc:
        _fail("usage", exc)
        return EXIT_USAGE
    except (EigenSolverError, SecularError, NoKernelError, IsolationError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        _fail("numerical", exc)
        return EXIT_NUMERIC


def main():
    sys.exit(run())
