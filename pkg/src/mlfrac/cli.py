"""Command-line front end.

Exit codes: 0 success, 1 bad input, 2 series non-convergence, 3 zero-root
rejection, 4 failed verification.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from mlfrac._version import __version__
from mlfrac.charpoly import RootFindingError, ZeroRootError
from mlfrac.io import ProblemSchemaError, Table, load_motion, load_problem
from mlfrac.laplace import LaplaceInversionError, caputo_residual, invert_solution
from mlfrac.motion import (
    empirical_cf,
    exact_cf,
    orthogonal_motion,
    orthogonal_problem,
    three_direction_motion,
    three_direction_problem,
)
from mlfrac.solver import evaluate_solution, solve
from mlfrac.special import (
    MLConvergenceError,
    MLParams2,
    MLParamsMultivariate,
    MLParamsPrabhakar,
    TruncationPolicy,
    ml2,
    ml_multivariate,
    ml_prabhakar,
)
from mlfrac.subordination import (
    MC_POLICY,
    build_associated_problem,
    iterated_brownian_mc,
    subordinate_mc,
    subordinate_quadrature,
)

DEFAULT_SEED = 20240101
EXIT_INPUT, EXIT_CONVERGENCE, EXIT_ZERO_ROOT, EXIT_VERIFY = 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _complex_arg(s: str) -> complex:
    parts = s.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]))
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're' or 're,im', got {s!r}")


def _seed_arg(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {s!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


def parse_grid(s: str) -> np.ndarray:
    """'0.5,1,2' or 'start:stop:num' (inclusive linspace); '' is empty."""
    s = s.strip()
    if not s:
        return np.empty(0)
    try:
        if ":" in s:
            a, b, n = s.split(":")
            n = int(n)
            if n < 0:
                raise ValueError
            return np.linspace(float(a), float(b), n)
        return np.array([float(v) for v in s.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {s!r}: use 'a,b,c' or 'start:stop:num'") from None


def _pair(s: str) -> tuple:
    z = _complex_arg(s)
    return (z.real, z.imag)


def _common(p: argparse.ArgumentParser, samples: int | None = None, seed: bool = False):
    p.add_argument("--abs-tol", type=float, default=1e-14, help="series absolute tolerance")
    p.add_argument("--rel-tol", type=float, default=1e-12, help="series relative tolerance")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    if seed:
        p.add_argument("--seed", type=_seed_arg, default=DEFAULT_SEED)
    if samples is not None:
        p.add_argument("--samples", type=_positive_int, default=samples)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mlfrac", description="Fractional Cauchy problems via Mittag-Leffler expansions.")
    ap.add_argument("--version", action="version", version=f"mlfrac {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ml-eval", help="evaluate Mittag-Leffler functions")
    p.add_argument("--kind", choices=("ml2", "prabhakar", "multi"), required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--delta", type=_complex_arg, required=True)
    p.add_argument("--gamma", type=_complex_arg, action="append", default=[])
    p.add_argument("--z", type=_complex_arg, action="append", default=[], required=True)
    _common(p)

    p = sub.add_parser("solve", help="evaluate the series solution of a problem file")
    p.add_argument("problem", type=Path)
    p.add_argument("--t-grid", type=parse_grid, default=parse_grid("0:5:11"))
    p.add_argument("--form", choices=("general", "distinct"), default="general")
    _common(p)

    p = sub.add_parser("verify", help="Laplace round-trip and Caputo residual checks")
    p.add_argument("problem", type=Path)
    p.add_argument("--t-grid", type=parse_grid, default=parse_grid("0.5,1,2"))
    p.add_argument("--laplace-tol", type=float, default=1e-6)
    p.add_argument("--residual-tol", type=float, default=1e-3)
    p.add_argument("--inject-error", type=float, default=0.0,
                   help="add this constant to the solution values before checking")
    _common(p)

    p = sub.add_parser("subordinate", help="subordination estimate of the order nu/n problem")
    p.add_argument("problem", type=Path, help="target problem (order nu/n)")
    p.add_argument("--n", type=_positive_int, default=2)
    p.add_argument("--method", choices=("mc", "quadrature", "iterated"), default="mc")
    p.add_argument("--t-grid", type=parse_grid, default=parse_grid("0.5,1,2"))
    _common(p, samples=100_000, seed=True)

    p = sub.add_parser("simulate", help="empirical characteristic function of a random motion")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=("orthogonal", "three-direction"))
    src.add_argument("--motion", type=Path, help="MotionSpec JSON file")
    p.add_argument("--lam", type=float, default=2.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--alpha", type=_pair, action="append", help="'a,b' (repeatable); 1-D motions use 'a'")
    p.add_argument("--t-grid", type=parse_grid, default=parse_grid("1"))
    _common(p, samples=100_000, seed=True)

    p = sub.add_parser("example", help="closed form vs simulation for a worked motion")
    p.add_argument("preset", choices=("orthogonal", "three-direction"))
    p.add_argument("--lam", type=float)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--alpha", type=_pair, action="append", help="'a,b' (repeatable)")
    p.add_argument("--t-grid", type=parse_grid, default=parse_grid("0.5,1,2"))
    _common(p, samples=100_000, seed=True)
    return ap


def _policy(args) -> TruncationPolicy:
    if not (args.abs_tol >= 0 and args.rel_tol >= 0) or (args.abs_tol == 0 and args.rel_tol == 0):
        raise UsageError("tolerances must be non-negative and not both zero")
    return TruncationPolicy(abs_tol=args.abs_tol, rel_tol=args.rel_tol)


def _emit(table: Table, args):
    text = table.render(args.format)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)


def cmd_ml_eval(args, argv) -> int:
    pol = _policy(args)
    t = Table(["z_re", "z_im", "value_re", "value_im", "terms", "rounding", "escalated"], __version__, argv)
    if args.kind == "ml2":
        if args.gamma:
            raise UsageError("--gamma is not used by --kind ml2")
        par = MLParams2(args.nu, args.delta)
        rows = [(z, *ml2(par, z, pol, full_output=True)) for z in args.z]
    elif args.kind == "prabhakar":
        if len(args.gamma) != 1:
            raise UsageError("--kind prabhakar needs exactly one --gamma")
        par = MLParamsPrabhakar(args.nu, args.delta, args.gamma[0])
        rows = [(z, *ml_prabhakar(par, z, pol, full_output=True)) for z in args.z]
    else:
        if len(args.gamma) != len(args.z) or not args.gamma:
            raise UsageError("--kind multi needs one --gamma per --z")
        par = MLParamsMultivariate(args.nu, args.delta, tuple(args.gamma))
        rows = []
        v, info = ml_multivariate(par, args.z, pol, full_output=True)
        # one value for the whole argument vector, reported against z_1
        rows.append((args.z[0], v, info))
    for z, v, info in rows:
        t.add(z.real, z.imag, complex(v).real, complex(v).imag, int(info["terms"]),
              float(info["rounding"]), int(info["escalated"]))
    _emit(t, args)
    return 0


def cmd_solve(args, argv) -> int:
    p = load_problem(args.problem)
    if np.any(args.t_grid < 0):
        raise UsageError("t-grid values must be non-negative")
    if args.form == "distinct" and not p.spectrum.simple:
        raise UsageError("--form distinct needs simple roots")
    sol = solve(p, form=args.form, policy=_policy(args))
    vals = evaluate_solution(sol, args.t_grid) if args.t_grid.size else np.empty(0, complex)
    t = Table(["t", "re", "im"], __version__, argv)
    for ti, v in zip(args.t_grid, np.atleast_1d(vals)):
        t.add(float(ti), complex(v).real, complex(v).imag)
    _emit(t, args)
    return 0


def cmd_verify(args, argv) -> int:
    p = load_problem(args.problem)
    if args.t_grid.size == 0 or np.any(args.t_grid <= 0):
        raise UsageError("verify needs positive t values")
    sol = solve(p, form="general", policy=_policy(args))
    bump = args.inject_error

    def F(x):
        return evaluate_solution(sol, x) + bump

    t = Table(["check", "t", "h", "value", "tolerance", "status"], __version__, argv)
    ok = True
    for ti in args.t_grid:
        try:
            ref = complex(invert_solution(p, float(ti)))
            err = abs(complex(F(float(ti))) - ref)
            passed = err <= args.laplace_tol
        except LaplaceInversionError:
            err, passed = math.inf, False
        ok &= passed
        t.add("laplace", float(ti), "", err, args.laplace_tol, "PASS" if passed else "FAIL")
    hs = (1e-2, 1e-3, 1e-4)
    for ti in args.t_grid:
        res = [abs(caputo_residual(p, F, float(ti), h)) for h in hs]
        for h, r in zip(hs, res):
            t.add("residual", float(ti), h, r, "", "")
        final = res[-1] <= args.residual_tol
        order = math.log10(res[0] / res[-1]) / 2 if res[-1] > 0 and res[0] > 0 else math.inf
        t.add("residual_final", float(ti), hs[-1], res[-1], args.residual_tol, "PASS" if final else "FAIL")
        t.add("residual_order", float(ti), "", order, 0.9, "PASS" if order >= 0.9 else "FAIL")
        ok &= final and order >= 0.9
    _emit(t, args)
    if args.out is not None:
        status = "all checks passed" if ok else "some checks FAILED"
        print(f"verify: {status}", file=sys.stderr)
    return 0 if ok else EXIT_VERIFY


def cmd_subordinate(args, argv) -> int:
    target = load_problem(args.problem)
    if np.any(args.t_grid <= 0):
        raise UsageError("t-grid values must be positive")
    direct = solve(target, policy=_policy(args))
    t = Table(["t", "estimate_re", "estimate_im", "std_error", "direct_re", "direct_im"], __version__, argv,
              args.seed)
    if args.method == "iterated":
        k = round(math.log2(args.n))
        if args.n < 2 or 2**k != args.n:
            raise UsageError("--method iterated needs n = 2^k with k >= 1")
        base = build_associated_problem(target, args.n).base_problem
    else:
        plan = build_associated_problem(target, args.n)
    for i, ti in enumerate(args.t_grid):
        seed = [args.seed, i]
        if args.method == "quadrature":
            v, se = subordinate_quadrature(plan, float(ti)), 0.0
        elif args.method == "mc":
            est = subordinate_mc(plan, float(ti), args.samples, seed, MC_POLICY)
            v, se = est.estimate, est.std_error
        else:
            est = iterated_brownian_mc(base, k, float(ti), args.samples, seed, MC_POLICY)
            v, se = est.estimate, est.std_error
        d = complex(evaluate_solution(direct, float(ti)))
        t.add(float(ti), v.real, v.imag, se, d.real, d.imag)
    _emit(t, args)
    return 0


def _default_alphas(dim: int) -> list:
    return [(1.0, 0.5), (0.7, -0.3), (-1.2, 0.8)] if dim == 2 else [(1.0, 0.0), (0.5, 0.0)]


def cmd_simulate(args, argv) -> int:
    if args.preset == "orthogonal":
        spec = orthogonal_motion(args.lam, args.c)
    elif args.preset == "three-direction":
        spec = three_direction_motion(args.lam, args.c)
    else:
        spec = load_motion(args.motion)
    if spec.dim > 2:
        raise UsageError("simulate handles motions in one or two dimensions")
    alphas = args.alpha or _default_alphas(spec.dim)
    if np.any(args.t_grid < 0):
        raise UsageError("t-grid values must be non-negative")
    t = Table(["t", "alpha", "beta", "empirical_re", "empirical_im", "std_error_re", "std_error_im",
               "exact_re", "exact_im"], __version__, argv, args.seed)
    for i, ti in enumerate(args.t_grid):
        for j, (a, b) in enumerate(alphas):
            vec = [a, b][: spec.dim]
            if spec.dim == 1 and b != 0:
                raise UsageError("1-D motions take a single alpha component")
            est = empirical_cf(spec, float(ti), vec, args.samples, [args.seed, i, j])
            ex = exact_cf(spec, float(ti), vec)
            t.add(float(ti), a, b, est.estimate.real, est.estimate.imag, est.std_error_re, est.std_error_im,
                  ex.real, ex.imag)
    _emit(t, args)
    return 0


def cmd_example(args, argv) -> int:
    lam = args.lam if args.lam is not None else (2.0 if args.preset == "orthogonal" else 1.5)
    if args.preset == "orthogonal":
        spec, build = orthogonal_motion(lam, args.c), orthogonal_problem
    else:
        spec, build = three_direction_motion(lam, args.c), three_direction_problem
    alphas = args.alpha or _default_alphas(2)
    if np.any(args.t_grid <= 0):
        raise UsageError("t-grid values must be positive")
    t = Table(["t", "alpha", "beta", "closed_re", "closed_im", "empirical_re", "empirical_im", "std_error"],
              __version__, argv, args.seed)
    pol = _policy(args)
    for j, (a, b) in enumerate(alphas):
        p = build(lam, args.c, a, b, args.nu)
        sol = solve(p, form="distinct" if p.spectrum.simple else "general", policy=pol)
        for i, ti in enumerate(args.t_grid):
            v = complex(evaluate_solution(sol, float(ti)))
            if args.nu == 1:
                est = empirical_cf(spec, float(ti), [a, b], args.samples, [args.seed, j, i])
                e_re, e_im, se = est.estimate.real, est.estimate.imag, est.std_error
            else:
                # simulation describes the nu = 1 law only
                e_re = e_im = se = math.nan
            t.add(float(ti), a, b, v.real, v.imag, e_re, e_im, se)
    _emit(t, args)
    return 0


COMMANDS = {
    "ml-eval": cmd_ml_eval,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "subordinate": cmd_subordinate,
    "simulate": cmd_simulate,
    "example": cmd_example,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, argv)
    except MLConvergenceError as exc:
        print(f"mlfrac: series did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ZeroRootError as exc:
        print(f"mlfrac: zero root rejected: {exc}", file=sys.stderr)
        return EXIT_ZERO_ROOT
    except (UsageError, ProblemSchemaError, RootFindingError, ValueError) as exc:
        print(f"mlfrac: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
