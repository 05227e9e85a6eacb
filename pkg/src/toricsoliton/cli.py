"""Command-line entry point ``tsl``.

Exit codes: 0 on success, 1 on input errors, 2 when a solver fails to converge.
All reports are JSON on stdout (or in ``--out``); set TSL_THREADS to cap
BLAS/OpenMP worker threads.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import benchmarks
from .errors import ConvexityLost, MaxIterExceeded, NewtonDiverged, ToricSolitonError
from .functionals import F_hat, F_hat_alt, I_functional, J_functional, default_polytope_grid, make_path
from .grids import GridPotential
from .polyhedra import asymptotic_cone, fraction_to_json, is_delzant
from .potentials import calibrate_F, ma_data_F
from .masolve import DEFAULT_STEPS, DEFAULT_TOL, solve_aubin, solve_star_path
from .soliton import comparability_constants, find_soliton_vector
from .toric import in_lambda, load_polytope
from .verify import SUITES, run_suite
from .wvol import build_model, mc_weighted_volume, weighted_volume

SOLVER_ERRORS = (MaxIterExceeded, NewtonDiverged, ConvexityLost)


class InputError(Exception):
    pass


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _vector(text: str, dim: int | None = None) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.split(",")])
    except ValueError as exc:
        raise InputError(f"cannot parse vector {text!r}") from exc
    if dim is not None and len(v) != dim:
        raise InputError(f"expected {dim} components, got {len(v)}")
    return v


def _polytope(args):
    path = args.polytope or args.fan
    if not Path(path).is_file():
        raise InputError(f"no such file: {path}")
    try:
        return load_polytope(path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _potential(path: str) -> GridPotential:
    if not Path(path).is_file():
        raise InputError(f"no such file: {path}")
    try:
        return GridPotential.load(path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _soliton_b(args, poly) -> np.ndarray:
    if getattr(args, "b", None):
        return _vector(args.b, poly.dim)
    return find_soliton_vector(poly).b_X


# --- commands ----------------------------------------------------------------


def cmd_info(args) -> int:
    poly = _polytope(args)
    ok, witness = is_delzant(poly)
    cone = asymptotic_cone(poly)
    report = {
        "dim": poly.dim,
        "halfspaces": [h.to_json() for h in poly.halfspaces],
        "redundant": [poly.halfspaces[i].to_json() for i in poly.redundant],
        "vertices": [[fraction_to_json(x) for x in v.point] for v in poly.vertices],
        "bounded": poly.bounded,
        "simple": poly.simple,
        "delzant": ok,
        "delzant_witness": witness,
        "asymptotic_cone": [list(g) for g in cone.generators],
        "lambda_generators": [list(g) for g in cone.dual().generators],
    }
    if args.b:
        b = _vector(args.b, poly.dim)
        report["b"] = b.tolist()
        report["b_in_lambda"] = in_lambda(b, poly)
        if not poly.bounded:
            report["comparability"] = comparability_constants(poly, b).to_json()
    _emit(report, args.out)
    return 0


def cmd_soliton(args) -> int:
    poly = _polytope(args)
    start = _vector(args.start, poly.dim) if args.start else None
    cert = find_soliton_vector(poly, tol=args.tol, max_iter=args.max_iter, start=start)
    _emit(cert.to_json(), args.out)
    return 0


def cmd_wvol(args) -> int:
    poly = _polytope(args)
    b = _vector(args.b, poly.dim)
    report = weighted_volume(build_model(poly), b).to_json()
    if args.mc:
        mc = mc_weighted_volume(poly, b, samples=args.samples, seed=args.seed)
        report["mc"] = {"estimate": mc.estimate, "standard_error": mc.standard_error, "tail_bound": mc.tail_bound}
    _emit(report, args.out)
    return 0


def cmd_benchmark(args) -> int:
    grid = benchmarks.default_orbit_grid(args.n, args.h, args.lower, args.upper)
    if args.kind == "soliton":
        phi = benchmarks.soliton_potential(grid)
    else:
        phi = benchmarks.bumped_potential(grid, args.eps)
    phi.save(args.out)
    return 0


def cmd_solve_path(args) -> int:
    poly = _polytope(args)
    phi0 = _potential(args.phi0)
    if phi0.n != poly.dim:
        raise InputError("potential and polytope dimensions differ")
    b = _soliton_b(args, poly)
    F = calibrate_F(ma_data_F(phi0, b), phi0, b)
    if args.aubin_t is not None:
        sol = solve_aubin(phi0, b, F, args.aubin_t, tol=args.tol)
    else:
        sol = solve_star_path(phi0, b, F, s_steps=args.steps, tol=args.tol)
    table = sol.residual_csv()
    _emit({"b": b.tolist(), "F": F.to_json(), "solution": sol.to_json(), "residual_csv": table}, args.out)
    csv_path = args.csv or str(Path(args.out).with_suffix(".csv"))
    Path(csv_path).write_text(table, encoding="utf-8")
    return 0


def cmd_functionals(args) -> int:
    poly = _polytope(args)
    phi0, phi1 = _potential(args.phi0), _potential(args.phi1)
    if phi0.grid != phi1.grid:
        raise InputError("phi0 and phi1 must live on the same grid")
    if phi0.n != poly.dim:
        raise InputError("potential and polytope dimensions differ")
    b = _soliton_b(args, poly)
    J = J_functional(make_path(phi0, phi1, args.path, args.steps), b)
    I = I_functional(phi0, phi1, b)
    target = default_polytope_grid([phi0, phi1], b, args.polytope_h or phi0.h / 5)
    report = {
        "b": b.tolist(),
        "I": I,
        "J": J,
        "I_minus_J": I - J,
        "F_hat": F_hat(phi0, phi1, b, target),
        "F_hat_alt": F_hat_alt(phi0, phi1, b, args.steps, args.path),
        "polytope_grid": target.to_json(),
    }
    if args.torus_factor:
        factor = (2 * np.pi) ** phi0.n
        for key in ("I", "J", "I_minus_J", "F_hat", "F_hat_alt"):
            report[key] *= factor
    report["torus_factor"] = bool(args.torus_factor)
    _emit(report, args.out)
    return 0


def cmd_verify(args) -> int:
    names = SUITES if args.suite == "all" else (args.suite,)
    report = run_suite(names, args.seed)
    _emit(report, args.out)
    return 0


# --- parser ------------------------------------------------------------------


def _add_polytope(p, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--polytope", help="polyhedron JSON (halfspaces) or fan JSON")
    g.add_argument("--fan", help="fan JSON (rays) or polyhedron JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsl", description="Toric shrinking Kähler-Ricci soliton computations.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="polytope summary")
    _add_polytope(p)
    p.add_argument("--b", help="comma-separated weight vector for the comparability constants")
    p.add_argument("--out")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("soliton", help="soliton vector as minimiser of the weighted volume")
    _add_polytope(p)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--start", help="comma-separated starting vector")
    p.add_argument("--out")
    p.set_defaults(func=cmd_soliton)

    p = sub.add_parser("wvol", help="weighted volume with gradient and Hessian")
    _add_polytope(p)
    p.add_argument("--b", required=True)
    p.add_argument("--mc", action="store_true", help="add a Monte Carlo estimate")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_wvol)

    p = sub.add_parser("benchmark", help="write a benchmark Kähler potential (phi* or phi* + eps bump)")
    p.add_argument("--kind", choices=("soliton", "bump"), default="bump")
    p.add_argument("--n", type=int, choices=(1, 2), default=1)
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--lower", type=float, default=-5.0)
    p.add_argument("--upper", type=float, default=1.4)
    p.add_argument("--eps", type=float, default=benchmarks.BUMP_EPS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("solve-path", help="continuation path for the real Monge-Ampere equation")
    p.add_argument("--phi0", required=True)
    _add_polytope(p)
    p.add_argument("--b", help="override the soliton vector")
    p.add_argument("--aubin-t", type=float, help="solve the Aubin path at this t instead")
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="residual table path (default: --out with .csv)")
    p.set_defaults(func=cmd_solve_path)

    p = sub.add_parser("functionals", help="I, J and F-hat between two potentials")
    p.add_argument("--phi0", required=True)
    p.add_argument("--phi1", required=True)
    _add_polytope(p)
    p.add_argument("--b", help="override the soliton vector")
    p.add_argument("--path", choices=("linear", "smoothstep"), default="linear")
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--polytope-h", type=float, help="polytope grid spacing (default h/5)")
    p.add_argument("--torus-factor", action="store_true", help="multiply by (2 pi)^n")
    p.add_argument("--out")
    p.set_defaults(func=cmd_functionals)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--suite", choices=("all",) + SUITES, default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def _check_ranges(args) -> None:
    for name in ("tol", "samples", "steps", "h", "max_iter", "polytope_h"):
        v = getattr(args, name, None)
        if v is not None and v <= 0:
            raise InputError(f"--{name.replace('_', '-')} must be positive")
    if getattr(args, "steps", None) is not None and args.command == "functionals" and args.steps < 2:
        raise InputError("--steps must be at least 2")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    threads = os.environ.get("TSL_THREADS")
    try:
        limit = int(threads) if threads else None
    except ValueError:
        print(f"error: TSL_THREADS={threads!r} is not an integer", file=sys.stderr)
        return 1
    try:
        _check_ranges(args)
        with threadpool_limits(limits=limit):
            return args.func(args)
    except SOLVER_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (InputError, ToricSolitonError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
