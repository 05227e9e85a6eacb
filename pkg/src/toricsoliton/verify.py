"""Invariant suite behind ``tsl verify``.

Every check records a value, a threshold and a verdict.  Randomised checks
draw from a single seeded generator per suite, so a fixed seed gives an
identical report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .benchmarks import (
    BUMP_EPS,
    bump,
    bumped_potential,
    default_orbit_grid,
    random_bump_pair,
    random_polygon,
    soliton_grad,
    soliton_potential,
    soliton_u,
)
from .functionals import (
    F_hat,
    F_hat_alt,
    I_functional,
    J_functional,
    default_polytope_grid,
    linear_path,
    orbit_lp,
    smoothstep_path,
    weighted_lp_gradient,
)
from .grids import Grid
from .masolve import residual_realMA, residual_star0, solve_star_path, weighted_mean
from .polyhedra import Polyhedron, asymptotic_cone, is_delzant
from .potentials import MAData, calibrate_F, guillemin_potential, legendre_transform, ma_data_F
from .soliton import check_comparability, comparability_constants, find_soliton_vector
from .toric import anticanonical_polytope, standard_fans
from .wvol import build_model, mc_weighted_volume, weighted_volume

SUITES = ("polyhedra", "wvol", "soliton", "potentials", "masolve", "functionals")


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "value": self.value, "threshold": self.threshold, "passed": self.passed}


def _le(name, value, threshold) -> Check:
    return Check(name, float(value), float(threshold), bool(value <= threshold))


def _rel(a, b) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _poly(name: str) -> Polyhedron:
    return anticanonical_polytope(standard_fans()[name])


def lp_two_charts(h: float, nodes: int, xi_range=(-2.0, 2.2), p: float = 1.0) -> tuple[float, float]:
    """Both sides of int |xi|^p dmu(phi*) = int |grad u*|^p e^{-x} dx over matching regions.

    The orbit side integrates over ``xi_range``; the polytope side over its
    image under grad phi*, with u* obtained by the discrete Legendre transform
    of phi* sampled on [-6, 3].
    """
    lo, hi = xi_range
    orbit = orbit_lp(soliton_potential(Grid.from_bounds([lo], [hi], h)), [1.0], p)
    xa, xb = float(soliton_grad(np.array(lo))), float(soliton_grad(np.array(hi)))
    target = Grid((xa,), (xb - xa) / nodes, (nodes + 1,))
    u = legendre_transform(soliton_potential(default_orbit_grid(1, h)), target)
    return orbit, weighted_lp_gradient(u, [1.0], p)


def suite_polyhedra(rng: np.random.Generator) -> list[Check]:
    out = []
    expected = {"C": 1, "CP1": 2, "C2": 1, "CxCP1": 2, "blowup_C2": 2, "CP2": 3, "O(-2)_CP1": 1}
    for name, count in expected.items():
        poly = _poly(name)
        out.append(_le(f"vertex_count[{name}]", abs(len(poly.vertices) - count), 0))
        ok, _ = is_delzant(poly)
        out.append(_le(f"delzant[{name}]", float(ok != (name != "O(-2)_CP1")), 0))
        cone = asymptotic_cone(poly)
        out.append(_le(f"bidual[{name}]", float(not cone.dual().dual().same_as(cone)), 0))
        again = Polyhedron.from_json(poly.to_json())
        out.append(_le(f"json_roundtrip[{name}]", float(again.to_json() != poly.to_json()), 0))
    for k in range(3):
        poly, _ = random_polygon(rng)
        pts = rng.normal(size=(200, 2)) * 3
        inside = poly.contains_points(pts)
        exact = [poly.contains(p) for p in pts]
        out.append(_le(f"membership[random {k}]", float(np.sum(inside != np.array(exact))), 0))
    return out


def suite_wvol(rng: np.random.Generator) -> list[Check]:
    out = []
    ev = weighted_volume(build_model(_poly("CP1")), [0.0])
    out.append(_le("F(CP1, 0) = 4 pi", _rel(ev.value, 4 * math.pi), 1e-12))
    ev = weighted_volume(build_model(_poly("C")), [1.0])
    out.append(_le("F(C, 1) = 2 pi e", _rel(ev.value, 2 * math.pi * math.e), 1e-12))
    for k in range(3):
        poly, b = random_polygon(rng)
        model = build_model(poly)
        ev = weighted_volume(model, b)
        mc = mc_weighted_volume(poly, b, samples=200_000, seed=int(rng.integers(2**31)))
        out.append(_le(f"mc_sigma[random {k}]", abs(ev.value - mc.estimate) / mc.standard_error, 3.0))
        d = 1e-5
        fd = np.array(
            [(weighted_volume(model, b + d * e).value - weighted_volume(model, b - d * e).value) / (2 * d) for e in np.eye(2)]
        )
        out.append(_le(f"fd_gradient[random {k}]", np.max(np.abs(fd - ev.gradient)) / np.max(np.abs(ev.gradient)), 1e-6))
    return out


def suite_soliton(rng: np.random.Generator) -> list[Check]:
    out = []
    for name, target in (("C", [1.0]), ("C2", [1.0, 1.0]), ("CP1", [0.0]), ("CxCP1", [1.0, 0.0])):
        cert = find_soliton_vector(_poly(name))
        out.append(_le(f"b_X[{name}]", np.max(np.abs(cert.b_X - target)), 1e-8))
    poly = _poly("C2")
    model = build_model(poly)
    for k in range(3):
        start = rng.uniform(0.2, 3.0, size=2)
        cert = find_soliton_vector(poly, start=start, model=model)
        out.append(_le(f"restart[C2 {k}]", np.max(np.abs(cert.b_X - 1.0)), 1e-8))
    poly = _poly("C")
    bound = comparability_constants(poly, [1.0])
    out.append(_le("comparability (C, R) = (4, 4)", max(abs(bound.C - 4), abs(bound.R - 4)), 1e-12))
    ok = check_comparability(poly, [1.0], bound, count=1000, seed=int(rng.integers(2**31)))
    out.append(_le("comparability samples", float(not ok), 0))
    return out


def suite_potentials(rng: np.random.Generator) -> list[Check]:
    out = []
    grid = default_orbit_grid(1, 0.01)
    phi = soliton_potential(grid)
    target = Grid.from_bounds([-0.999], [5.0], 0.001)
    u = legendre_transform(phi, target)
    err = np.max(np.abs(u.values - soliton_u(target.nodes())))
    out.append(_le("legendre(phi*) vs u*", err, 1e-5))
    uP = guillemin_potential(_poly("C"), target)
    out.append(_le("(u* - u_P)(-1+) = 1/2", abs(u.values[0] - uP.values[0] - 0.5), 1e-3))
    res = [residual_realMA(soliton_potential(default_orbit_grid(1, h)), [1.0]) for h in (0.02, 0.01)]
    out.append(_le("residual_realMA halving ratio - 4", abs(res[0] / res[1] - 4), 0.8))
    F = calibrate_F(ma_data_F(bumped_potential(grid), [1.0]), bumped_potential(grid), [1.0])
    mu = np.exp(-bumped_potential(grid).gradient()[..., 0]) * bumped_potential(grid).hessian()[..., 0, 0]
    out.append(_le("calibration int (e^F - 1) dmu", abs(grid.integrate(np.expm1(F.F_values) * mu)), 1e-10))
    return out


def suite_masolve(rng: np.random.Generator) -> list[Check]:
    out = []
    grid = Grid.from_bounds([-5.0], [1.4], 0.04)
    phi_star = soliton_potential(grid)
    sol = solve_star_path(phi_star, [1.0], MAData(np.zeros(grid.shape)))
    out.append(_le("trivial data max |psi|", max(np.max(np.abs(p)) for p in sol.psi), 1e-10))
    phi0 = bumped_potential(grid, BUMP_EPS)
    F = calibrate_F(ma_data_F(phi0, [1.0]), phi0, [1.0])
    sol = solve_star_path(phi0, [1.0], F)
    out.append(_le("bump path max residual", max(sol.residuals), 1e-7))
    out.append(_le("bump path (*_0) residual", residual_star0(phi0, sol.psi[-1], F, [1.0]), 1e-7))
    out.append(_le("bump path |mean psi|", max(abs(weighted_mean(sol, k)) for k in range(len(sol.psi))), 1e-10))
    return out


def suite_functionals(rng: np.random.Generator) -> list[Check]:
    out = []
    b = [1.0]
    grid = default_orbit_grid(1, 0.01)
    worst = math.inf
    for _ in range(5):
        p0, p1 = random_bump_pair(rng, grid)
        worst = min(worst, I_functional(p0, p1, b) - J_functional(linear_path(p0, p1, 40), b))
    out.append(Check("min (I - J) on random pairs", float(worst), -1e-10, bool(worst >= -1e-10)))
    phi0 = soliton_potential(grid)
    phi1 = phi0.with_values(phi0.values + 0.5 * BUMP_EPS * bump(grid.nodes()))
    J1 = J_functional(linear_path(phi0, phi1, 640), b)
    J2 = J_functional(smoothstep_path(phi0, phi1, 640), b)
    out.append(_le("J path independence", _rel(J2, J1), 1e-4))
    target = default_polytope_grid([phi0, phi1], b, 0.002)
    out.append(_le("F_hat two formulas", _rel(F_hat(phi0, phi1, b, target), F_hat_alt(phi0, phi1, b, 40)), 1e-4))
    orbit, poly = lp_two_charts(0.005, 40000)
    out.append(_le("Lp change of variables", _rel(poly, orbit), 1e-4))
    return out


def run_suite(names, seed: int) -> dict:
    report = {"seed": seed, "suites": {}}
    for name in names:
        rng = np.random.default_rng([seed, SUITES.index(name)])
        checks = globals()[f"suite_{name}"](rng)
        report["suites"][name] = {"passed": all(c.passed for c in checks), "checks": [c.to_json() for c in checks]}
    report["passed"] = all(s["passed"] for s in report["suites"].values())
    return report
