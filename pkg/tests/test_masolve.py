import json

import numpy as np
import pytest

from toricsoliton.benchmarks import bumped_potential, default_orbit_grid, soliton_potential
from toricsoliton.errors import ConvexityLost, NewtonDiverged
from toricsoliton.grids import Grid, sample
from toricsoliton.masolve import (
    PathSolution,
    data_family,
    residual_realMA,
    residual_realMA2,
    residual_star0,
    residual_star_s,
    save_solution,
    solve_aubin,
    solve_star_path,
    weighted_mean,
)
from toricsoliton.potentials import MAData, calibrate_F, ma_data_F

B = [1.0]


@pytest.fixture(scope="module")
def bump_problem():
    grid = Grid.from_bounds([-5.0], [1.4], 0.02)
    phi0 = bumped_potential(grid)
    F = calibrate_F(ma_data_F(phi0, B), phi0, B)
    return phi0, F


@pytest.fixture(scope="module")
def bump_solution(bump_problem):
    phi0, F = bump_problem
    return solve_star_path(phi0, B, F)


def test_data_family_endpoints():
    F = MAData(np.array([-1.0, 0.0, 2.0]))
    assert np.all(data_family(F, 0.0).F_s == 0.0)
    assert data_family(F, 1.0).F_s == pytest.approx(F.F_values, abs=1e-15)
    mid = data_family(F, 0.5).F_s
    assert mid == pytest.approx(np.log(0.5 + 0.5 * np.exp(F.F_values)))
    with pytest.raises(ValueError):
        data_family(F, 1.5)


def test_trivial_data_gives_zero():
    grid = Grid.from_bounds([-5.0], [1.4], 0.04)
    sol = solve_star_path(soliton_potential(grid), B, MAData(np.zeros(grid.shape)))
    assert max(np.max(np.abs(p)) for p in sol.psi) <= 1e-10
    assert sol.parameter_grid == [k / 20 for k in range(21)]


def test_bump_path_converges(bump_problem, bump_solution):
    phi0, F = bump_problem
    sol = bump_solution
    assert len(sol.psi) == 21
    assert max(sol.residuals) <= 1e-9
    assert residual_star0(phi0, sol.psi[-1], F, B) <= 1e-7
    for k in (5, 10, 20):
        assert residual_star_s(sol, k, F) <= 1e-7
    assert max(abs(weighted_mean(sol, k)) for k in range(21)) <= 1e-12
    for k in range(21):
        d = sol.psi_dirichlet(k)
        assert d[0] == pytest.approx(0.0, abs=1e-14) and d[-1] == pytest.approx(0.0, abs=1e-14)
        assert sol.phi(k).is_convex()


def test_cold_start_agrees(bump_problem, bump_solution):
    phi0, F = bump_problem
    cold = solve_star_path(phi0, B, F, s_steps=4, warm_start=False)
    assert np.max(np.abs(cold.psi[-1] - bump_solution.psi[-1])) < 1e-8


def test_endpoint_equation_directly(bump_problem, bump_solution):
    # (*_0) with the calibrated data reads log det phi1 - <b, grad phi1> = -2 phi0 + c0
    phi0, F = bump_problem
    phi1 = bump_solution.phi(-1)
    m = phi0.grid.interior_mask(10)
    lhs = np.log(phi1.hessian()[..., 0, 0]) - phi1.gradient()[..., 0]
    assert np.max(np.abs(lhs - (-2 * phi0.values + F.c0))[m]) < 1e-6


def test_json_and_csv(tmp_path, bump_solution):
    path, csv_path = tmp_path / "sol.json", tmp_path / "sol.csv"
    save_solution(bump_solution, path, csv_path)
    again = PathSolution.from_json(json.loads(path.read_text()))
    assert np.array_equal(again.psi[-1], bump_solution.psi[-1])
    assert again.parameter_grid == bump_solution.parameter_grid
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "s,residual,I,J,norm_constant,iterations"
    assert len(lines) == 22
    rows = [list(map(float, line.split(",")[:4])) for line in lines[1:]]
    assert rows[0][2] == 0.0 and rows[0][3] == 0.0
    assert all(r[2] - r[3] >= -1e-10 for r in rows)


def test_aubin_small_t(bump_problem, bump_solution):
    phi0, F = bump_problem
    a0 = solve_aubin(phi0, B, F, 0.0)
    assert np.max(np.abs(a0.psi[0] - bump_solution.psi_dirichlet(-1))) < 1e-9
    dist = []
    for t in (0.05, 0.02, 0.01):
        sol = solve_aubin(phi0, B, F, t)
        assert sol.residuals[0] <= 1e-7
        dist.append(np.max(np.abs(sol.psi[0] - a0.psi[0])))
    assert dist[0] > dist[1] > dist[2] > 0


def test_aubin_range_and_failure(bump_problem):
    phi0, F = bump_problem
    with pytest.raises(ValueError):
        solve_aubin(phi0, B, F, 0.3)
    with pytest.raises(NewtonDiverged) as info:
        solve_aubin(phi0, B, F, 0.15)
    assert info.value.s is not None


def test_residual_realMA_second_order():
    res = [residual_realMA(soliton_potential(default_orbit_grid(1, h)), B) for h in (0.02, 0.01, 0.005)]
    slopes = np.diff(np.log(res)) / np.diff(np.log([0.02, 0.01, 0.005]))
    assert np.all((slopes > 1.8) & (slopes < 2.2))


def test_residual_realMA2_on_exact_symplectic_potential():
    from toricsoliton.benchmarks import soliton_u

    res = []
    for h in (0.02, 0.01, 0.005):
        u = sample("polytope", Grid.from_bounds([-0.9], [5.0], h), soliton_u)
        res.append(residual_realMA2(u, B))
    assert 3.5 < res[0] / res[1] < 4.5 and 3.5 < res[1] / res[2] < 4.5


def test_residual_requires_convexity():
    phi = soliton_potential(default_orbit_grid(1, 0.05))
    with pytest.raises(ConvexityLost):
        residual_realMA(phi.with_values(-phi.values), B)


def test_two_dimensional_small():
    grid = Grid.from_bounds([-4.0, -4.0], [1.2, 1.2], 0.2)
    phi0 = bumped_potential(grid)
    F = calibrate_F(ma_data_F(phi0, [1.0, 1.0]), phi0, [1.0, 1.0])
    sol = solve_star_path(phi0, [1.0, 1.0], F, s_steps=5)
    assert max(sol.residuals) <= 1e-9
    assert residual_star0(phi0, sol.psi[-1], F, [1.0, 1.0], margin=3) <= 1e-7
    # the bump is symmetric, so is the solution
    assert np.max(np.abs(sol.psi[-1] - sol.psi[-1].T)) < 1e-10
