import numpy as np
import pytest

from toricsoliton.benchmarks import (
    bumped_potential,
    default_orbit_grid,
    soliton_potential,
    soliton_u,
)
from toricsoliton.errors import ConvexityLost, GridTouchesBoundary, HypothesisFailed, TargetOutsideImage
from toricsoliton.grids import Grid, sample
from toricsoliton.polyhedra import HalfSpace, make_polyhedron
from toricsoliton.potentials import (
    MAData,
    calibrate_F,
    calibration_measure,
    growth_check,
    guillemin_potential,
    legendre_transform,
    ma_data_F,
    moment_image_check,
)


def test_guillemin_half_line(polys):
    g = Grid.from_bounds([-0.9], [3.0], 0.1)
    u = guillemin_potential(polys["C"], g)
    x = g.axes()[0]
    assert u.values == pytest.approx(0.5 * (x + 1) * np.log(x + 1), rel=1e-14, abs=1e-15)
    assert u.side == "polytope"


def test_guillemin_rejects_facet_contact(polys):
    with pytest.raises(GridTouchesBoundary):
        guillemin_potential(polys["C"], Grid.from_bounds([-1.0], [1.0], 0.1))
    with pytest.raises(GridTouchesBoundary):
        guillemin_potential(polys["C"], Grid.from_bounds([-0.96], [1.04], 0.1))


def test_guillemin_square_is_separable():
    sq = make_polyhedron([HalfSpace(n, -1) for n in [(1, 0), (-1, 0), (0, 1), (0, -1)]])
    g = Grid.from_bounds([-0.9, -0.9], [0.9, 0.9], 0.1)
    u = guillemin_potential(sq, g)
    x = g.nodes()
    one = lambda t: 0.5 * ((1 + t) * np.log(1 + t) + (1 - t) * np.log(1 - t))  # noqa: E731
    assert u.values == pytest.approx(one(x[..., 0]) + one(x[..., 1]), abs=1e-14)


def test_legendre_of_quadratic():
    g = Grid.from_bounds([-3.0, -3.0], [3.0, 3.0], 0.05)
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    p = sample("orbit", g, lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, A, x))
    target = Grid.from_bounds([-1.0, -1.0], [1.0, 1.0], 0.1)
    u = legendre_transform(p, target)
    y = target.nodes()
    exact = 0.5 * np.einsum("...i,ij,...j->...", y, np.linalg.inv(A), y)
    assert np.max(np.abs(u.values - exact)) < 1e-10  # the Newton polish is exact on quadratics


def test_legendre_of_soliton_converges():
    errs = []
    for h in (0.02, 0.01, 0.005):
        phi = soliton_potential(default_orbit_grid(1, h))
        target = Grid.from_bounds([-0.99], [5.0], 0.01)
        u = legendre_transform(phi, target)
        errs.append(np.max(np.abs(u.values - soliton_u(target.nodes()))))
    # cubic-spline Newton polish: fourth order in h
    assert errs[2] < 1e-9
    assert 12 < errs[0] / errs[1] < 20 and 12 < errs[1] / errs[2] < 20


def test_legendre_involution():
    phi = soliton_potential(default_orbit_grid(1, 0.0025))
    target = Grid.from_bounds([-0.995], [6.0], 0.0025)
    u = legendre_transform(phi, target)
    back = legendre_transform(u, Grid.from_bounds([-1.9], [1.2], 0.01))
    xi = back.grid.nodes()
    assert np.max(np.abs(back.values - (np.exp(2 * xi[..., 0]) / 4 - xi[..., 0] - 0.5))) < 1e-6


def test_legendre_errors():
    phi = soliton_potential(default_orbit_grid(1, 0.01))
    with pytest.raises(TargetOutsideImage):
        legendre_transform(phi, Grid.from_bounds([-1.5], [0.0], 0.1))
    with pytest.raises(TargetOutsideImage):
        legendre_transform(phi, Grid.from_bounds([0.0], [500.0], 1.0))
    bad = phi.with_values(-phi.values)
    with pytest.raises(ConvexityLost):
        legendre_transform(bad, Grid.from_bounds([0.0], [1.0], 0.1))
    with pytest.raises(ValueError):
        legendre_transform(phi, Grid.from_bounds([0.0, 0.0], [1.0, 1.0], 0.1))


def test_ma_data_vanishes_on_soliton():
    res = []
    for h in (0.02, 0.01):
        phi = soliton_potential(default_orbit_grid(1, h))
        F = ma_data_F(phi, [1.0])
        # F is O(h^2 e^{2 xi}); compare on xi <= 1 where it is small
        res.append(np.max(np.abs(F.F_values[phi.grid.axes()[0] <= 1.0])))
    assert res[1] < 1e-3
    assert 3.5 < res[0] / res[1] < 4.5


def test_ma_data_requires_convexity():
    phi = soliton_potential(default_orbit_grid(1, 0.05))
    with pytest.raises(ConvexityLost):
        ma_data_F(phi.with_values(-phi.values), [1.0])


def test_calibration_normalises():
    grid = default_orbit_grid(1, 0.01)
    phi = bumped_potential(grid)
    F = ma_data_F(phi, [1.0])
    cal = calibrate_F(F, phi, [1.0])
    mu = calibration_measure(phi, [1.0])
    assert abs(grid.integrate(np.expm1(cal.F_values) * mu)) < 1e-12
    again = calibrate_F(cal, phi, [1.0])
    assert abs(again.c0 - cal.c0) < 1e-14
    shifted = calibrate_F(MAData(F.F_values + 3.0), phi, [1.0])
    assert shifted.F_values == pytest.approx(cal.F_values, abs=1e-12)


def test_moment_image(polys):
    phi = soliton_potential(default_orbit_grid(1, 0.01))
    rep = moment_image_check(phi, polys["C"])
    assert rep.ok
    assert rep.facets[0].attained
    assert rep.max_slack < 1e-2
    assert moment_image_check(phi, None).ok
    shifted = phi.with_values(phi.values - 0.2 * phi.grid.axes()[0])  # image starts at -1.2
    assert not moment_image_check(shifted, polys["C"]).ok
    assert moment_image_check(phi, polys["C"]).to_json()["ok"]


def test_growth(polys):
    phi = soliton_potential(default_orbit_grid(1, 0.01))
    C, ok = growth_check(phi, polys["C"])
    assert ok and np.isfinite(C)
    xi = phi.grid.axes()[0]
    assert np.all(phi.values >= np.abs(xi) / C - C)
    assert np.any(phi.values < np.abs(xi) / (0.99 * C) - 0.99 * C)
    _, ok = growth_check(phi.with_values(-phi.values), polys["C"])
    assert not ok
    with pytest.raises(HypothesisFailed):
        growth_check(phi, make_polyhedron([HalfSpace((1,), 0)]))
