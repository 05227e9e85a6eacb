import numpy as np
import pytest

from toricsoliton.grids import (
    Grid,
    GridPotential,
    d1,
    d2,
    gradient,
    hessian,
    hessian_det,
    hessian_inverse,
    interior_operators,
    positive_definite,
    sample,
    weighted_density,
)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((0.0,), 0.1, (3,))
    with pytest.raises(ValueError):
        Grid((0.0, 0.0, 0.0), 0.1, (5, 5, 5))
    with pytest.raises(ValueError):
        Grid((0.0,), -0.1, (10,))


def test_from_bounds_and_refine():
    g = Grid.from_bounds([-1.0, 0.0], [1.0, 2.0], 0.25)
    assert g.shape == (9, 9)
    assert g.upper == pytest.approx((1.0, 2.0))
    r = g.refined()
    assert r.h == 0.125 and r.shape == (17, 17)
    assert r.nodes()[::2, ::2] == pytest.approx(g.nodes())


def test_quadratics_differentiated_exactly():
    g = Grid.from_bounds([-1.0, -1.0], [1.0, 1.5], 0.1)
    x = g.nodes()
    f = 3 * x[..., 0] ** 2 - 2 * x[..., 0] * x[..., 1] + 0.5 * x[..., 1] ** 2 + x[..., 1]
    G = gradient(f, g.h)
    assert G[..., 0] == pytest.approx(6 * x[..., 0] - 2 * x[..., 1], abs=1e-10)
    assert G[..., 1] == pytest.approx(-2 * x[..., 0] + x[..., 1] + 1, abs=1e-10)
    H = hessian(f, g.h)
    assert H[..., 0, 0] == pytest.approx(6.0, abs=1e-8)
    assert H[..., 1, 1] == pytest.approx(1.0, abs=1e-8)
    assert H[..., 0, 1] == pytest.approx(-2.0, abs=1e-8)


def test_second_order_convergence_including_edges():
    errs = []
    for h in (0.01, 0.005):
        g = Grid.from_bounds([0.0], [1.0], h)
        x = g.axes()[0]
        errs.append((np.max(np.abs(d1(np.sin(3 * x), h, 0) - 3 * np.cos(3 * x))),
                     np.max(np.abs(d2(np.sin(3 * x), h, 0) + 9 * np.sin(3 * x)))))
    for k in range(2):
        assert 3.5 < errs[0][k] / errs[1][k] < 4.5


def test_hessian_helpers():
    H = np.array([[[2.0, 1.0], [1.0, 3.0]], [[1.0, 2.0], [2.0, 1.0]]])
    assert hessian_det(H) == pytest.approx([5.0, -3.0])
    assert positive_definite(H).tolist() == [True, False]
    assert hessian_inverse(H)[0] == pytest.approx(np.linalg.inv(H[0]))


def test_interior_operators_match_stencils():
    g = Grid.from_bounds([0.0, 0.0], [1.0, 0.8], 0.1)
    x = g.nodes()
    f = np.exp(x[..., 0]) * np.cos(x[..., 1])
    f[0, :] = f[-1, :] = f[:, 0] = f[:, -1] = 0.0  # operators assume zero boundary values
    ops = interior_operators(g.shape, g.h)
    inner = f[1:-1, 1:-1].ravel()
    H = hessian(f, g.h)[1:-1, 1:-1]
    G = gradient(f, g.h)[1:-1, 1:-1]
    assert (ops["d00"] @ inner) == pytest.approx(H[..., 0, 0].ravel())
    assert (ops["d11"] @ inner) == pytest.approx(H[..., 1, 1].ravel())
    assert (ops["d01"] @ inner) == pytest.approx(H[..., 0, 1].ravel())
    assert (ops["d0"] @ inner) == pytest.approx(G[..., 0].ravel())
    assert (ops["d1"] @ inner) == pytest.approx(G[..., 1].ravel())


def test_integrate_and_weights():
    g = Grid.from_bounds([0.0, 0.0], [1.0, 2.0], 0.05)
    x = g.nodes()
    f = x[..., 0] * x[..., 1]
    assert g.integrate(f) == pytest.approx(1.0, rel=1e-12)
    assert np.sum(g.weights() * f) == pytest.approx(g.integrate(f), rel=1e-14)


def test_potential_immutable_and_roundtrip(tmp_path):
    g = Grid.from_bounds([-1.0], [1.0], 0.1)
    p = sample("orbit", g, lambda x: np.sum(x**2, axis=-1))
    with pytest.raises(ValueError):
        p.values[0] = 1.0
    path = tmp_path / "p.json"
    p.save(path)
    q = GridPotential.load(path)
    assert q.grid == p.grid and np.array_equal(q.values, p.values)
    assert (p + 1.0).values == pytest.approx(p.values + 1.0)
    assert p.is_convex()
    assert not p.with_values(-p.values).is_convex()
    with pytest.raises(ValueError):
        GridPotential("moon", g, p.values)
    with pytest.raises(ValueError):
        GridPotential("orbit", g, np.full(g.shape, np.nan))


def test_weighted_density_of_quadratic():
    g = Grid.from_bounds([-1.0], [1.0], 0.1)
    p = sample("orbit", g, lambda x: np.sum(x**2, axis=-1))
    assert weighted_density(p, [1.0]) == pytest.approx(2 * np.exp(-2 * g.axes()[0]))
