"""Closed-form potentials used as test data.

The one-dimensional shrinking soliton on C (polytope [-1, oo), b = 1) has
Kähler potential ``e^{2 xi}/4 - xi - 1/2``; its Legendre transform is known in
closed form too.  Products give the soliton on C^2 with b = (1, 1).
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyPolyhedron
from .grids import Grid, GridPotential, sample
from .polyhedra import HalfSpace, Polyhedron, asymptotic_cone, make_polyhedron, primitive

BUMP_EPS = 0.05
BUMP_CENTER = 0.0
BUMP_WIDTH = 0.5


def soliton_phi(xi: np.ndarray) -> np.ndarray:
    """Exact soliton potential, summed over coordinates; ``xi`` has shape (..., n)."""
    return np.sum(np.exp(2 * xi) / 4 - xi - 0.5, axis=-1)


def soliton_grad(xi: np.ndarray) -> np.ndarray:
    return np.exp(2 * xi) / 2 - 1


def soliton_u(x: np.ndarray) -> np.ndarray:
    """Legendre transform of :func:`soliton_phi` on {x_i > -1}."""
    y = x + 1
    return np.sum(0.5 * y * np.log(2 * y) - y / 2 + 0.5, axis=-1)


def bump(xi: np.ndarray, center: float = BUMP_CENTER, width: float = BUMP_WIDTH) -> np.ndarray:
    return np.exp(-np.sum((xi - center) ** 2, axis=-1) / width**2)


def soliton_potential(grid: Grid) -> GridPotential:
    return sample("orbit", grid, soliton_phi)


def bumped_potential(grid: Grid, eps: float = BUMP_EPS, **kw) -> GridPotential:
    """phi* + eps * bump: a convex potential that is not a soliton."""
    return sample("orbit", grid, lambda xi: soliton_phi(xi) + eps * bump(xi, **kw))


def default_orbit_grid(n: int = 1, h: float = 0.01, lower: float = -6.0, upper: float = 3.0) -> Grid:
    return Grid.from_bounds([lower] * n, [upper] * n, h)


def random_polygon(rng: np.random.Generator, max_tries: int = 1000) -> tuple[Polyhedron, np.ndarray]:
    """A random simple, line-free polygon containing the origin, with an admissible b.

    Normals are primitive with entries in [-3, 3], offsets integers in [-3, -1].
    Bounded polygons get a small random b; unbounded ones get the sum of the
    unit dual-cone generators, scaled to [0.5, 1.5].
    """
    for _ in range(max_tries):
        k = int(rng.integers(3, 7))
        normals = set()
        while len(normals) < k:
            v = tuple(int(c) for c in rng.integers(-3, 4, size=2))
            if v != (0, 0):
                normals.add(primitive(v))
        hs = [HalfSpace(nv, -int(rng.integers(1, 4))) for nv in sorted(normals)]
        try:
            poly = make_polyhedron(hs, dim=2)
        except EmptyPolyhedron:
            continue
        if not poly.line_free or not poly.simple or len(poly.vertices) < 1:
            continue
        if poly.bounded:
            b = rng.uniform(-1.0, 1.0, size=2)
        else:
            dual = np.array(asymptotic_cone(poly).dual().generators, dtype=float)
            if np.linalg.matrix_rank(dual) < 2:
                continue  # admissible cone empty
            b = (dual / np.linalg.norm(dual, axis=1)[:, None]).sum(axis=0)
            b *= rng.uniform(0.5, 1.5) / np.linalg.norm(b)
        return poly, b
    raise RuntimeError("no admissible random polygon found")


def random_bump_pair(rng: np.random.Generator, grid: Grid, max_tries: int = 100) -> tuple[GridPotential, GridPotential]:
    """Two convex perturbations phi* + a bump(c, w) with |a| <= 0.05, w >= 0.5, c in [-2, 1]^n."""
    out = []
    while len(out) < 2:
        for _ in range(max_tries):
            a = rng.uniform(-0.05, 0.05)
            c = rng.uniform(-2.0, 1.0, size=grid.ndim)
            w = rng.uniform(0.5, 1.0)
            phi = sample("orbit", grid, lambda xi: soliton_phi(xi) + a * bump(xi, c, w))
            if phi.is_convex():
                out.append(phi)
                break
        else:
            raise RuntimeError("no convex perturbation found")
    return out[0], out[1]
