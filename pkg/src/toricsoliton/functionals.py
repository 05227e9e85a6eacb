"""Weighted energies I, J, F-hat and Legendre-side weighted norms.

All values are reported without the (2 pi)^n torus factor; pass
``torus_factor=True`` where offered to restore it.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import ConvexityLost
from .grids import Grid, GridPotential, positive_definite, weighted_density
from .potentials import legendre_transform


def _density(phi: GridPotential, b) -> np.ndarray:
    if not np.all(positive_definite(phi.hessian())):
        raise ConvexityLost("potential is not convex")
    return weighted_density(phi, b)


def _factor(n: int, torus_factor: bool) -> float:
    return (2 * math.pi) ** n if torus_factor else 1.0


def I_functional(phi0: GridPotential, phi1: GridPotential, b, torus_factor: bool = False) -> float:
    """int phi (dens(phi0) - dens(phi1)) dxi with phi = 2(phi1 - phi0)."""
    phi = 2 * (phi1.values - phi0.values)
    val = phi0.grid.integrate(phi * (_density(phi0, b) - _density(phi1, b)))
    return val * _factor(phi0.n, torus_factor)


def J_functional(path: Sequence[GridPotential], b, torus_factor: bool = False) -> float:
    """int_0^1 int dphi_s/ds (dens(phi0) - dens(phi_s)) dxi ds along a uniformly sampled path.

    ``path[k]`` is the Kähler potential at s = k/K; the derivative in s is by
    centred differences (one-sided second order at the ends).
    """
    if len(path) < 3:
        raise ValueError("a path needs at least three potentials")
    grid = path[0].grid
    ds = 1.0 / (len(path) - 1)
    values = np.stack([2 * (p.values - path[0].values) for p in path])
    dot = np.gradient(values, ds, axis=0, edge_order=2)
    mu0 = _density(path[0], b)
    inner = [grid.integrate(dot[k] * (mu0 - _density(p, b))) for k, p in enumerate(path)]
    return float(trapezoid(inner, dx=ds)) * _factor(grid.ndim, torus_factor)


def cumulative_J(path: Sequence[GridPotential], b, s_values: Sequence[float]) -> np.ndarray:
    """J from path[0] to path[k] for every k, on a possibly non-uniform s-grid."""
    grid = path[0].grid
    s_values = np.asarray(s_values, dtype=float)
    if len(path) < 2:
        return np.zeros(len(path))
    values = np.stack([2 * (p.values - path[0].values) for p in path])
    dot = np.gradient(values, s_values, axis=0, edge_order=2 if len(path) > 2 else 1)
    mu0 = _density(path[0], b)
    inner = [grid.integrate(dot[k] * (mu0 - _density(p, b))) for k, p in enumerate(path)]
    return cumulative_trapezoid(inner, s_values, initial=0.0)


def linear_path(phi0: GridPotential, phi1: GridPotential, steps: int) -> list[GridPotential]:
    return [phi0.with_values(phi0.values + (k / steps) * (phi1.values - phi0.values)) for k in range(steps + 1)]


def smoothstep_path(phi0: GridPotential, phi1: GridPotential, steps: int) -> list[GridPotential]:
    """Reparametrised path s -> s^2 (3 - 2 s)."""
    out = []
    for k in range(steps + 1):
        s = k / steps
        w = s * s * (3 - 2 * s)
        out.append(phi0.with_values(phi0.values + w * (phi1.values - phi0.values)))
    return out


def make_path(phi0, phi1, kind: str = "linear", steps: int = 40) -> list[GridPotential]:
    if kind == "linear":
        return linear_path(phi0, phi1, steps)
    if kind == "smoothstep":
        return smoothstep_path(phi0, phi1, steps)
    raise ValueError(f"unknown path kind {kind!r}")


def F_hat(
    phi0: GridPotential,
    phi1: GridPotential,
    b,
    target: Grid,
    torus_factor: bool = False,
) -> float:
    """2 int_P (L(phi1) - L(phi0)) e^{-<b, x>} dx on a polytope grid inside both gradient images."""
    u0 = legendre_transform(phi0, target)
    u1 = legendre_transform(phi1, target)
    b = np.asarray(b, dtype=float).reshape(phi0.n)
    weight = np.exp(-target.nodes() @ b)
    return 2 * target.integrate((u1.values - u0.values) * weight) * _factor(phi0.n, torus_factor)


def F_hat_alt(
    phi0: GridPotential, phi1: GridPotential, b, steps: int = 40, kind: str = "linear", torus_factor: bool = False
) -> float:
    """The path form: J along a path from phi0 to phi1 minus int phi dens(phi0)."""
    J = J_functional(make_path(phi0, phi1, kind, steps), b)
    phi = 2 * (phi1.values - phi0.values)
    return (J - phi0.grid.integrate(phi * _density(phi0, b))) * _factor(phi0.n, torus_factor)


def weighted_lp_gradient(u: GridPotential, b, p: float) -> float:
    """int |grad u|^p e^{-<b, x>} dx over the polytope grid."""
    if p < 1:
        raise ValueError("p must be at least 1")
    b = np.asarray(b, dtype=float).reshape(u.n)
    g = np.linalg.norm(u.gradient(), axis=-1)
    return u.grid.integrate(g**p * np.exp(-u.grid.nodes() @ b))


def weighted_l1(u: GridPotential, b) -> float:
    """int |u| e^{-<b, x>} dx over the polytope grid."""
    b = np.asarray(b, dtype=float).reshape(u.n)
    return u.grid.integrate(np.abs(u.values) * np.exp(-u.grid.nodes() @ b))


def orbit_lp(phi: GridPotential, b, p: float) -> float:
    """int |xi|^p e^{-<b, grad phi>} det(phi_ij) dxi: the orbit-side form of the gradient norm."""
    r = np.linalg.norm(phi.grid.nodes(), axis=-1)
    return phi.grid.integrate(r**p * _density(phi, b))


def default_polytope_grid(phis: Sequence[GridPotential], b, h: float, cutoff: float = 40.0, margin: int = 2) -> Grid:
    """Box grid inside the discrete gradient images of all ``phis``.

    Each axis runs from the largest image minimum to the smallest image
    maximum, trimmed by ``margin`` nodes and capped where <b, x> exceeds
    ``cutoff`` (the weight is below e^-cutoff there).
    """
    b = np.asarray(b, dtype=float).reshape(phis[0].n)
    lows, highs = [], []
    for phi in phis:
        g = phi.gradient()
        if phi.n == 1:
            lows.append([g[..., 0].min()])
            highs.append([g[..., 0].max()])
        else:
            # image of the box edges bounds the image of the box for near-product potentials
            lows.append([g[0, :, 0].max(), g[:, 0, 1].max()])
            highs.append([g[-1, :, 0].min(), g[:, -1, 1].min()])
    lo = np.max(lows, axis=0) + margin * h
    hi = np.min(highs, axis=0) - margin * h
    for k in range(len(b)):
        if b[k] > 0:
            hi[k] = min(hi[k], cutoff / b[k])
    shape = tuple(int(np.floor((hi[k] - lo[k]) / h)) + 1 for k in range(len(b)))
    return Grid(tuple(lo), h, shape)
