"""Uniform grids, grid functions and second-order finite differences (n = 1, 2)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid

SIDES = ("orbit", "polytope")


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid: ``origin + h * index`` along each axis."""

    origin: tuple[float, ...]
    h: float
    shape: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if len(self.origin) != len(self.shape) or len(self.shape) not in (1, 2):
            raise ValueError("grids are one- or two-dimensional")
        if self.h <= 0 or min(self.shape) < 5:
            raise ValueError("need h > 0 and at least 5 nodes per axis")

    @classmethod
    def from_bounds(cls, lower: Sequence[float], upper: Sequence[float], h: float) -> "Grid":
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        shape = tuple(int(round(v)) + 1 for v in (upper - lower) / h)
        return cls(tuple(lower), h, shape)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + self.h * (s - 1) for o, s in zip(self.origin, self.shape))

    def axes(self) -> list[np.ndarray]:
        return [o + self.h * np.arange(s) for o, s in zip(self.origin, self.shape)]

    def nodes(self) -> np.ndarray:
        """Coordinates with shape ``shape + (ndim,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def interior_mask(self, margin: int = 1) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[tuple(slice(margin, s - margin) for s in self.shape)] = True
        return mask

    def integrate(self, values: np.ndarray) -> float:
        out = values
        for ax in reversed(range(self.ndim)):
            out = trapezoid(out, dx=self.h, axis=ax)
        return float(out)

    def weights(self) -> np.ndarray:
        """Trapezoid weights, so that ``integrate(f) == sum(weights * f)``."""
        ws = []
        for s in self.shape:
            w = np.full(s, self.h)
            w[[0, -1]] = self.h / 2
            ws.append(w)
        return ws[0] if self.ndim == 1 else np.outer(ws[0], ws[1])

    def refined(self) -> "Grid":
        return Grid(self.origin, self.h / 2, tuple(2 * s - 1 for s in self.shape))

    def to_json(self) -> dict:
        return {"origin": list(self.origin), "h": self.h, "shape": list(self.shape)}


# --- finite differences -------------------------------------------------------


def d1(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    return np.gradient(f, h, axis=axis, edge_order=2)


def d2(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = f[2:] - 2 * f[1:-1] + f[:-2]
    out[0] = 2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]
    out[-1] = 2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]
    return np.moveaxis(out / h**2, 0, axis)


def gradient(f: np.ndarray, h: float) -> np.ndarray:
    return np.stack([d1(f, h, ax) for ax in range(f.ndim)], axis=-1)


def hessian(f: np.ndarray, h: float) -> np.ndarray:
    n = f.ndim
    H = np.empty(f.shape + (n, n))
    for i in range(n):
        H[..., i, i] = d2(f, h, i)
        for j in range(i + 1, n):
            H[..., i, j] = H[..., j, i] = d1(d1(f, h, i), h, j)
    return H


def hessian_det(H: np.ndarray) -> np.ndarray:
    if H.shape[-1] == 1:
        return H[..., 0, 0]
    return H[..., 0, 0] * H[..., 1, 1] - H[..., 0, 1] ** 2


def positive_definite(H: np.ndarray) -> np.ndarray:
    if H.shape[-1] == 1:
        return H[..., 0, 0] > 0
    return (H[..., 0, 0] > 0) & (hessian_det(H) > 0)


def hessian_inverse(H: np.ndarray) -> np.ndarray:
    if H.shape[-1] == 1:
        return 1.0 / H
    det = hessian_det(H)
    inv = np.empty_like(H)
    inv[..., 0, 0] = H[..., 1, 1] / det
    inv[..., 1, 1] = H[..., 0, 0] / det
    inv[..., 0, 1] = inv[..., 1, 0] = -H[..., 0, 1] / det
    return inv


def interior_operators(shape: tuple[int, ...], h: float) -> dict[str, sp.csr_matrix]:
    """Central-difference operators acting on interior unknowns (zero boundary values).

    Keys: ``d{i}`` first derivatives, ``d{i}{j}`` second derivatives.
    """
    inner = [s - 2 for s in shape]

    def first(m):
        return sp.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1], shape=(m, m)) / (2 * h)

    def second(m):
        return sp.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]) / h**2

    if len(shape) == 1:
        return {"d0": first(inner[0]).tocsr(), "d00": second(inner[0]).tocsr()}
    i0, i1 = sp.identity(inner[0]), sp.identity(inner[1])
    return {
        "d0": sp.kron(first(inner[0]), i1).tocsr(),
        "d1": sp.kron(i0, first(inner[1])).tocsr(),
        "d00": sp.kron(second(inner[0]), i1).tocsr(),
        "d11": sp.kron(i0, second(inner[1])).tocsr(),
        "d01": sp.kron(first(inner[0]), first(inner[1])).tocsr(),
    }


# --- grid functions -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridPotential:
    """Values of a potential on a grid; ``side`` says which chart the grid lives in."""

    side: str
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        vals = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.grid.ndim

    @property
    def h(self) -> float:
        return self.grid.h

    def gradient(self) -> np.ndarray:
        return gradient(self.values, self.h)

    def hessian(self) -> np.ndarray:
        return hessian(self.values, self.h)

    def is_convex(self) -> bool:
        """Discrete Hessian positive definite at every interior node."""
        H = self.hessian()[self.grid.interior_mask()]
        return bool(np.all(positive_definite(H)))

    def with_values(self, values: np.ndarray) -> "GridPotential":
        return GridPotential(self.side, self.grid, values)

    def __add__(self, other):
        other = other.values if isinstance(other, GridPotential) else other
        return self.with_values(self.values + other)

    def to_json(self) -> dict:
        return {
            "side": self.side,
            "origin": list(self.grid.origin),
            "h": self.grid.h,
            "shape": list(self.grid.shape),
            "values": self.values.ravel().tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "GridPotential":
        grid = Grid(tuple(data["origin"]), float(data["h"]), tuple(data["shape"]))
        return cls(data["side"], grid, np.asarray(data["values"], dtype=float))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GridPotential":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def sample(side: str, grid: Grid, func) -> GridPotential:
    """Evaluate ``func(coords)`` (coords of shape ``(..., n)``) on every node."""
    return GridPotential(side, grid, func(grid.nodes()))


def weighted_density(phi: GridPotential, b) -> np.ndarray:
    """exp(-<b, grad phi>) det(phi_ij): the toric form of the weighted volume form."""
    b = np.asarray(b, dtype=float).reshape(phi.n)
    return np.exp(-phi.gradient() @ b) * hessian_det(phi.hessian())
