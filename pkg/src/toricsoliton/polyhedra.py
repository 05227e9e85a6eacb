"""Rational polyhedra and polyhedral cones in low dimension.

Constraints are held exactly (integer normals, rational offsets).  Vertices are
found by an exhaustive active-set search, screened in floating point and then
certified with :class:`fractions.Fraction` arithmetic, which is plenty for the
small inputs this package deals with (n <= 4, a few dozen facets).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DimensionUnsupported,
    EmptyPolyhedron,
    NonPrimitiveNormal,
    NotLineFree,
)

MAX_VERTEX_DIM = 4

IntVec = tuple[int, ...]


def as_fraction(value) -> Fraction:
    """Parse an int, float, Fraction or ``"p/q"`` string exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a valid offset")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # decimal reading: 0.1 means 1/10, not the nearest binary double
        return Fraction(repr(value))
    return Fraction(str(value))


def fraction_to_json(value: Fraction):
    if value.denominator == 1:
        return int(value)
    if Fraction(repr(float(value))) == value:
        return float(value)
    return f"{value.numerator}/{value.denominator}"


def primitive(vec: Iterable) -> IntVec:
    """Scale a nonzero rational vector to the primitive integer vector on its ray."""
    fr = [as_fraction(v) for v in vec]
    if all(v == 0 for v in fr):
        raise ValueError("zero vector has no primitive representative")
    lcm = reduce(math.lcm, (v.denominator for v in fr), 1)
    ints = [int(v * lcm) for v in fr]
    g = reduce(math.gcd, (abs(v) for v in ints))
    return tuple(v // g for v in ints)


def _dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


# --- exact linear algebra -------------------------------------------------


def _rref(rows: Sequence[Sequence], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    m = [[Fraction(v) for v in row] for row in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Sequence[Sequence], ncols: int) -> int:
    if not rows:
        return 0
    return len(_rref(rows, ncols)[1])


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[IntVec]:
    """Integer basis (primitive vectors) of the kernel of ``rows``."""
    if not rows:
        return [tuple(int(i == j) for j in range(ncols)) for i in range(ncols)]
    red, pivots = _rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        vec = [Fraction(0)] * ncols
        vec[fcol] = Fraction(1)
        for row, pc in zip(red, pivots):
            vec[pc] = -row[fcol]
        basis.append(primitive(vec))
    return basis


def solve_exact(a: Sequence[Sequence], b: Sequence) -> tuple[Fraction, ...] | None:
    """Solve a square system exactly; ``None`` when singular."""
    n = len(a)
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    red, pivots = _rref(aug, n + 1)
    if pivots != list(range(n)):
        return None
    return tuple(red[i][n] for i in range(n))


def det_int(rows: Sequence[Sequence[int]]) -> int:
    """Exact integer determinant (Bareiss elimination)."""
    m = [list(r) for r in rows]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1] if n else 1


def extreme_rays(
    ineqs: Sequence[IntVec], eqs: Sequence[IntVec], dim: int
) -> list[IntVec]:
    """Extreme rays of the pointed cone {d : <a, d> >= 0 (a in ineqs), <e, d> = 0 (e in eqs)}.

    Each ray is the one-dimensional kernel of ``dim - 1`` independent tight
    rows; the caller guarantees the cone is pointed.
    """
    eq_rank = rank(eqs, dim)
    need = dim - 1 - eq_rank
    rays: list[IntVec] = []
    if need < 0:
        return rays
    for subset in itertools.combinations(range(len(ineqs)), need):
        rows = list(eqs) + [ineqs[i] for i in subset]
        if rank(rows, dim) != dim - 1:
            continue
        (d,) = nullspace(rows, dim)
        for cand in (d, tuple(-v for v in d)):
            if all(_dot(a, cand) >= 0 for a in ineqs):
                if cand not in rays:
                    rays.append(cand)
                break
    return sorted(rays)


# --- half-spaces and cones ------------------------------------------------


@dataclass(frozen=True)
class HalfSpace:
    """The closed half-space {x : <normal, x> >= offset}."""

    normal: IntVec
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        normal = tuple(int(v) for v in self.normal)
        if any(float(v) != float(int(v)) for v in self.normal):
            raise NonPrimitiveNormal(f"normal {self.normal} is not integral")
        if all(v == 0 for v in normal):
            raise NonPrimitiveNormal("normal must be nonzero")
        if reduce(math.gcd, (abs(v) for v in normal)) != 1:
            raise NonPrimitiveNormal(f"normal {normal} is not primitive")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", as_fraction(self.offset))

    @property
    def dim(self) -> int:
        return len(self.normal)

    def slack(self, x) -> Fraction | float:
        return _dot(self.normal, x) - self.offset

    def to_json(self) -> dict:
        return {"normal": list(self.normal), "offset": fraction_to_json(self.offset)}


@dataclass(frozen=True, eq=False)
class Cone:
    """Polyhedral cone {x : <a, x> >= 0} with its generator description.

    ``generators`` are the extreme rays of the pointed part (the cone
    intersected with the orthogonal complement of ``lineality``).
    """

    dim: int
    normals: tuple[IntVec, ...]
    generators: tuple[IntVec, ...] = field(default=())
    lineality: tuple[IntVec, ...] = field(default=())

    @classmethod
    def from_normals(cls, dim: int, normals: Iterable[Sequence[int]]) -> "Cone":
        normals = tuple(dict.fromkeys(primitive(a) for a in normals))
        lineality = tuple(nullspace(list(normals), dim))
        gens = extreme_rays(normals, lineality, dim)
        return cls(dim, normals, tuple(gens), lineality)

    @classmethod
    def from_generators(
        cls, dim: int, generators: Iterable[Sequence[int]], lineality: Iterable = ()
    ) -> "Cone":
        gens = [primitive(g) for g in generators]
        lin = [primitive(v) for v in lineality]
        dual = cls.from_normals(dim, gens + lin + [tuple(-v for v in x) for x in lin])
        return dual.dual()

    def dual(self) -> "Cone":
        rows = list(self.generators)
        for v in self.lineality:
            rows += [v, tuple(-x for x in v)]
        return Cone.from_normals(self.dim, rows)

    @property
    def halfspaces(self) -> tuple[HalfSpace, ...]:
        return tuple(HalfSpace(a, 0) for a in self.normals)

    @property
    def pointed(self) -> bool:
        return not self.lineality

    @property
    def is_zero(self) -> bool:
        return self.pointed and not self.generators

    @property
    def is_whole_space(self) -> bool:
        return len(self.lineality) == self.dim

    def contains(self, x, tol: float = 0.0) -> bool:
        return all(_dot(a, x) >= -tol for a in self.normals)

    def same_as(self, other: "Cone") -> bool:
        """Set equality for cones: same extreme rays and same lineality span."""
        if self.dim != other.dim or set(self.generators) != set(other.generators):
            return False
        return rank(list(self.lineality) + list(other.lineality), self.dim) == len(
            self.lineality
        ) == len(other.lineality)

    def as_polyhedron(self) -> "Polyhedron":
        return make_polyhedron([HalfSpace(a, 0) for a in self.normals], dim=self.dim)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "halfspaces": [{"normal": list(a)} for a in self.normals],
            "generators": [list(g) for g in self.generators],
            "lineality": [list(v) for v in self.lineality],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Cone":
        return cls.from_normals(int(data["dim"]), [h["normal"] for h in data["halfspaces"]])


# --- polyhedra ------------------------------------------------------------


@dataclass(frozen=True)
class Vertex:
    point: tuple[Fraction, ...]
    edges: tuple[IntVec, ...]
    active: tuple[int, ...]

    @property
    def coords(self) -> np.ndarray:
        return np.array([float(v) for v in self.point])


class Polyhedron:
    """Finite intersection of closed half-spaces, with lazily computed vertices.

    Build instances through :func:`make_polyhedron`, which certifies a
    nonempty interior.
    """

    def __init__(self, dim: int, halfspaces: Sequence[HalfSpace], interior_point, redundant):
        self.dim = dim
        self.halfspaces = tuple(halfspaces)
        self.interior_point = np.asarray(interior_point, dtype=float)
        self.redundant = tuple(redundant)

    def __repr__(self) -> str:
        return f"Polyhedron(dim={self.dim}, halfspaces={len(self.halfspaces)})"

    @property
    def normals(self) -> np.ndarray:
        return np.array([h.normal for h in self.halfspaces], dtype=float)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([float(h.offset) for h in self.halfspaces])

    def contains(self, x, tol: float = 1e-12) -> bool:
        """Membership; exact for rational input, tolerant for floats."""
        if all(isinstance(v, (int, Fraction)) for v in x):
            return all(h.slack(x) >= 0 for h in self.halfspaces)
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.normals @ x - self.offsets >= -tol))

    def contains_points(self, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all(pts @ self.normals.T - self.offsets >= -tol, axis=1)

    @cached_property
    def lineality(self) -> tuple[IntVec, ...]:
        return tuple(nullspace([h.normal for h in self.halfspaces], self.dim))

    @property
    def line_free(self) -> bool:
        return not self.lineality

    @cached_property
    def vertices(self) -> tuple[Vertex, ...]:
        return tuple(_enumerate_vertices(self))

    @property
    def simple(self) -> bool:
        return all(len(v.edges) == self.dim for v in self.vertices)

    @cached_property
    def recession_cone(self) -> Cone:
        return Cone.from_normals(self.dim, [h.normal for h in self.halfspaces])

    @property
    def bounded(self) -> bool:
        return self.recession_cone.is_zero

    def vertex_array(self) -> np.ndarray:
        return np.array([v.coords for v in self.vertices]).reshape(-1, self.dim)

    def translated(self, w: Sequence) -> "Polyhedron":
        w = [as_fraction(v) for v in w]
        return make_polyhedron(
            [HalfSpace(h.normal, h.offset + _dot(h.normal, w)) for h in self.halfspaces]
        )

    def scaled(self, lam) -> "Polyhedron":
        lam = as_fraction(lam)
        if lam <= 0:
            raise ValueError("scale factor must be positive")
        return make_polyhedron([HalfSpace(h.normal, h.offset * lam) for h in self.halfspaces])

    def with_halfspace(self, hs: HalfSpace) -> "Polyhedron":
        return make_polyhedron(list(self.halfspaces) + [hs])

    def to_json(self) -> dict:
        return {"dim": self.dim, "halfspaces": [h.to_json() for h in self.halfspaces]}

    @classmethod
    def from_json(cls, data: dict) -> "Polyhedron":
        hs = [HalfSpace(tuple(h["normal"]), as_fraction(h.get("offset", 0))) for h in data["halfspaces"]]
        return make_polyhedron(hs, dim=int(data["dim"]))


def make_polyhedron(halfspaces: Sequence[HalfSpace], dim: int | None = None) -> Polyhedron:
    """Intersect half-spaces, certifying a strictly interior point by LP.

    Raises :class:`EmptyPolyhedron` when the intersection has empty interior.
    """
    halfspaces = [h if isinstance(h, HalfSpace) else HalfSpace(*h) for h in halfspaces]
    if not halfspaces:
        raise ValueError("at least one half-space is required")
    n = halfspaces[0].dim if dim is None else dim
    if n < 1 or any(h.dim != n for h in halfspaces):
        raise ValueError("half-spaces must share a positive dimension")

    a = np.array([h.normal for h in halfspaces], dtype=float)
    c = np.array([float(h.offset) for h in halfspaces])
    scale = np.linalg.norm(a, axis=1)
    # maximise t subject to <a_i, x> - c_i >= t |a_i|, t <= 1
    res = linprog(
        np.r_[np.zeros(n), -1.0],
        A_ub=np.c_[-a, scale],
        b_ub=-c,
        bounds=[(None, None)] * n + [(None, 1.0)],
        method="highs",
    )
    if res.status == 2 or (res.status == 0 and res.x[-1] <= 1e-9):
        raise EmptyPolyhedron("half-space intersection has empty interior")
    if res.status != 0:
        raise EmptyPolyhedron(f"feasibility LP failed: {res.message}")
    interior = res.x[:n]
    return Polyhedron(n, halfspaces, interior, _redundant(a, c))


def _redundant(a: np.ndarray, c: np.ndarray) -> list[int]:
    flagged = []
    for i in range(len(c)):
        others = np.delete(np.arange(len(c)), i)
        if len(others) == 0:
            continue
        res = linprog(a[i], A_ub=-a[others], b_ub=-c[others], bounds=[(None, None)] * a.shape[1], method="highs")
        if res.status == 0 and res.fun >= c[i] - 1e-9:
            flagged.append(i)
    return flagged


def _enumerate_vertices(poly: Polyhedron) -> list[Vertex]:
    n = poly.dim
    if n > MAX_VERTEX_DIM:
        raise DimensionUnsupported(f"vertex enumeration supports n <= {MAX_VERTEX_DIM}, got {n}")
    if not poly.line_free:
        raise NotLineFree(f"lineality space spanned by {poly.lineality}")

    hs = poly.halfspaces
    a, c = poly.normals, poly.offsets
    subsets = np.array(list(itertools.combinations(range(len(hs)), n)), dtype=int)
    mats = a[subsets]
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 0.5  # integer matrices: nonsingular means |det| >= 1
    subsets, mats = subsets[ok], mats[ok]
    pts = np.linalg.solve(mats, c[subsets][..., None])[..., 0]
    scale = 1.0 + np.abs(c).max() + np.abs(pts).max(axis=1, initial=0.0)
    feas = np.all(pts @ a.T - c >= -1e-7 * scale[:, None], axis=1)

    seen: dict[tuple[Fraction, ...], Vertex] = {}
    for subset in subsets[feas]:
        x = solve_exact([hs[i].normal for i in subset], [hs[i].offset for i in subset])
        if x is None or x in seen or not all(h.slack(x) >= 0 for h in hs):
            continue
        active = tuple(i for i, h in enumerate(hs) if h.slack(x) == 0)
        edges = tuple(extreme_rays([hs[i].normal for i in active], [], n))
        seen[x] = Vertex(x, edges, active)
    return [seen[k] for k in sorted(seen)]


# --- operations -------------------------------------------------------------


def enumerate_vertices(poly: Polyhedron) -> list[tuple[np.ndarray, tuple[IntVec, ...]]]:
    return [(v.coords, v.edges) for v in poly.vertices]


def asymptotic_cone(poly: Polyhedron) -> Cone:
    """Recession cone: the same half-spaces with every offset set to zero."""
    return poly.recession_cone


def dual_cone(cone: Cone) -> Cone:
    return cone.dual()


def is_delzant(poly: Polyhedron) -> tuple[bool, dict | None]:
    """Delzant test with a witness describing the first failing vertex."""
    for v in poly.vertices:
        if len(v.edges) != poly.dim:
            return False, {
                "vertex": [fraction_to_json(x) for x in v.point],
                "reason": f"{len(v.edges)} edges, expected {poly.dim}",
            }
        d = det_int(v.edges)
        if abs(d) != 1:
            return False, {
                "vertex": [fraction_to_json(x) for x in v.point],
                "reason": "edge generators are not a lattice basis",
                "det": abs(d),
            }
    return True, None


def contains_origin_interior(poly: Polyhedron) -> bool:
    return all(h.offset < 0 for h in poly.halfspaces)
