"""Weighted volume F(b) = (2 pi)^n int_P exp(-<b, x>) dx and its derivatives.

The integral is summed over vertex tangent cones (Brion/Lawrence): a simplicial
cone ``v + cone(u_1, ..., u_n)`` contributes

    exp(-<b, v>) |det U| / prod_i <b, u_i>,

read as a meromorphic continuation when some edge is bounded.  Non-simple
vertex cones are triangulated first.  Directions with ``<b, u_i> = 0`` are
removable singularities of the sum; they are handled in extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import mpmath
import numpy as np
from scipy.optimize import linprog
from scipy.spatial import Delaunay
from scipy.special import gammaincc, gammaln

from .errors import DegenerateDirection, EmptyPolyhedron, NotLineFree, OutsideLambda
from .polyhedra import IntVec, Polyhedron, det_int
from .toric import in_lambda

NEAR_DEGENERATE = 1e-4
MP_DPS = 60
MP_EPS = mpmath.mpf("1e-12")
MC_TRUNCATION = 40.0
MC_CHUNK = 1 << 16
MC_SLAB_EDGES = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0)
MC_MIN_SLAB = 1000


@dataclass(frozen=True)
class Cell:
    vertex: tuple  # exact coordinates (Fractions)
    generators: tuple[IntVec, ...]
    det: int

    @property
    def v(self) -> np.ndarray:
        return np.array([float(x) for x in self.vertex])

    @property
    def U(self) -> np.ndarray:
        return np.array(self.generators, dtype=float)


@dataclass(frozen=True)
class WeightedVolumeModel:
    polyhedron: Polyhedron
    cells: tuple[Cell, ...]

    @property
    def dim(self) -> int:
        return self.polyhedron.dim


@dataclass(frozen=True)
class WvolEvaluation:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "gradient": self.gradient.tolist(),
            "hessian": self.hessian.tolist(),
        }


class MCEstimate(NamedTuple):
    estimate: float
    standard_error: float  # sampling error plus the truncation tail bound
    tail_bound: float


def _triangulate_cone(rays: Sequence[IntVec], dim: int) -> list[tuple[IntVec, ...]]:
    if len(rays) == dim:
        return [tuple(rays)]
    r = np.array(rays, dtype=float)
    center = (r / np.linalg.norm(r, axis=1)[:, None]).sum(axis=0)
    section = r / (r @ center)[:, None]
    # coordinates inside the hyperplane <center, x> = 1
    basis = np.linalg.svd(center[None, :])[2][1:]
    flat = section @ basis.T
    if dim - 1 == 1:
        order = np.argsort(flat[:, 0])
        return [(rays[order[i]], rays[order[i + 1]]) for i in range(len(rays) - 1)]
    tri = Delaunay(flat)
    return [tuple(rays[i] for i in simplex) for simplex in tri.simplices]


def build_model(poly: Polyhedron) -> WeightedVolumeModel:
    if not poly.line_free:
        raise NotLineFree(f"lineality space spanned by {poly.lineality}")
    verts = poly.vertices
    if not verts:
        raise EmptyPolyhedron("polyhedron has no vertices")
    cells = []
    for vert in verts:
        for gens in _triangulate_cone(vert.edges, poly.dim):
            d = abs(det_int(gens))
            if d == 0:
                continue
            cells.append(Cell(vert.point, gens, d))
    return WeightedVolumeModel(poly, tuple(cells))


def _fsum_array(terms: np.ndarray) -> np.ndarray:
    """Correctly rounded sum over axis 0, in the given (fixed) order."""
    flat = terms.reshape(terms.shape[0], -1)
    return np.array([math.fsum(flat[:, j]) for j in range(flat.shape[1])]).reshape(terms.shape[1:])


def _eval_float(model: WeightedVolumeModel, b: np.ndarray):
    n = model.dim
    vals, grads, hess = [], [], []
    for cell in model.cells:
        U = cell.U
        s = U @ b
        t = math.exp(-float(b @ cell.v)) * cell.det / float(np.prod(s))
        g = -cell.v - (U / s[:, None]).sum(axis=0)
        w = U / s[:, None]
        vals.append(t)
        grads.append(t * g)
        hess.append(t * (np.outer(g, g) + w.T @ w))
    scale = (2 * math.pi) ** n
    return (
        scale * math.fsum(vals),
        scale * _fsum_array(np.array(grads)),
        scale * _fsum_array(np.array(hess)),
    )


def _eval_mp_at(model: WeightedVolumeModel, b: list):
    n = model.dim
    val = mpmath.mpf(0)
    grad = [mpmath.mpf(0)] * n
    hess = [[mpmath.mpf(0)] * n for _ in range(n)]
    for cell in model.cells:
        v = [mpmath.mpf(x.numerator) / x.denominator for x in cell.vertex]
        s = [mpmath.fsum(u[k] * b[k] for k in range(n)) for u in cell.generators]
        if any(si == 0 for si in s):
            raise ZeroDivisionError
        t = mpmath.exp(-mpmath.fsum(b[k] * v[k] for k in range(n))) * cell.det
        for si in s:
            t /= si
        g = [-v[k] - mpmath.fsum(u[k] / si for u, si in zip(cell.generators, s)) for k in range(n)]
        val += t
        for i in range(n):
            grad[i] += t * g[i]
            for j in range(n):
                hess[i][j] += t * (
                    g[i] * g[j]
                    + mpmath.fsum(u[i] * u[j] / si**2 for u, si in zip(cell.generators, s))
                )
    return val, grad, hess


def _eval_mp(model: WeightedVolumeModel, b: np.ndarray):
    n = model.dim
    with mpmath.workdps(MP_DPS):
        bm = [mpmath.mpf(float(x)) for x in b]
        scale_b = max(mpmath.sqrt(mpmath.fsum(x**2 for x in bm)), 1)
        tiny = mpmath.mpf(10) ** (-(MP_DPS // 2)) * scale_b
        degenerate = any(
            abs(mpmath.fsum(u[k] * bm[k] for k in range(n))) < tiny
            for cell in model.cells
            for u in cell.generators
        )
        if not degenerate:
            out = _eval_mp_at(model, bm)
        else:
            out = _richardson(model, bm, scale_b)
        val, grad, hess = out
        factor = (2 * mpmath.pi) ** n
        return (
            float(factor * val),
            np.array([float(factor * x) for x in grad]),
            np.array([[float(factor * x) for x in row] for row in hess]),
        )


def _richardson(model, bm, scale_b):
    """Limit along b + eps*eta, eps -> 0, for three fixed pseudo-random eta."""
    rng = np.random.default_rng(20240917)
    n = model.dim
    results = []
    for _ in range(3):
        eta = rng.standard_normal(n)
        eta /= np.linalg.norm(eta)
        eps = MP_EPS * scale_b
        try:
            lo = _eval_mp_at(model, [bm[k] + eps * eta[k] for k in range(n)])
            hi = _eval_mp_at(model, [bm[k] + eps / 2 * eta[k] for k in range(n)])
        except ZeroDivisionError:
            continue
        results.append(_combine(lo, hi))
    if len(results) < 2:
        raise DegenerateDirection("perturbed evaluations stayed singular")
    vals = [r[0] for r in results]
    spread = max(vals) - min(vals)
    if spread > mpmath.mpf("1e-14") * max(abs(v) for v in vals):
        raise DegenerateDirection("perturbation limits disagree")
    return results[0]


def _combine(lo, hi):
    # first-order Richardson: 2 f(eps/2) - f(eps)
    val = 2 * hi[0] - lo[0]
    grad = [2 * h - l for h, l in zip(hi[1], lo[1])]
    hess = [[2 * h - l for h, l in zip(rh, rl)] for rh, rl in zip(hi[2], lo[2])]
    return val, grad, hess


def _check_admissible(poly: Polyhedron, b: np.ndarray) -> None:
    if not poly.bounded and not in_lambda(b, poly):
        raise OutsideLambda(f"b = {b.tolist()} is outside the admissible cone; integral diverges")


def weighted_volume(model: WeightedVolumeModel, b) -> WvolEvaluation:
    """Exact value, gradient and Hessian of F at b (including the (2 pi)^n factor)."""
    b = np.asarray(b, dtype=float).reshape(model.dim)
    _check_admissible(model.polyhedron, b)
    scale = max(np.linalg.norm(b), 1.0)
    near = min(
        abs(float(cell.U[i] @ b)) / (np.linalg.norm(cell.U[i]) * scale)
        for cell in model.cells
        for i in range(model.dim)
    )
    if near < NEAR_DEGENERATE:
        value, grad, hess = _eval_mp(model, b)
    else:
        value, grad, hess = _eval_float(model, b)
    hess = 0.5 * (hess + hess.T)
    return WvolEvaluation(value, grad, hess)


# --- Monte Carlo oracle -----------------------------------------------------


def _bounding_box(poly: Polyhedron, b: np.ndarray, lower: float | None, upper: float | None):
    """LP bounding box of P cut to lower <= <b, x> <= upper; None when the slab is empty."""
    a, c = poly.normals, poly.offsets
    a_ub, b_ub = -a, -c
    if upper is not None:
        a_ub = np.vstack([a_ub, b[None, :]])
        b_ub = np.r_[b_ub, upper]
    if lower is not None:
        a_ub = np.vstack([a_ub, -b[None, :]])
        b_ub = np.r_[b_ub, -lower]
    lo, hi = np.empty(poly.dim), np.empty(poly.dim)
    for k in range(poly.dim):
        e = np.zeros(poly.dim)
        e[k] = 1.0
        for sign, store in ((1.0, lo), (-1.0, hi)):
            res = linprog(sign * e, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * poly.dim, method="highs")
            if res.status == 2:
                return None
            if res.status != 0:
                raise OutsideLambda("truncated region is unbounded")
            store[k] = res.x[k]
    return lo, hi


def _slabs(top: float) -> list[tuple[float, float]]:
    edges = [e for e in MC_SLAB_EDGES if e < top] + [top]
    return list(zip(edges[:-1], edges[1:]))


def _mc_sums(poly, b, samples, seed, truncation, moments):
    """Rejection sampling stratified by the height <b, x> - min_P <b, x>.

    Each height slab is sampled uniformly in its own LP bounding box, with
    samples allocated by box volume times the slab's largest weight.
    """
    n = poly.dim
    b = np.asarray(b, dtype=float).reshape(n)
    _check_admissible(poly, b)
    heights = poly.vertex_array() @ b
    base = float(heights.min())
    truncated = not (poly.bounded and heights.max() - base <= truncation)
    top = truncation if truncated else float(heights.max() - base)
    if top <= 0:
        # P is bounded and b is constant on it: one slab of zero height
        top = 1.0

    boxes = []
    for t0, t1 in _slabs(top):
        box = _bounding_box(poly, b, base + t0, base + t1)
        if box is not None and np.all(box[1] > box[0]):
            boxes.append((t0, t1, box[0], box[1], float(np.prod(box[1] - box[0]))))
    weights = np.array([vol * math.exp(-t0) for t0, _, _, _, vol in boxes])
    counts = np.maximum(MC_MIN_SLAB, np.floor(samples * weights / weights.sum())).astype(int)

    rng = np.random.default_rng(seed)
    k = 1 + (n if moments else 0)
    est = np.zeros(k)
    var = np.zeros(k)
    for (t0, t1, lo, hi, vol), m_total in zip(boxes, counts):
        total = np.zeros(k)
        total_sq = np.zeros(k)
        done = 0
        while done < m_total:
            m = min(MC_CHUNK, m_total - done)
            x = lo + (hi - lo) * rng.random((m, n))
            h = x @ b - base
            inside = poly.contains_points(x) & (h >= t0) & (h < t1)
            w = np.where(inside, np.exp(-h), 0.0)
            f = w[:, None] if not moments else np.c_[w, w[:, None] * x]
            total += f.sum(axis=0)
            total_sq += (f**2).sum(axis=0)
            done += m
        mean = total / m_total
        est += vol * mean
        var += vol**2 * np.maximum(total_sq / m_total - mean**2, 0.0) / m_total

    factor = (2 * math.pi) ** n * math.exp(-base)
    tail = 0.0
    if truncated:
        # sublevel sets grow at most like (t/T)^n, so the tail is bounded by
        # vol(box of the truncation) * Gamma(n + 1, T) / T^n
        lo, hi = _bounding_box(poly, b, None, base + truncation)
        box_vol = float(np.prod(hi - lo))
        log_tail = gammaln(n + 1) + np.log(gammaincc(n + 1, truncation)) - n * np.log(truncation)
        tail = factor * box_vol * math.exp(log_tail)
    return factor * est, factor * np.sqrt(var), tail


def mc_weighted_volume(
    poly: Polyhedron, b, samples: int = 10**6, seed: int = 0, truncation: float = MC_TRUNCATION
) -> MCEstimate:
    """Rejection-sampling estimate of F(b), independent of the vertex formula."""
    est, se, tail = _mc_sums(poly, b, samples, seed, truncation, moments=False)
    return MCEstimate(float(est[0]), float(se[0]) + tail, tail)


def mc_first_moments(poly: Polyhedron, b, samples: int = 10**6, seed: int = 0):
    """Estimate (2 pi)^n int_P x exp(-<b, x>) dx with per-component standard errors."""
    est, se, tail = _mc_sums(poly, b, samples, seed, MC_TRUNCATION, moments=True)
    return est[1:], se[1:] + tail
