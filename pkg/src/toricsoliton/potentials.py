"""Kähler potentials on the dense orbit, symplectic potentials on the polytope,
and the discrete Legendre transform between them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .errors import ConvexityLost, GridTouchesBoundary, HypothesisFailed, TargetOutsideImage
from .grids import Grid, GridPotential, hessian_det, positive_definite, weighted_density
from .polyhedra import Polyhedron, contains_origin_interior

LEGENDRE_BLOCK = 1 << 22  # target-by-source entries per chunk
NEWTON_POLISH = 8


@dataclass(frozen=True, eq=False)
class MAData:
    """Data term F on the orbit grid and the constant already added to it."""

    F_values: np.ndarray
    c0: float = 0.0

    def to_json(self) -> dict:
        return {"F_values": np.asarray(self.F_values).ravel().tolist(), "c0": self.c0}


def guillemin_potential(poly: Polyhedron, grid: Grid) -> GridPotential:
    """Canonical symplectic potential 1/2 sum (l_i + a_i) log(l_i + a_i) on a grid inside P.

    Every node must keep distance at least h/2 from every facet.
    """
    x = grid.nodes()
    a, c = poly.normals, poly.offsets
    slack = x @ a.T - c  # l_i(x) + a_i with a_i = -offset
    dist = slack / np.linalg.norm(a, axis=1)
    if np.any(dist < grid.h / 2 * (1 - 1e-12)):
        raise GridTouchesBoundary("grid comes within h/2 of a facet")
    return GridPotential("polytope", grid, 0.5 * np.sum(slack * np.log(slack), axis=-1))


class _Spline:
    """C^2 cubic interpolant of grid values with first and second derivatives."""

    def __init__(self, p: GridPotential):
        self.n = p.n
        axes = p.grid.axes()
        if self.n == 1:
            self.f = CubicSpline(axes[0], p.values)
        else:
            self.f = RectBivariateSpline(axes[0], axes[1], p.values, kx=3, ky=3, s=0)

    def value(self, z):
        if self.n == 1:
            return self.f(z[:, 0])
        return self.f.ev(z[:, 0], z[:, 1])

    def grad_hess(self, z):
        if self.n == 1:
            g = self.f(z[:, 0], 1)[:, None]
            return g, self.f(z[:, 0], 2)[:, None, None]
        x, y = z[:, 0], z[:, 1]
        g = np.c_[self.f.ev(x, y, dx=1), self.f.ev(x, y, dy=1)]
        hxy = self.f.ev(x, y, dx=1, dy=1)
        H = np.stack([np.c_[self.f.ev(x, y, dx=2), hxy], np.c_[hxy, self.f.ev(x, y, dy=2)]], axis=1)
        return g, H


def legendre_transform(p: GridPotential, target: Grid) -> GridPotential:
    """Discrete convex conjugate onto ``target``.

    For each target node y: the maximiser z0 of <y, z> - p(z) over source
    nodes, then Newton iterations on grad P(z) = y for the C^2 cubic spline
    P interpolating p, and finally <y, z> - P(z).  Nodes where the spline
    Newton fails keep the quadratic model at z0.  Raises TargetOutsideImage
    when the quadratic-model maximiser leaves the source box, i.e. y is not in
    the gradient image.
    """
    if target.ndim != p.n:
        raise ValueError("target grid dimension differs from the source")
    if not p.is_convex():
        raise ConvexityLost("source potential is not convex")
    src = p.grid.nodes().reshape(-1, p.n)
    vals = p.values.ravel()
    grads = p.gradient().reshape(-1, p.n)
    hinv = np.linalg.inv(p.hessian().reshape(-1, p.n, p.n))
    ys = target.nodes().reshape(-1, p.n)
    spline = _Spline(p)

    out = np.empty(len(ys))
    block = max(1, LEGENDRE_BLOCK // len(src))
    lo = np.array(p.grid.origin)
    hi = np.array(p.grid.upper)
    for start in range(0, len(ys), block):
        y = ys[start : start + block]
        scores = y @ src.T - vals
        k = np.argmax(scores, axis=1)
        base = scores[np.arange(len(y)), k]
        r = y - grads[k]
        d = np.einsum("mij,mj->mi", hinv[k], r)
        z = src[k] + d
        outside = np.any((z < lo - 0.5 * p.h) | (z > hi + 0.5 * p.h), axis=1)
        if np.any(outside):
            raise TargetOutsideImage(f"target node {y[outside][0].tolist()} lies outside the gradient image")
        quad = base + 0.5 * np.einsum("mi,mi->m", r, d)
        out[start : start + len(y)] = _spline_polish(spline, y, np.clip(z, lo, hi), lo, hi, quad)
    side = "polytope" if p.side == "orbit" else "orbit"
    return GridPotential(side, target, out.reshape(target.shape))


def _spline_polish(spline: _Spline, y, z, lo, hi, fallback):
    scale = 1.0 + np.abs(y).max(axis=1)
    done = np.zeros(len(y), dtype=bool)
    for _ in range(NEWTON_POLISH):
        g, H = spline.grad_hess(z)
        r = y - g
        done = np.max(np.abs(r), axis=1) <= 1e-13 * scale
        if np.all(done):
            break
        ok = np.linalg.det(H) > 0
        step = np.zeros_like(z)
        step[ok] = np.linalg.solve(H[ok], r[ok][..., None])[..., 0]
        z = np.clip(z + step, lo, hi)
    val = np.einsum("mi,mi->m", y, z) - spline.value(z)
    # a failed Newton solve would underestimate the supremum; keep the larger value
    return np.where(done, val, np.maximum(val, fallback))


def ma_data_F(phi0: GridPotential, b) -> MAData:
    """F = -log det(phi0_ij) + <grad phi0, b> - 2 phi0 at every node."""
    b = np.asarray(b, dtype=float).reshape(phi0.n)
    H = phi0.hessian()
    if not np.all(positive_definite(H)):
        raise ConvexityLost("discrete Hessian of phi0 is not positive definite")
    F = -np.log(hessian_det(H)) + phi0.gradient() @ b - 2 * phi0.values
    return MAData(F, 0.0)


def calibration_measure(phi0: GridPotential, b) -> np.ndarray:
    return weighted_density(phi0, b)


def calibrate_F(data: MAData, phi0: GridPotential, b) -> MAData:
    """Shift F by the constant making int (e^F - 1) dmu = 0, dmu = e^{-<b, grad phi0>} det dxi."""
    grid = phi0.grid
    mu = calibration_measure(phi0, b)
    F = np.asarray(data.F_values)
    top = F.max()
    # log of the ratio, computed with the maximum factored out
    c = -(top + np.log(grid.integrate(np.exp(F - top) * mu)) - np.log(grid.integrate(mu)))
    return MAData(F + c, data.c0 + c)


@dataclass(frozen=True)
class FacetSlack:
    normal: tuple[int, ...]
    offset: float
    min_value: float
    slack: float
    ok: bool
    attained: bool


@dataclass(frozen=True)
class MomentImageReport:
    facets: list[FacetSlack] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(f.ok for f in self.facets)

    @property
    def max_slack(self) -> float:
        return max((f.slack for f in self.facets), default=0.0)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "facets": [
                {
                    "normal": list(f.normal),
                    "offset": f.offset,
                    "min_value": f.min_value,
                    "slack": f.slack,
                    "ok": f.ok,
                    "attained": f.attained,
                }
                for f in self.facets
            ],
        }


def moment_image_check(
    phi: GridPotential, poly: Polyhedron | None, tol_img: float = 1e-8, margin: float = 1e-2
) -> MomentImageReport:
    """Per-facet slack of the discrete moment image grad phi against P.

    ``poly=None`` stands for the whole space (no facets).  ``attained`` says the
    image reaches the facet to within ``margin``, which depends on how far the
    grid extends.
    """
    if poly is None:
        return MomentImageReport([])
    g = phi.gradient().reshape(-1, phi.n)
    out = []
    for hs in poly.halfspaces:
        m = float(np.min(g @ np.asarray(hs.normal, dtype=float)))
        slack = m - float(hs.offset)
        out.append(
            FacetSlack(hs.normal, float(hs.offset), m, slack, slack >= -tol_img, -tol_img <= slack <= margin)
        )
    return MomentImageReport(out)


def growth_check(phi: GridPotential, poly: Polyhedron | None) -> tuple[float, bool]:
    """Smallest C with phi >= |xi|/C - C at every node; fails for non-convex phi."""
    if poly is not None and not contains_origin_interior(poly):
        raise HypothesisFailed("the origin is not interior to the moment polytope")
    if not phi.is_convex():
        return float("inf"), False
    xi = phi.grid.nodes().reshape(-1, phi.n)
    r = np.linalg.norm(xi, axis=1)
    v = phi.values.ravel()

    def ok(C):
        return np.all(v + C - r / C >= 0)

    lo, hi = 1e-6, 1.0
    while not ok(hi):
        hi *= 2
        if hi > 1e12:
            return float("inf"), False
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return hi, True
