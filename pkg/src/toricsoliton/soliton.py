"""Soliton vector as the minimiser of the weighted volume, and the constants
comparing <x, b> with |x| far out in the polyhedron."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MaxIterExceeded, OutsideLambda
from .polyhedra import Polyhedron, asymptotic_cone
from .toric import in_lambda
from .wvol import WeightedVolumeModel, build_model, weighted_volume

ARMIJO_C = 1e-4
BACKTRACK = 0.5
MAX_HALVINGS = 60


@dataclass(frozen=True)
class SolitonCertificate:
    b_X: np.ndarray
    grad_norm: float
    hessian_min_eig: float
    iterations: int
    value: float

    def to_json(self) -> dict:
        return {
            "b_X": self.b_X.tolist(),
            "grad_norm": self.grad_norm,
            "hessian_min_eig": self.hessian_min_eig,
            "iterations": self.iterations,
            "value": self.value,
        }


@dataclass(frozen=True)
class ComparabilityBound:
    C: float
    R: float
    beta: float
    alpha: float

    def to_json(self) -> dict:
        return {"C": self.C, "R": self.R, "beta": self.beta, "alpha": self.alpha}


def default_start(poly: Polyhedron) -> np.ndarray:
    gens = np.array(asymptotic_cone(poly).generators, dtype=float).reshape(-1, poly.dim)
    if len(gens) == 0:
        b0 = np.zeros(poly.dim)
        b0[0] = 1e-3
        return b0
    b0 = (gens / np.linalg.norm(gens, axis=1)[:, None]).sum(axis=0)
    if not in_lambda(b0, poly):
        raise OutsideLambda("sum of asymptotic rays is not strictly admissible")
    return b0


def find_soliton_vector(
    poly: Polyhedron,
    tol: float = 1e-10,
    max_iter: int = 100,
    start=None,
    model: WeightedVolumeModel | None = None,
) -> SolitonCertificate:
    """Damped Newton on F, keeping every iterate strictly inside the admissible cone.

    Stops once |grad F| <= tol * (1 + F).
    """
    model = model or build_model(poly)
    b = default_start(poly) if start is None else np.asarray(start, dtype=float).copy()
    if not in_lambda(b, poly) and not poly.bounded:
        raise OutsideLambda(f"start {b.tolist()} is not admissible")

    ev = weighted_volume(model, b)
    for it in range(max_iter + 1):
        gnorm = float(np.linalg.norm(ev.gradient))
        if gnorm <= tol * (1.0 + ev.value):
            eig = float(np.linalg.eigvalsh(ev.hessian)[0])
            return SolitonCertificate(b, gnorm, eig, it, ev.value)
        if it == max_iter:
            break
        try:
            step = -np.linalg.solve(ev.hessian, ev.gradient)
        except np.linalg.LinAlgError:
            step = -ev.gradient
        slope = float(ev.gradient @ step)
        if slope >= 0:
            step, slope = -ev.gradient, -gnorm**2
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = b + lam * step
            if poly.bounded or in_lambda(trial, poly):
                trial_ev = weighted_volume(model, trial)
                if trial_ev.value <= ev.value + ARMIJO_C * lam * slope:
                    break
                # near the minimum F stalls at rounding level while the
                # gradient still shrinks; accept a reduction of |grad F|
                if trial_ev.value <= ev.value * (1 + 1e-15) and np.linalg.norm(
                    trial_ev.gradient
                ) < gnorm:
                    break
            lam *= BACKTRACK
        else:
            raise MaxIterExceeded(f"line search failed at iteration {it}", last=b)
        b, ev = trial, trial_ev
    raise MaxIterExceeded(f"no convergence in {max_iter} iterations", last=b)


def comparability_constants(poly: Polyhedron, b) -> ComparabilityBound:
    """Constants C, R with C^-1 <x, b> <= |x| <= C <x, b> for x in P, |x| > R.

    Follows the Minkowski-sum argument P = Q + C(P) with Q the hull of the
    vertices: beta is the minimum of <b, w> over unit asymptotic directions
    (attained at an extreme ray), alpha = max |q| over vertices.
    """
    b = np.asarray(b, dtype=float).reshape(poly.dim)
    gens = np.array(asymptotic_cone(poly).generators, dtype=float).reshape(-1, poly.dim)
    if len(gens) == 0:
        raise OutsideLambda("bounded polyhedron: no far-out region to compare on")
    beta = float(np.min(gens @ b / np.linalg.norm(gens, axis=1)))
    if beta <= 0:
        raise OutsideLambda(f"beta = {beta} <= 0; b is not in the admissible cone")
    alpha = float(np.max(np.linalg.norm(poly.vertex_array(), axis=1)))
    bn = float(np.linalg.norm(b))
    R = 2.0 * max(alpha, 2.0 * alpha * bn / beta)
    C = max(bn, 4.0 / beta)
    return ComparabilityBound(C=C, R=R, beta=beta, alpha=alpha)


def sample_far_points(poly: Polyhedron, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """Random points of P with |x| > radius: vertex hull part plus a scaled cone part."""
    rng = np.random.default_rng(seed)
    verts = poly.vertex_array()
    gens = np.array(asymptotic_cone(poly).generators, dtype=float).reshape(-1, poly.dim)
    if len(gens) == 0:
        raise ValueError("bounded polyhedron has no points far out")
    out = []
    while len(out) < count:
        q = rng.dirichlet(np.ones(len(verts))) @ verts
        w = rng.dirichlet(np.ones(len(gens))) @ gens
        t = radius * (1.0 + 10.0 * rng.random()) / np.linalg.norm(w)
        x = q + 2.0 * t * w
        if np.linalg.norm(x) > radius:
            out.append(x)
    return np.array(out)


def check_comparability(poly: Polyhedron, b, bound: ComparabilityBound, count: int = 1000, seed: int = 0) -> bool:
    b = np.asarray(b, dtype=float)
    pts = sample_far_points(poly, bound.R, count, seed)
    norms = np.linalg.norm(pts, axis=1)
    dots = pts @ b
    return bool(np.all(dots / bound.C <= norms) and np.all(norms <= bound.C * dots))
