"""Newton continuation for the real Monge-Ampère paths on a truncated box.

Unknown: psi on the interior nodes, with phi = phi0 + psi/2 and psi = 0 on the
box boundary.  Both paths share the discrete operator

    G(psi) = log det(phi_ij) - log det(phi0_ij) - <b, grad psi>/2 + t psi - D

with ``D = F_s = log(1 + s(e^F - 1))`` and ``t = 0`` along the s-path, and
``D = F`` with ``t > 0`` on the Aubin path.  At t = 0, G sees psi only through
its derivatives, so the weighted mean-zero normalisation is a constant shift
applied after each solve (and recorded).
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConvexityLost, NewtonDiverged
from .grids import (
    Grid,
    GridPotential,
    gradient,
    hessian,
    hessian_det,
    hessian_inverse,
    interior_operators,
    positive_definite,
    weighted_density,
)
from .potentials import MAData

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 20
DEFAULT_TOL = 1e-9
MAX_NEWTON = 50
MAX_HALVINGS = 60
INTERIOR_MARGIN = 10


@dataclass(frozen=True)
class DataFamily:
    F: MAData
    s: float
    F_s: np.ndarray


def data_family(F: MAData, s: float) -> DataFamily:
    """F_s = log(1 + s(e^F - 1)), so that F_0 = 0 and F_1 = F."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    Fv = np.asarray(F.F_values, dtype=float)
    return DataFamily(F, s, np.log1p(s * np.expm1(Fv)))


@dataclass(eq=False)
class PathSolution:
    phi0: GridPotential
    b: np.ndarray
    parameter_grid: list[float]
    psi: list[np.ndarray]
    residuals: list[float]
    norm_constants: list[float]
    iterations: list[int] = field(default_factory=list)
    kind: str = "star"

    def phi(self, k: int = -1) -> GridPotential:
        return self.phi0.with_values(self.phi0.values + 0.5 * self.psi[k])

    def psi_dirichlet(self, k: int = -1) -> np.ndarray:
        """psi before the mean-zero shift (zero on the boundary)."""
        return self.psi[k] - self.norm_constants[k]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "phi0": self.phi0.to_json(),
            "b": self.b.tolist(),
            "parameter_grid": list(self.parameter_grid),
            "psi": [p.ravel().tolist() for p in self.psi],
            "residuals": list(self.residuals),
            "norm_constants": list(self.norm_constants),
            "iterations": list(self.iterations),
        }

    @classmethod
    def from_json(cls, data: dict) -> "PathSolution":
        phi0 = GridPotential.from_json(data["phi0"])
        return cls(
            phi0=phi0,
            b=np.asarray(data["b"], dtype=float),
            parameter_grid=[float(v) for v in data["parameter_grid"]],
            psi=[np.asarray(p, dtype=float).reshape(phi0.grid.shape) for p in data["psi"]],
            residuals=[float(v) for v in data["residuals"]],
            norm_constants=[float(v) for v in data["norm_constants"]],
            iterations=[int(v) for v in data.get("iterations", [])],
            kind=data.get("kind", "star"),
        )

    def energies(self) -> tuple[list[float], list[float]]:
        """I(phi0, phi_s) and J from phi0 to phi_s at every stored parameter.

        Along the star path J is integrated over the solved path itself; an
        Aubin solution has a single parameter, so J follows the linear path.
        """
        from .functionals import I_functional, J_functional, cumulative_J, linear_path

        path = [self.phi(k) for k in range(len(self.psi))]
        I = [I_functional(self.phi0, p, self.b) for p in path]
        if self.kind == "aubin":
            J = [J_functional(linear_path(self.phi0, p, 40), self.b) for p in path]
        else:
            J = [float(v) for v in cumulative_J(path, self.b, self.parameter_grid)]
        return I, J

    def residual_csv(self) -> str:
        """Columns s (or t), residual, I, J plus the normalisation constant and Newton count."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t" if self.kind == "aubin" else "s", "residual", "I", "J", "norm_constant", "iterations"])
        I, J = self.energies()
        its = self.iterations or [""] * len(self.psi)
        for row in zip(self.parameter_grid, self.residuals, I, J, self.norm_constants, its):
            w.writerow([repr(float(v)) for v in row[:5]] + [row[5]])
        return buf.getvalue()


class _Operator:
    """Discrete G and its Jacobian on interior unknowns."""

    def __init__(self, phi0: GridPotential, b):
        self.grid = phi0.grid
        self.n = phi0.n
        self.b = np.asarray(b, dtype=float).reshape(self.n)
        self.mask = self.grid.interior_mask()
        self.ops = interior_operators(self.grid.shape, self.grid.h)
        H0 = phi0.hessian()[self.mask]
        if not np.all(positive_definite(H0)):
            raise ConvexityLost("phi0 is not convex on the interior")
        self.H0 = H0
        self.logdet0 = np.log(hessian_det(H0))
        self.size = int(self.mask.sum())

    def hess_psi(self, x: np.ndarray) -> np.ndarray:
        H = np.empty((self.size, self.n, self.n))
        if self.n == 1:
            H[:, 0, 0] = self.ops["d00"] @ x
        else:
            H[:, 0, 0] = self.ops["d00"] @ x
            H[:, 1, 1] = self.ops["d11"] @ x
            H[:, 0, 1] = H[:, 1, 0] = self.ops["d01"] @ x
        return H

    def drift(self, x: np.ndarray) -> np.ndarray:
        return sum(self.b[i] * (self.ops[f"d{i}"] @ x) for i in range(self.n))

    def phi_hessian(self, x: np.ndarray) -> np.ndarray:
        return self.H0 + 0.5 * self.hess_psi(x)

    def residual(self, x, t, D, H=None):
        H = self.phi_hessian(x) if H is None else H
        return np.log(hessian_det(H)) - self.logdet0 - 0.5 * self.drift(x) + t * x - D

    def jacobian(self, H, t) -> sp.csc_matrix:
        inv = hessian_inverse(H)
        if self.n == 1:
            J = sp.diags(0.5 * inv[:, 0, 0]) @ self.ops["d00"]
        else:
            J = (
                sp.diags(0.5 * inv[:, 0, 0]) @ self.ops["d00"]
                + sp.diags(0.5 * inv[:, 1, 1]) @ self.ops["d11"]
                + sp.diags(inv[:, 0, 1]) @ self.ops["d01"]
            )
        J = J - 0.5 * sum(self.b[i] * self.ops[f"d{i}"] for i in range(self.n))
        if t:
            J = J + t * sp.identity(self.size)
        return sp.csc_matrix(J)

    def full(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.shape)
        out[self.mask] = x
        return out


def _newton(op: _Operator, x0: np.ndarray, t: float, D: np.ndarray, tol: float, label):
    """Damped Newton with a convexity safeguard; returns (x, sup residual, iterations)."""
    x = x0.copy()
    H = op.phi_hessian(x)
    if not np.all(positive_definite(H)):
        raise ConvexityLost("initial iterate is not convex", s=label, last=op.full(x))
    G = op.residual(x, t, D, H)
    norm = float(np.linalg.norm(G))
    for it in range(MAX_NEWTON + 1):
        sup = float(np.max(np.abs(G)))
        if sup <= tol:
            return x, sup, it
        if it == MAX_NEWTON:
            break
        delta = splu(op.jacobian(H, t)).solve(-G)
        lam, convex_seen = 1.0, False
        for _ in range(MAX_HALVINGS):
            trial = x + lam * delta
            Ht = op.phi_hessian(trial)
            if np.all(positive_definite(Ht)):
                convex_seen = True
                Gt = op.residual(trial, t, D, Ht)
                nt = float(np.linalg.norm(Gt))
                if nt <= (1 - 1e-4 * lam) * norm or nt <= tol:
                    break
            lam *= 0.5
        else:
            if not convex_seen:
                raise ConvexityLost(f"convexity lost at parameter {label}", s=label, last=op.full(x))
            raise NewtonDiverged(f"line search stalled at parameter {label}", s=label, last=op.full(x))
        x, H, G, norm = trial, Ht, Gt, nt
    raise NewtonDiverged(f"no convergence at parameter {label}", s=label, last=op.full(x))


def _mean_shift(psi: np.ndarray, mu: np.ndarray, grid: Grid) -> float:
    return grid.integrate(psi * mu) / grid.integrate(mu)


def solve_star_path(
    phi0: GridPotential,
    b,
    F: MAData,
    s_steps: int = DEFAULT_STEPS,
    tol: float = DEFAULT_TOL,
    warm_start: bool = True,
) -> PathSolution:
    """Solve e^{-<b, grad phi_s>} det(phi_s) = (1 + s(e^F - 1)) e^{-<b, grad phi0>} det(phi0)
    for s = 1/K, ..., 1, each warm-started from the previous step.

    psi_s is returned with zero weighted mean against e^{-<b, grad phi0>} det(phi0).
    """
    op = _Operator(phi0, b)
    mu = weighted_density(phi0, op.b)
    s_grid = [k / s_steps for k in range(s_steps + 1)]
    sol = PathSolution(phi0, op.b.copy(), [], [], [], [], [], kind="star")
    x = np.zeros(op.size)
    for s in s_grid:
        D = data_family(F, s).F_s[op.mask] if s > 0 else np.zeros(op.size)
        start = x if warm_start else np.zeros(op.size)
        x, res, its = _newton(op, start, 0.0, D, tol, s)
        psi = op.full(x)
        m = _mean_shift(psi, mu, phi0.grid)
        sol.parameter_grid.append(s)
        sol.psi.append(psi - m)
        sol.residuals.append(res)
        sol.norm_constants.append(-m)
        sol.iterations.append(its)
        logger.debug("s=%.4f residual=%.3e newton=%d", s, res, its)
    return sol


def solve_aubin(
    phi0: GridPotential, b, F: MAData, t: float, tol: float = DEFAULT_TOL
) -> PathSolution:
    """Solve log det(phi_t) - <b, grad phi_t> + 2t(phi_t - phi0) = F - <b, grad phi0> + log det(phi0).

    psi_t = 2(phi_t - phi0) vanishes on the box boundary; no shift is applied.
    """
    if not 0.0 <= t <= 0.2:
        raise ValueError("t must lie in [0, 0.2]")
    op = _Operator(phi0, b)
    D = np.asarray(F.F_values)[op.mask]
    # continuation in t from 0 keeps Newton in its basin for larger t
    ts = [t] if t <= 0.05 else list(np.linspace(0.05, t, int(np.ceil(t / 0.05))))
    x = np.zeros(op.size)
    total = 0
    for tk in ts:
        x, res, its = _newton(op, x, tk, D, tol, tk)
        total += its
    return PathSolution(phi0, op.b.copy(), [t], [op.full(x)], [res], [0.0], [total], kind="aubin")


# --- independent residual evaluators (full-grid stencils) -------------------


def _interior(grid: Grid, margin: int) -> np.ndarray:
    return grid.interior_mask(margin)


def residual_realMA(phi: GridPotential, b, margin: int = 1) -> float:
    """max |log det(phi_ij) + 2 phi - <b, grad phi>| over nodes at least ``margin`` from the edge."""
    b = np.asarray(b, dtype=float).reshape(phi.n)
    mask = _interior(phi.grid, margin)
    H = phi.hessian()[mask]
    if not np.all(positive_definite(H)):
        raise ConvexityLost("potential is not convex")
    r = np.log(hessian_det(H)) - (-2 * phi.values[mask] + phi.gradient()[mask] @ b)
    return float(np.max(np.abs(r)))


def residual_realMA2(u: GridPotential, b, margin: int = 1) -> float:
    """max |2(<grad u, x> - u) - log det(u_ij) - <b, x>| over interior polytope nodes."""
    b = np.asarray(b, dtype=float).reshape(u.n)
    mask = _interior(u.grid, margin)
    H = u.hessian()[mask]
    if not np.all(positive_definite(H)):
        raise ConvexityLost("potential is not convex")
    x = u.grid.nodes()[mask]
    g = u.gradient()[mask]
    lhs = 2 * (np.sum(g * x, axis=-1) - u.values[mask]) - np.log(hessian_det(H))
    return float(np.max(np.abs(lhs - x @ b)))


def residual_star0(phi0: GridPotential, psi: np.ndarray, F: MAData, b, margin: int = INTERIOR_MARGIN) -> float:
    """max |log det(phi1) - <b, grad phi1> - (F - <b, grad phi0> + log det(phi0))| on the deep interior,
    with phi1 = phi0 + psi/2.

    Derivatives of phi1 are taken as derivatives of phi0 plus half those of
    psi; differencing phi1 directly loses digits where phi0_ij is tiny.
    """
    b = np.asarray(b, dtype=float).reshape(phi0.n)
    mask = _interior(phi0.grid, margin)
    H0 = phi0.hessian()[mask]
    H1 = H0 + 0.5 * hessian(psi, phi0.h)[mask]
    if not (np.all(positive_definite(H1)) and np.all(positive_definite(H0))):
        raise ConvexityLost("potential is not convex")
    g0 = phi0.gradient()[mask]
    g1 = g0 + 0.5 * gradient(psi, phi0.h)[mask]
    lhs = np.log(hessian_det(H1)) - g1 @ b
    rhs = np.asarray(F.F_values)[mask] - g0 @ b + np.log(hessian_det(H0))
    return float(np.max(np.abs(lhs - rhs)))


def residual_star_s(sol: PathSolution, k: int, F: MAData, margin: int = INTERIOR_MARGIN) -> float:
    """Residual of the s-path equation at step k, via full-grid stencils."""
    s = sol.parameter_grid[k]
    phi0, b = sol.phi0, sol.b
    mask = _interior(phi0.grid, margin)
    psi = sol.psi[k]
    H = phi0.hessian()[mask] + 0.5 * hessian(psi, phi0.h)[mask]
    if not np.all(positive_definite(H)):
        raise ConvexityLost("potential is not convex")
    lhs = np.log(hessian_det(H)) - np.log(hessian_det(phi0.hessian()[mask])) - 0.5 * gradient(psi, phi0.h)[mask] @ b
    return float(np.max(np.abs(lhs - data_family(F, s).F_s[mask])))


def weighted_mean(sol: PathSolution, k: int) -> float:
    mu = weighted_density(sol.phi0, sol.b)
    return sol.phi0.grid.integrate(sol.psi[k] * mu)


def save_solution(sol: PathSolution, path, csv_path=None) -> None:
    from pathlib import Path

    Path(path).write_text(json.dumps(sol.to_json()), encoding="utf-8")
    if csv_path is not None:
        Path(csv_path).write_text(sol.residual_csv(), encoding="utf-8")
