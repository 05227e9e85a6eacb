"""Fan rays to the anticanonical polyhedron and its admissible cone."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NotFullDimensional
from .polyhedra import (
    Cone,
    HalfSpace,
    IntVec,
    Polyhedron,
    asymptotic_cone,
    contains_origin_interior,
    make_polyhedron,
    primitive,
    rank,
)

TOL_POS = 1e-12


@dataclass(frozen=True)
class RaySet:
    dim: int
    rays: tuple[IntVec, ...]

    def __post_init__(self):
        rays = tuple(tuple(int(v) for v in r) for r in self.rays)
        for r in rays:
            if len(r) != self.dim:
                raise ValueError(f"ray {r} does not have dimension {self.dim}")
            if primitive(r) != r:
                raise ValueError(f"ray {r} is not a primitive lattice vector")
        if len(set(rays)) != len(rays):
            raise ValueError("rays must be pairwise distinct")
        object.__setattr__(self, "rays", rays)

    def to_json(self) -> dict:
        return {"dim": self.dim, "rays": [list(r) for r in self.rays]}

    @classmethod
    def from_json(cls, data: dict) -> "RaySet":
        # maximal cones may be present in fan files; only rays matter here
        return cls(int(data["dim"]), tuple(tuple(r) for r in data["rays"]))


@dataclass(frozen=True)
class AdmissibleCone:
    """Open cone: the interior of ``cone``."""

    cone: Cone

    def contains(self, b, tol_pos: float = TOL_POS) -> bool:
        b = np.asarray(b, dtype=float)
        bn = np.linalg.norm(b)
        for a in self.cone.normals:
            a = np.asarray(a, dtype=float)
            if b @ a <= tol_pos * max(bn * np.linalg.norm(a), 1e-300):
                return False
        return True


def anticanonical_polytope(rays: RaySet) -> Polyhedron:
    """The polyhedron {x : <nu_i, x> >= -1} cut out by the fan's rays."""
    if not rays.rays:
        raise NotFullDimensional("no rays given")
    if rank(list(rays.rays), rays.dim) != rays.dim:
        raise NotFullDimensional("rays do not span the ambient space")
    poly = make_polyhedron([HalfSpace(r, -1) for r in rays.rays], dim=rays.dim)
    assert contains_origin_interior(poly)
    return poly


def lambda_cone(poly: Polyhedron) -> AdmissibleCone:
    return AdmissibleCone(asymptotic_cone(poly).dual())


def in_lambda(b, poly: Polyhedron, tol_pos: float = TOL_POS) -> bool:
    """Strict test <b, g> > tol_pos |b||g| over the asymptotic-cone generators."""
    b = np.asarray(b, dtype=float)
    bn = np.linalg.norm(b)
    for g in asymptotic_cone(poly).generators:
        g = np.asarray(g, dtype=float)
        if b @ g <= tol_pos * bn * np.linalg.norm(g):
            return False
    return True


def load_polytope(path: str | Path) -> Polyhedron:
    """Read either fan JSON (``rays``) or polyhedron JSON (``halfspaces``)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return polytope_from_json(data)


def polytope_from_json(data: dict) -> Polyhedron:
    if "rays" in data:
        return anticanonical_polytope(RaySet.from_json(data))
    if "halfspaces" in data:
        return Polyhedron.from_json(data)
    raise ValueError("expected fan JSON with 'rays' or polyhedron JSON with 'halfspaces'")


def standard_fans() -> dict[str, RaySet]:
    """Small fans used by the examples, CLI defaults and the verification suite."""
    return {
        "C": RaySet(1, ((1,),)),
        "CP1": RaySet(1, ((1,), (-1,))),
        "C2": RaySet(2, ((1, 0), (0, 1))),
        "CxCP1": RaySet(2, ((1, 0), (0, 1), (0, -1))),
        "blowup_C2": RaySet(2, ((1, 0), (1, 1), (0, 1))),
        "CP2": RaySet(2, ((1, 0), (0, 1), (-1, -1))),
        "O(-2)_CP1": RaySet(2, ((1, 0), (1, 1), (1, 2))),
    }


def fan_rays(fan: Sequence[Sequence[int]]) -> RaySet:
    fan = [tuple(int(v) for v in r) for r in fan]
    return RaySet(len(fan[0]), tuple(fan))
