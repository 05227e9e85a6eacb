import json

import numpy as np
import pytest

from toricsoliton.errors import NotFullDimensional
from toricsoliton.toric import (
    RaySet,
    anticanonical_polytope,
    fan_rays,
    in_lambda,
    lambda_cone,
    load_polytope,
    polytope_from_json,
)


def test_rayset_validation():
    with pytest.raises(ValueError):
        RaySet(2, ((2, 0),))
    with pytest.raises(ValueError):
        RaySet(2, ((1, 0), (1, 0)))
    with pytest.raises(ValueError):
        RaySet(2, ((1, 0, 0),))


def test_rays_must_span():
    with pytest.raises(NotFullDimensional):
        anticanonical_polytope(RaySet(2, ((1, 0),)))
    with pytest.raises(NotFullDimensional):
        anticanonical_polytope(RaySet(2, ()))


def test_anticanonical_offsets(polys):
    for poly in polys.values():
        assert all(h.offset == -1 for h in poly.halfspaces)


def test_half_line_lambda(polys):
    poly = polys["C"]
    assert in_lambda([1.0], poly)
    assert not in_lambda([0.0], poly)
    assert not in_lambda([-1.0], poly)
    assert lambda_cone(poly).contains([2.0])


def test_cxcp1_lambda_is_open_half_plane(polys):
    poly = polys["CxCP1"]
    assert in_lambda([1.0, 5.0], poly)
    assert not in_lambda([0.0, 1.0], poly)


def test_bounded_lambda_is_everything(polys):
    assert in_lambda([-3.0, 2.0], polys["CP2"])


def test_tolerance_boundary(polys):
    poly = polys["C2"]
    assert not in_lambda([1.0, 1e-13], poly)
    assert in_lambda([1.0, 1e-11], poly)


def test_load_both_formats(tmp_path, polys):
    fan = tmp_path / "fan.json"
    fan.write_text(json.dumps({"dim": 2, "rays": [[1, 0], [0, 1], [-1, -1]], "cones": [[0, 1]]}))
    hp = tmp_path / "poly.json"
    hp.write_text(json.dumps(polys["CP2"].to_json()))
    a, b = load_polytope(fan), load_polytope(hp)
    assert [v.point for v in a.vertices] == [v.point for v in b.vertices]
    with pytest.raises(ValueError):
        polytope_from_json({"dim": 2})


def test_rayset_roundtrip(fans):
    for rays in fans.values():
        assert RaySet.from_json(rays.to_json()) == rays
    assert fan_rays([[1, 0], [0, 1]]) == fans["C2"]


def test_polytope_for_blowup(polys):
    verts = sorted(v.point for v in polys["blowup_C2"].vertices)
    assert verts == [(-1, 0), (0, -1)]
    gens = np.array(sorted(lambda_cone(polys["blowup_C2"]).cone.generators))
    assert gens.tolist() == [[0, 1], [1, 0]]
