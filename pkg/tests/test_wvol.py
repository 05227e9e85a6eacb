import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from toricsoliton.benchmarks import random_polygon
from toricsoliton.errors import NotLineFree, OutsideLambda
from toricsoliton.polyhedra import HalfSpace, make_polyhedron
from toricsoliton.wvol import build_model, mc_first_moments, mc_weighted_volume, weighted_volume

TWO_PI = 2 * math.pi


def F_halfline(b):
    return TWO_PI * math.exp(b) / b


def test_half_line_closed_form(polys):
    model = build_model(polys["C"])
    for b in (0.3, 1.0, 2.5):
        ev = weighted_volume(model, [b])
        assert ev.value == pytest.approx(F_halfline(b), rel=1e-14)
        assert ev.gradient[0] == pytest.approx(TWO_PI * math.exp(b) * (b - 1) / b**2, rel=1e-13, abs=1e-14)
        assert ev.hessian[0, 0] == pytest.approx(TWO_PI * math.exp(b) * (b * b - 2 * b + 2) / b**3, rel=1e-13)


def test_interval_removable_singularity(polys):
    model = build_model(polys["CP1"])
    ev = weighted_volume(model, [0.0])
    assert ev.value == pytest.approx(4 * math.pi, rel=1e-14)
    assert abs(ev.gradient[0]) < 1e-14
    assert ev.hessian[0, 0] == pytest.approx(4 * math.pi / 3, rel=1e-12)
    # near-degenerate: the extended-precision branch matches the series
    b = 1e-6
    ev = weighted_volume(model, [b])
    assert ev.value == pytest.approx(4 * math.pi * (1 + b * b / 6), rel=1e-14)


def test_quadrant_product(polys):
    ev = weighted_volume(build_model(polys["C2"]), [1.0, 2.0])
    assert ev.value == pytest.approx(F_halfline(1.0) * F_halfline(2.0), rel=1e-14)


def test_square_with_degenerate_direction():
    sq = make_polyhedron([HalfSpace(n, -1) for n in [(1, 0), (-1, 0), (0, 1), (0, -1)]])
    ev = weighted_volume(build_model(sq), [1.0, 0.0])
    assert ev.value == pytest.approx(4 * math.pi * math.sinh(1.0) * 4 * math.pi, rel=1e-12)
    assert ev.gradient[1] == pytest.approx(0.0, abs=1e-10)


def _triangle_integral(b):
    # CP2 moment triangle x, y >= -1, x + y <= 1
    f = lambda y, x: math.exp(-(b[0] * x + b[1] * y))  # noqa: E731
    val, _ = dblquad(f, -1, 2, lambda x: -1, lambda x: 1 - x, epsabs=1e-13, epsrel=1e-13)
    return TWO_PI**2 * val


@pytest.mark.parametrize("b", [(1.0, 1.0), (0.3, -0.7), (1e-7, 0.0), (0.0, 0.0), (2.0, 2.0 + 1e-9)])
def test_triangle_against_quadrature(polys, b):
    ev = weighted_volume(build_model(polys["CP2"]), b)
    assert ev.value == pytest.approx(_triangle_integral(b), rel=1e-10)


def test_not_admissible(polys):
    model = build_model(polys["C"])
    for b in ([0.0], [-1.0]):
        with pytest.raises(OutsideLambda):
            weighted_volume(model, b)


def test_line_rejected():
    strip = make_polyhedron([HalfSpace((1, 0), -1), HalfSpace((-1, 0), -1)])
    with pytest.raises(NotLineFree):
        build_model(strip)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_derivatives_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    poly, b = random_polygon(rng)
    model = build_model(poly)
    ev = weighted_volume(model, b)
    d = 1e-5
    for k, e in enumerate(np.eye(2)):
        plus, minus = weighted_volume(model, b + d * e), weighted_volume(model, b - d * e)
        fd_g = (plus.value - minus.value) / (2 * d)
        fd_h = (plus.gradient - minus.gradient) / (2 * d)
        assert abs(fd_g - ev.gradient[k]) <= 1e-6 * np.max(np.abs(ev.gradient)) + 1e-9 * ev.value
        assert np.max(np.abs(fd_h - ev.hessian[k])) <= 1e-5 * np.max(np.abs(ev.hessian))


def test_hessian_positive_definite(polys):
    for name in ("CP2", "C2", "blowup_C2", "CxCP1"):
        b = [1.0, 1.0]
        ev = weighted_volume(build_model(polys[name]), b)
        assert np.all(np.linalg.eigvalsh(ev.hessian) > 0)


def test_monte_carlo_agrees(polys):
    ev = weighted_volume(build_model(polys["CP2"]), [0.5, -0.2])
    mc = mc_weighted_volume(polys["CP2"], [0.5, -0.2], samples=200_000, seed=3)
    assert abs(mc.estimate - ev.value) <= 3 * mc.standard_error
    assert mc.tail_bound == 0.0


def test_monte_carlo_seeded(polys):
    a = mc_weighted_volume(polys["C2"], [1.0, 1.0], samples=50_000, seed=11)
    b = mc_weighted_volume(polys["C2"], [1.0, 1.0], samples=50_000, seed=11)
    assert a == b
    assert 0 < a.tail_bound < 1e-10


def test_first_moments_are_minus_gradient(polys):
    b = [1.0, 1.5]
    ev = weighted_volume(build_model(polys["blowup_C2"]), b)
    est, se = mc_first_moments(polys["blowup_C2"], b, samples=200_000, seed=5)
    assert np.all(np.abs(est + ev.gradient) <= 4 * se)
