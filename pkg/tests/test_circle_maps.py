import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weldlab.circle_maps import (
    TWO_PI, CircleMap, CircleMapFormatError, DegenerateMapError, compose, from_csv, invert, nodes,
    normalize_three_points, qs_constant, reciprocal_conjugate, resample, sup_distance, to_csv,
)
from weldlab.mobius import Mobius


def smooth(n=512, a=0.3, b=0.1):
    return CircleMap.from_function(lambda t: t + a * np.sin(t) + b * np.sin(2 * t), n)


def pullback(a=2.0, n=2048):
    return CircleMap.from_line_map(lambda x: np.where(x >= 0, x, a * x), n)


def test_lift_strictly_increasing_and_periodic():
    m = smooth()
    lift = m.lift
    assert np.all(np.diff(lift) > 0)
    th = np.array([0.0, 1.0, TWO_PI - 1e-9])
    assert np.allclose(m.evaluate(th + TWO_PI), m.evaluate(th) + TWO_PI, atol=1e-12)
    assert m.evaluate(np.array([TWO_PI]))[0] == pytest.approx(m.evaluate(np.array([0.0]))[0] + TWO_PI, abs=1e-12)


def test_non_monotone_lift_rejected():
    lift = nodes(16).copy()
    lift[3], lift[4] = lift[4], lift[3]
    with pytest.raises(DegenerateMapError):
        CircleMap.from_lift(lift)


def test_mobius_maps_preserve_circle():
    m = CircleMap.disk_automorphism(0.4 - 0.3j, 0.7)
    z = np.exp(1j * nodes(256))
    assert np.max(np.abs(np.abs(m(z)) - 1)) < 1e-12


def test_compose_with_identity():
    h = smooth()
    z = np.exp(1j * nodes(512))
    assert np.max(np.abs(compose(CircleMap.identity(), h)(z) - h(z))) < 1e-12
    assert np.max(np.abs(compose(h, CircleMap.identity())(z) - h(z))) < 1e-12


def test_compose_with_inverse():
    h = smooth()
    assert sup_distance(compose(h, invert(h)), CircleMap.identity(), 1024) < 1e-6
    assert sup_distance(resample(compose(invert(h), h), 1024), CircleMap.identity()) < 1e-6


def test_rotations_compose_exactly():
    a, b = 0.4, -1.1
    r = compose(CircleMap.rotation(a), CircleMap.rotation(b))
    z = np.exp(1j * nodes(64))
    assert r.is_mobius()
    assert np.max(np.abs(r(z) - np.exp(1j * (a + b)) * z)) < 1e-14


def test_invert_closed_forms():
    z = np.exp(1j * nodes(64))
    assert invert(CircleMap.identity()).kind == "identity"
    assert np.max(np.abs(invert(CircleMap.rotation(0.9))(z) - np.exp(-0.9j) * z)) < 1e-15
    m = CircleMap.disk_automorphism(0.3 + 0.2j, 0.5)
    inv = invert(m).as_mobius()
    assert inv.is_close(m.as_mobius().inverse())
    assert np.max(np.abs(invert(m)(m(z)) - z)) < 1e-13


def test_normalize_three_points():
    ident = normalize_three_points(CircleMap.identity())
    pts = np.array([1, -1, 1j])
    assert np.max(np.abs(ident(pts) - pts)) < 1e-14
    alpha = 0.7
    rot = normalize_three_points(CircleMap.rotation(alpha))
    assert np.max(np.abs(rot(pts) - pts)) < 1e-13
    z = np.exp(1j * nodes(128))
    assert np.max(np.abs(rot(z) - z)) < 1e-13   # sigma = rot_{-alpha}
    h = normalize_three_points(smooth())
    again = normalize_three_points(h)
    assert sup_distance(h, again, 512) < 1e-12


def test_reciprocal_conjugate_lift():
    h = smooth()
    r = reciprocal_conjugate(h)
    th = nodes(300) + 0.01
    assert np.allclose(r.evaluate(th), -h.evaluate(-th), atol=1e-13)
    assert sup_distance(reciprocal_conjugate(r), h, 512) == 0.0


def test_derivative_and_antiderivative():
    h = smooth(2048)
    th = np.linspace(0.1, 6.0, 50)
    exact = 1 + 0.3 * np.cos(th) + 0.2 * np.cos(2 * th)
    assert np.max(np.abs(h.derivative(th) - exact)) < 1e-6
    a, b = 0.3, 2 * TWO_PI + 1.0
    quad = np.trapezoid(h.evaluate(np.linspace(a, b, 20001)), dx=(b - a) / 20000)
    assert h.antiderivative(np.array([b]))[0] - h.antiderivative(np.array([a]))[0] == pytest.approx(quad, abs=1e-6)


def test_qs_identity_exact():
    assert qs_constant(CircleMap.identity()).k == 1.0
    assert qs_constant(CircleMap.from_function(lambda t: t, 1024)).k == 1.0


def test_qs_piecewise_linear_pullback():
    k = qs_constant(pullback(2.0), depth=8).k
    assert abs(k - 2.0) <= 0.05 * 2.0


def test_qs_mobius_stable_in_depth():
    m = resample(CircleMap.disk_automorphism(0.3, 0.2), 1024)
    ks = [qs_constant(m, depth=d).k for d in (6, 8, 10)]
    assert all(math.isfinite(k) for k in ks)
    assert max(ks) - min(ks) < 0.05 * ks[0]


def test_csv_round_trip():
    h = smooth(64)
    back = from_csv(to_csv(h))
    assert np.array_equal(back.lift, h.lift)
    with pytest.raises(CircleMapFormatError):
        from_csv("n=3,interp=monotone-cubic\n0,0\n1,1\n")
    bad = to_csv(h).splitlines()
    bad[5] = bad[5].split(",")[0] + ",-1.0"
    with pytest.raises(CircleMapFormatError):
        from_csv("\n".join(bad))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([8, 16, 32]).flatmap(lambda n: st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
def test_random_monotone_maps_invert(steps):
    steps = np.array(steps)
    lift = np.concatenate([[0.0], np.cumsum(steps[:-1])]) * TWO_PI / steps.sum()
    h = CircleMap.from_lift(lift, "linear")
    th = nodes(200)
    assert np.max(np.abs(invert(h).evaluate(h.evaluate(th)) - th)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_rotation_group(a, b):
    z = np.exp(1j * nodes(32))
    m = compose(invert(CircleMap.rotation(a)), CircleMap.rotation(b))
    assert np.max(np.abs(m(z) - np.exp(1j * (b - a)) * z)) < 1e-13


def test_mobius_matrix_inverse():
    m = Mobius(1.2 + 0.1j, 0.3, 0.5j, 0.9)
    assert (m @ m.inverse()).is_close(Mobius.identity())
