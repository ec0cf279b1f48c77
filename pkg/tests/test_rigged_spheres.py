import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import chordal
from weldlab.circle_maps import CircleMap
from weldlab.mobius import INF, Mobius, is_inf
from weldlab.rigged_spheres import (
    Boundary, CoincidentPoints, InvalidSurface, ModuliVector, PunctureRigging, RiggedSphere, apply_mobius,
    caps_to_punctures, cross_ratio, moduli,
)


def random_mobius(rng):
    while True:
        a, b, c, d = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        if abs(a * d - b * c) > 0.3:
            return Mobius(a, b, c, d)


def test_cross_ratio_examples():
    assert cross_ratio(2, 2, INF, 1 / 3) == 0
    assert cross_ratio(0, 2, INF, 1 / 3) == pytest.approx(6)
    assert is_inf(cross_ratio(INF, 0, 1, INF))
    assert cross_ratio(1, 0, 1, INF) == 1


def test_cross_ratio_mobius_invariance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        q = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        s = random_mobius(rng)
        sq = s(q)
        assert abs(cross_ratio(*sq) - cross_ratio(*q)) < 1e-10 * max(1, abs(cross_ratio(*q)))


def test_cross_ratio_coincident():
    with pytest.raises(CoincidentPoints):
        cross_ratio(0, 1, 1, 2)


def test_moduli_examples():
    lam = 0.3 + 0.7j
    assert moduli(RiggedSphere("puncture", (0, 1, INF, lam))).values[0] == pytest.approx(lam)
    assert moduli(RiggedSphere("puncture", (2, INF, 1 / 3, 0))).values[0] == pytest.approx(6)
    assert moduli(RiggedSphere("puncture", (0, 1, INF))) == ModuliVector(())


def test_apply_mobius_examples():
    lam = 2.5 - 1j
    s = RiggedSphere("puncture", (0, 1, INF, lam))
    assert apply_mobius(s, Mobius.identity()).marked == s.marked
    moved = apply_mobius(s, Mobius(2, 0, 0, 1))
    assert np.max(chordal(np.array(moved.marked), np.array([0, 2, INF, 2 * lam]))) < 1e-15
    assert moduli(moved).distance(moduli(s)) < 1e-14


def test_apply_mobius_random_sweep():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        pts = tuple(rng.standard_normal(6) + 1j * rng.standard_normal(6))
        s = RiggedSphere("puncture", pts)
        base = moduli(s)
        sig = random_mobius(rng)
        worst = max(worst, max(abs(a - b) / max(1, abs(b)) for a, b in zip(moduli(apply_mobius(s, sig)).values,
                                                                          base.values)))
    assert worst < 1e-10


def test_apply_mobius_transports_boundaries():
    s = RiggedSphere("border", (3, INF), (Boundary(0j, 1.0, CircleMap.rotation(0.3)),))
    sig = Mobius(2, 1 + 1j, 0, 1)
    moved = apply_mobius(s, sig)
    b = moved.boundaries[0]
    assert b.center == pytest.approx(1 + 1j) and b.radius == pytest.approx(2)
    p = np.exp(1j * np.linspace(0, 6, 7))
    # rigging transported: psi'(sigma p) = psi(p)
    assert np.max(np.abs(b.psi(sig(p)) - s.boundaries[0].psi(p))) < 1e-14


def test_validation():
    with pytest.raises(CoincidentPoints):
        RiggedSphere("puncture", (0, 1, 1))
    with pytest.raises(InvalidSurface):
        RiggedSphere("border", (0.5,), (Boundary(0j, 1.0, CircleMap.identity()),))
    with pytest.raises(InvalidSurface):
        RiggedSphere("border", (5,), (Boundary(0j, 1.0, CircleMap.identity()),
                                       Boundary(1.5, 1.0, CircleMap.identity())))
    with pytest.raises(InvalidSurface):
        # the chart around 0 would swallow the marked point 0.5
        RiggedSphere("puncture", (0, 0.5, INF), (), (PunctureRigging(0, Mobius.identity()),))


def test_caps_identity():
    res = caps_to_punctures(RiggedSphere.standard_piece((2,)))
    assert res.model == "puncture"
    assert np.max(chordal(np.array(res.marked), np.array([2, 0]))) < 1e-15
    assert res.punctures[0].point == 1
    assert res.punctures[0].chart.is_close(Mobius.identity())


def test_caps_rotation_rigging():
    alpha = 0.5
    res = caps_to_punctures(RiggedSphere.standard_piece((2,), CircleMap.rotation(alpha)))
    z = np.array([0.1, 0.3j, -0.2 + 0.1j])
    assert np.max(np.abs(res.punctures[0](z) - np.exp(1j * alpha) * z)) < 1e-14


def test_caps_two_boundaries():
    s = RiggedSphere("border", (2 + 2j, INF), (Boundary(0j, 1.0, CircleMap.identity()),
                                              Boundary(5 + 0j, 1.0, CircleMap.identity())))
    res = caps_to_punctures(s)
    assert len(res.punctures) == 2
    a, b = res.punctures
    assert not a.contains(res.marked[b.point]) and not b.contains(res.marked[a.point])
    ring = a.domain_boundary(64)
    assert not any(b.contains(p) for p in ring)
    direct = moduli(RiggedSphere("puncture", (2 + 2j, INF, 0, 5)))
    assert moduli(res).distance(direct) < 1e-6


def test_json_round_trip(tmp_path):
    h = CircleMap.from_function(lambda t: t + 0.2 * np.sin(t), 64)
    s = RiggedSphere("border", (3, INF, 2j), (Boundary(0.5, 0.25, h, "in"),), (), ("in", "out"))
    back = RiggedSphere.from_json(s.to_json())
    assert back.marked == s.marked
    assert np.array_equal(back.boundaries[0].rigging.lift, h.lift)
    json.loads(s.to_json())


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.floats(0.5, 3.0), st.floats(-3, 3))
def test_similarity_preserves_moduli(shift, scale, angle):
    s = RiggedSphere("puncture", (0, 1, INF, 0.4 + 0.9j, -2 + 0.5j))
    sig = Mobius(scale * np.exp(1j * angle), shift, 0, 1)
    assert moduli(apply_mobius(s, sig)).distance(moduli(s)) < 1e-12


def test_caps_preserve_retained_moduli():
    rig = CircleMap.disk_automorphism(0.2 + 0.1j, 0.3)
    s = RiggedSphere.standard_piece((2, INF, 3j, -2 - 1j), rig)
    res = caps_to_punctures(s)
    kept = RiggedSphere("puncture", res.marked[:4])
    assert moduli(kept).distance(moduli(s)) < 1e-6


def test_caps_with_sampled_rigging_gives_conformal_chart():
    rig = CircleMap.from_function(lambda t: t + 0.15 * np.sin(t), 512)
    res = caps_to_punctures(RiggedSphere.standard_piece((2, INF)), grid_n=256)
    res2 = caps_to_punctures(RiggedSphere.standard_piece((2, INF), rig), grid_n=256)
    assert res.punctures[0].chart is not None
    emb = res2.punctures[0].embedding
    assert emb is not None
    # the embedded chart is holomorphic on the unit disk: discrete CR defect
    from weldlab.plane import BoxGrid, wirtinger_fd
    g = BoxGrid.uniform(-0.5, 0.5, 101, -0.5, 0.5, 101)
    _, dzb = wirtinger_fd(emb(g.z), g)
    assert np.max(np.abs(dzb[1:-1, 1:-1])) < 1e-6
    assert abs(complex(emb(np.array([0j]))[0]) - res2.marked[2]) < 1e-12
