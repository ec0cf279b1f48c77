import json
from pathlib import Path

import numpy as np
import pytest
from shapely.geometry import Point, Polygon

from conftest import f0_golden
from weldlab.circle_maps import (
    CircleMap, compose, nodes, normalize_three_points, qs_constant, read_csv, sup_distance,
)
from weldlab.mobius import Mobius
from weldlab.plane import BoxGrid, wirtinger_fd
from weldlab.welding import (
    CurveNotSimple, WeldingFailure, boundary_error, synthesize_h, verify_weld, weld,
)

DATA = Path(__file__).parent / "data"
Z = np.exp(1j * nodes(512))


def test_identity_weld():
    pair = weld(CircleMap.identity())
    assert pair.residual <= 1e-10
    assert np.max(np.abs(pair.f_at(Z) - Z)) < 1e-14
    assert np.max(np.abs(pair.g_at(2 * Z) - 2 * Z)) < 1e-14
    assert verify_weld(pair, CircleMap.identity()) == 0.0


def test_sampled_identity_weld():
    pair = weld(CircleMap.from_function(lambda t: t, 256), grid_n=128)
    assert pair.residual <= 1e-10


def test_mobius_weld():
    h = CircleMap.disk_automorphism(0.3 - 0.2j, 0.4)
    pair = weld(h)
    assert pair.mobius_parts is not None
    fm, gm = pair.mobius_parts
    w = gm.inverse()(fm(Z))
    assert np.max(np.abs(w - h(Z))) < 1e-6


def test_rotation_weld_normalization():
    pair = weld(CircleMap.rotation(-0.7))
    assert np.max(np.abs(pair.f_at(Z) - np.exp(-0.7j) * Z)) < 1e-14
    assert np.max(np.abs(pair.g_at(Z) - Z)) < 1e-14


def test_synthesize_identity():
    h, pair = synthesize_h(lambda z: z, 256)
    assert sup_distance(h, CircleMap.identity(), 256) < 1e-12
    assert pair.residual < 1e-12


def test_synthesize_disk_automorphism():
    m0 = Mobius.rotation(0.3) @ Mobius.from_matrix([[1, -0.25j], [0.25j, 1]])
    h, _ = synthesize_h(m0, 512)
    expected = normalize_three_points(CircleMap.mobius(m0))
    assert sup_distance(h, expected, 512) < 1e-10


def test_synthesize_golden(golden):
    h, oracle = golden
    assert not h.is_mobius()
    assert 1 < qs_constant(h).k < 3
    assert oracle.residual <= 1e-10
    assert sup_distance(h, normalize_three_points(h), 1024) < 1e-12


def test_golden_file_matches(golden):
    h, _ = golden
    frozen = read_csv(DATA / "golden_h_z_plus_0.2z2.csv")
    assert sup_distance(h, frozen, 1024) < 1e-12


def test_synthesize_rejects_non_univalent():
    with pytest.raises(CurveNotSimple):
        synthesize_h(lambda z: z + 0.6 * z ** 2, 512)


def test_verify_weld_detects_rotation(golden):
    h, oracle = golden
    shifted = compose(CircleMap.rotation(0.01), h)
    assert verify_weld(oracle, shifted) == pytest.approx(2 * np.sin(0.005), rel=1e-3)


def test_golden_round_trip(golden, golden_weld):
    _, oracle = golden
    err = boundary_error(golden_weld, oracle)
    assert max(err.values()) <= 1e-3
    assert golden_weld.residual <= 1e-3


def test_normalization_certificate(golden_weld):
    assert golden_weld.normalization_certificate()["max_error"] <= 1e-10


def test_shared_boundary_and_disjoint_sides(golden_weld):
    pair = golden_weld
    fb = pair.f_at(Z)
    d = np.min(np.abs(fb[:, None] - pair.g_at(np.exp(1j * nodes(4096)))[None, :]), axis=1)
    assert np.max(d) < 1e-3
    poly = Polygon(np.c_[fb.real, fb.imag])
    inner = pair.f_at(np.outer([0.2, 0.6, 0.95], Z[::8]).ravel())
    outer = pair.g_at(np.outer([1.05, 1.5, 3.0], Z[::8]).ravel())
    assert all(poly.contains(Point(p.real, p.imag)) for p in inner)
    assert not any(poly.contains(Point(p.real, p.imag)) for p in outer)


def test_conformality_of_both_sides(golden_weld):
    g = BoxGrid.uniform(-0.6, 0.6, 121, -0.6, 0.6, 121)
    _, fzb = wirtinger_fd(golden_weld.f_at(g.z), g)
    keep = np.abs(g.z) <= 0.9
    assert np.max(np.abs(fzb)[1:-1, 1:-1][keep[1:-1, 1:-1]]) <= 1e-4
    g2 = BoxGrid.uniform(1.2, 2.4, 121, -0.6, 0.6, 121)
    _, gzb = wirtinger_fd(golden_weld.g_at(g2.z), g2)
    assert np.max(np.abs(gzb)[1:-1, 1:-1]) <= 1e-4


def test_equivariance_under_mobius(golden, golden_weld):
    h, _ = golden
    sigma = Mobius.rotation(0.4) @ Mobius.from_matrix([[1, -0.2], [-0.2, 1]])
    moved = weld(compose(CircleMap.mobius(sigma), h), samples=1024)
    base = golden_weld
    pm1 = np.array([1.0, -1.0])
    src = (complex(base.f_at(np.array([0j]))[0]), *base.g_at(sigma.inverse()(pm1)))
    N = Mobius.three_point(src, (0, 1, -1))
    assert np.max(np.abs(moved.f_at(Z) - N(base.f_at(Z)))) < 1e-3
    assert np.max(np.abs(moved.g_at(Z) - N(base.g_at(sigma.inverse()(Z))))) < 1e-3


@pytest.mark.slow
def test_uniqueness_across_grids(golden):
    h, _ = golden
    a = weld(h, grid_n=512, samples=1024)
    b = weld(h, grid_n=1024, samples=1024)
    err = boundary_error(a, b)
    assert max(err.values()) <= 5e-3


def test_weld_failure_is_loud(golden):
    h, _ = golden
    with pytest.raises(WeldingFailure) as info:
        weld(h, grid_n=64, samples=256, tol=1e-9)
    assert info.value.diagnostics["residual"] > 1e-9


def test_serialization(golden_weld):
    d = json.loads(golden_weld.to_json())
    assert len(d["f_boundary"]) == golden_weld.samples
    assert d["residual"] == golden_weld.residual
    assert golden_weld.to_svg().startswith("<svg")


def test_golden_f_matches_closed_form(golden_weld):
    # the interior map is f0 up to the normalizing Möbius map fixing 0
    F = golden_weld.f_at(Z)
    G = f0_golden(Z)
    m = Mobius.three_point(tuple(G[[0, 100, 300]]), tuple(F[[0, 100, 300]]))
    assert np.max(np.abs(m(G) - F)) < 1e-3
