"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import chordal, f0_golden
from weldlab.ba_extension import ba_extend
from weldlab.beltrami_solver import renormalize, solve_beltrami
from weldlab.circle_maps import CircleMap, compose, qs_constant, reciprocal_conjugate, sup_distance, write_csv
from weldlab.holomorphy_lab import FamilySpec, holomorphy_report
from weldlab.mobius import INF, Mobius
from weldlab.plane import BeltramiField, BoxGrid, PlaneMap, RectGrid, beltrami_of_map, disk_coverage
from weldlab.rigged_spheres import RiggedSphere, apply_mobius, moduli
from weldlab.sewing import moduli_of_sewn, sew
from weldlab.welding import boundary_error, synthesize_h, weld

BUDGET = 60.0
PROBES = np.array([0.5, 0.5j, -0.7 + 0.2j, 1.5 + 1j, -2 - 0.5j, 0.95, 1.05j, 3.0])


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def done(n, ok, detail):
        elapsed = time.perf_counter() - start
        ok = bool(ok) and elapsed < BUDGET
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail}; {elapsed:.1f} s)")
        assert ok, detail
    return done


def test_criterion_1_beltrami_oracle(report):
    grid = RectGrid(512, 4.0)
    sol, _ = solve_beltrami(BeltramiField(grid, 0.3 * disk_coverage(grid)), "hydrodynamic")
    z = grid.z
    r = np.abs(z)
    exact = np.where(r < 1, z + 0.3 * np.conj(z), z + 0.3 / np.where(z == 0, 1, z))
    keep = ((r <= 0.9) | (r >= 1.1)) & (r <= 2)
    err = float(np.max(np.abs(sol.values - exact)[keep]))
    report(1, err <= 5e-3, f"sup error {err:.3g} <= 5e-3")


def test_criterion_2_uniqueness(report):
    errs = []
    for n in (512, 1024):
        grid = RectGrid(n, 4.0)
        sol, _ = solve_beltrami(BeltramiField(grid, 0.3 * disk_coverage(grid)), "hydrodynamic")
        errs.append(renormalize(sol)(PROBES))
    err = float(np.max(np.abs(errs[0] - errs[1])))
    report(2, err <= 5e-3, f"512 vs 1024 disagreement {err:.3g} <= 5e-3")


def test_criterion_3_beurling_ahlfors_identity(report):
    grid = BoxGrid.uniform(-3, 3, 61, 0.05, 3, 60)
    f = ba_extend(lambda x: x, grid)
    mu = beltrami_of_map(PlaneMap("sphere", grid, f.values)).mu
    err = float(np.max(np.abs(mu - 1 / 3)))
    report(3, err <= 1e-8, f"max |mu - 1/3| = {err:.3g} <= 1e-8")


def test_criterion_4_welding(report):
    ident = weld(CircleMap.identity()).residual
    h, oracle = synthesize_h(f0_golden, 1024)
    pair = weld(h, samples=1024)
    err = max(boundary_error(pair, oracle).values())
    report(4, ident <= 1e-10 and err <= 1e-2,
           f"identity residual {ident:.3g} <= 1e-10, golden round trip {err:.3g} <= 1e-2")


def test_criterion_5_qs_constants(report):
    k1 = qs_constant(CircleMap.identity()).k
    pull = CircleMap.from_line_map(lambda x: np.where(x >= 0, x, 2 * x), 2048)
    k2 = qs_constant(pull, depth=8).k
    report(5, k1 == 1.0 and abs(k2 - 2) <= 0.1, f"identity k = {k1!r}, pullback k = {k2:.6g} within 5% of 2")


def _random_mobius(rng):
    while True:
        a, b, c, d = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        if abs(a * d - b * c) > 0.3:
            return Mobius(a, b, c, d)


def test_criterion_6_sewing(report):
    piece = RiggedSphere.standard_piece
    s = sew(piece((2, INF)), 0, piece((3, INF)), 0)
    m_err = abs(moduli_of_sewn(s).values[0] - 6)

    alpha = CircleMap.from_function(lambda t: t + 0.2 * np.sin(t), 1024)
    psi1 = CircleMap.from_function(lambda t: t + 0.1 * np.sin(2 * t), 1024)
    psi2 = CircleMap.rotation(0.3)
    a = sew(piece((2, INF, 1.5j), psi1), 0, piece((3, INF), psi2), 0)
    b = sew(piece((2, INF, 1.5j), compose(alpha, psi1)), 0,
            piece((3, INF), compose(reciprocal_conjugate(alpha), psi2)), 0)
    w = np.array([1.5, 2j, -3 + 1j, 10.0])
    g_err = max(float(np.max(chordal(np.array(a.result.marked), np.array(b.result.marked)))),
                float(np.max(np.abs(a.left(w) - b.left(w)))), float(np.max(np.abs(a.right(w) - b.right(w)))),
                sup_distance(a.seam, b.seam, 1024))

    rng = np.random.default_rng(2024)
    base1 = piece((2, INF, 1.5 + 1j), CircleMap.disk_automorphism(0.2 - 0.1j, 0.4))
    base2 = piece((3, INF), CircleMap.rotation(-0.2))
    ref = moduli_of_sewn(sew(base1, 0, base2, 0))
    worst, done = 0.0, 0
    while done < 100:
        try:
            m1, m2 = apply_mobius(base1, _random_mobius(rng)), apply_mobius(base2, _random_mobius(rng))
        except Exception:
            continue
        worst = max(worst, moduli_of_sewn(sew(m1, 0, m2, 0)).distance(ref))
        done += 1
    report(6, m_err <= 1e-8 and g_err <= 1e-10 and worst <= 1e-6,
           f"moduli error {m_err:.3g} <= 1e-8, gauge change {g_err:.3g} <= 1e-10, "
           f"100-case Möbius sweep {worst:.3g} <= 1e-6")


def test_criterion_7_holomorphy_of_sewing(report):
    marked = holomorphy_report(FamilySpec("marked-point-motion", t_domain=0.5)).ratio
    rig = holomorphy_report(FamilySpec("rigging-path"), delta=1e-3, richardson=False).ratio
    conj = holomorphy_report(FamilySpec("synthetic", {"function": "conj"})).ratio
    report(7, marked <= 1e-6 and rig <= 1e-2 and conj >= 0.99,
           f"marked-point ratio {marked:.3g} <= 1e-6, rigging-path ratio {rig:.3g} <= 1e-2, "
           f"anti-holomorphic ratio {conj:.3g} >= 0.99")


def test_criterion_8_holomorphy_of_projection(report):
    ratio = holomorphy_report(FamilySpec("beltrami-path"), delta=1e-3, richardson=False).ratio
    report(8, ratio <= 1e-2, f"solver-probe ratio {ratio:.3g} <= 1e-2")


def _cli(*args, cwd):
    return subprocess.run([sys.executable, "-m", "weldlab", *args], cwd=cwd, capture_output=True,
                          env=dict(os.environ)).returncode


def test_criterion_9_determinism(report, tmp_path):
    write_csv(CircleMap.from_function(lambda t: t + 0.2 * np.sin(t) + 0.05 * np.cos(3 * t), 512), tmp_path / "h.csv")
    left = RiggedSphere.standard_piece((2, INF), CircleMap.from_function(lambda t: t + 0.1 * np.sin(t), 512))
    (tmp_path / "l.json").write_text(left.to_json())
    (tmp_path / "r.json").write_text(RiggedSphere.standard_piece((3, INF, 2j)).to_json())
    (tmp_path / "fam.json").write_text(FamilySpec("marked-point-motion", t_domain=0.5).to_json())
    runs = {
        "weld": ["weld", "h.csv", "--grid", "256", "--out", "{}.json"],
        "sew": ["sew", "l.json", "0", "r.json", "0", "--grid", "256", "--out", "{}.json"],
        "holo": ["holo", "fam.json", "--out", "{}.csv", "--summary", "{}.sum.json"],
    }
    same, codes = True, []
    for name, argv in runs.items():
        blobs = []
        for k in range(2):
            tag = f"{name}{k}"
            codes.append(_cli(*[a.format(tag) for a in argv], "--manifest", f"{tag}.m.json", cwd=tmp_path))
            outs = sorted(json.loads((tmp_path / f"{tag}.m.json").read_text())["outputs"])
            blobs.append([(tmp_path / p).read_bytes() for p in outs])
        same &= blobs[0] == blobs[1]
        codes.append(_cli("rerun", f"{name}0.m.json", cwd=tmp_path))
    report(9, same and not any(codes), f"byte-identical repeats: {same}, exit codes {codes}")
