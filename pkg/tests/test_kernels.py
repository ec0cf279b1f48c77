import os
import subprocess
import sys

import numpy as np
import pytest

from weldlab import kernels


def data(nt=300, ns=2000, seed=0):
    rng = np.random.default_rng(seed)
    c = lambda n: rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return c(nt), c(ns), c(ns)


def direct(t, s, w, power):
    return np.array([np.sum(w / (x - s) ** power) for x in t])


@pytest.mark.parametrize("power", [1, 2])
def test_python_kernel_matches_direct_sum(power):
    t, s, w = data()
    ref = direct(t, s, w, power)
    out = kernels.cauchy_sum_python(t, s, w, power, chunk=4096)
    assert np.max(np.abs(out - ref)) < 1e-11 * np.max(np.abs(ref))


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="compiled kernels not built")
@pytest.mark.parametrize("power", [1, 2])
def test_backends_agree(power):
    t, s, w = data(seed=power)
    a = kernels.cauchy_sum(t, s, w, power)
    b = kernels.cauchy_sum_python(t, s, w, power)
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(b))


def test_coincident_pairs_are_skipped():
    s = np.array([0j, 1, 1j])
    w = np.array([1.0, 2.0, 3.0], dtype=complex)
    t = np.array([0j, 2.0])
    expected = np.array([2 / (0 - 1) + 3 / (0 - 1j), 1 / 2 + 2 / 1 + 3 / (2 - 1j)])
    assert np.allclose(kernels.cauchy_sum(t, s, w), expected, atol=1e-15)
    assert np.allclose(kernels.cauchy_sum_python(t, s, w), expected, atol=1e-15)


def test_shape_and_validation():
    t, s, w = data(12, 30)
    assert kernels.cauchy_sum(t.reshape(3, 4), s, w).shape == (3, 4)
    assert np.all(kernels.cauchy_sum(t, s[:0], w[:0]) == 0)
    with pytest.raises(ValueError):
        kernels.cauchy_sum(t, s, w, power=3)


@pytest.mark.parametrize("threads", ["1", "3"])
def test_thread_count_does_not_change_results(monkeypatch, threads):
    t, s, w = data(200, 5000, seed=4)
    base = kernels.cauchy_sum(t, s, w)
    monkeypatch.setenv("WELDLAB_THREADS", threads)
    assert kernels.thread_count() == int(threads)
    assert np.array_equal(kernels.cauchy_sum(t, s, w), base)


def test_thread_count_parsing(monkeypatch):
    monkeypatch.setenv("WELDLAB_THREADS", "junk")
    assert kernels.thread_count() == 1
    monkeypatch.setenv("WELDLAB_THREADS", "0")
    assert kernels.thread_count() == 1


def test_python_fallback_selected_by_environment():
    env = dict(os.environ, WELDLAB_KERNELS="python")
    code = "import weldlab; print(weldlab.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_solver_runs_on_python_fallback():
    env = dict(os.environ, WELDLAB_KERNELS="python")
    code = ("import numpy as np; from weldlab.plane import RectGrid, BeltramiField, disk_coverage;"
            "from weldlab.beltrami_solver import solve_beltrami;"
            "g = RectGrid(64, 4.0); s, _ = solve_beltrami(BeltramiField(g, 0.3 * disk_coverage(g)));"
            "print(repr(complex(s(np.array([0.5 + 0.1j]))[0])))")
    outs = [subprocess.run([sys.executable, "-c", code], env=e, capture_output=True, text=True, check=True).stdout
            for e in (env, dict(os.environ))]
    a, b = (complex(eval(o)) for o in outs)
    assert abs(a - b) < 1e-12
