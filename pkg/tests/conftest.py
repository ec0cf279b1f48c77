import numpy as np
import pytest

from weldlab.welding import synthesize_h, weld


def f0_golden(z):
    return z + 0.2 * z ** 2


def chordal(a, b):
    """Chordal distance on the Riemann sphere; handles infinite entries."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = np.empty(np.broadcast(a, b).shape)
    a, b = np.broadcast_arrays(a, b)
    ia, ib = ~np.isfinite(a), ~np.isfinite(b)
    both = ia & ib
    one = ia ^ ib
    fin = ~(ia | ib)
    out[both] = 0.0
    w = np.where(ia, b, a)[one]
    out[one] = 2 / np.sqrt(1 + np.abs(w) ** 2)
    x, y = a[fin], b[fin]
    out[fin] = 2 * np.abs(x - y) / np.sqrt((1 + np.abs(x) ** 2) * (1 + np.abs(y) ** 2))
    return out


@pytest.fixture(scope="session")
def golden():
    """(h, oracle pair) synthesized from f0(z) = z + 0.2 z^2 with 1024 samples."""
    return synthesize_h(f0_golden, 1024)


@pytest.fixture(scope="session")
def golden_weld(golden):
    h, _ = golden
    return weld(h, grid_n=512, samples=1024)
