"""Hot summation kernels with a compiled core and a numpy fallback.

The compiled module ``weldlab._kernels`` is used when it imports cleanly and
``WELDLAB_KERNELS`` is not set to ``python``.  ``WELDLAB_THREADS`` caps the
OpenMP thread count of the compiled path.
"""
from __future__ import annotations

import os

import numpy as np

try:
    if os.environ.get("WELDLAB_KERNELS", "").lower() == "python":
        raise ImportError("compiled kernels disabled by WELDLAB_KERNELS")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("WELDLAB_THREADS", "1")))
    except ValueError:
        return 1


def cauchy_sum_python(targets, sources, weights, power=1, eps=1e-14, chunk=2**22):
    targets = np.ascontiguousarray(targets, dtype=complex).ravel()
    sources = np.ascontiguousarray(sources, dtype=complex).ravel()
    weights = np.ascontiguousarray(weights, dtype=complex).ravel()
    out = np.zeros(targets.size, dtype=complex)
    if sources.size == 0:
        return out
    step = max(1, chunk // sources.size)
    for start in range(0, targets.size, step):
        d = targets[start:start + step, None] - sources[None, :]
        near = np.abs(d) <= eps
        d[near] = 1.0
        k = 1.0 / d if power == 1 else 1.0 / (d * d)
        k[near] = 0.0
        out[start:start + step] = k @ weights
    return out


def cauchy_sum(targets, sources, weights, power=1, eps=1e-14):
    """Sum ``weights[j] / (targets[i] - sources[j])**power`` over j for every target.

    ``power`` is 1 (Cauchy kernel) or 2 (its derivative up to sign).  Pairs
    closer than ``eps`` are skipped, which is the principal-value convention
    for node-centred quadrature.
    """
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    shape = np.shape(targets)
    if _compiled is None:
        return cauchy_sum_python(targets, sources, weights, power, eps).reshape(shape)
    t = np.ascontiguousarray(targets, dtype=complex).ravel()
    s = np.ascontiguousarray(sources, dtype=complex).ravel()
    w = np.ascontiguousarray(weights, dtype=complex).ravel()
    return _compiled.cauchy_sum(t, s, w, power, eps, thread_count()).reshape(shape)
