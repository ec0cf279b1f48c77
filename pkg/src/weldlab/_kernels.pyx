# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled direct-summation kernels (see kernels.py for the numpy twins)."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()


def cauchy_sum(const double complex[:] targets, const double complex[:] sources,
               const double complex[:] weights, int power=1, double eps=1e-14,
               int nthreads=1):
    """out[i] = sum_j weights[j] / (targets[i] - sources[j])**power, skipping near-coincident pairs."""
    cdef Py_ssize_t nt = targets.shape[0], ns = sources.shape[0]
    cdef Py_ssize_t i, j
    cdef double tr, ti, dr, di, den, er, ei, wr, wi, acc_r, acc_i, eps2 = eps * eps
    out = np.zeros(nt, dtype=np.complex128)
    cdef double complex[:] o = out
    if nthreads < 1:
        nthreads = 1
    for i in prange(nt, nogil=True, num_threads=nthreads, schedule="static"):
        tr = targets[i].real
        ti = targets[i].imag
        acc_r = 0.0
        acc_i = 0.0
        for j in range(ns):
            dr = tr - sources[j].real
            di = ti - sources[j].imag
            den = dr * dr + di * di
            if den <= eps2:
                continue
            # 1/d = conj(d)/|d|^2 ; 1/d^2 = conj(d)^2/|d|^4
            if power == 1:
                er = dr / den
                ei = -di / den
            else:
                er = (dr * dr - di * di) / (den * den)
                ei = -2.0 * dr * di / (den * den)
            wr = weights[j].real
            wi = weights[j].imag
            acc_r = acc_r + wr * er - wi * ei
            acc_i = acc_i + wr * ei + wi * er
        o[i] = acc_r + 1j * acc_i
    return out
