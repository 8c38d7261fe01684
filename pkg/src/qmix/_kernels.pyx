# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops; mirrors :mod:`qmix._fallback` exactly.

Complex products are spelled out on real and imaginary parts: C99 complex
multiplication goes through a NaN-aware library call that dominates the loop.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


def run_program(cplx[:, ::1] state,
                const cplx[:, :, ::1] mats,
                const long long[::1] tbits,
                const long long[::1] tbits2,
                const long long[::1] cmasks,
                const long long[::1] kinds):
    cdef Py_ssize_t dim = state.shape[0]
    cdef Py_ssize_t ncol = state.shape[1]
    cdef Py_ssize_t g, i, j, m
    cdef long long t, t2, cm
    cdef double r00, i00, r01, i01, r10, i10, r11, i11, ar, ai, br, bi
    cdef double* row_i
    cdef double* row_j
    cdef double tmp
    if dim == 0 or ncol == 0:
        return
    cdef double* base = <double*> &state[0, 0]
    for g in range(mats.shape[0]):
        t = tbits[g]
        cm = cmasks[g]
        if kinds[g] == 0:
            r00 = mats[g, 0, 0].real; i00 = mats[g, 0, 0].imag
            r01 = mats[g, 0, 1].real; i01 = mats[g, 0, 1].imag
            r10 = mats[g, 1, 0].real; i10 = mats[g, 1, 0].imag
            r11 = mats[g, 1, 1].real; i11 = mats[g, 1, 1].imag
            for i in range(dim):
                if (i & t) or (i & cm) != cm:
                    continue
                j = i | t
                row_i = base + 2 * i * ncol
                row_j = base + 2 * j * ncol
                for m in range(ncol):
                    ar = row_i[2 * m]; ai = row_i[2 * m + 1]
                    br = row_j[2 * m]; bi = row_j[2 * m + 1]
                    row_i[2 * m] = r00 * ar - i00 * ai + r01 * br - i01 * bi
                    row_i[2 * m + 1] = r00 * ai + i00 * ar + r01 * bi + i01 * br
                    row_j[2 * m] = r10 * ar - i10 * ai + r11 * br - i11 * bi
                    row_j[2 * m + 1] = r10 * ai + i10 * ar + r11 * bi + i11 * br
        else:
            t2 = tbits2[g]
            for i in range(dim):
                if not (i & t) or (i & t2) or (i & cm) != cm:
                    continue
                j = i ^ t ^ t2
                row_i = base + 2 * i * ncol
                row_j = base + 2 * j * ncol
                for m in range(2 * ncol):
                    tmp = row_i[m]
                    row_i[m] = row_j[m]
                    row_j[m] = tmp


def subset_purity_sum(const cplx[:, ::1] rho):
    cdef Py_ssize_t dim = rho.shape[0]
    cdef Py_ssize_t mask, x, y, p, q
    cdef double total = 0.0
    cdef double part
    if dim == 0:
        return 0.0
    cdef const double* base = <const double*> &rho[0, 0]
    for mask in range(dim):
        part = 0.0
        for x in range(dim):
            for y in range(dim):
                p = 2 * (x * dim + ((y & mask) | (x & ~mask)))
                q = 2 * (y * dim + ((x & mask) | (y & ~mask)))
                part += base[p] * base[q] - base[p + 1] * base[q + 1]
        total += part
    return total
