# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_fallback``; same signatures."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


def nojump_chunk(const double complex[:, ::1] prop, const double complex[::1] psi,
                 double r, double complex[:, ::1] out):
    cdef Py_ssize_t d = prop.shape[0]
    cdef Py_ssize_t m = out.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double complex acc
    cdef double nrm
    cdef const double complex* cur
    cdef double complex* nxt
    cdef Py_ssize_t done = m
    if psi.shape[0] != d or out.shape[1] != d or prop.shape[1] != d:
        raise ValueError("dimension mismatch")
    with nogil:
        cur = &psi[0]
        for k in range(m):
            nxt = &out[k, 0]
            nrm = 0.0
            for i in range(d):
                acc = 0
                for j in range(d):
                    acc = acc + prop[i, j] * cur[j]
                nxt[i] = acc
                nrm = nrm + acc.real * acc.real + acc.imag * acc.imag
            if nrm < r:
                done = k
                break
            cur = nxt
    return done


cdef inline int _popcount(unsigned long x) nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


def subset_purities(const double complex[::1] psi, int n):
    cdef Py_ssize_t dim = 1 << n
    cdef unsigned long full = dim - 1
    cdef unsigned long mask, comp
    cdef int a, b, q, bit
    cdef Py_ssize_t ia, ja, ib, na, nb, cnt_a, cnt_b
    cdef double complex acc
    cdef double val
    cdef cnp.ndarray[double, ndim=1] result = np.empty(dim)
    cdef double[::1] out = result
    cdef Py_ssize_t* idx_a = <Py_ssize_t*> malloc(dim * sizeof(Py_ssize_t))
    cdef Py_ssize_t* idx_b = <Py_ssize_t*> malloc(dim * sizeof(Py_ssize_t))
    if psi.shape[0] != dim:
        free(idx_a)
        free(idx_b)
        raise ValueError("dimension mismatch")
    if idx_a == NULL or idx_b == NULL:
        free(idx_a)
        free(idx_b)
        raise MemoryError()
    with nogil:
        for mask in range(dim):
            a = _popcount(mask)
            comp = full ^ mask
            if 2 * a > n or (2 * a == n and mask > comp):
                continue
            b = n - a
            na = 1 << a
            nb = 1 << b
            # scatter counters into the bit positions of each side
            for ia in range(na):
                idx_a[ia] = 0
                cnt_a = 0
                for bit in range(n):
                    if mask >> bit & 1:
                        if ia >> cnt_a & 1:
                            idx_a[ia] |= 1 << bit
                        cnt_a += 1
            for ib in range(nb):
                idx_b[ib] = 0
                cnt_b = 0
                for bit in range(n):
                    if comp >> bit & 1:
                        if ib >> cnt_b & 1:
                            idx_b[ib] |= 1 << bit
                        cnt_b += 1
            val = 0.0
            for ia in range(na):
                for ja in range(na):
                    acc = 0
                    for ib in range(nb):
                        acc = acc + psi[idx_a[ia] | idx_b[ib]] * psi[idx_a[ja] | idx_b[ib]].conjugate()
                    val = val + acc.real * acc.real + acc.imag * acc.imag
            out[mask] = val
            out[comp] = val
    free(idx_a)
    free(idx_b)
    return result
