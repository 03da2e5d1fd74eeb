# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled spring-energy kernels; mirrors _kernels_py exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

BACKEND = "cython"


def cell_spring_energy(double[:, :, ::1] pos, long long[:, ::1] pairs,
                       double[::1] rest, double[::1] weight):
    cdef Py_ssize_t C = pos.shape[0]
    cdef Py_ssize_t P = pairs.shape[0]
    cdef cnp.ndarray[double, ndim=1] out_arr = np.zeros(C, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t c, p, i, j
    cdef double dx, dy, dz, r, dev
    for c in range(C):
        for p in range(P):
            i = pairs[p, 0]
            j = pairs[p, 1]
            dx = pos[c, i, 0] - pos[c, j, 0]
            dy = pos[c, i, 1] - pos[c, j, 1]
            dz = pos[c, i, 2] - pos[c, j, 2]
            r = sqrt(dx * dx + dy * dy + dz * dz)
            dev = r - rest[p]
            out[c] += weight[p] * dev * dev
    return out_arr
