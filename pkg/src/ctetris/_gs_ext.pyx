# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gauss-Seidel sweeps for ``(-Δ + shift·I) u = rhs``."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def gauss_seidel_sweep(double[:, ::1] u, const double[:, ::1] rhs, int sweeps, double shift):
    """In-place lexicographic sweeps; see ``ctetris._gs_py`` for the reference."""
    cdef Py_ssize_t ny = u.shape[0]
    cdef Py_ssize_t nx = u.shape[1]
    cdef Py_ssize_t i, j
    cdef int k, deg
    cdef double s
    for k in range(sweeps):
        for i in range(ny):
            for j in range(nx):
                s = rhs[i, j]
                deg = 0
                if i > 0:
                    s = s + u[i - 1, j]
                    deg += 1
                if i < ny - 1:
                    s = s + u[i + 1, j]
                    deg += 1
                if j > 0:
                    s = s + u[i, j - 1]
                    deg += 1
                if j < nx - 1:
                    s = s + u[i, j + 1]
                    deg += 1
                if deg + shift > 0:
                    u[i, j] = s / (deg + shift)
