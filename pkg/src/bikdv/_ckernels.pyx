# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled radial kernels: flux matvec, pentadiagonal LDL^T, fused moments."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def flux_apply(const double[::1] f, const double[::1] face, double outer):
    cdef Py_ssize_t n = f.shape[0], i
    cdef double flux
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    out[0] = 0.0
    for i in range(n - 1):
        flux = face[i] * (f[i + 1] - f[i])
        out[i] += flux
        out[i + 1] = -flux
    out[n - 1] += -2.0 * outer * f[n - 1]
    return out_arr


def penta_factor(const double[::1] d0, const double[::1] d1, const double[::1] d2):
    cdef Py_ssize_t n = d0.shape[0], i
    fac = np.zeros((3, n))
    cdef double[:, ::1] F = fac
    cdef double dm1, dm2, l1, l2
    for i in range(n):
        l2 = 0.0
        l1 = 0.0
        if i >= 2:
            l2 = d2[i - 2] / F[0, i - 2]
        if i >= 1:
            if i >= 2:
                l1 = (d1[i - 1] - l2 * F[0, i - 2] * F[1, i - 1]) / F[0, i - 1]
            else:
                l1 = d1[i - 1] / F[0, i - 1]
        F[1, i] = l1
        F[2, i] = l2
        F[0, i] = d0[i]
        if i >= 1:
            F[0, i] -= l1 * l1 * F[0, i - 1]
        if i >= 2:
            F[0, i] -= l2 * l2 * F[0, i - 2]
        if F[0, i] <= 0.0:
            raise np.linalg.LinAlgError("pentadiagonal matrix is not positive definite")
    return fac


def penta_solve(const double[:, ::1] F, const double[::1] b):
    cdef Py_ssize_t n = b.shape[0], i
    x_arr = np.empty(n)
    cdef double[::1] x = x_arr
    for i in range(n):
        x[i] = b[i]
        if i >= 1:
            x[i] -= F[1, i] * x[i - 1]
        if i >= 2:
            x[i] -= F[2, i] * x[i - 2]
    for i in range(n):
        x[i] /= F[0, i]
    for i in range(n - 2, -1, -1):
        x[i] -= F[1, i + 1] * x[i + 1]
        if i + 2 < n:
            x[i] -= F[2, i + 2] * x[i + 2]
    return x_arr


def moments(const double[::1] u, const double[::1] v, const double[::1] w):
    cdef Py_ssize_t n = u.shape[0], i
    cdef double su2 = 0.0, sv2 = 0.0, su4 = 0.0, sv3 = 0.0, suv = 0.0
    cdef double a, b, a2
    for i in range(n):
        a = u[i]
        b = v[i]
        a2 = a * a
        su2 += w[i] * a2
        sv2 += w[i] * b * b
        su4 += w[i] * a2 * a2
        sv3 += w[i] * fabs(b) * b * b
        suv += w[i] * a2 * b
    return su2, sv2, su4, sv3, suv
