# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled advection kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double _vanleer(double theta) nogil:
    cdef double a = fabs(theta)
    return (theta + a) / (1.0 + a)


cdef inline double _face(double cU, double cD, double cUU, bint ok) nogil:
    cdef double den = cD - cU
    if not ok or den == 0.0:
        return cU
    return cU + 0.5 * _vanleer((cU - cUU) / den) * den


def advective_outflow(double[:, ::1] c, double[:, ::1] Fz, double[:, ::1] Fr,
                      cnp.uint8_t[:, ::1] active, double c_in, bint limiter,
                      double[:, ::1] out):
    cdef Py_ssize_t nz = c.shape[0], nr = c.shape[1]
    cdef Py_ssize_t i, j, u, d, uu
    cdef double F, cf, inflow = 0.0, outflow = 0.0
    cdef bint ok
    for i in range(nz):
        for j in range(nr):
            out[i, j] = 0.0
    with nogil:
        # axial faces
        for j in range(nr):
            F = Fz[0, j]
            cf = c_in if F > 0 else c[0, j]
            inflow += F * cf
            out[0, j] -= F * cf
            for i in range(1, nz):
                F = Fz[i, j]
                if F == 0.0:
                    continue
                if F > 0:
                    u = i - 1; d = i; uu = i - 2
                else:
                    u = i; d = i - 1; uu = i + 1
                if limiter:
                    ok = uu >= 0 and uu < nz
                    if ok:
                        ok = active[uu, j] and active[u, j] and active[d, j]
                        cf = _face(c[u, j], c[d, j], c[uu, j], ok)
                    else:
                        cf = c[u, j]
                else:
                    cf = c[u, j]
                out[i - 1, j] += F * cf
                out[i, j] -= F * cf
            F = Fz[nz, j]
            cf = c[nz - 1, j]
            outflow += F * cf
            out[nz - 1, j] += F * cf
        # radial faces (axis and wall carry no flux)
        for i in range(nz):
            for j in range(1, nr):
                F = Fr[i, j]
                if F == 0.0:
                    continue
                if F > 0:
                    u = j - 1; d = j; uu = j - 2
                else:
                    u = j; d = j - 1; uu = j + 1
                if limiter:
                    ok = uu >= 0 and uu < nr
                    if ok:
                        ok = active[i, uu] and active[i, u] and active[i, d]
                        cf = _face(c[i, u], c[i, d], c[i, uu], ok)
                    else:
                        cf = c[i, u]
                else:
                    cf = c[i, u]
                out[i, j - 1] += F * cf
                out[i, j] -= F * cf
    return inflow, outflow


def max_outflow_ratio(double[:, ::1] Fz, double[:, ::1] Fr, double[:, ::1] volumes,
                      cnp.uint8_t[:, ::1] active):
    cdef Py_ssize_t nz = volumes.shape[0], nr = volumes.shape[1], i, j
    cdef double o, best = 0.0
    for i in range(nz):
        for j in range(nr):
            if not active[i, j]:
                continue
            o = 0.0
            if Fz[i + 1, j] > 0: o += Fz[i + 1, j]
            if Fz[i, j] < 0: o -= Fz[i, j]
            if Fr[i, j + 1] > 0: o += Fr[i, j + 1]
            if Fr[i, j] < 0: o -= Fr[i, j]
            o /= volumes[i, j]
            if o > best:
                best = o
    return best
