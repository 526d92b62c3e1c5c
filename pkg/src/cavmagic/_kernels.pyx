# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, fabs, INFINITY, isfinite

cnp.import_array()


def cloud_sums(phase_x, phase_z, Py_ssize_t chunk=65536):
    cdef const double[::1] px = np.ascontiguousarray(phase_x, dtype=np.float64)
    cdef const double[::1] pz = np.ascontiguousarray(phase_z, dtype=np.float64)
    cdef Py_ssize_t n = px.shape[0], i, start, stop
    cdef double cx, s_cos2 = 0.0, s_amp = 0.0, c_cos2, c_amp
    if pz.shape[0] != n:
        raise ValueError("phase arrays differ in length")
    with nogil:
        start = 0
        while start < n:
            stop = start + chunk
            if stop > n:
                stop = n
            c_cos2 = 0.0
            c_amp = 0.0
            for i in range(start, stop):
                cx = cos(px[i])
                c_cos2 += cx * cx
                c_amp += cx * cos(pz[i])
            s_cos2 += c_cos2
            s_amp += c_amp
            start = stop
    return s_cos2, s_amp


def photon_map(drive, cavity, pol_re, pol_im, double kappa, double g2n, double scale):
    cdef const double[::1] d = np.ascontiguousarray(drive, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(cavity, dtype=np.float64)
    cdef const double[::1] pr = np.ascontiguousarray(pol_re, dtype=np.float64)
    cdef const double[::1] pi = np.ascontiguousarray(pol_im, dtype=np.float64)
    cdef Py_ssize_t nd = d.shape[0], nc = c.shape[0], i, j
    out = np.empty((nd, nc), dtype=np.float64)
    cdef double[:, ::1] M = out
    cdef double num, re, re2, shift, im
    with nogil:
        for i in range(nd):
            num = scale * (pr[i] * pr[i] + pi[i] * pi[i])
            re = -kappa + g2n * pr[i]
            re2 = re * re
            shift = g2n * pi[i]
            for j in range(nc):
                im = (d[i] - c[j]) + shift
                M[i, j] = num / (re2 + im * im)
    return out


def ridge_scan(M_in, drive, cavity, medians):
    cdef const double[:, :] M = np.asarray(M_in, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(drive, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(cavity, dtype=np.float64)
    cdef const double[::1] med = np.ascontiguousarray(medians, dtype=np.float64)
    cdef Py_ssize_t nd = M.shape[0], nc = M.shape[1], i, j, best
    index = np.full(nc, -1, dtype=np.int64)
    metric = np.full(nc, np.nan)
    cdef long long[::1] idx = index
    cdef double[::1] met = metric
    cdef double dist, best_dist, v
    if nd < 3:
        return index, metric
    with nogil:
        for j in range(nc):
            best = -1
            best_dist = INFINITY
            for i in range(1, nd - 1):
                v = M[i, j]
                if v > M[i - 1, j] and v >= M[i + 1, j]:
                    dist = fabs(d[i] - c[j])
                    if dist < best_dist:
                        best_dist = dist
                        best = i
            if best >= 0:
                idx[j] = best
                met[j] = (M[best, j] - med[j]) / med[j]
    return index, metric
