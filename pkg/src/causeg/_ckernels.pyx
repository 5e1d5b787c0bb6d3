# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``.

Signatures and results match the NumPy fallback.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def nearest_centroid(X, centroids):
    cdef const double[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] cv = np.ascontiguousarray(centroids, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], k = cv.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] lv = labels
    cdef double[::1] bv = best
    cdef Py_ssize_t i, j, m
    cdef double dist, diff, cur
    with nogil:
        for i in range(n):
            cur = 1.0 / 0.0
            for j in range(k):
                dist = 0.0
                for m in range(d):
                    diff = xv[i, m] - cv[j, m]
                    dist = dist + diff * diff
                if dist < cur:
                    cur = dist
                    lv[i] = j
            bv[i] = cur
    return labels, best


def centroid_sums(X, labels, Py_ssize_t k):
    cdef const double[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.int64_t[::1] lv = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1]
    sums = np.zeros((k, d), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] sv = sums
    cdef cnp.int64_t[::1] cv = counts
    cdef Py_ssize_t i, m, c
    with nogil:
        for i in range(n):
            c = lv[i]
            cv[c] += 1
            for m in range(d):
                sv[c, m] += xv[i, m]
    return sums, counts


def qini_prefix(y_sorted, t_sorted):
    cdef const double[::1] yv = np.ascontiguousarray(y_sorted, dtype=np.float64)
    cdef const cnp.int64_t[::1] tv = np.ascontiguousarray(t_sorted, dtype=np.int64)
    cdef Py_ssize_t n = yv.shape[0], i
    out = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double y_t = 0.0, y_c = 0.0
    cdef cnp.int64_t n_t = 0, n_c = 0
    with nogil:
        for i in range(n):
            if tv[i] == 1:
                y_t = y_t + yv[i]
                n_t += 1
            else:
                y_c = y_c + yv[i]
                n_c += 1
            if n_c > 0:
                ov[i + 1] = y_t - y_c * (<double>n_t / <double>n_c)
            else:
                ov[i + 1] = y_t
    return out
