# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sweep kernel for the monotone wide-stencil iteration.

Same contract as lmce._sweep_py; see that module for the layout of the
precomputed stencil arrays.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan

cnp.import_array()

BACKEND = "cython"


def delta_minmax(double[::1] u,
                 int[:, :, ::1] idx,
                 double[:, :, ::1] w,
                 double[:, ::1] const,
                 double[:, ::1] centerw):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t m = idx.shape[1]
    cdef Py_ssize_t k = idx.shape[2]
    cdef cnp.ndarray[double, ndim=1] dmin_arr = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] dmax_arr = np.empty(n)
    cdef double[::1] dmin = dmin_arr
    cdef double[::1] dmax = dmax_arr
    cdef Py_ssize_t i, d, j
    cdef int col
    cdef double v, lo, hi, ui
    for i in range(n):
        ui = u[i]
        lo = 1e300
        hi = -1e300
        for d in range(m):
            v = const[i, d] - centerw[i, d] * ui
            for j in range(k):
                col = idx[i, d, j]
                if col >= 0:
                    v += w[i, d, j] * u[col]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        dmin[i] = lo
        dmax[i] = hi
    return dmin_arr, dmax_arr


def sweep_block(double[::1] u_in,
                double[::1] tau,
                double c,
                int[:, :, ::1] idx,
                double[:, :, ::1] w,
                double[:, ::1] const,
                double[:, ::1] centerw,
                int max_sweeps,
                double tol_update):
    cdef Py_ssize_t n = u_in.shape[0]
    cdef Py_ssize_t m = idx.shape[1]
    cdef Py_ssize_t k = idx.shape[2]
    cdef cnp.ndarray[double, ndim=1] a_arr = np.array(u_in, copy=True)
    cdef cnp.ndarray[double, ndim=1] b_arr = np.empty(n)
    cdef cnp.ndarray[double, ndim=2] hist_arr = np.empty((max_sweeps, 3))
    cdef double[::1] ua = a_arr
    cdef double[::1] ub = b_arr
    cdef double[:, ::1] hist = hist_arr
    cdef double[::1] src, dst
    cdef Py_ssize_t i, d, j, s
    cdef int col, done = 0
    cdef double v, lo, hi, ui, upd, max_abs, mn, mx
    cdef bint flip = False
    for s in range(max_sweeps):
        src = ub if flip else ua
        dst = ua if flip else ub
        max_abs = 0.0
        mn = 1e300
        mx = -1e300
        for i in range(n):
            ui = src[i]
            lo = 1e300
            hi = -1e300
            for d in range(m):
                v = const[i, d] - centerw[i, d] * ui
                for j in range(k):
                    col = idx[i, d, j]
                    if col >= 0:
                        v += w[i, d, j] * src[col]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            upd = tau[i] * (atan(lo) + atan(hi) - c)
            dst[i] = ui + upd
            if upd > mx:
                mx = upd
            if upd < mn:
                mn = upd
            if upd < 0.0:
                upd = -upd
            if upd > max_abs:
                max_abs = upd
        hist[s, 0] = max_abs
        hist[s, 1] = mn
        hist[s, 2] = mx
        done = s + 1
        flip = not flip
        if max_abs <= tol_update:
            break
    # return the buffer written by the last sweep
    if flip:
        return b_arr, done, hist_arr[:done].copy()
    return a_arr, done, hist_arr[:done].copy()
