# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""LSTM cell forward/backward as fused C loops.

Matches kernels._pure to float tolerance; the fused loops avoid the
temporary arrays the numpy version allocates per gate.  Shapes and the
cache layout are identical to the pure backend so callers cannot tell
them apart.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


cdef inline double _sigm(double z) nogil:
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    cdef double e = exp(z)
    return e / (1.0 + e)


def lstm_cell_forward(double[:, ::1] wx, double[:, ::1] wh,
                      double[::1] x, double[::1] h_prev, double[::1] m_prev):
    """One cell step; same contract as kernels._pure.lstm_cell_forward."""
    cdef Py_ssize_t hidden = wh.shape[1]
    cdef Py_ssize_t n_in = wx.shape[1]
    cdef Py_ssize_t r, c, j
    cdef double acc

    pre_arr = np.empty(4 * hidden)
    i_arr = np.empty(hidden)
    g_arr = np.empty(hidden)
    f_arr = np.empty(hidden)
    o_arr = np.empty(hidden)
    m_arr = np.empty(hidden)
    h_arr = np.empty(hidden)
    cdef double[::1] pre = pre_arr
    cdef double[::1] iv = i_arr
    cdef double[::1] gv = g_arr
    cdef double[::1] fv = f_arr
    cdef double[::1] ov = o_arr
    cdef double[::1] mv = m_arr
    cdef double[::1] hv = h_arr

    with nogil:
        for r in range(4 * hidden):
            acc = 0.0
            for c in range(n_in):
                acc += wx[r, c] * x[c]
            for c in range(hidden):
                acc += wh[r, c] * h_prev[c]
            pre[r] = acc
        for j in range(hidden):
            iv[j] = _sigm(pre[j])
            gv[j] = tanh(pre[hidden + j])
            fv[j] = _sigm(pre[2 * hidden + j])
            ov[j] = _sigm(pre[3 * hidden + j])
            mv[j] = m_prev[j] * fv[j] + iv[j] * gv[j]
            hv[j] = mv[j] * ov[j]

    cache = (np.asarray(x), np.asarray(h_prev), np.asarray(m_prev),
             i_arr, g_arr, f_arr, o_arr, m_arr)
    return h_arr, m_arr, cache


def lstm_cell_backward(double[:, ::1] wx, double[:, ::1] wh, cache,
                       double[::1] dh, double[::1] dm,
                       double[:, ::1] dwx, double[:, ::1] dwh):
    """Backward through one cell step; accumulates into dwx/dwh in place."""
    cdef double[::1] x = cache[0]
    cdef double[::1] h_prev = cache[1]
    cdef double[::1] m_prev = cache[2]
    cdef double[::1] iv = cache[3]
    cdef double[::1] gv = cache[4]
    cdef double[::1] fv = cache[5]
    cdef double[::1] ov = cache[6]
    cdef double[::1] mv = cache[7]

    cdef Py_ssize_t hidden = h_prev.shape[0]
    cdef Py_ssize_t n_in = x.shape[0]
    cdef Py_ssize_t r, c, j
    cdef double dm_total, d

    dpre_arr = np.empty(4 * hidden)
    dx_arr = np.zeros(n_in)
    dh_prev_arr = np.zeros(hidden)
    dm_prev_arr = np.empty(hidden)
    cdef double[::1] dpre = dpre_arr
    cdef double[::1] dx = dx_arr
    cdef double[::1] dh_prev = dh_prev_arr
    cdef double[::1] dm_prev = dm_prev_arr

    with nogil:
        for j in range(hidden):
            dm_total = dm[j] + dh[j] * ov[j]
            dpre[j] = dm_total * gv[j] * iv[j] * (1.0 - iv[j])
            dpre[hidden + j] = dm_total * iv[j] * (1.0 - gv[j] * gv[j])
            dpre[2 * hidden + j] = dm_total * m_prev[j] * fv[j] * (1.0 - fv[j])
            dpre[3 * hidden + j] = dh[j] * mv[j] * ov[j] * (1.0 - ov[j])
            dm_prev[j] = dm_total * fv[j]
        for r in range(4 * hidden):
            d = dpre[r]
            for c in range(n_in):
                dwx[r, c] += d * x[c]
                dx[c] += wx[r, c] * d
            for c in range(hidden):
                dwh[r, c] += d * h_prev[c]
                dh_prev[c] += wh[r, c] * d

    return dx_arr, dh_prev_arr, dm_prev_arr
