"""LSTM cell forward/backward in plain numpy.

Reference implementation of the cell kernels; the compiled backend in
``_core.pyx`` must match it to tight float tolerance.  Gate weights arrive
stacked: ``wx`` is (4H x In) over the input, ``wh`` is (4H x H) over the
previous hidden state, row blocks ordered [input gate i, candidate g,
forget gate f, output gate o].

The cell (no bias terms):
    i = sigm(W1 x + W2 h_prev)        g = tanh(W3 x + W4 h_prev)
    f = sigm(W5 x + W6 h_prev)        o = sigm(W7 x + W8 h_prev)
    m = m_prev * f + i * g            h = m * o
"""

import numpy as np

from ..numerics import sigm


def lstm_cell_forward(wx, wh, x, h_prev, m_prev):
    """One cell step.

    Arguments:
        wx: (4H, In) stacked input weights
        wh: (4H, H) stacked recurrent weights
        x: (In,) input vector
        h_prev, m_prev: (H,) previous hidden and memory

    Returns (h, m, cache) where cache feeds lstm_cell_backward.
    """
    hidden = wh.shape[1]
    pre = wx @ x + wh @ h_prev
    i = sigm(pre[:hidden])
    g = np.tanh(pre[hidden:2 * hidden])
    f = sigm(pre[2 * hidden:3 * hidden])
    o = sigm(pre[3 * hidden:])
    m = m_prev * f + i * g
    h = m * o
    cache = (x, h_prev, m_prev, i, g, f, o, m)
    return h, m, cache


def lstm_cell_backward(wx, wh, cache, dh, dm, dwx, dwh):
    """Backward through one cell step.

    ``dh``/``dm`` are the gradients arriving at this step's h and m.  Weight
    gradients accumulate in place into ``dwx``/``dwh``.

    Returns (dx, dh_prev, dm_prev).
    """
    x, h_prev, m_prev, i, g, f, o, m = cache
    hidden = h_prev.shape[0]

    do = dh * m
    dm_total = dm + dh * o
    di = dm_total * g
    dg = dm_total * i
    df = dm_total * m_prev
    dm_prev = dm_total * f

    dpre = np.empty(4 * hidden)
    dpre[:hidden] = di * i * (1.0 - i)
    dpre[hidden:2 * hidden] = dg * (1.0 - g * g)
    dpre[2 * hidden:3 * hidden] = df * f * (1.0 - f)
    dpre[3 * hidden:] = do * o * (1.0 - o)

    dwx += np.outer(dpre, x)
    dwh += np.outer(dpre, h_prev)
    dx = wx.T @ dpre
    dh_prev = wh.T @ dpre
    return dx, dh_prev, dm_prev
