"""Pure-numpy implementations of the hot kernels.

These are the reference implementations; the compiled extension in
``_ckern.pyx`` mirrors each signature exactly and is preferred at import time
when available.  Everything here operates on contiguous float64 arrays.
"""

import numpy as np


def tanh_backward(y, g):
    """Adjoint of tanh given its output y: g * (1 - y^2)."""
    return g * (1.0 - y * y)


def square_backward(x, g):
    """Adjoint of elementwise square: 2 * g * x."""
    return 2.0 * g * x


def maxpool_forward(x):
    """Columnwise max of a 2-D array.

    Returns (pooled, argmax) where argmax holds the winning row per column.
    Ties resolve to the lowest row index (np.argmax convention).
    """
    idx = np.argmax(x, axis=0)
    cols = np.arange(x.shape[1])
    return x[idx, cols], idx


def maxpool_backward(idx, g, nrows):
    """Scatter the upstream adjoint to the argmax row of each column."""
    out = np.zeros((nrows, g.shape[0]))
    out[idx, np.arange(g.shape[0])] = g
    return out


def adam_update(p, grad, m, v, lr, beta1, beta2, eps, t):
    """One bias-corrected Adam update, in place on p, m and v."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    p -= lr * mhat / (np.sqrt(vhat) + eps)


def points_in_polygon(pts, poly, tol=1e-12):
    """Even-odd test of points against a closed polygon.

    pts is (n, 2), poly is (k, 2) listing vertices once (closure implied).
    Points within tol of an edge count as inside.
    """
    x = pts[:, 0][:, None]
    y = pts[:, 1][:, None]
    x1 = poly[:, 0][None, :]
    y1 = poly[:, 1][None, :]
    x2 = np.roll(poly[:, 0], -1)[None, :]
    y2 = np.roll(poly[:, 1], -1)[None, :]

    # ray to +x: edge straddles the horizontal line through the point
    straddle = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
    crossings = straddle & (x < x_cross)
    inside = (np.count_nonzero(crossings, axis=1) % 2).astype(bool)

    # boundary points resolve as inside
    ex = x2 - x1
    ey = y2 - y1
    L2 = ex * ex + ey * ey
    tpar = ((x - x1) * ex + (y - y1) * ey) / np.where(L2 > 0.0, L2, 1.0)
    tpar = np.clip(tpar, 0.0, 1.0)
    dx = x - (x1 + tpar * ex)
    dy = y - (y1 + tpar * ey)
    on_edge = (dx * dx + dy * dy) <= tol * tol
    return inside | on_edge.any(axis=1)
