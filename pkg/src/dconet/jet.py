"""Exact propagation of value, coordinate gradient and Hessian (2-jets).

A :class:`Jet2` carries tape node ids for the value and the five derivative
channels of a batch of network activations with respect to the 2-D input
coordinate.  Propagating the jet through each layer keeps every channel a
tape node, so parameter gradients of losses built from second derivatives
remain exact reverse-mode gradients.

Only derivatives up to order 2 are supported, and the mixed derivative is
stored once (dxy == dyx by construction).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Jet2(NamedTuple):
    """Tape node ids of the five-channel 2-jet (plus the value)."""

    val: int
    dx: int
    dy: int
    dxx: int
    dyy: int
    dxy: int


def jet_seed(tape, coords):
    """Identity jet of a batch of coordinates.

    coords is (n, 2); the seed has dx=(1,0), dy=(0,1) per row and zero
    second derivatives.
    """
    c = np.ascontiguousarray(coords, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != 2 or not np.all(np.isfinite(c)):
        raise ValueError("jet_seed expects finite (n, 2) coordinates")
    n = c.shape[0]
    zeros = np.zeros((n, 2))
    ex = np.zeros((n, 2))
    ex[:, 0] = 1.0
    ey = np.zeros((n, 2))
    ey[:, 1] = 1.0
    return Jet2(
        val=tape.const(c),
        dx=tape.const(ex),
        dy=tape.const(ey),
        dxx=tape.const(zeros),
        dyy=tape.const(zeros.copy()),
        dxy=tape.const(zeros.copy()),
    )


def jet_affine(tape, j, W, B=None):
    """Affine layer v @ W + B; derivative channels map linearly (exact)."""
    val = tape.matmul(j.val, W)
    if B is not None:
        val = tape.add(val, B)
    return Jet2(
        val=val,
        dx=tape.matmul(j.dx, W),
        dy=tape.matmul(j.dy, W),
        dxx=tape.matmul(j.dxx, W),
        dyy=tape.matmul(j.dyy, W),
        dxy=tape.matmul(j.dxy, W),
    )


def jet_tanh(tape, j):
    """Elementwise tanh through the jet.

    With s = tanh(v), s' = 1 - s^2 and s'' = -2 s s', first derivatives pick
    up s' and second derivatives s'' (da db) + s' dab.
    """
    s = tape.tanh(j.val)
    one = tape.const(np.ones(tape.value(s).shape))
    sp = tape.sub(one, tape.square(s))
    spp = tape.scale(tape.hadamard(s, sp), -2.0)

    def second(da, db, dab):
        if da == db:
            prod = tape.square(da)
        else:
            prod = tape.hadamard(da, db)
        return tape.add(tape.hadamard(spp, prod), tape.hadamard(sp, dab))

    return Jet2(
        val=s,
        dx=tape.hadamard(sp, j.dx),
        dy=tape.hadamard(sp, j.dy),
        dxx=second(j.dx, j.dx, j.dxx),
        dyy=second(j.dy, j.dy, j.dyy),
        dxy=second(j.dx, j.dy, j.dxy),
    )


def jet_hadamard_const(tape, j, b):
    """Hadamard with a coordinate-independent vector (the branch embedding)."""
    return Jet2(*(tape.hadamard(b, comp) for comp in j))


def jet_reduce_sum(tape, j, axis=1):
    """Componentwise summation over the embedding axis."""
    return Jet2(*(tape.sum(comp, axis=axis) for comp in j))


def jet_slice(tape, j, key):
    """Slice every channel of the jet identically."""
    return Jet2(*(tape.slice(comp, key) for comp in j))
