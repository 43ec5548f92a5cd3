"""Compositional operator network (DCON) and the DeepONet baseline.

DCON encodes a variable-size set of boundary points/values with a shared
per-point MLP followed by a columnwise max-pool (the embedding width is
independent of the number of points), then pushes a coordinate embedding
through stacked operator layers ``v <- b (.) (W_j s(v) + B_j)`` where ``b``
is the pooled branch embedding.  The activation s is tanh for all but the
last operator layer.  The per-channel head reduces ``R_k (.) b (.) v`` by
summation; with zero operator layers this is exactly the DeepONet
dot-product merge.

Both models run in plain-forward mode and in jet-forward mode (exact value,
coordinate gradient and Hessian); the value channel of the jet mode follows
the identical primitive sequence as the plain forward, so the two agree
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jet import (
    jet_affine,
    jet_hadamard_const,
    jet_reduce_sum,
    jet_seed,
    jet_slice,
    jet_tanh,
)
from .tensor import ParamStore

IDENTITY_NORM = (0.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class DconConfig:
    q: int = 64
    layers: int = 3
    branch_depth: int = 3
    outputs: int = 1
    value_channels: int = 1
    side_tags: int = 0
    norm: tuple = IDENTITY_NORM

    def __post_init__(self):
        if self.q < 1 or self.layers < 0 or self.branch_depth < 1:
            raise ValueError("q >= 1, layers >= 0, branch_depth >= 1 required")
        if self.outputs not in (1, 2):
            raise ValueError("outputs must be 1 or 2")

    @property
    def branch_features(self):
        return 2 + self.value_channels + self.side_tags


@dataclass(frozen=True)
class DeepOnetConfig:
    q: int = 64
    depth: int = 3
    m_fixed: int = 100
    outputs: int = 1
    value_channels: int = 1
    norm: tuple = IDENTITY_NORM

    def __post_init__(self):
        if self.q < 1 or self.depth < 1 or self.m_fixed < 1:
            raise ValueError("q, depth, m_fixed must be >= 1")
        if self.outputs not in (1, 2):
            raise ValueError("outputs must be 1 or 2")
        if self.q % self.outputs != 0:
            raise ValueError("q must split evenly across output channels")

    @property
    def flat_input(self):
        return self.m_fixed * self.value_channels


@dataclass
class BranchInput:
    """One variable-size set of boundary points and their function values.

    Rows are an unordered set; ``side`` selects the one-hot tag channel when
    the model distinguishes boundary segments.
    """

    points: np.ndarray
    values: np.ndarray
    side: int = 0

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("points must be (m, 2)")
        if self.values.shape[0] != self.points.shape[0]:
            raise ValueError("points and values must have equal length")
        if self.points.shape[0] < 1:
            raise ValueError("branch input needs at least one point")


def _glorot(rng, fan_in, fan_out):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


def init_dcon_params(cfg, seed):
    rng = np.random.Generator(np.random.Philox(seed))
    store = ParamStore()
    store.add("trunk.W", _glorot(rng, 2, cfg.q))
    store.add("trunk.b", np.zeros(cfg.q))
    for l in range(1, cfg.layers + 1):
        store.add(f"op{l}.W", _glorot(rng, cfg.q, cfg.q))
        store.add(f"op{l}.b", np.zeros(cfg.q))
    store.add("head.R", np.ones((cfg.outputs, cfg.q)))
    fan = cfg.branch_features
    for i in range(cfg.branch_depth):
        store.add(f"branch.{i}.W", _glorot(rng, fan, cfg.q))
        store.add(f"branch.{i}.b", np.zeros(cfg.q))
        fan = cfg.q
    return store


def init_deeponet_params(cfg, seed):
    rng = np.random.Generator(np.random.Philox(seed))
    store = ParamStore()
    fan = 2
    for i in range(cfg.depth):
        store.add(f"trunk.{i}.W", _glorot(rng, fan, cfg.q))
        store.add(f"trunk.{i}.b", np.zeros(cfg.q))
        fan = cfg.q
    fan = cfg.flat_input
    for i in range(cfg.depth):
        store.add(f"branch.{i}.W", _glorot(rng, fan, cfg.q))
        store.add(f"branch.{i}.b", np.zeros(cfg.q))
        fan = cfg.q
    return store


def normalize_points(norm, pts):
    cx, cy, sx, sy = norm
    out = np.empty_like(pts)
    out[:, 0] = (pts[:, 0] - cx) * sx
    out[:, 1] = (pts[:, 1] - cy) * sy
    return out


def branch_features(cfg, inputs):
    """Per-point feature rows for one realization: coords, values, side tag."""
    if not inputs:
        raise ValueError("at least one BranchInput is required")
    rows = []
    for bi in inputs:
        m = bi.points.shape[0]
        cols = [normalize_points(cfg.norm, bi.points), bi.values]
        if bi.values.shape[1] != cfg.value_channels:
            raise ValueError(
                f"expected {cfg.value_channels} value channels, "
                f"got {bi.values.shape[1]}"
            )
        if cfg.side_tags:
            if not 0 <= bi.side < cfg.side_tags:
                raise ValueError(f"side {bi.side} out of range")
            tag = np.zeros((m, cfg.side_tags))
            tag[:, bi.side] = 1.0
            cols.append(tag)
        rows.append(np.concatenate(cols, axis=1))
    return np.concatenate(rows, axis=0)


def branch_embed(tape, cfg, params, inputs):
    """Pooled branch embedding node, shape (q,), for any number of points."""
    h = tape.const(branch_features(cfg, inputs))
    for i in range(cfg.branch_depth):
        W = tape.param(params, f"branch.{i}.W")
        b = tape.param(params, f"branch.{i}.b")
        h = tape.tanh(tape.add(tape.matmul(h, W), b))
    return tape.maxpool(h)


def _norm_consts(tape, norm):
    cx, cy, sx, sy = norm
    S = tape.const(np.array([[sx, 0.0], [0.0, sy]]))
    T = tape.const(np.array([-cx * sx, -cy * sy]))
    return S, T


def _dcon_apply(tape, cfg, params, b, coords, with_jet):
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    S, T = _norm_consts(tape, cfg.norm)
    Wt = tape.param(params, "trunk.W")
    Bt = tape.param(params, "trunk.b")

    if with_jet:
        v = jet_seed(tape, coords)
        v = jet_affine(tape, v, S, T)
        v = jet_tanh(tape, jet_affine(tape, v, Wt, Bt))
    else:
        x = tape.add(tape.matmul(tape.const(coords), S), T)
        v = tape.tanh(tape.add(tape.matmul(x, Wt), Bt))

    for l in range(1, cfg.layers + 1):
        W = tape.param(params, f"op{l}.W")
        B = tape.param(params, f"op{l}.b")
        if with_jet:
            a = jet_tanh(tape, v) if l < cfg.layers else v
            v = jet_hadamard_const(tape, jet_affine(tape, a, W, B), b)
        else:
            a = tape.tanh(v) if l < cfg.layers else v
            v = tape.hadamard(b, tape.add(tape.matmul(a, W), B))

    R = tape.param(params, "head.R")
    outs = []
    for k in range(cfg.outputs):
        rk = tape.slice(R, (k,))
        if with_jet:
            h = jet_hadamard_const(tape, v, b)
            h = jet_hadamard_const(tape, h, rk)
            outs.append(jet_reduce_sum(tape, h, axis=1))
        else:
            h = tape.hadamard(rk, tape.hadamard(b, v))
            outs.append(tape.sum(h, axis=1))
    return outs


def dcon_forward(tape, cfg, params, b, coords):
    """Model outputs at a batch of coordinates; one (n,) node per channel."""
    return _dcon_apply(tape, cfg, params, b, coords, with_jet=False)


def dcon_forward_jet(tape, cfg, params, b, coords):
    """Model outputs with exact coordinate jets; one Jet2 per channel."""
    return _dcon_apply(tape, cfg, params, b, coords, with_jet=True)


def _deeponet_branch(tape, cfg, params, g_values):
    g = np.ascontiguousarray(g_values, dtype=np.float64).ravel()
    if g.size != cfg.flat_input:
        raise ValueError(
            f"deeponet branch input has length {g.size}, requires exactly "
            f"{cfg.flat_input} (= {cfg.m_fixed} points x "
            f"{cfg.value_channels} channels)"
        )
    h = tape.const(g.reshape(1, -1))
    for i in range(cfg.depth):
        W = tape.param(params, f"branch.{i}.W")
        b = tape.param(params, f"branch.{i}.b")
        h = tape.tanh(tape.add(tape.matmul(h, W), b))
    return h


def deeponet_forward(tape, cfg, params, g_values, coords):
    """Dot-product merge of branch and trunk embeddings, per channel slice."""
    b = _deeponet_branch(tape, cfg, params, g_values)
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    S, T = _norm_consts(tape, cfg.norm)
    t = tape.add(tape.matmul(tape.const(coords), S), T)
    for i in range(cfg.depth):
        W = tape.param(params, f"trunk.{i}.W")
        bb = tape.param(params, f"trunk.{i}.b")
        t = tape.tanh(tape.add(tape.matmul(t, W), bb))
    qc = cfg.q // cfg.outputs
    outs = []
    for k in range(cfg.outputs):
        if cfg.outputs == 1:
            bk, tk = b, t
        else:
            cols = (slice(None), slice(k * qc, (k + 1) * qc))
            bk = tape.slice(b, cols)
            tk = tape.slice(t, cols)
        outs.append(tape.sum(tape.hadamard(bk, tk), axis=1))
    return outs


def deeponet_forward_jet(tape, cfg, params, g_values, coords):
    """DeepONet with exact coordinate jets through the trunk."""
    b = _deeponet_branch(tape, cfg, params, g_values)
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    S, T = _norm_consts(tape, cfg.norm)
    t = jet_affine(tape, jet_seed(tape, coords), S, T)
    for i in range(cfg.depth):
        W = tape.param(params, f"trunk.{i}.W")
        bb = tape.param(params, f"trunk.{i}.b")
        t = jet_tanh(tape, jet_affine(tape, t, W, bb))
    qc = cfg.q // cfg.outputs
    outs = []
    for k in range(cfg.outputs):
        if cfg.outputs == 1:
            bk, tk = b, t
        else:
            cols = (slice(None), slice(k * qc, (k + 1) * qc))
            bk = tape.slice(b, cols)
            tk = jet_slice(tape, t, cols)
        outs.append(jet_reduce_sum(tape, jet_hadamard_const(tape, tk, bk), axis=1))
    return outs
