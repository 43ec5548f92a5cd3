"""Dense float64 tensors and a recording tape for reverse-mode autodiff.

The tape is define-by-run: every primitive computes its value eagerly and
appends a node, so node ids are topologically ordered by construction.
``backward`` walks the node list in strict reverse order and accumulates
adjoints into the gradient slots of every :class:`ParamStore` parameter that
was touched.  A tape is built fresh for each loss evaluation and is not
reusable for a second backward pass.

Primitive kinds: matmul, add, sub, hadamard, tanh, maxpool-axis, sum, mean,
square, scale, concat, slice.  add/sub/hadamard follow numpy broadcasting;
their adjoints are summed back over the broadcast axes.
"""

from __future__ import annotations

import numpy as np

from . import kernels as K

PRIMITIVES = frozenset(
    [
        "matmul",
        "add",
        "sub",
        "hadamard",
        "tanh",
        "maxpool-axis",
        "sum",
        "mean",
        "square",
        "scale",
        "concat",
        "slice",
    ]
)


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible with an op."""

    def __init__(self, op, shapes):
        self.op = op
        self.shapes = list(shapes)
        super().__init__(f"{op}: incompatible shapes {self.shapes}")


class NonFiniteError(ArithmeticError):
    """Raised when a NaN/Inf value or adjoint is detected."""


class Tensor:
    """Immutable-by-convention dense array of 64-bit floats, row-major."""

    __slots__ = ("data",)

    def __init__(self, data):
        self.data = np.ascontiguousarray(data, dtype=np.float64)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape))

    @classmethod
    def ones(cls, shape):
        return cls(np.ones(shape))

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


def _as_array(x):
    if isinstance(x, Tensor):
        return x.data
    return np.ascontiguousarray(x, dtype=np.float64)


class Param:
    """One named parameter: value, gradient slot and Adam moments."""

    __slots__ = ("value", "grad", "m", "v")

    def __init__(self, value):
        self.value = _as_array(value)
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)


class ParamStore:
    """Insertion-ordered map of named parameters.

    Iteration order is stable, which makes optimizer updates, checkpoints and
    gradient vectors deterministic.
    """

    def __init__(self):
        self._params: dict[str, Param] = {}

    def add(self, name, value):
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        p = Param(value)
        self._params[name] = p
        return p

    def __getitem__(self, name) -> Param:
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params.keys())

    def items(self):
        return self._params.items()

    def zero_grad(self):
        for p in self._params.values():
            p.grad[...] = 0.0

    def num_values(self):
        return sum(p.value.size for p in self._params.values())

    def flat_grad(self):
        """All gradients concatenated in insertion order."""
        return np.concatenate([p.grad.ravel() for p in self._params.values()])

    def copy_values(self):
        return {k: p.value.copy() for k, p in self._params.items()}

    def load_values(self, values):
        for k, p in self._params.items():
            p.value[...] = values[k]


def _unbroadcast(grad, shape):
    """Sum an adjoint back to the shape of a broadcast operand."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tape:
    """Recording tape.  Single-owner during recording; not thread-shareable."""

    def __init__(self, check_finite=False):
        self.ops: list[str] = []
        self.inputs: list[tuple] = []
        self.aux: list = []
        self.values: list[np.ndarray] = []
        self.check_finite = check_finite
        self._param_nodes: dict[tuple, int] = {}

    def __len__(self):
        return len(self.values)

    def value(self, nid):
        return self.values[nid]

    # ---- leaves -----------------------------------------------------------

    def _append(self, op, inputs, value, aux=None):
        if self.check_finite and not np.all(np.isfinite(value)):
            raise NonFiniteError(f"non-finite value produced by {op}")
        self.ops.append(op)
        self.inputs.append(tuple(inputs))
        self.aux.append(aux)
        self.values.append(value)
        return len(self.values) - 1

    def const(self, array):
        """A leaf carrying a fixed value; no gradient is tracked."""
        return self._append("const", (), _as_array(array))

    def param(self, store, name):
        """A leaf bound to a named parameter; backward fills its grad slot.

        One node per (store, name) pair per tape, so repeated uses share the
        node and adjoints accumulate naturally.
        """
        key = (id(store), name)
        nid = self._param_nodes.get(key)
        if nid is None:
            nid = self._append("param", (), store[name].value, aux=(store, name))
            self._param_nodes[key] = nid
        return nid

    # ---- primitives -------------------------------------------------------

    def record(self, op, inputs, **kw):
        """Record one primitive by kind name (spec-facing entry point)."""
        if op not in PRIMITIVES:
            raise ValueError(f"unknown primitive kind: {op}")
        fn = getattr(self, _METHOD_FOR_OP[op])
        return fn(*inputs, **kw)

    def add(self, a, b):
        va, vb = self.values[a], self.values[b]
        try:
            out = va + vb
        except ValueError:
            raise ShapeError("add", [va.shape, vb.shape]) from None
        return self._append("add", (a, b), out)

    def sub(self, a, b):
        va, vb = self.values[a], self.values[b]
        try:
            out = va - vb
        except ValueError:
            raise ShapeError("sub", [va.shape, vb.shape]) from None
        return self._append("sub", (a, b), out)

    def hadamard(self, a, b):
        va, vb = self.values[a], self.values[b]
        try:
            out = va * vb
        except ValueError:
            raise ShapeError("hadamard", [va.shape, vb.shape]) from None
        return self._append("hadamard", (a, b), out)

    def matmul(self, a, b):
        va, vb = self.values[a], self.values[b]
        if va.ndim != 2 or vb.ndim != 2 or va.shape[1] != vb.shape[0]:
            raise ShapeError("matmul", [va.shape, vb.shape])
        return self._append("matmul", (a, b), va @ vb)

    def tanh(self, a):
        return self._append("tanh", (a,), np.tanh(self.values[a]))

    def maxpool(self, a, axis=0):
        va = self.values[a]
        if va.ndim != 2 or axis != 0:
            raise ShapeError("maxpool-axis", [va.shape])
        pooled, idx = K.maxpool_forward(va)
        return self._append("maxpool-axis", (a,), pooled, aux=(idx, va.shape[0]))

    def sum(self, a, axis=None):
        return self._append(
            "sum", (a,), np.sum(self.values[a], axis=axis), aux=axis
        )

    def mean(self, a, axis=None):
        return self._append(
            "mean", (a,), np.mean(self.values[a], axis=axis), aux=axis
        )

    def square(self, a):
        va = self.values[a]
        return self._append("square", (a,), va * va)

    def scale(self, a, c):
        return self._append("scale", (a,), self.values[a] * float(c), aux=float(c))

    def concat(self, parts, axis=0):
        vals = [self.values[p] for p in parts]
        try:
            out = np.concatenate(vals, axis=axis)
        except ValueError:
            raise ShapeError("concat", [v.shape for v in vals]) from None
        return self._append(
            "concat", tuple(parts), out, aux=(axis, [v.shape[axis] for v in vals])
        )

    def slice(self, a, key):
        return self._append("slice", (a,), self.values[a][key].copy(), aux=key)

    # ---- reverse pass -----------------------------------------------------

    def backward(self, loss):
        """Fill parameter gradient slots with d(loss)/d(param).

        Gradients are accumulated into the existing slots; call zero_grad on
        the store first for a plain gradient.
        """
        if self.values[loss].shape != ():
            raise ShapeError("backward", [self.values[loss].shape])
        adj: list = [None] * len(self.values)
        adj[loss] = np.array(1.0)

        def acc(nid, g):
            if adj[nid] is None:
                adj[nid] = g
            else:
                adj[nid] = adj[nid] + g

        for nid in range(loss, -1, -1):
            g = adj[nid]
            if g is None:
                continue
            if self.check_finite and not np.all(np.isfinite(g)):
                raise NonFiniteError(f"non-finite adjoint at node {nid}")
            op = self.ops[nid]
            ins = self.inputs[nid]
            if op in ("const", "param"):
                continue
            if op == "add":
                acc(ins[0], _unbroadcast(g, self.values[ins[0]].shape))
                acc(ins[1], _unbroadcast(g, self.values[ins[1]].shape))
            elif op == "sub":
                acc(ins[0], _unbroadcast(g, self.values[ins[0]].shape))
                acc(ins[1], _unbroadcast(-g, self.values[ins[1]].shape))
            elif op == "hadamard":
                va, vb = self.values[ins[0]], self.values[ins[1]]
                acc(ins[0], _unbroadcast(g * vb, va.shape))
                acc(ins[1], _unbroadcast(g * va, vb.shape))
            elif op == "matmul":
                va, vb = self.values[ins[0]], self.values[ins[1]]
                acc(ins[0], g @ vb.T)
                acc(ins[1], va.T @ g)
            elif op == "tanh":
                acc(ins[0], K.tanh_backward(self.values[nid], g))
            elif op == "maxpool-axis":
                idx, nrows = self.aux[nid]
                acc(ins[0], K.maxpool_backward(idx, g, nrows))
            elif op == "sum":
                shape = self.values[ins[0]].shape
                axis = self.aux[nid]
                if axis is None:
                    acc(ins[0], np.broadcast_to(g, shape))
                else:
                    acc(ins[0], np.broadcast_to(np.expand_dims(g, axis), shape))
            elif op == "mean":
                shape = self.values[ins[0]].shape
                axis = self.aux[nid]
                if axis is None:
                    n = self.values[ins[0]].size
                    acc(ins[0], np.broadcast_to(g / n, shape))
                else:
                    n = shape[axis]
                    acc(ins[0], np.broadcast_to(np.expand_dims(g / n, axis), shape))
            elif op == "square":
                acc(ins[0], K.square_backward(self.values[ins[0]], g))
            elif op == "scale":
                acc(ins[0], g * self.aux[nid])
            elif op == "concat":
                axis, widths = self.aux[nid]
                start = 0
                for p, w in zip(ins, widths):
                    sl = [slice(None)] * g.ndim
                    sl[axis] = slice(start, start + w)
                    acc(p, g[tuple(sl)])
                    start += w
            elif op == "slice":
                z = np.zeros_like(self.values[ins[0]])
                z[self.aux[nid]] = g
                acc(ins[0], z)
            else:  # pragma: no cover
                raise ValueError(f"no backward rule for {op}")

        for (_, name), nid in self._param_nodes.items():
            store = self.aux[nid][0]
            if adj[nid] is not None:
                store[name].grad += adj[nid]


_METHOD_FOR_OP = {
    "matmul": "matmul",
    "add": "add",
    "sub": "sub",
    "hadamard": "hadamard",
    "tanh": "tanh",
    "maxpool-axis": "maxpool",
    "sum": "sum",
    "mean": "mean",
    "square": "square",
    "scale": "scale",
    "concat": "concat",
    "slice": "slice",
}


def fd_gradient_check(build_loss, store, h=1e-5):
    """Compare tape gradients against central finite differences.

    build_loss(store) must deterministically return (tape, loss_node).
    Returns max over parameter entries of |analytic - fd| / (|analytic| + 1e-12).
    """
    store.zero_grad()
    tape, loss = build_loss(store)
    if not np.isfinite(tape.value(loss)):
        raise NonFiniteError("loss is non-finite")
    tape.backward(loss)
    grads = {k: p.grad.copy() for k, p in store.items()}

    worst = 0.0
    for name, p in store.items():
        flat = p.value.ravel()
        gflat = grads[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            _, lp = build_loss(store)
            up = float(_.value(lp))
            flat[i] = orig - h
            _, lm = build_loss(store)
            dn = float(_.value(lm))
            flat[i] = orig
            if not (np.isfinite(up) and np.isfinite(dn)):
                raise NonFiniteError("loss is non-finite during FD probe")
            fd = (up - dn) / (2.0 * h)
            err = abs(gflat[i] - fd) / (abs(gflat[i]) + 1e-12)
            if err > worst:
                worst = err
    return worst


def fd_gradient_vector(build_loss, store, h=1e-5):
    """Full central-difference gradient, concatenated in store order."""
    out = []
    for name, p in store.items():
        flat = p.value.ravel()
        g = np.empty(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            t, l = build_loss(store)
            up = float(t.value(l))
            flat[i] = orig - h
            t, l = build_loss(store)
            dn = float(t.value(l))
            flat[i] = orig
            g[i] = (up - dn) / (2.0 * h)
        out.append(g)
    return np.concatenate(out)
