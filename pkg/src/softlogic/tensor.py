"""Reverse-mode automatic differentiation over dense float64 arrays.

Graphs are built lazily: a node records an op tag and links to its parents,
and nothing is computed until ``forward_eval`` walks the graph.  Placeholders
take their values from a feed map at evaluation time, so the same graph can be
re-evaluated against fresh data.  ``backward`` runs the reverse pass from a
scalar root and accumulates a gradient for every node that contributed to it.

All values are numpy float64 arrays.  Elementwise ops broadcast with numpy
semantics (backward sums gradients back to each parent's shape), matmul is
strictly 2-D.  Every computed value is checked for NaN/inf so a bad graph
fails at the node that produced the garbage instead of ten ops later.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

# lower bound used when differentiating roots and sqrt near zero
GUARD_EPS = 1e-7


class ShapeError(ValueError):
    """Operand shapes do not conform for the requested op."""


class GraphError(ValueError):
    """Structural misuse: cycles, missing forward pass, non-scalar root."""


class FeedError(ValueError):
    """A placeholder was evaluated without a matching feed entry."""


class NonFiniteError(ArithmeticError):
    """A node produced NaN or +-inf during forward or backward."""


def as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


_ids = itertools.count()


class Node:
    """One vertex of the computation graph.

    ``op`` is a tag into the op registry, ``parents`` the input nodes.
    ``value`` is filled by forward_eval (constants and parameters carry
    theirs from birth), ``grad`` by backward for trainable nodes.
    """

    __slots__ = ("id", "op", "parents", "attrs", "value", "grad", "trainable", "name")

    def __init__(self, op, parents=(), attrs=None, value=None, trainable=False, name=None):
        self.id = next(_ids)
        self.op = op
        self.parents = tuple(parents)
        self.attrs = attrs or {}
        self.value = value
        self.grad = None
        self.trainable = trainable
        self.name = name

    @property
    def shape(self):
        return None if self.value is None else self.value.shape

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Node(id={self.id}, op={self.op!r}{label}, shape={self.shape})"

    # arithmetic sugar; plain functions below do the real work
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return neg(self)


def _lift(x) -> Node:
    return x if isinstance(x, Node) else const(x)


def const(value, trainable=False, name=None) -> Node:
    """Leaf node holding a fixed (or trainable) array."""
    arr = as_array(value)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"constant {name or ''} contains non-finite entries")
    return Node("const", value=arr, trainable=trainable, name=name)


def param(value, name=None) -> Node:
    """Trainable leaf, updated in place by the optimizer."""
    return const(value, trainable=True, name=name)


def placeholder(name) -> Node:
    """Named leaf whose value comes from the feed map at forward_eval time."""
    return Node("placeholder", name=name)


# ---------------------------------------------------------------------------
# op registry: tag -> (forward, backward)
#
# forward(parent_values, attrs) -> ndarray
# backward(out_grad, out_value, parent_values, attrs) -> list of parent grads
# ---------------------------------------------------------------------------

_FORWARD = {}
_BACKWARD = {}


def _register(tag, forward, backward):
    _FORWARD[tag] = forward
    _BACKWARD[tag] = backward


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    squeeze = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if squeeze:
        grad = grad.sum(axis=squeeze, keepdims=True)
    return grad.reshape(shape)


def _broadcast_forward(fn, tag):
    def forward(pv, attrs):
        a, b = pv
        try:
            return fn(a, b)
        except ValueError:
            raise ShapeError(f"{tag}: shapes {a.shape} and {b.shape} do not broadcast") from None

    return forward


_register(
    "add",
    _broadcast_forward(np.add, "add"),
    lambda g, out, pv, attrs: [_unbroadcast(g, pv[0].shape), _unbroadcast(g, pv[1].shape)],
)

_register(
    "sub",
    _broadcast_forward(np.subtract, "sub"),
    lambda g, out, pv, attrs: [_unbroadcast(g, pv[0].shape), _unbroadcast(-g, pv[1].shape)],
)

_register(
    "mul",
    _broadcast_forward(np.multiply, "mul"),
    lambda g, out, pv, attrs: [
        _unbroadcast(g * pv[1], pv[0].shape),
        _unbroadcast(g * pv[0], pv[1].shape),
    ],
)

_register(
    "div",
    _broadcast_forward(np.divide, "div"),
    lambda g, out, pv, attrs: [
        _unbroadcast(g / pv[1], pv[0].shape),
        _unbroadcast(-g * pv[0] / (pv[1] * pv[1]), pv[1].shape),
    ],
)

_register("neg", lambda pv, attrs: -pv[0], lambda g, out, pv, attrs: [-g])


def _matmul_forward(pv, attrs):
    a, b = pv
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} vs {b.shape}")
    return a @ b


_register(
    "matmul",
    _matmul_forward,
    lambda g, out, pv, attrs: [g @ pv[1].T, pv[0].T @ g],
)


def _pow_backward(g, out, pv, attrs):
    p = attrs["exponent"]
    base = pv[0]
    if not float(p).is_integer():
        # fractional exponents blow up at zero; clamp the base for the
        # derivative only, the forward value stays exact
        base = np.maximum(base, GUARD_EPS)
    return [g * p * np.power(base, p - 1.0)]


_register("pow", lambda pv, attrs: np.power(pv[0], attrs["exponent"]), _pow_backward)

_register("abs", lambda pv, attrs: np.abs(pv[0]), lambda g, out, pv, attrs: [g * np.sign(pv[0])])

_register(
    "sqrt",
    lambda pv, attrs: np.sqrt(pv[0]),
    lambda g, out, pv, attrs: [g * 0.5 / np.maximum(out, GUARD_EPS)],
)

_register("exp", lambda pv, attrs: np.exp(pv[0]), lambda g, out, pv, attrs: [g * out])

_register("log", lambda pv, attrs: np.log(pv[0]), lambda g, out, pv, attrs: [g / pv[0]])


def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def _expand_like(g, out_shape_full, axes, keepdims):
    if keepdims:
        return g
    return np.expand_dims(g, axes)


def _sum_forward(pv, attrs):
    return np.sum(pv[0], axis=attrs["axis"], keepdims=attrs["keepdims"])


def _sum_backward(g, out, pv, attrs):
    v = pv[0]
    axes = _norm_axis(attrs["axis"], v.ndim)
    g = _expand_like(g, v.shape, axes, attrs["keepdims"])
    return [np.broadcast_to(g, v.shape)]


_register("sum", _sum_forward, _sum_backward)


def _mean_backward(g, out, pv, attrs):
    v = pv[0]
    axes = _norm_axis(attrs["axis"], v.ndim)
    count = 1
    for a in axes:
        count *= v.shape[a]
    g = _expand_like(g, v.shape, axes, attrs["keepdims"])
    return [np.broadcast_to(g, v.shape) / count]


_register(
    "mean",
    lambda pv, attrs: np.mean(pv[0], axis=attrs["axis"], keepdims=attrs["keepdims"]),
    _mean_backward,
)


def _min_backward(g, out, pv, attrs):
    v = pv[0]
    axes = _norm_axis(attrs["axis"], v.ndim)
    out_e = _expand_like(out, v.shape, axes, attrs["keepdims"])
    g_e = _expand_like(g, v.shape, axes, attrs["keepdims"])
    mask = (v == out_e).astype(np.float64)
    counts = mask.sum(axis=axes, keepdims=True)
    return [mask * (g_e / counts)]


_register(
    "min",
    lambda pv, attrs: np.min(pv[0], axis=attrs["axis"], keepdims=attrs["keepdims"]),
    _min_backward,
)


def _sigmoid_forward(pv, attrs):
    v = pv[0]
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    # saturated logits would round to exactly 0 or 1; keep truth values
    # strictly inside the open interval
    return np.clip(out, 1e-15, 1.0 - 1e-15)


_register(
    "sigmoid",
    _sigmoid_forward,
    lambda g, out, pv, attrs: [g * out * (1.0 - out)],
)

_register(
    "elu",
    lambda pv, attrs: np.where(pv[0] > 0, pv[0], np.expm1(pv[0])),
    lambda g, out, pv, attrs: [g * np.where(pv[0] > 0, 1.0, out + 1.0)],
)

_register(
    "relu",
    lambda pv, attrs: np.maximum(pv[0], 0.0),
    lambda g, out, pv, attrs: [g * (pv[0] > 0)],
)


def _softmax_forward(pv, attrs):
    v = pv[0]
    axis = attrs["axis"]
    shifted = v - np.max(v, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _softmax_backward(g, out, pv, attrs):
    axis = attrs["axis"]
    inner = (g * out).sum(axis=axis, keepdims=True)
    return [out * (g - inner)]


_register("softmax", _softmax_forward, _softmax_backward)


def _clamp_backward(g, out, pv, attrs):
    v = pv[0]
    mask = (v >= attrs["lo"]) & (v <= attrs["hi"])
    return [g * mask]


_register(
    "clamp",
    lambda pv, attrs: np.clip(pv[0], attrs["lo"], attrs["hi"]),
    _clamp_backward,
)


def _reshape_forward(pv, attrs):
    v = pv[0]
    try:
        return v.reshape(attrs["shape"])
    except ValueError:
        raise ShapeError(f"cannot reshape {v.shape} to {attrs['shape']}") from None


_register(
    "reshape",
    _reshape_forward,
    lambda g, out, pv, attrs: [g.reshape(pv[0].shape)],
)


def _transpose_backward(g, out, pv, attrs):
    axes = attrs["axes"]
    if axes is None:
        return [g.T]
    inverse = np.argsort(axes)
    return [np.transpose(g, inverse)]


_register(
    "transpose",
    lambda pv, attrs: np.transpose(pv[0], attrs["axes"]),
    _transpose_backward,
)


def _broadcast_to_forward(pv, attrs):
    try:
        return np.broadcast_to(pv[0], attrs["shape"])
    except ValueError:
        raise ShapeError(f"cannot broadcast {pv[0].shape} to {attrs['shape']}") from None


_register(
    "broadcast_to",
    _broadcast_to_forward,
    lambda g, out, pv, attrs: [_unbroadcast(g, pv[0].shape)],
)


def _gather_forward(pv, attrs):
    v = pv[0]
    idx = attrs["indices"]
    if v.ndim < 1 or (idx.size and idx.max() >= v.shape[0]):
        raise ShapeError(f"gather index out of range for shape {v.shape}")
    return v[idx]


def _gather_backward(g, out, pv, attrs):
    buf = np.zeros_like(pv[0])
    np.add.at(buf, attrs["indices"], g)
    return [buf]


_register("gather", _gather_forward, _gather_backward)


def _take_forward(pv, attrs):
    v = pv[0]
    axis = attrs["axis"]
    if axis >= v.ndim or attrs["index"] >= v.shape[axis]:
        raise ShapeError(f"take index {attrs['index']} out of range on axis {axis} of {v.shape}")
    return np.take(v, attrs["index"], axis=axis)


def _take_backward(g, out, pv, attrs):
    buf = np.zeros_like(pv[0])
    sl = [slice(None)] * pv[0].ndim
    sl[attrs["axis"]] = attrs["index"]
    buf[tuple(sl)] = g
    return [buf]


_register("take", _take_forward, _take_backward)


def _concat_forward(pv, attrs):
    try:
        return np.concatenate(pv, axis=attrs["axis"])
    except ValueError:
        raise ShapeError(
            "concat operands do not align: " + ", ".join(str(v.shape) for v in pv)
        ) from None


def _concat_backward(g, out, pv, attrs):
    axis = attrs["axis"]
    offsets = np.cumsum([v.shape[axis] for v in pv])[:-1]
    return list(np.split(g, offsets, axis=axis))


_register("concat", _concat_forward, _concat_backward)


# ---------------------------------------------------------------------------
# graph construction helpers
# ---------------------------------------------------------------------------


def add(a, b) -> Node:
    return Node("add", (_lift(a), _lift(b)))


def sub(a, b) -> Node:
    return Node("sub", (_lift(a), _lift(b)))


def mul(a, b) -> Node:
    return Node("mul", (_lift(a), _lift(b)))


def div(a, b) -> Node:
    return Node("div", (_lift(a), _lift(b)))


def neg(a) -> Node:
    return Node("neg", (_lift(a),))


def matmul(a, b) -> Node:
    return Node("matmul", (_lift(a), _lift(b)))


def pow_(a, exponent: float) -> Node:
    """Raise to a fixed real exponent.

    Fractional exponents need a non-negative base; their derivative is
    computed with the base clamped to GUARD_EPS so roots stay finite at zero.
    """
    return Node("pow", (_lift(a),), {"exponent": float(exponent)})


def abs_(a) -> Node:
    return Node("abs", (_lift(a),))


def sqrt_(a) -> Node:
    return Node("sqrt", (_lift(a),))


def exp_(a) -> Node:
    return Node("exp", (_lift(a),))


def log_(a) -> Node:
    return Node("log", (_lift(a),))


def sum_(a, axis=None, keepdims=False) -> Node:
    return Node("sum", (_lift(a),), {"axis": axis, "keepdims": keepdims})


def mean_(a, axis=None, keepdims=False) -> Node:
    return Node("mean", (_lift(a),), {"axis": axis, "keepdims": keepdims})


def min_(a, axis=None, keepdims=False) -> Node:
    return Node("min", (_lift(a),), {"axis": axis, "keepdims": keepdims})


def sigmoid(a) -> Node:
    return Node("sigmoid", (_lift(a),))


def elu(a) -> Node:
    return Node("elu", (_lift(a),))


def relu(a) -> Node:
    return Node("relu", (_lift(a),))


def softmax(a, axis=-1) -> Node:
    return Node("softmax", (_lift(a),), {"axis": axis})


def clamp(a, lo: float, hi: float) -> Node:
    if not lo <= hi:
        raise ValueError(f"clamp bounds out of order: lo={lo}, hi={hi}")
    return Node("clamp", (_lift(a),), {"lo": float(lo), "hi": float(hi)})


def reshape(a, shape) -> Node:
    return Node("reshape", (_lift(a),), {"shape": tuple(shape)})


def transpose(a, axes=None) -> Node:
    return Node("transpose", (_lift(a),), {"axes": None if axes is None else tuple(axes)})


def broadcast_to(a, shape) -> Node:
    return Node("broadcast_to", (_lift(a),), {"shape": tuple(shape)})


def gather(a, indices) -> Node:
    """Select rows (axis 0) by integer index; repeated rows sum gradients."""
    idx = np.asarray(indices, dtype=np.intp)
    return Node("gather", (_lift(a),), {"indices": idx})


def take(a, index: int, axis: int = 1) -> Node:
    """Pick a single slice along an axis, dropping that axis."""
    return Node("take", (_lift(a),), {"index": int(index), "axis": int(axis)})


def concat(nodes, axis: int = 1) -> Node:
    nodes = [_lift(n) for n in nodes]
    if not nodes:
        raise ValueError("concat needs at least one operand")
    return Node("concat", tuple(nodes), {"axis": int(axis)})


def stack_scalars(nodes) -> Node:
    """Collect scalar nodes into one 1-D vector."""
    return concat([reshape(n, (1,)) for n in nodes], axis=0)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _topo(outputs):
    """Parents-first ordering of every node reachable from ``outputs``."""
    order = []
    state = {}  # id -> 1 while on stack, 2 when done
    work = []
    for n in outputs:
        if state.get(n.id):
            continue
        work.append((n, iter(n.parents)))
        state[n.id] = 1
        while work:
            node, it = work[-1]
            advanced = False
            for parent in it:
                s = state.get(parent.id, 0)
                if s == 1:
                    raise GraphError(f"graph cycle detected at node {parent.id}")
                if s == 0:
                    state[parent.id] = 1
                    work.append((parent, iter(parent.parents)))
                    advanced = True
                    break
            if not advanced:
                work.pop()
                state[node.id] = 2
                order.append(node)
    return order


def _node_label(node):
    return f"{node.op}(id={node.id}" + (f", name={node.name!r})" if node.name else ")")


def forward_eval(outputs, feeds=None):
    """Evaluate the graph under ``outputs`` and return {node id: value}.

    Pure with respect to the feed map: repeated calls with the same feeds
    produce bit-identical values.  Op nodes are always recomputed, so
    parameter updates between calls are picked up automatically.
    """
    if isinstance(outputs, Node):
        outputs = [outputs]
    feeds = feeds or {}
    values = {}
    for node in _topo(outputs):
        if node.op == "const":
            v = node.value
        elif node.op == "placeholder":
            if node.name not in feeds:
                raise FeedError(f"no feed for placeholder {node.name!r}")
            v = as_array(feeds[node.name])
        else:
            pv = [values[p.id] for p in node.parents]
            with np.errstate(all="ignore"):  # finiteness is checked below
                v = _FORWARD[node.op](pv, node.attrs)
            v = np.asarray(v, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise NonFiniteError(f"non-finite value produced by node {_node_label(node)}")
        node.value = v
        values[node.id] = v
    return values


def backward(root, graph=None):
    """Reverse pass from a scalar root; returns {node id: gradient}.

    Requires a prior forward_eval over ``root``.  Trainable ancestors get
    their ``grad`` slot set; nodes listed in ``graph`` that the root never
    touched come back as zeros.
    """
    if root.value is None:
        raise GraphError("backward before forward_eval: root has no value")
    if root.value.size != 1:
        raise GraphError(f"backward root must be scalar, got shape {root.value.shape}")
    order = _topo([root])
    for node in order:
        if node.op not in ("const", "placeholder") and node.value is None:
            raise GraphError(f"node {_node_label(node)} has no value; rerun forward_eval")
    grads = {root.id: np.ones_like(root.value)}
    for node in reversed(order):
        g = grads.get(node.id)
        if g is None or node.op in ("const", "placeholder"):
            continue
        pv = [p.value for p in node.parents]
        with np.errstate(all="ignore"):
            pgrads = _BACKWARD[node.op](g, node.value, pv, node.attrs)
        for parent, pg in zip(node.parents, pgrads):
            if pg is None:
                continue
            if not np.all(np.isfinite(pg)):
                raise NonFiniteError(
                    f"non-finite gradient flowing from {_node_label(node)} "
                    f"into {_node_label(parent)}"
                )
            if parent.id in grads:
                grads[parent.id] = grads[parent.id] + pg
            else:
                grads[parent.id] = pg
    for node in order:
        if node.trainable:
            node.grad = grads.get(node.id, np.zeros_like(node.value))
    if graph is not None:
        for node in graph:
            if node.id not in grads:
                grads[node.id] = np.zeros_like(node.value)
                if node.trainable:
                    node.grad = grads[node.id]
    return grads


def value_of(node, feeds=None) -> np.ndarray:
    """Convenience: forward_eval one node and return its value."""
    return forward_eval([node], feeds)[node.id]


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


class AdamState:
    """Moment estimates and step counter for Adam.

    Bias-corrected update, standard constants.  State is keyed by node id,
    so one state object serves a fixed parameter set for a whole run.
    """

    def __init__(self, params, learning_rate=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {learning_rate}")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValueError(f"betas must lie in [0, 1): got {beta1}, {beta2}")
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step = 0
        self.m = {}
        self.v = {}
        for p in params:
            if not p.trainable:
                raise ValueError(f"AdamState over non-trainable node {_node_label(p)}")
            self.m[p.id] = np.zeros_like(p.value)
            self.v[p.id] = np.zeros_like(p.value)


def adam_step(params, grads, state: AdamState) -> AdamState:
    """One Adam update over ``params`` given gradients from backward().

    ``grads`` maps node id to gradient array.  Parameter values are updated
    in place; the same (mutated) state is returned.
    """
    updates = []
    for p in params:
        if p.id not in state.m:
            raise ValueError(f"parameter {_node_label(p)} unknown to this AdamState")
        g = grads.get(p.id)
        if g is None:
            raise ValueError(f"no gradient supplied for parameter {_node_label(p)}")
        g = as_array(g)
        if g.shape != p.value.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.value.shape}")
        updates.append((p, g))
    state.step += 1
    t = state.step
    lr, b1, b2, eps = state.learning_rate, state.beta1, state.beta2, state.epsilon
    for p, g in updates:
        m = state.m[p.id] = b1 * state.m[p.id] + (1.0 - b1) * g
        v = state.v[p.id] = b2 * state.v[p.id] + (1.0 - b2) * (g * g)
        mhat = m / (1.0 - b1**t)
        vhat = v / (1.0 - b2**t)
        p.value = p.value - lr * mhat / (np.sqrt(vhat) + eps)
    return state
