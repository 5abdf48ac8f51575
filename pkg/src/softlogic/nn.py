"""Small dense networks used to ground predicates and functions.

Weights start Glorot-uniform, biases at zero, all seeded, so two inits from
the same spec are identical arrays.  The hidden stack is elu or relu; the
output layer is sigmoid (per-class truth values), softmax (a distribution),
or identity (regression).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T

HIDDEN_ACTIVATIONS = ("elu", "relu")
OUTPUT_ACTIVATIONS = ("sigmoid", "softmax", "identity")

DEFAULT_HIDDEN = (64, 64)


class LabelError(ValueError):
    """Cross-entropy received targets that are not one-hot rows."""


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden_dims: tuple = DEFAULT_HIDDEN
    output_dim: int = 1
    hidden_activation: str = "elu"
    output_activation: str = "sigmoid"
    seed: int = 0

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(int(d) != d or d < 1 for d in dims):
            raise ValueError(f"layer widths must be positive integers, got {dims}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")


@dataclass
class MlpParams:
    spec: MlpSpec
    layers: list = field(default_factory=list)  # [(W node, b node), ...]

    def nodes(self):
        out = []
        for w, b in self.layers:
            out.append(w)
            out.append(b)
        return out


def mlp_init(spec: MlpSpec) -> MlpParams:
    """Glorot-uniform weights, zero biases, deterministic in spec.seed."""
    rng = np.random.default_rng(spec.seed)
    dims = (spec.input_dim, *spec.hidden_dims, spec.output_dim)
    params = MlpParams(spec)
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = T.param(rng.uniform(-limit, limit, size=(fan_in, fan_out)), name=f"W{i}")
        b = T.param(np.zeros(fan_out), name=f"b{i}")
        params.layers.append((w, b))
    return params


_HIDDEN = {"elu": T.elu, "relu": T.relu}


def mlp_forward(params: MlpParams, x) -> T.Node:
    """Graph for a batch pass; x is a (n, input_dim) array or node."""
    spec = params.spec
    if not isinstance(x, T.Node):
        x = T.const(x)
    if x.value is not None:
        if x.value.ndim != 2 or x.value.shape[1] != spec.input_dim:
            raise T.ShapeError(
                f"input shape {x.value.shape} does not match input_dim {spec.input_dim}"
            )
    act = _HIDDEN[spec.hidden_activation]
    h = x
    for w, b in params.layers[:-1]:
        h = act(T.matmul(h, w) + b)
    w, b = params.layers[-1]
    out = T.matmul(h, w) + b
    if spec.output_activation == "sigmoid":
        out = T.sigmoid(out)
    elif spec.output_activation == "softmax":
        out = T.softmax(out, axis=-1)
    return out


def cross_entropy(probs: T.Node, onehot) -> T.Node:
    """Mean negative log-likelihood of one-hot targets.

    Picked probabilities are clamped to 1e-12 from below so a confident
    wrong answer produces a large finite loss instead of inf.
    """
    y = T.as_array(onehot)
    if y.ndim != 2:
        raise LabelError(f"targets must be a (n, classes) one-hot array, got shape {y.shape}")
    if not np.all((y == 0.0) | (y == 1.0)) or not np.all(y.sum(axis=1) == 1.0):
        bad = int(np.argmax(y.sum(axis=1) != 1.0))
        raise LabelError(f"target row {bad} is not one-hot")
    if isinstance(probs, T.Node) and probs.value is not None:
        sums = probs.value.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise ValueError("probability rows do not sum to 1")
    picked = T.sum_(T.mul(probs, T.const(y)), axis=1)
    return T.neg(T.mean_(T.log_(T.clamp(picked, 1e-12, 1.0))))


def save_params(path, params: MlpParams) -> None:
    """Write weights as an npz archive keyed W0, b0, W1, b1, ..."""
    arrays = {}
    for i, (w, b) in enumerate(params.layers):
        arrays[f"W{i}"] = w.value
        arrays[f"b{i}"] = b.value
    np.savez(path, **arrays)


def load_params(path, spec: MlpSpec) -> MlpParams:
    """Rebuild an MlpParams from an archive written by save_params."""
    with np.load(path) as data:
        params = MlpParams(spec)
        n_layers = len(spec.hidden_dims) + 1
        for i in range(n_layers):
            w = T.param(data[f"W{i}"], name=f"W{i}")
            b = T.param(data[f"b{i}"], name=f"b{i}")
            params.layers.append((w, b))
    dims = (spec.input_dim, *spec.hidden_dims, spec.output_dim)
    for i, (w, b) in enumerate(params.layers):
        if w.value.shape != (dims[i], dims[i + 1]) or b.value.shape != (dims[i + 1],):
            raise T.ShapeError(f"layer {i} shape {w.value.shape} does not match spec {dims}")
    return params
