"""MLP construction, forward shapes, cross-entropy, save/load."""

import math

import numpy as np
import pytest

from softlogic import nn
from softlogic import tensor as T

from gradcheck import check_gradients


def test_init_shapes_and_zero_biases():
    spec = nn.MlpSpec(input_dim=7, hidden_dims=(5, 3), output_dim=2, seed=4)
    params = nn.mlp_init(spec)
    shapes = [(w.value.shape, b.value.shape) for w, b in params.layers]
    assert shapes == [((7, 5), (5,)), ((5, 3), (3,)), ((3, 2), (2,))]
    for _, b in params.layers:
        np.testing.assert_array_equal(b.value, 0.0)


def test_init_respects_glorot_limit():
    spec = nn.MlpSpec(input_dim=30, hidden_dims=(20,), output_dim=10, seed=1)
    params = nn.mlp_init(spec)
    for w, _ in params.layers:
        fan_in, fan_out = w.value.shape
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        assert np.all(np.abs(w.value) <= limit)


def test_init_deterministic_per_seed():
    spec = nn.MlpSpec(input_dim=4, hidden_dims=(8,), output_dim=3, seed=9)
    a = nn.mlp_init(spec)
    b = nn.mlp_init(spec)
    for (w1, _), (w2, _) in zip(a.layers, b.layers):
        np.testing.assert_array_equal(w1.value, w2.value)
    c = nn.mlp_init(nn.MlpSpec(input_dim=4, hidden_dims=(8,), output_dim=3, seed=10))
    assert not np.array_equal(a.layers[0][0].value, c.layers[0][0].value)


def test_forward_shape_law():
    spec = nn.MlpSpec(input_dim=6, hidden_dims=(16, 16), output_dim=4, seed=0)
    params = nn.mlp_init(spec)
    out = nn.mlp_forward(params, np.zeros((5, 6)))
    assert T.value_of(out).shape == (5, 4)


def test_forward_zero_weights_sigmoid_half():
    spec = nn.MlpSpec(input_dim=3, hidden_dims=(4,), output_dim=2, seed=0)
    params = nn.mlp_init(spec)
    for w, b in params.layers:
        w.value = np.zeros_like(w.value)
    out = T.value_of(nn.mlp_forward(params, np.ones((2, 3))))
    np.testing.assert_allclose(out, 0.5)


def test_forward_zero_weights_softmax_uniform():
    spec = nn.MlpSpec(
        input_dim=3, hidden_dims=(4,), output_dim=3, output_activation="softmax", seed=0
    )
    params = nn.mlp_init(spec)
    for w, b in params.layers:
        w.value = np.zeros_like(w.value)
    out = T.value_of(nn.mlp_forward(params, np.ones((2, 3))))
    np.testing.assert_allclose(out, 1.0 / 3.0)


def test_forward_width_mismatch():
    spec = nn.MlpSpec(input_dim=3, hidden_dims=(4,), output_dim=1)
    params = nn.mlp_init(spec)
    with pytest.raises(T.ShapeError):
        nn.mlp_forward(params, np.zeros((2, 5)))


def test_permutation_equivariance():
    spec = nn.MlpSpec(input_dim=5, hidden_dims=(8, 8), output_dim=3, seed=2)
    params = nn.mlp_init(spec)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 5))
    perm = rng.permutation(6)
    out = T.value_of(nn.mlp_forward(params, x))
    out_p = T.value_of(nn.mlp_forward(params, x[perm]))
    np.testing.assert_allclose(out[perm], out_p, atol=1e-12)


def test_bad_spec_rejected():
    with pytest.raises(ValueError):
        nn.MlpSpec(input_dim=0)
    with pytest.raises(ValueError):
        nn.MlpSpec(input_dim=3, hidden_activation="tanh")
    with pytest.raises(ValueError):
        nn.MlpSpec(input_dim=3, output_activation="step")


def test_cross_entropy_values():
    # oracles: -log of the picked probability, averaged
    probs = T.const(np.array([[1.0, 0.0, 0.0]]))
    y = np.array([[1.0, 0.0, 0.0]])
    assert T.value_of(nn.cross_entropy(probs, y)) == pytest.approx(0.0, abs=1e-9)

    uniform = T.const(np.full((4, 5), 0.2))
    y5 = np.eye(5)[[0, 1, 2, 3]]
    assert T.value_of(nn.cross_entropy(uniform, y5)) == pytest.approx(math.log(5.0), abs=1e-12)

    half = T.const(np.array([[0.5, 0.5]]))
    y2 = np.array([[1.0, 0.0]])
    assert T.value_of(nn.cross_entropy(half, y2)) == pytest.approx(math.log(2.0), abs=1e-12)


def test_cross_entropy_clamps_zero_probability():
    probs = T.const(np.array([[0.0, 1.0]]))
    y = np.array([[1.0, 0.0]])
    v = T.value_of(nn.cross_entropy(probs, y))
    assert np.isfinite(v) and v == pytest.approx(-math.log(1e-12), rel=1e-9)


def test_cross_entropy_rejects_non_onehot():
    probs = T.const(np.full((2, 3), 1.0 / 3.0))
    with pytest.raises(nn.LabelError, match="row 1"):
        nn.cross_entropy(probs, np.array([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0]]))


def test_cross_entropy_gradient_matches_fd():
    spec = nn.MlpSpec(
        input_dim=4, hidden_dims=(6,), output_dim=3, hidden_activation="relu",
        output_activation="softmax", seed=7,
    )
    params = nn.mlp_init(spec)
    rng = np.random.default_rng(5)
    x = rng.normal(size=(8, 4))
    y = np.eye(3)[rng.integers(0, 3, size=8)]
    loss = nn.cross_entropy(nn.mlp_forward(params, x), y)
    assert check_gradients(loss, params.nodes()) < 1e-4


def test_sgd_step_rarely_increases_loss():
    rng = np.random.default_rng(21)
    violations = 0
    for trial in range(20):
        spec = nn.MlpSpec(
            input_dim=3, hidden_dims=(5,), output_dim=2,
            output_activation="softmax", seed=trial,
        )
        params = nn.mlp_init(spec)
        x = rng.normal(size=(10, 3))
        y = np.eye(2)[rng.integers(0, 2, size=10)]
        loss = nn.cross_entropy(nn.mlp_forward(params, x), y)
        before = float(T.value_of(loss))
        grads = T.backward(loss)
        state = T.AdamState(params.nodes(), learning_rate=1e-3)
        T.adam_step(params.nodes(), grads, state)
        after = float(T.value_of(loss))
        if after > before:
            violations += 1
    assert violations <= 1


def test_save_load_roundtrip(tmp_path):
    spec = nn.MlpSpec(input_dim=4, hidden_dims=(6, 5), output_dim=2, seed=3)
    params = nn.mlp_init(spec)
    path = tmp_path / "weights.npz"
    nn.save_params(path, params)
    loaded = nn.load_params(path, spec)
    x = np.random.default_rng(1).normal(size=(3, 4))
    np.testing.assert_array_equal(
        T.value_of(nn.mlp_forward(params, x)), T.value_of(nn.mlp_forward(loaded, x))
    )
