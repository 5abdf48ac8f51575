import math

import numpy as np
import pytest

from softlogic import kb as K
from softlogic import logic as L
from softlogic import nn
from softlogic import parser as P
from softlogic import tensor as T


def const_pred(value):
    """Predicate ignoring its argument, always returning one truth value."""
    return L.LambdaPredicate(
        lambda x: T.broadcast_to(T.reshape(T.const(float(value)), (1,)), (1,)), arity=1
    )


def const_kb(truths, p=2.0):
    g = L.Grounding().add_constant("c", [0.0])
    axioms = []
    for i, v in enumerate(truths):
        name = f"t{i}"
        g.add_predicate(name, const_pred(v))
        axioms.append((f"ax{i}", L.Pred(name, ["c"])))
    return K.KnowledgeBase(axioms, g, axiom_aggregation_p=p)


# ---------------------------------------------------------------------------
# satisfiability
# ---------------------------------------------------------------------------


def test_single_axiom_satisfiability_is_its_truth():
    kb = const_kb([0.73])
    assert K.kb_satisfiability(kb, {}) == pytest.approx(0.73, abs=1e-9)


def test_all_true_axioms_give_one():
    kb = const_kb([1.0, 1.0, 1.0])
    assert K.kb_satisfiability(kb, {}) == pytest.approx(1.0, abs=1e-6)


def test_two_axiom_frozen_value():
    kb = const_kb([1.0, 0.5])
    assert K.kb_satisfiability(kb, {}) == pytest.approx(0.6464466094067263, abs=1e-9)


def test_axiom_order_invariance():
    rng = np.random.default_rng(13)
    truths = rng.uniform(0.1, 0.9, size=6).tolist()
    a = K.kb_satisfiability(const_kb(truths), {})
    b = K.kb_satisfiability(const_kb(truths[::-1]), {})
    assert a == pytest.approx(b, abs=1e-12)


def test_adding_true_axiom_never_decreases_satisfiability():
    rng = np.random.default_rng(17)
    for _ in range(10):
        truths = rng.uniform(0.0, 1.0, size=rng.integers(1, 6)).tolist()
        base = K.kb_satisfiability(const_kb(truths), {})
        extended = K.kb_satisfiability(const_kb(truths + [1.0]), {})
        assert extended >= base - 1e-12


def test_open_axiom_rejected():
    model = L.LambdaPredicate(lambda x: T.sigmoid(T.mean_(x, axis=1)), arity=1)
    g = L.Grounding().add_variable("x", [[0.1], [0.2]]).add_predicate("P", model)
    kb = K.KnowledgeBase([("open", L.Pred("P", ["x"]))], g)
    with pytest.raises(L.GroundingError, match="not closed"):
        K.kb_satisfiability(kb, {})


def test_empty_binding_raises_in_public_satisfiability():
    model = L.LambdaPredicate(lambda x: T.sigmoid(T.mean_(x, axis=1)), arity=1)
    g = L.Grounding().add_variable("x").add_predicate("P", model)
    kb = K.KnowledgeBase([("m", L.Forall(("x",), L.Pred("P", ["x"])))], g)
    with pytest.raises(L.GroundingError, match="empty batch"):
        K.kb_satisfiability(kb, {"x": np.zeros((0, 1))})
    with pytest.raises(L.GroundingError, match="not bound"):
        K.kb_satisfiability(kb, {})


def test_duplicate_axiom_names_rejected():
    g = L.Grounding().add_constant("c", [0.0]).add_predicate("t", const_pred(1.0))
    with pytest.raises(ValueError, match="duplicate axiom names"):
        K.KnowledgeBase([("a", L.Pred("t", ["c"])), ("a", L.Pred("t", ["c"]))], g)


# ---------------------------------------------------------------------------
# data binding
# ---------------------------------------------------------------------------


def make_bound_data():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    Y = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    rules = {"x": "all", "x_a": "label:a", "x_b": "label:b"}
    return K.BoundData(X, Y, rules, label_names=("a", "b"))


def test_bound_data_label_selection():
    d = make_bound_data()
    b = d.bindings()
    assert b["x"].shape == (4, 2)
    np.testing.assert_array_equal(b["x_a"][:, 0], [0.0, 2.0])
    np.testing.assert_array_equal(b["x_b"][:, 0], [1.0, 3.0])
    sub = d.bindings(np.array([0, 1]))
    np.testing.assert_array_equal(sub["x_a"][:, 0], [0.0])
    empty = d.bindings(np.array([0, 2]))
    assert empty["x_b"].shape == (0, 2)


def test_bound_data_target_rule():
    X = np.arange(6.0).reshape(3, 2)
    Y = np.array([[0.5], [0.6], [0.7]])
    d = K.BoundData(X, Y, {"x": "all", "y": "target"})
    b = d.bindings(np.array([2, 0]))
    np.testing.assert_array_equal(b["y"][:, 0], [0.7, 0.5])


def test_bound_data_validation():
    X, Y = np.zeros((3, 2)), np.zeros((2, 1))
    with pytest.raises(ValueError, match="feature rows"):
        K.BoundData(X, Y, {})
    with pytest.raises(ValueError, match="unknown binding rule"):
        K.BoundData(np.zeros((2, 2)), np.zeros((2, 1)), {"x": "rows"})
    with pytest.raises(ValueError, match="unknown label"):
        K.BoundData(np.zeros((2, 2)), np.zeros((2, 1)), {"x": "label:zz"}, ("a",))


def test_infer_rules():
    axioms = list(
        P.parse_axioms(
            "forall x_udp: P(x_udp, udp)\n"
            "forall x: ~(P(x, tcp) & P(x, udp))\n"
        ).items()
    )
    spec = nn.MlpSpec(input_dim=2, hidden_dims=(4,), output_dim=2, seed=0)
    model = L.MlpPredicate(nn.mlp_init(spec), labels=("tcp", "udp"))
    g = (
        L.Grounding()
        .add_variable("x")
        .add_variable("x_udp")
        .add_predicate("P", model)
    )
    rules = K.infer_rules(axioms, g, ("tcp", "udp"))
    assert rules == {"x": "all", "x_udp": "label:udp"}
    beam = list(P.parse_axioms("forall x, y: Sim(F(x), y)\n").items())
    gb = (
        L.Grounding()
        .add_variable("x", pair="rows")
        .add_variable("y", pair="rows")
        .add_predicate("Sim", L.SimilarityPredicate("euclidean"))
        .add_function("F", L.MlpFunction(nn.mlp_init(
            nn.MlpSpec(input_dim=2, output_dim=1, output_activation="identity", seed=0))))
    )
    assert K.infer_rules(beam, gb, (), regression_var="y") == {"x": "all", "y": "target"}


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def two_class_task(seed=0, n=120):
    rng = np.random.default_rng(seed)
    half = n // 2
    Xa = rng.normal(loc=(-1.5, 0.0), scale=0.4, size=(half, 2))
    Xb = rng.normal(loc=(1.5, 0.0), scale=0.4, size=(n - half, 2))
    X = np.vstack([Xa, Xb])
    Y = np.zeros((n, 2))
    Y[:half, 0] = 1.0
    Y[half:, 1] = 1.0
    perm = rng.permutation(n)
    return X[perm], Y[perm]


def two_class_kb(seed=0):
    text = (
        "forall x_a: P(x_a, a)\n"
        "forall x_b: P(x_b, b)\n"
        "forall x: ~(P(x, a) & P(x, b))\n"
    )
    axioms = list(P.parse_axioms(text).items())
    spec = nn.MlpSpec(input_dim=2, hidden_dims=(8,), output_dim=2, seed=seed)
    model = L.MlpPredicate(nn.mlp_init(spec), labels=("a", "b"))
    g = (
        L.Grounding()
        .add_variable("x")
        .add_variable("x_a")
        .add_variable("x_b")
        .add_predicate("P", model)
    )
    return K.KnowledgeBase(axioms, g)


def bound(X, Y):
    rules = {"x": "all", "x_a": "label:a", "x_b": "label:b"}
    return K.BoundData(X, Y, rules, label_names=("a", "b"))


def hamming_acc(grounding, d):
    model = grounding.predicates["P"]
    out = nn.mlp_forward(model.params, d.features)
    T.forward_eval([out])
    hard = (out.value >= 0.5).astype(float)
    return float(1.0 - np.mean(np.abs(hard - d.targets)))


def run_training(epochs=5, seed=0, accuracy=None):
    X, Y = two_class_task(seed=1)
    kb = two_class_kb(seed=seed)
    cfg = K.TrainConfig(epochs=epochs, batch_size=30, learning_rate=0.01, seed=seed)
    return K.train(kb, bound(X[:90], Y[:90]), bound(X[90:], Y[90:]), cfg,
                   accuracy=accuracy)


def test_zero_epochs_changes_nothing():
    X, Y = two_class_task()
    kb = two_class_kb()
    before = K.grounding_digest(kb.grounding)
    cfg = K.TrainConfig(epochs=0, batch_size=16, seed=0)
    _, records = K.train(kb, bound(X[:90], Y[:90]), bound(X[90:], Y[90:]), cfg)
    assert len(records) == 1
    assert records[0].epoch == 0
    assert K.grounding_digest(kb.grounding) == before


def test_training_raises_satisfiability():
    _, records = run_training(epochs=20, accuracy=hamming_acc)
    sats = [r.sat_train for r in records]
    assert 0.0 < sats[0] < 1.0
    assert sats[-1] > sats[0] + 0.2
    assert records[-1].acc_train > 0.95
    assert [r.epoch for r in records] == list(range(21))


def test_training_is_deterministic():
    _, a = run_training(epochs=3)
    _, b = run_training(epochs=3)
    for ra, rb in zip(a, b):
        assert ra.sat_train == rb.sat_train
        assert ra.sat_test == rb.sat_test


def test_training_records_queries():
    X, Y = two_class_task(seed=1)
    kb = two_class_kb()
    phi = P.parse_formula("forall x_a: P(x_a, a) -> ~P(x_a, b)")
    cfg = K.TrainConfig(
        epochs=2, batch_size=30, learning_rate=0.01, seed=0,
        query_formulas=[("phi", phi)],
    )
    _, records = K.train(kb, bound(X[:90], Y[:90]), bound(X[90:], Y[90:]), cfg)
    assert all("phi" in r.queries for r in records)
    assert all(0.0 <= r.queries["phi"] <= 1.0 for r in records)


def test_query_mutates_nothing():
    X, Y = two_class_task()
    kb = two_class_kb()
    d = bound(X, Y)
    before = K.grounding_digest(kb.grounding)
    f = P.parse_formula("forall x: ~(P(x, a) & P(x, b))")
    v = K.query(kb.grounding, f, d.bindings())
    assert 0.0 <= v <= 1.0
    assert K.grounding_digest(kb.grounding) == before


def test_query_matches_axiom_truth():
    kb = const_kb([0.42])
    v = K.query(kb.grounding, kb.axioms[0][1], {})
    assert v == pytest.approx(0.42, abs=1e-9)


def test_small_batches_skip_starved_membership_axioms():
    # batch_size 1 guarantees batches where one class is absent
    X, Y = two_class_task(seed=2, n=20)
    kb = two_class_kb()
    cfg = K.TrainConfig(epochs=1, batch_size=1, learning_rate=0.01, seed=0)
    _, records = K.train(kb, bound(X[:16], Y[:16]), bound(X[16:], Y[16:]), cfg)
    assert len(records) == 2
    assert all(np.isfinite(r.sat_train) for r in records)


def test_divergence_reported_with_epoch():
    X, Y = two_class_task()
    kb = two_class_kb()
    for node in kb.grounding.trainable_nodes():
        node.value = np.full_like(node.value, np.nan)
        break
    cfg = K.TrainConfig(epochs=1, batch_size=30, seed=0)
    with pytest.raises(K.TrainingDiverged, match="epoch 0"):
        K.train(kb, bound(X[:90], Y[:90]), bound(X[90:], Y[90:]), cfg)


def test_train_config_validation():
    with pytest.raises(ValueError, match="epochs"):
        K.TrainConfig(epochs=-1, batch_size=4)
    with pytest.raises(ValueError, match="batch size"):
        K.TrainConfig(epochs=1, batch_size=0)
    with pytest.raises(ValueError, match="learning rate"):
        K.TrainConfig(epochs=1, batch_size=4, learning_rate=0.0)
