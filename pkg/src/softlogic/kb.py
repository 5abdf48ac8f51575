"""Knowledge bases: satisfiability, gradient training, and querying.

A KnowledgeBase pairs named closed formulas with a grounding whose
predicates and functions hold the trainable parameters.  Satisfiability
folds the per-axiom truth values with the same p-mean-error operator the
universal quantifier uses; training runs Adam on 1 - satisfiability over
shuffled mini-batches.

Data reaches axioms through named variable bindings.  BoundData derives
those bindings from a feature matrix and a target matrix via per-variable
rules, so membership axioms like "forall x_udp: P(x_udp, udp)" can select
the sub-batch of rows whose udp bit is set, inside every mini-batch.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .metrics import MetricsRecord
from .logic import (
    DEFAULT_QUANTIFIERS,
    Func,
    Grounding,
    GroundingError,
    Pred,
    QuantifierConfig,
    Sym,
    TruthGrid,
    aggregate_forall,
    eval_formula,
)


class TrainingDiverged(ArithmeticError):
    """Satisfiability became non-finite during training."""


def referenced_variables(f, grounding: Grounding):
    """Names of grounding variables a formula's terms actually touch."""
    out = []

    def walk_term(t):
        if isinstance(t, Sym):
            if t.name in grounding.variables and t.name not in out:
                out.append(t.name)
        elif isinstance(t, Func):
            for a in t.args:
                walk_term(a)

    def walk(f):
        if isinstance(f, Pred):
            for t in f.args:
                walk_term(t)
        elif hasattr(f, "body"):
            walk(f.body)
        else:
            walk(f.left)
            walk(f.right)

    walk(f)
    return out


@dataclass
class KnowledgeBase:
    axioms: list  # ordered (name, formula) pairs
    grounding: Grounding
    quantifier_config: QuantifierConfig = DEFAULT_QUANTIFIERS
    axiom_aggregation_p: float = 2.0

    def __post_init__(self):
        names = [n for n, _ in self.axioms]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate axiom names in {names}")


def _axiom_scalars(kb: KnowledgeBase, bound: Grounding, mode: str, skip_empty: bool):
    """Evaluate each axiom to a scalar node; optionally skip starved ones."""
    named = []
    for name, f in kb.axioms:
        if skip_empty:
            starved = False
            for v in referenced_variables(f, bound):
                node = bound.variables[v]
                if node is None or node.value.shape[0] == 0:
                    starved = True
                    break
            if starved:
                continue
        grid = eval_formula(f, bound, kb.quantifier_config, mode=mode)
        if grid.axes:
            raise GroundingError(
                f"axiom {name!r} is not closed: free axes {grid.axes} remain"
            )
        named.append((name, grid.node))
    return named


def _fold_axioms(named, p: float) -> T.Node:
    stack = T.stack_scalars([node for _, node in named])
    grid = aggregate_forall(TruthGrid(("axioms",), stack), "axioms", p=p)
    return grid.node


def kb_satisfiability(kb: KnowledgeBase, bindings, mode: str = "train") -> float:
    """Aggregate truth of all axioms under the given variable bindings."""
    if not kb.axioms:
        raise ValueError("knowledge base has no axioms")
    bound = kb.grounding.bind(bindings)
    named = _axiom_scalars(kb, bound, mode, skip_empty=False)
    node = _fold_axioms(named, kb.axiom_aggregation_p)
    return float(T.forward_eval([node])[node.id])


def query(grounding: Grounding, f, bindings, cfg: QuantifierConfig = DEFAULT_QUANTIFIERS):
    """Evaluate one formula at query-mode sharpness; mutates nothing."""
    bound = grounding.bind(bindings)
    grid = eval_formula(f, bound, cfg, mode="query")
    if grid.axes:
        raise GroundingError(f"query formula has free axes {grid.axes}")
    return grid.scalar()


# ---------------------------------------------------------------------------
# data binding
# ---------------------------------------------------------------------------


@dataclass
class BoundData:
    """Feature/target arrays plus the rules giving each variable its rows.

    Rules: "all" binds the full feature batch, "label:<name>" the feature
    rows whose target bit for <name> is set, "target" the target batch
    itself (regression).  label_names aligns target columns with names.
    """

    features: np.ndarray
    targets: np.ndarray
    rules: dict
    label_names: tuple = ()

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.features.shape[0] != self.targets.shape[0]:
            raise ValueError(
                f"{self.features.shape[0]} feature rows vs "
                f"{self.targets.shape[0]} target rows"
            )
        for var, rule in self.rules.items():
            if rule == "all" or rule == "target":
                continue
            if rule.startswith("label:"):
                name = rule[len("label:") :]
                if name not in self.label_names:
                    raise ValueError(f"rule for {var!r} names unknown label {name!r}")
                continue
            raise ValueError(f"unknown binding rule {rule!r} for variable {var!r}")

    @property
    def n_rows(self):
        return self.features.shape[0]

    def bindings(self, idx=None):
        if idx is None:
            idx = np.arange(self.n_rows)
        feats = self.features[idx]
        targs = self.targets[idx]
        out = {}
        for var, rule in self.rules.items():
            if rule == "all":
                out[var] = feats
            elif rule == "target":
                out[var] = targs
            else:
                col = self.label_names.index(rule[len("label:") :])
                out[var] = feats[targs[:, col] >= 0.5]
        return out


def infer_rules(axioms, grounding: Grounding, label_names, regression_var=None):
    """Default rule per variable: x_<label> selects that label's rows.

    Variables named exactly like the regression target variable bind to
    targets; everything else binds to the full batch.
    """
    rules = {}
    names = set()
    for _, f in axioms:
        for v in referenced_variables(f, grounding):
            names.add(v)
    for v in sorted(names):
        if regression_var is not None and v == regression_var:
            rules[v] = "target"
            continue
        _, _, suffix = v.partition("_")
        if suffix and suffix in label_names:
            rules[v] = f"label:{suffix}"
        else:
            rules[v] = "all"
    return rules


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    epochs: int
    batch_size: int
    learning_rate: float = 0.001
    seed: int = 0
    query_formulas: list = field(default_factory=list)  # (name, formula) pairs

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")


def grounding_digest(grounding: Grounding) -> str:
    """Hash of every trainable value; detects accidental mutation."""
    h = hashlib.sha256()
    for node in sorted(grounding.trainable_nodes(), key=lambda n: n.id):
        h.update(np.ascontiguousarray(node.value).tobytes())
    return h.hexdigest()


def _epoch_record(kb, train_data, test_data, cfg, epoch, accuracy):
    train_bindings = train_data.bindings()
    try:
        sat_train = kb_satisfiability(kb, train_bindings)
        sat_test = kb_satisfiability(kb, test_data.bindings())
    except T.NonFiniteError as e:
        raise TrainingDiverged(f"epoch {epoch}: {e}") from None
    if not (np.isfinite(sat_train) and np.isfinite(sat_test)):
        raise TrainingDiverged(f"satisfiability became non-finite at epoch {epoch}")
    queries = {}
    for name, f in cfg.query_formulas:
        queries[name] = query(kb.grounding, f, train_bindings, kb.quantifier_config)
    acc_train = accuracy(kb.grounding, train_data) if accuracy else 0.0
    acc_test = accuracy(kb.grounding, test_data) if accuracy else 0.0
    return MetricsRecord(
        epoch=epoch,
        sat_train=sat_train,
        sat_test=sat_test,
        acc_train=acc_train,
        acc_test=acc_test,
        queries=queries,
    )


def train(kb: KnowledgeBase, train_data: BoundData, test_data: BoundData, cfg: TrainConfig,
          accuracy=None):
    """Maximize satisfiability with Adam; returns (grounding, records).

    accuracy: optional callable (grounding, BoundData) -> float in [0, 1]
    filling the acc_train/acc_test fields.  One MetricsRecord is appended
    per epoch, plus the epoch-0 snapshot taken before any update.
    """
    if not kb.axioms:
        raise ValueError("knowledge base has no axioms")
    params = kb.grounding.trainable_nodes()
    if not params:
        raise ValueError("grounding has no trainable parameters")
    rng = np.random.default_rng(cfg.seed)
    state = T.AdamState(params, learning_rate=cfg.learning_rate)
    records = [_epoch_record(kb, train_data, test_data, cfg, 0, accuracy)]
    n = train_data.n_rows
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            chunk = perm[start : start + cfg.batch_size]
            bound = kb.grounding.bind(train_data.bindings(chunk))
            named = _axiom_scalars(kb, bound, "train", skip_empty=True)
            if not named:
                continue
            sat = _fold_axioms(named, kb.axiom_aggregation_p)
            loss = T.sub(T.const(1.0), sat)
            try:
                T.forward_eval([loss])
                grads = T.backward(loss, graph=params)
            except T.NonFiniteError as e:
                raise TrainingDiverged(f"epoch {epoch}: {e}") from None
            T.adam_step(params, grads, state)
        records.append(_epoch_record(kb, train_data, test_data, cfg, epoch, accuracy))
    return kb.grounding, records
