"""Experiment pipelines: data preparation, training, and artifact output.

Five runnable studies share one flow: load or synthesize a table, clean it,
encode features and labels, split, build a knowledge base around a neural
predicate (or a plain deep network for the baseline), train, and write the
per-epoch metrics plus a resolved-config echo that can be fed back in as a
config file.  The regression study runs once per cross-validation fold and
adds per-fold prediction tables.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields
from importlib import resources

import numpy as np

from . import data as D
from . import kb as K
from . import logic as L
from . import metrics as M
from . import nn
from . import parser as P
from . import tensor as T

EXPERIMENTS = (
    "protocol-kb",
    "kdd-multilabel-ltn",
    "kdd-dnn",
    "cic-singlelabel",
    "beam-regression",
)

# beam-regression is the only k-fold experiment and the only one with a
# distance predicate, so these keys are rejected everywhere else
BEAM_ONLY_KEYS = ("k", "distance", "minkowski_p", "validation")

_SYNTH_KIND = {
    "protocol-kb": "protocol_flags",
    "kdd-multilabel-ltn": "attack_categories",
    "kdd-dnn": "attack_categories",
    "cic-singlelabel": "three_class",
    "beam-regression": "beam_rfs",
}

_AXIOM_ASSET = {
    "protocol-kb": "protocol_flags.lt",
    "kdd-multilabel-ltn": "attack_categories.lt",
    "cic-singlelabel": "traffic_three_class.lt",
    "beam-regression": "beam_similarity.lt",
}

_INT_KEYS = ("n", "seed", "epochs", "batch_size", "k")
_FLOAT_KEYS = (
    "learning_rate",
    "test_fraction",
    "p_train",
    "p_forall_query",
    "p_exists_query",
    "axiom_aggregation_p",
    "minkowski_p",
)

_DEFAULTS = {
    "data": "synth",
    "schema": "",
    "axioms": "",
    "out_dir": "",
    "seed": 0,
    "learning_rate": 0.01,
    "test_fraction": 0.25,
    "p_train": 2.0,
    "p_forall_query": 4.0,
    "p_exists_query": 6.0,
    "axiom_aggregation_p": 2.0,
    "k": 2,
    "distance": "euclidean",
    "minkowski_p": 2.0,
    "validation": "",
}

_PER_EXPERIMENT = {
    "protocol-kb": {"n": 480, "epochs": 60, "batch_size": 64},
    "kdd-multilabel-ltn": {"n": 2000, "epochs": 20, "batch_size": 64},
    "kdd-dnn": {"n": 2000, "epochs": 20, "batch_size": 64},
    "cic-singlelabel": {"n": 1200, "epochs": 12, "batch_size": 64},
    "beam-regression": {"n": 400, "epochs": 150, "batch_size": 32},
}

# queries interrogated per epoch in the protocol/flag study; the membership
# variables restrict each formula to the rows of one class, where the
# implication antecedent is near-crisp
_PROTOCOL_QUERIES = (
    ("phi1", "forall x_udp: P(x_udp, udp) -> ~P(x_udp, tcp)"),
    ("phi2", "forall x_udp: P(x_udp, udp) -> P(x_udp, tcp)"),
    ("phi3", "forall x_tcp: P(x_tcp, tcp) -> P(x_tcp, sf)"),
    ("phi3_analog", "forall x_udp: P(x_udp, udp) -> P(x_udp, sf)"),
)


class ConfigError(ValueError):
    """Bad experiment name, key, value, or key/experiment combination."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    data: str
    schema: str
    axioms: str
    out_dir: str
    n: int
    seed: int
    epochs: int
    batch_size: int
    learning_rate: float
    test_fraction: float
    p_train: float
    p_forall_query: float
    p_exists_query: float
    axiom_aggregation_p: float
    k: int
    distance: str
    minkowski_p: float
    validation: str

    def as_lines(self):
        """key=value lines, one per applicable field, sorted; a valid config file."""
        skip = set()
        if self.experiment != "beam-regression":
            skip.update(BEAM_ONLY_KEYS)
        if self.experiment == "kdd-dnn":
            skip.add("axioms")
        out = []
        for f in sorted(fields(self), key=lambda f: f.name):
            if f.name in skip:
                continue
            value = getattr(self, f.name)
            if isinstance(value, float):
                value = f"{value:g}"
            out.append(f"{f.name}={value}")
        return out


@dataclass(frozen=True)
class RunArtifacts:
    out_dir: str
    echo: str
    metrics: tuple = ()
    predictions: tuple = ()
    params: tuple = ()
    extra: tuple = ()

    def all_paths(self):
        return (self.echo, *self.metrics, *self.predictions, *self.params, *self.extra)


def parse_config_file(path):
    """Flat key=value lines; # starts a comment; blank lines ignored."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            out[key.strip()] = value.strip()
    return out


def resolve(experiment, overrides=None):
    """Fill defaults and type the string overrides into an ExperimentConfig."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}"
        )
    values = dict(_DEFAULTS)
    values.update(_PER_EXPERIMENT[experiment])
    values["out_dir"] = os.path.join("runs", experiment)
    overrides = dict(overrides or {})
    stated = overrides.pop("experiment", None)
    if stated is not None and stated != experiment:
        raise ConfigError(f"config names experiment {stated!r} but {experiment!r} was run")
    for key, value in overrides.items():
        if key not in values:
            raise ConfigError(
                f"unknown config key {key!r}; valid keys: {', '.join(sorted(values))}"
            )
        if key in BEAM_ONLY_KEYS and experiment != "beam-regression":
            raise ConfigError(f"config key {key!r} applies only to beam-regression")
        if key == "axioms" and experiment == "kdd-dnn" and value:
            raise ConfigError("kdd-dnn has no knowledge base; drop the axioms key")
        try:
            if key in _INT_KEYS:
                value = int(value)
            elif key in _FLOAT_KEYS:
                value = float(value)
        except ValueError:
            raise ConfigError(f"config key {key!r} needs a number, got {value!r}") from None
        values[key] = value
    cfg = ExperimentConfig(experiment=experiment, **values)
    _validate(cfg)
    return cfg


def _validate(cfg):
    checks = (
        (cfg.n >= 10, f"n must be >= 10, got {cfg.n}"),
        (cfg.epochs >= 0, f"epochs must be >= 0, got {cfg.epochs}"),
        (cfg.batch_size >= 1, f"batch_size must be >= 1, got {cfg.batch_size}"),
        (cfg.learning_rate > 0, f"learning_rate must be positive, got {cfg.learning_rate}"),
        (
            0.0 < cfg.test_fraction < 1.0,
            f"test_fraction must lie in (0, 1), got {cfg.test_fraction}",
        ),
        (cfg.k >= 2, f"k must be >= 2, got {cfg.k}"),
        (
            cfg.distance in L.DISTANCE_KINDS,
            f"unknown distance {cfg.distance!r}; expected {L.DISTANCE_KINDS}",
        ),
        (cfg.minkowski_p >= 1.0, f"minkowski_p must be >= 1, got {cfg.minkowski_p}"),
    )
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)
    if cfg.data != "synth" and not cfg.schema:
        raise ConfigError("loading a CSV needs a schema file; pass the schema key")


def _quantifier_config(cfg):
    return L.QuantifierConfig(
        p_train=cfg.p_train,
        p_forall_query=cfg.p_forall_query,
        p_exists_query=cfg.p_exists_query,
    )


# ---------------------------------------------------------------------------
# axiom introspection
# ---------------------------------------------------------------------------


def _walk_formulas(axioms):
    stack = [f for _, f in axioms]
    while stack:
        f = stack.pop()
        yield f
        if isinstance(f, (L.Forall, L.Exists, L.Not)):
            stack.append(f.body)
        elif isinstance(f, (L.And, L.Or, L.Implies)):
            stack.extend((f.left, f.right))


def quantified_variables(axioms):
    """Every variable name bound by a quantifier anywhere in the formulas."""
    names = set()
    for f in _walk_formulas(axioms):
        if isinstance(f, (L.Forall, L.Exists)):
            names.update(f.variables)
    return names


def _term_symbols(term, syms, funcs):
    if isinstance(term, L.Sym):
        syms.add(term.name)
    else:
        funcs.add(term.name)
        for a in term.args:
            _term_symbols(a, syms, funcs)


def axiom_symbols(axioms):
    """(predicate names, function names, bare atom-argument names)."""
    preds, funcs, syms = set(), set(), set()
    for f in _walk_formulas(axioms):
        if isinstance(f, L.Pred):
            preds.add(f.name)
            for a in f.args:
                _term_symbols(a, syms, funcs)
    return preds, funcs, syms


def _check_axiom_labels(axioms, label_names):
    """Every bare non-variable predicate argument must be a known label."""
    qvars = quantified_variables(axioms)
    _, _, syms = axiom_symbols(axioms)
    for name in sorted(syms - qvars):
        if name not in label_names:
            raise ConfigError(
                f"axioms reference {name!r}, which is not a label of this data "
                f"(labels: {', '.join(label_names)})"
            )


def _load_axioms(cfg):
    if cfg.axioms:
        return list(P.parse_axiom_file(cfg.axioms).items())
    asset = resources.files("softlogic").joinpath(
        "assets", "axioms", _AXIOM_ASSET[cfg.experiment]
    )
    return list(P.parse_axioms(asset.read_text(encoding="utf-8")).items())


# ---------------------------------------------------------------------------
# data preparation
# ---------------------------------------------------------------------------

_KDD_CATEGORY_SET = frozenset(D.KDD_CATEGORIES)


def _load_class_table(cfg, group_kdd=False):
    # synthetic tables are finite and duplicate-by-design (the protocol/flag
    # table has only 11 distinct rows), so only ingested CSVs get cleaned
    if cfg.data == "synth":
        t = D.synth_generate(_SYNTH_KIND[cfg.experiment], cfg.n, cfg.seed)
    else:
        t = D.clean(D.load_table(cfg.data, D.load_schema(cfg.schema)))
    if group_kdd:
        observed = set(t.values("label"))
        if not observed <= _KDD_CATEGORY_SET:
            t = D.group_kdd_labels(t)
    return t


def _feature_digest(X):
    return hashlib.sha256(np.ascontiguousarray(X).tobytes()).hexdigest()


def _write_echo(cfg, path, X, notes=()):
    lines = ["# resolved run configuration; usable as a config file"]
    lines += cfg.as_lines()
    lines.append(f"# feature_sha256={_feature_digest(X)}")
    lines += [f"# {note}" for note in notes]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_echo_digest(path):
    """The feature checksum a run recorded in its echo file."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# feature_sha256="):
                return line.split("=", 1)[1].strip()
    raise ConfigError(f"{path}: no feature checksum line")


# ---------------------------------------------------------------------------
# classification experiments
# ---------------------------------------------------------------------------


def _check_nonempty(d, rules, split_name):
    """Full-batch satisfiability needs every axiom variable populated."""
    b = d.bindings()
    for var in sorted(rules):
        if b[var].shape[0] == 0:
            raise ConfigError(
                f"the {split_name} split leaves variable {var!r} with no rows; "
                "increase n, lower test_fraction, or pick another seed"
            )


def _classification_accuracy(pred_name):
    def acc(grounding, d):
        out = nn.mlp_forward(grounding.predicates[pred_name].params, d.features)
        T.forward_eval([out])
        return M.hamming_accuracy(out.value, d.targets)

    return acc


def _build_classification_kb(cfg, axioms, queries, input_dim, labels, output="sigmoid"):
    pred_names, func_names, _ = axiom_symbols(axioms)
    if func_names:
        raise ConfigError(f"classification axioms cannot use functions: {sorted(func_names)}")
    if len(pred_names) != 1:
        raise ConfigError(
            f"classification axioms must share one predicate, found {sorted(pred_names)}"
        )
    (pred_name,) = pred_names
    spec = nn.MlpSpec(
        input_dim=input_dim,
        output_dim=len(labels),
        output_activation=output,
        seed=cfg.seed,
    )
    model = L.MlpPredicate(nn.mlp_init(spec), labels=labels)
    g = L.Grounding()
    for v in sorted(quantified_variables(axioms + queries)):
        g.add_variable(v)
    g.add_predicate(pred_name, model)
    kb = K.KnowledgeBase(
        axioms,
        g,
        quantifier_config=_quantifier_config(cfg),
        axiom_aggregation_p=cfg.axiom_aggregation_p,
    )
    return kb, pred_name


def _run_classification(cfg, group_kdd=False, queries=(), output="sigmoid"):
    t = _load_class_table(cfg, group_kdd=group_kdd)
    enc = D.infer_encoding(t, "multilabel")
    X, Y = D.encode(t, enc)
    if X.shape[1] == 0:
        # no attribute columns: the one-hot label vector is itself the input
        # layer, so the network learns to reproduce its own class pattern
        X = Y.copy()
    labels = enc.label_names()
    queries = [(name, P.parse_formula(text)) for name, text in queries]
    axioms = _load_axioms(cfg)
    _check_axiom_labels(axioms + queries, labels)
    kb, pred_name = _build_classification_kb(
        cfg, axioms, queries, X.shape[1], labels, output=output
    )
    rules = K.infer_rules(axioms + queries, kb.grounding, labels)
    tr, te = D.split(t.n_rows, cfg.test_fraction, cfg.seed)
    train_data = K.BoundData(X[tr], Y[tr], rules, labels)
    test_data = K.BoundData(X[te], Y[te], rules, labels)
    _check_nonempty(train_data, rules, "train")
    _check_nonempty(test_data, rules, "test")
    tcfg = K.TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        seed=cfg.seed,
        query_formulas=queries,
    )
    grounding, records = K.train(
        kb, train_data, test_data, tcfg, accuracy=_classification_accuracy(pred_name)
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    metrics_path = os.path.join(cfg.out_dir, "metrics.csv")
    M.write_metrics_csv(records, metrics_path)
    params_path = os.path.join(cfg.out_dir, "params.npz")
    nn.save_params(params_path, grounding.predicates[pred_name].params)
    echo_path = os.path.join(cfg.out_dir, "resolved_config.txt")
    _write_echo(cfg, echo_path, X, notes=(f"rows={t.n_rows}", f"labels={','.join(labels)}"))
    extra = _write_comparison(cfg.out_dir)
    return RunArtifacts(
        out_dir=cfg.out_dir,
        echo=echo_path,
        metrics=(metrics_path,),
        params=(params_path,),
        extra=extra,
    )


def _run_protocol_kb(cfg):
    return _run_classification(cfg, queries=_PROTOCOL_QUERIES)


def _run_kdd_ltn(cfg):
    return _run_classification(cfg, group_kdd=True)


def _run_cic(cfg):
    # membership axioms only; the softmax output makes the three labels
    # compete, which is what single-label means here
    return _run_classification(cfg, output="softmax")


# ---------------------------------------------------------------------------
# deep-network baseline
# ---------------------------------------------------------------------------


def _dnn_eval(params, X, idx, onehot):
    probs = nn.mlp_forward(params, X)
    loss = nn.cross_entropy(probs, onehot)
    values = T.forward_eval([probs, loss])
    acc = float(np.mean(np.argmax(values[probs.id], axis=1) == idx))
    return float(values[loss.id]), acc


def dnn_train(params, X_train, idx_train, X_test, idx_test, epochs, batch_size,
              learning_rate, seed):
    """Cross-entropy training; rows of (epoch, loss, loss, acc, acc) floats."""
    classes = params.spec.output_dim
    eye = np.eye(classes)
    onehot_train, onehot_test = eye[idx_train], eye[idx_test]
    state = T.AdamState(params.nodes(), learning_rate=learning_rate)
    rng = np.random.default_rng(seed)
    rows = []

    def record(epoch):
        loss_tr, acc_tr = _dnn_eval(params, X_train, idx_train, onehot_train)
        loss_te, acc_te = _dnn_eval(params, X_test, idx_test, onehot_test)
        rows.append((epoch, loss_tr, loss_te, acc_tr, acc_te))

    record(0)
    n = X_train.shape[0]
    for epoch in range(1, epochs + 1):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            chunk = perm[start : start + batch_size]
            loss = nn.cross_entropy(
                nn.mlp_forward(params, X_train[chunk]), onehot_train[chunk]
            )
            T.forward_eval([loss])
            grads = T.backward(loss, graph=params.nodes())
            T.adam_step(params.nodes(), grads, state)
        record(epoch)
    return rows


DNN_METRICS_HEADER = ("epoch", "loss_train", "loss_test", "acc_train", "acc_test")


def _run_kdd_dnn(cfg):
    t = _load_class_table(cfg, group_kdd=True)
    enc = D.infer_encoding(t, "multilabel")
    X, Y = D.encode(t, enc)
    # same encoded features as the neuro-symbolic run; classes recovered
    # from the identical one-hot matrix so the checksums can agree
    idx = np.argmax(Y, axis=1)
    tr, te = D.split(t.n_rows, cfg.test_fraction, cfg.seed)
    spec = nn.MlpSpec(
        input_dim=X.shape[1],
        output_dim=Y.shape[1],
        hidden_activation="relu",
        output_activation="softmax",
        seed=cfg.seed,
    )
    params = nn.mlp_init(spec)
    rows = dnn_train(
        params, X[tr], idx[tr], X[te], idx[te],
        cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.seed,
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    metrics_path = os.path.join(cfg.out_dir, "metrics_dnn.csv")
    M.write_series_csv(
        metrics_path,
        DNN_METRICS_HEADER,
        [[str(r[0])] + [f"{v:.6f}" for v in r[1:]] for r in rows],
    )
    params_path = os.path.join(cfg.out_dir, "params_dnn.npz")
    nn.save_params(params_path, params)
    echo_path = os.path.join(cfg.out_dir, "resolved_config_dnn.txt")
    _write_echo(cfg, echo_path, X, notes=(f"rows={t.n_rows}",))
    extra = _write_comparison(cfg.out_dir)
    return RunArtifacts(
        out_dir=cfg.out_dir,
        echo=echo_path,
        metrics=(metrics_path,),
        params=(params_path,),
        extra=extra,
    )


def _write_comparison(out_dir):
    """Join LTN and baseline accuracies by epoch once both runs exist."""
    ltn_path = os.path.join(out_dir, "metrics.csv")
    dnn_path = os.path.join(out_dir, "metrics_dnn.csv")
    if not (os.path.exists(ltn_path) and os.path.exists(dnn_path)):
        return ()
    records, _ = M.read_metrics_csv(ltn_path)
    ltn = {r.epoch: (r.acc_train, r.acc_test) for r in records}
    dnn = {}
    with open(dnn_path, "r", encoding="utf-8") as fh:
        rows = [line.strip().split(",") for line in fh if line.strip()]
    for row in rows[1:]:
        dnn[int(row[0])] = (row[3], row[4])
    path = os.path.join(out_dir, "comparison.csv")
    shared = sorted(set(ltn) & set(dnn))
    M.write_series_csv(
        path,
        ("epoch", "acc_train_ltn", "acc_test_ltn", "acc_train_dnn", "acc_test_dnn"),
        [
            [str(e), f"{ltn[e][0]:.6f}", f"{ltn[e][1]:.6f}", dnn[e][0], dnn[e][1]]
            for e in shared
        ],
    )
    return (path,)


# ---------------------------------------------------------------------------
# regression experiment
# ---------------------------------------------------------------------------


def _regression_target_var(axioms, qvars):
    """The quantified variable compared directly, never fed to a function."""
    bare, inner = set(), set()
    for f in _walk_formulas(axioms):
        if not isinstance(f, L.Pred):
            continue
        for a in f.args:
            if isinstance(a, L.Sym):
                bare.add(a.name)
            else:
                syms, funcs = set(), set()
                _term_symbols(a, syms, funcs)
                inner.update(syms)
    targets = (bare & qvars) - inner
    if len(targets) != 1:
        raise ConfigError(
            f"regression axioms need exactly one target variable, found {sorted(targets)}"
        )
    return targets.pop()


def _regression_accuracy(fn_name):
    def acc(grounding, d):
        out = nn.mlp_forward(grounding.functions[fn_name].params, d.features)
        T.forward_eval([out])
        return M.regression_score(out.value, d.targets)

    return acc


def _predict(params, X):
    out = nn.mlp_forward(params, X)
    return T.forward_eval([out])[out.id].ravel()


def _load_regression_table(cfg, path):
    if cfg.schema:
        schema = D.load_schema(cfg.schema)
    else:
        # matches the synthetic beam table's layout
        schema = [D.Column(f"rfs{i}", "numeric") for i in range(1, 9)]
        schema.append(D.Column("position", "label"))
    return D.clean(D.load_table(path, schema))


def _run_beam(cfg):
    if cfg.data == "synth":
        t = D.synth_generate("beam_rfs", cfg.n, cfg.seed)
    else:
        t = _load_regression_table(cfg, cfg.data)
    # positions and frequency shifts stay in their native units
    enc = D.infer_encoding(t, "regression", scale_numeric=False)
    X, Y = D.encode(t, enc)
    axioms = _load_axioms(cfg)
    pred_names, func_names, _ = axiom_symbols(axioms)
    if len(pred_names) != 1 or len(func_names) != 1:
        raise ConfigError(
            "regression axioms need one similarity predicate and one function, "
            f"found predicates {sorted(pred_names)} and functions {sorted(func_names)}"
        )
    (pred_name,), (fn_name,) = pred_names, func_names
    qvars = quantified_variables(axioms)
    target_var = _regression_target_var(axioms, qvars)
    val_X = val_Y = None
    if cfg.validation:
        vt = _load_regression_table(cfg, cfg.validation)
        val_X, val_Y = D.encode(vt, enc)
    plan = D.kfold(t.n_rows, cfg.k, cfg.seed)
    os.makedirs(cfg.out_dir, exist_ok=True)
    metrics_paths, prediction_paths, params_paths = [], [], []
    for fold in range(cfg.k):
        va = plan.folds[fold]
        tr = plan.train_indices(fold)
        spec = nn.MlpSpec(
            input_dim=X.shape[1],
            output_dim=1,
            output_activation="identity",
            seed=cfg.seed + fold,
        )
        model = L.MlpFunction(nn.mlp_init(spec))
        g = L.Grounding()
        for v in sorted(qvars):
            g.add_variable(v, pair="rows")
        g.add_predicate(pred_name, L.SimilarityPredicate(cfg.distance, p=cfg.minkowski_p))
        g.add_function(fn_name, model)
        kb = K.KnowledgeBase(
            axioms,
            g,
            quantifier_config=_quantifier_config(cfg),
            axiom_aggregation_p=cfg.axiom_aggregation_p,
        )
        rules = K.infer_rules(axioms, g, (), regression_var=target_var)
        tcfg = K.TrainConfig(
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            seed=cfg.seed + fold,
        )
        grounding, records = K.train(
            kb,
            K.BoundData(X[tr], Y[tr], rules),
            K.BoundData(X[va], Y[va], rules),
            tcfg,
            accuracy=_regression_accuracy(fn_name),
        )
        mpath = os.path.join(cfg.out_dir, f"metrics_fold{fold}.csv")
        M.write_metrics_csv(records, mpath)
        metrics_paths.append(mpath)
        ppath = os.path.join(cfg.out_dir, f"predictions_fold{fold}.csv")
        M.write_predictions_csv(Y[va].ravel(), _predict(model.params, X[va]), ppath)
        prediction_paths.append(ppath)
        if val_X is not None:
            vpath = os.path.join(cfg.out_dir, f"validation_fold{fold}.csv")
            M.write_predictions_csv(
                val_Y.ravel(), _predict(model.params, val_X), vpath
            )
            prediction_paths.append(vpath)
        wpath = os.path.join(cfg.out_dir, f"params_fold{fold}.npz")
        nn.save_params(wpath, model.params)
        params_paths.append(wpath)
    echo_path = os.path.join(cfg.out_dir, "resolved_config.txt")
    _write_echo(cfg, echo_path, X, notes=(f"rows={t.n_rows}",))
    return RunArtifacts(
        out_dir=cfg.out_dir,
        echo=echo_path,
        metrics=tuple(metrics_paths),
        predictions=tuple(prediction_paths),
        params=tuple(params_paths),
    )


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_RUNNERS = {
    "protocol-kb": _run_protocol_kb,
    "kdd-multilabel-ltn": _run_kdd_ltn,
    "kdd-dnn": _run_kdd_dnn,
    "cic-singlelabel": _run_cic,
    "beam-regression": _run_beam,
}


def run_experiment(cfg: ExperimentConfig) -> RunArtifacts:
    """Run one configured experiment and write its artifact files."""
    artifacts = _RUNNERS[cfg.experiment](cfg)
    missing = [p for p in artifacts.all_paths() if not os.path.exists(p)]
    if missing:
        raise RuntimeError(f"run finished but artifacts are missing: {missing}")
    return artifacts


def emit_plot_data(metrics_csv, out_dir):
    """One (epoch, value) file per metric column, values copied verbatim."""
    with open(metrics_csv, "r", encoding="utf-8") as fh:
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if len(rows) < 2:
        raise M.MetricsError(f"{metrics_csv}: no data rows")
    header = rows[0]
    if header[0] != "epoch" or len(header) < 2:
        raise M.MetricsError(f"{metrics_csv}: expected an epoch-first header, got {header}")
    if any(len(r) != len(header) for r in rows[1:]):
        raise M.MetricsError(f"{metrics_csv}: ragged rows")
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(metrics_csv))[0]
    paths = []
    for col, name in enumerate(header[1:], start=1):
        path = os.path.join(out_dir, f"{stem}_{name}.csv")
        M.write_series_csv(path, ("epoch", name), [(r[0], r[col]) for r in rows[1:]])
        paths.append(path)
    return paths
