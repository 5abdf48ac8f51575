"""Fuzzy first-order semantics over batched groundings.

A formula is a small immutable AST.  A Grounding maps its symbols onto
tensors: constants to vectors, variables to (n, d) batches of individuals,
predicates to truth-valued models, functions to vector-valued ones.
``eval_formula`` grounds a formula into one differentiable graph and returns
a TruthGrid, a multi-axis array of truth values with one axis per free
variable.

Connectives are the product family on [0, 1]:

    not a       = 1 - a
    a and b     = a * b
    a or b      = a + b - a*b
    a implies b = 1 - a + a*b

Quantifiers are smooth generalized means.  With truth values a_1..a_k and
exponent p >= 1:

    forall = 1 - ( (1/k) * sum_i (1 - a_i)^p )^(1/p)
    exists =     ( (1/k) * sum_i      a_i ^p )^(1/p)

Large p drives forall toward min and exists toward max.  Training uses a
soft p (default 2); queries sharpen it (defaults 4 and 6).  Aggregator
inputs are clamped to [1e-7, 1] before the elementwise power so gradients
stay finite at crisp truth values.

Distinct variables evaluate over the cross product of their batches, one
grid axis each.  Variables may instead be declared as a pairing group, in
which case they share one axis: sample i of x goes with sample i of y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from . import tensor as T

AGG_EPS = 1e-7  # elementwise clamp floor inside the aggregators


class GroundingError(ValueError):
    """A symbol is missing, unbound, or used inconsistently."""


class TruthRangeError(ValueError):
    """A predicate produced values outside [0, 1]."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sym:
    """A bare identifier term: constant, variable, or class label.

    Which of the three it is gets resolved against the grounding at
    evaluation time.
    """

    name: str


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple

    def __init__(self, name, args):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "args", tuple(_term(a) for a in args))


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple

    def __init__(self, name, args):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "args", tuple(_term(a) for a in args))


@dataclass(frozen=True)
class Not:
    body: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Forall:
    variables: tuple
    body: object
    p: float | None = None

    def __init__(self, variables, body, p=None):
        object.__setattr__(self, "variables", _varlist(variables))
        object.__setattr__(self, "body", body)
        object.__setattr__(self, "p", None if p is None else float(p))


@dataclass(frozen=True)
class Exists:
    variables: tuple
    body: object
    p: float | None = None

    def __init__(self, variables, body, p=None):
        object.__setattr__(self, "variables", _varlist(variables))
        object.__setattr__(self, "body", body)
        object.__setattr__(self, "p", None if p is None else float(p))


def _term(t):
    if isinstance(t, (Sym, Func)):
        return t
    if isinstance(t, str):
        return Sym(t)
    raise TypeError(f"not a term: {t!r}")


def _varlist(vs):
    if isinstance(vs, str):
        vs = (vs,)
    vs = tuple(vs)
    if not vs:
        raise ValueError("quantifier needs at least one variable")
    if len(set(vs)) != len(vs):
        raise ValueError(f"duplicate variable in quantifier: {vs}")
    return vs


CONNECTIVES = ("not", "and", "or", "implies")


# ---------------------------------------------------------------------------
# grounded models for predicates and functions
# ---------------------------------------------------------------------------


class MlpPredicate:
    """Neural predicate; an MLP with [0,1] outputs over the arguments.

    With ``labels`` set, the net has one output column per label and the
    formula supplies the label as an extra argument: P(x, tcp) reads column
    tcp of P's output on x.  Sigmoid outputs give independent per-label
    truths, softmax makes the labels compete (single-label semantics).
    """

    def __init__(self, params: nn.MlpParams, labels=None):
        if params.spec.output_activation not in ("sigmoid", "softmax"):
            raise GroundingError("predicate networks must end in sigmoid or softmax")
        if labels is not None:
            labels = tuple(labels)
            if params.spec.output_dim != len(labels):
                raise GroundingError(
                    f"{params.spec.output_dim} outputs for {len(labels)} labels"
                )
        elif params.spec.output_dim != 1:
            raise GroundingError("label-free predicates need exactly one output")
        self.params = params
        self.labels = labels

    def trainable_nodes(self):
        return self.params.nodes()


class LambdaPredicate:
    """Fixed predicate: a callable from argument nodes to a truth node."""

    def __init__(self, fn, arity=None):
        self.fn = fn
        self.arity = arity

    def trainable_nodes(self):
        return []


class SimilarityPredicate:
    """Two place predicate exp(-D(x, y)) built from a distance kind."""

    def __init__(self, kind: str, p: float = 2.0):
        if kind not in DISTANCE_KINDS:
            raise GroundingError(f"unknown distance kind {kind!r}; expected {DISTANCE_KINDS}")
        if kind == "minkowski" and p < 1:
            raise GroundingError(f"minkowski order must be >= 1, got {p}")
        self.kind = kind
        self.p = float(p)

    def trainable_nodes(self):
        return []


class MlpFunction:
    """Neural term function, arguments concatenated like MlpPredicate."""

    def __init__(self, params: nn.MlpParams):
        if params.spec.output_activation == "softmax":
            raise GroundingError("term functions cannot end in softmax")
        self.params = params

    def trainable_nodes(self):
        return self.params.nodes()


class LambdaFunction:
    def __init__(self, fn):
        self.fn = fn

    def trainable_nodes(self):
        return []


# ---------------------------------------------------------------------------
# grounding
# ---------------------------------------------------------------------------


def _as_batch(value) -> np.ndarray:
    arr = T.as_array(value)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise GroundingError(f"variable batches must be (n, d), got shape {arr.shape}")
    return arr


@dataclass
class Grounding:
    """Symbol table binding logical names to tensors and models."""

    constants: dict = field(default_factory=dict)  # name -> Node (d,)
    variables: dict = field(default_factory=dict)  # name -> Node (n, d) or None
    pairing: dict = field(default_factory=dict)  # variable name -> axis name
    predicates: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)

    def add_constant(self, name, value, trainable=False):
        self.constants[name] = T.const(T.as_array(value), trainable=trainable, name=name)
        return self

    def add_variable(self, name, value=None, pair=None):
        """Declare a variable; value may be bound now or later via bind()."""
        node = None if value is None else T.const(_as_batch(value), name=name)
        self.variables[name] = node
        self.pairing[name] = pair or name
        return self

    def add_predicate(self, name, model):
        self.predicates[name] = model
        return self

    def add_function(self, name, model):
        self.functions[name] = model
        return self

    def bind(self, data) -> "Grounding":
        """Copy with variable batches replaced from a {name: array} map."""
        g = Grounding(
            constants=dict(self.constants),
            variables=dict(self.variables),
            pairing=dict(self.pairing),
            predicates=dict(self.predicates),
            functions=dict(self.functions),
        )
        for name, value in data.items():
            node = T.const(_as_batch(value), name=name)
            g.variables[name] = node
            g.pairing.setdefault(name, name)
        return g

    def axis_of(self, var: str) -> str:
        return self.pairing.get(var, var)

    def trainable_nodes(self):
        seen = {}
        for c in self.constants.values():
            if c.trainable:
                seen[c.id] = c
        for model in (*self.predicates.values(), *self.functions.values()):
            for node in model.trainable_nodes():
                seen[node.id] = node
        return list(seen.values())


@dataclass(frozen=True)
class QuantifierConfig:
    """Aggregation exponents; p >= 1, training soft, queries sharper."""

    p_train: float = 2.0
    p_forall_query: float = 4.0
    p_exists_query: float = 6.0

    def __post_init__(self):
        for name in ("p_train", "p_forall_query", "p_exists_query"):
            if getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    def pick(self, quantifier: str, mode: str) -> float:
        if mode == "train":
            return self.p_train
        return self.p_forall_query if quantifier == "forall" else self.p_exists_query


DEFAULT_QUANTIFIERS = QuantifierConfig()


@dataclass
class TruthGrid:
    """Truth values batched over free variables, one named axis each."""

    axes: tuple
    node: T.Node

    @property
    def values(self) -> np.ndarray:
        if self.node.value is None:
            T.forward_eval([self.node])
        return self.node.value

    def scalar(self) -> float:
        if self.axes:
            raise GroundingError(f"grid still has free axes {self.axes}")
        return float(self.values)


# ---------------------------------------------------------------------------
# connectives and aggregators
# ---------------------------------------------------------------------------


def _combine(a: TruthGrid, b: TruthGrid) -> tuple:
    """Align two grids on the union of their axes; returns axes, nodes.

    Each grid is permuted into union order and missing axes are inserted
    as singletons, so plain broadcasting does the cross product.
    """
    axes = list(a.axes) + [ax for ax in b.axes if ax not in a.axes]

    def expand(g):
        present = [ax for ax in axes if ax in g.axes]
        perm = [g.axes.index(ax) for ax in present]
        node = g.node if perm == list(range(len(perm))) else T.transpose(g.node, perm)
        for pos, ax in enumerate(axes):
            if ax not in g.axes:
                node = _expand_dim(node, pos)
        return node

    return tuple(axes), expand(a), expand(b)


def _expand_dim(node: T.Node, pos: int) -> T.Node:
    return T.Node("expand_dims", (node,), {"pos": pos})


def _expand_forward(pv, attrs):
    return np.expand_dims(pv[0], attrs["pos"])


def _expand_backward(g, out, pv, attrs):
    return [np.squeeze(g, axis=attrs["pos"])]


T._register("expand_dims", _expand_forward, _expand_backward)


def apply_connective(kind: str, a: TruthGrid, b: TruthGrid | None = None) -> TruthGrid:
    """Pointwise product-family connective over aligned grids."""
    if kind not in CONNECTIVES:
        raise ValueError(f"unknown connective {kind!r}; expected one of {CONNECTIVES}")
    if kind == "not":
        if b is not None:
            raise ValueError("negation is unary")
        grid = TruthGrid(a.axes, T.sub(T.const(1.0), a.node))
        T.forward_eval([grid.node])
        return grid
    if b is None:
        raise ValueError(f"{kind} needs two operands")
    axes, na, nb = _combine(a, b)
    if kind == "and":
        node = T.mul(na, nb)
    elif kind == "or":
        node = T.sub(T.add(na, nb), T.mul(na, nb))
    else:  # implies
        node = T.add(T.sub(T.const(1.0), na), T.mul(na, nb))
    grid = TruthGrid(axes, node)
    T.forward_eval([node])
    return grid


def _p_mean_error(node: T.Node, axis, p: float) -> T.Node:
    """1 - ((1/k) sum (1-a)^p)^(1/p) over the given axes."""
    err = T.clamp(T.sub(T.const(1.0), node), AGG_EPS, 1.0)
    m = T.mean_(T.pow_(err, p), axis=axis)
    return T.sub(T.const(1.0), T.pow_(m, 1.0 / p))


def _p_mean(node: T.Node, axis, p: float) -> T.Node:
    val = T.clamp(node, AGG_EPS, 1.0)
    m = T.mean_(T.pow_(val, p), axis=axis)
    return T.pow_(m, 1.0 / p)


def _aggregate(grid: TruthGrid, over, p: float, which: str) -> TruthGrid:
    if p < 1.0:
        raise ValueError(f"aggregation exponent must be >= 1, got {p}")
    if isinstance(over, str):
        over = (over,)
    over = tuple(dict.fromkeys(over))  # dedupe, keep order
    missing = [ax for ax in over if ax not in grid.axes]
    if missing:
        raise GroundingError(f"unknown axis name {missing[0]!r}; grid has {grid.axes}")
    pos = tuple(grid.axes.index(ax) for ax in over)
    keep = tuple(ax for ax in grid.axes if ax not in over)
    if which == "forall":
        node = _p_mean_error(grid.node, pos, p)
    else:
        node = _p_mean(grid.node, pos, p)
    out = TruthGrid(keep, node)
    T.forward_eval([node])
    return out


def aggregate_forall(grid: TruthGrid, over, p: float = 2.0) -> TruthGrid:
    """Universal quantifier: the smooth p-mean of truth shortfalls."""
    return _aggregate(grid, over, p, "forall")


def aggregate_exists(grid: TruthGrid, over, p: float = 2.0) -> TruthGrid:
    """Existential quantifier: generalized p-mean of the truths."""
    return _aggregate(grid, over, p, "exists")


# ---------------------------------------------------------------------------
# distances and similarity
# ---------------------------------------------------------------------------

DISTANCE_KINDS = ("euclidean", "manhattan", "minkowski")


def _distance_node(kind: str, x: T.Node, y: T.Node, p: float) -> T.Node:
    diff = T.sub(x, y)
    if kind == "euclidean":
        return T.sqrt_(T.sum_(T.mul(diff, diff), axis=1))
    if kind == "manhattan":
        return T.sum_(T.abs_(diff), axis=1)
    # minkowski
    s = T.sum_(T.pow_(T.abs_(diff), p), axis=1)
    return T.pow_(s, 1.0 / p)


def similarity_node(kind: str, x: T.Node, y: T.Node, p: float = 2.0) -> T.Node:
    """exp(-D(x, y)) rowwise over paired (n, d) batches."""
    return T.exp_(T.neg(_distance_node(kind, x, y, p)))


def similarity_predicate(kind: str, x, y, p: float = 2.0, axis: str = "pair") -> TruthGrid:
    """Standalone paired similarity: truth grid with one shared axis.

    x and y are (n, d) batches of the same length; row i of x is compared
    with row i of y.
    """
    if kind not in DISTANCE_KINDS:
        raise GroundingError(f"unknown distance kind {kind!r}; expected {DISTANCE_KINDS}")
    xa, ya = _as_batch(x), _as_batch(y)
    if xa.shape[0] != ya.shape[0]:
        raise GroundingError(
            f"unpaired batches: {xa.shape[0]} rows vs {ya.shape[0]} rows"
        )
    if xa.shape[1] != ya.shape[1]:
        raise GroundingError(f"operand widths differ: {xa.shape[1]} vs {ya.shape[1]}")
    if kind == "minkowski" and p < 1:
        raise GroundingError(f"minkowski order must be >= 1, got {p}")
    node = similarity_node(kind, T.const(xa), T.const(ya), p)
    grid = TruthGrid((axis,), node)
    T.forward_eval([node])
    return grid


# ---------------------------------------------------------------------------
# formula evaluation
# ---------------------------------------------------------------------------


class _Evaluator:
    def __init__(self, grounding: Grounding, cfg: QuantifierConfig, mode: str):
        self.g = grounding
        self.cfg = cfg
        self.mode = mode
        self.pred_outputs = []  # (formula, node) pairs checked for [0, 1]

    # -- variables ---------------------------------------------------------

    def _variable_node(self, name: str) -> T.Node:
        node = self.g.variables[name]
        if node is None:
            raise GroundingError(f"variable {name!r} declared but not bound to a batch")
        if node.value.shape[0] == 0:
            raise GroundingError(f"variable {name!r} is bound to an empty batch")
        return node

    def _term_vars(self, term, out):
        if isinstance(term, Sym):
            if term.name in self.g.variables:
                if term.name not in out:
                    out.append(term.name)
        elif isinstance(term, Func):
            for a in term.args:
                self._term_vars(a, out)
        return out

    # -- recursive evaluation ------------------------------------------------

    def eval(self, f, bound) -> TruthGrid:
        if isinstance(f, Pred):
            return self._atom(f)
        if isinstance(f, Not):
            return apply_connective("not", self.eval(f.body, bound))
        if isinstance(f, And):
            return apply_connective("and", self.eval(f.left, bound), self.eval(f.right, bound))
        if isinstance(f, Or):
            return apply_connective("or", self.eval(f.left, bound), self.eval(f.right, bound))
        if isinstance(f, Implies):
            return apply_connective(
                "implies", self.eval(f.left, bound), self.eval(f.right, bound)
            )
        if isinstance(f, (Forall, Exists)):
            which = "forall" if isinstance(f, Forall) else "exists"
            for v in f.variables:
                if v in bound:
                    raise GroundingError(f"variable {v!r} bound twice on one path")
                if v not in self.g.variables:
                    raise GroundingError(f"quantifier over unknown variable {v!r}")
            inner = self.eval(f.body, bound | set(f.variables))
            p = f.p if f.p is not None else self.cfg.pick(which, self.mode)
            axes = tuple(dict.fromkeys(self.g.axis_of(v) for v in f.variables))
            return _aggregate(inner, axes, p, which)
        raise TypeError(f"not a formula: {f!r}")

    # -- atoms ---------------------------------------------------------------

    def _atom(self, f: Pred) -> TruthGrid:
        model = self.g.predicates.get(f.name)
        if model is None:
            raise GroundingError(f"unknown predicate {f.name!r}")

        label = None
        terms = []
        labels = getattr(model, "labels", None)
        for arg in f.args:
            if (
                labels
                and isinstance(arg, Sym)
                and arg.name not in self.g.variables
                and arg.name not in self.g.constants
                and arg.name in labels
            ):
                if label is not None:
                    raise GroundingError(f"{f.name} got two class labels")
                label = arg.name
                continue
            terms.append(arg)
        if labels and label is None:
            raise GroundingError(f"{f.name} expects one of its class labels as an argument")

        # grid axes in first-appearance order across the remaining terms
        var_order = []
        for t in terms:
            self._term_vars(t, var_order)
        axes = tuple(dict.fromkeys(self.g.axis_of(v) for v in var_order))
        extents = {}
        for v in var_order:
            ax = self.g.axis_of(v)
            n = self._variable_node(v).value.shape[0]
            if ax in extents and extents[ax] != n:
                raise GroundingError(
                    f"paired variables on axis {ax!r} have batches of {extents[ax]} and {n} rows"
                )
            extents[ax] = n
        shape = tuple(extents[ax] for ax in axes)
        if shape:
            mesh = np.indices(shape).reshape(len(shape), -1)
            flat_idx = {ax: mesh[i] for i, ax in enumerate(axes)}
            n_points = mesh.shape[1]
        else:
            flat_idx = {}
            n_points = 1

        arg_nodes = [self._term_node(t, flat_idx, n_points) for t in terms]
        truth = self._apply_predicate(f, model, label, arg_nodes, n_points)
        node = T.reshape(truth, shape) if shape else T.reshape(truth, ())
        self.pred_outputs.append((f, node))
        return TruthGrid(axes, node)

    def _term_node(self, term, flat_idx, n_points) -> T.Node:
        if isinstance(term, Sym):
            name = term.name
            if name in self.g.variables:
                var = self._variable_node(name)
                ax = self.g.axis_of(name)
                if not flat_idx:
                    raise GroundingError(f"variable {name!r} used where no axis was built")
                return T.gather(var, flat_idx[ax])
            if name in self.g.constants:
                c = self.g.constants[name]
                width = c.value.size if c.value.ndim == 0 else c.value.shape[-1]
                flat = T.reshape(c, (1, width)) if c.value.ndim <= 1 else c
                return T.broadcast_to(flat, (n_points, width))
            raise GroundingError(f"unresolved name {name!r}: not a variable, constant, or label")
        # Func
        model = self.g.functions.get(term.name)
        if model is None:
            raise GroundingError(f"unknown function {term.name!r}")
        args = [self._term_node(a, flat_idx, n_points) for a in term.args]
        if isinstance(model, MlpFunction):
            feats = args[0] if len(args) == 1 else T.concat(args, axis=1)
            return nn.mlp_forward(model.params, feats)
        out = model.fn(*args)
        if not isinstance(out, T.Node):
            raise GroundingError(f"function {term.name!r} must return a graph node")
        return out

    def _apply_predicate(self, f, model, label, arg_nodes, n_points) -> T.Node:
        if isinstance(model, MlpPredicate):
            if not arg_nodes:
                raise GroundingError(f"{f.name} needs at least one non-label argument")
            feats = arg_nodes[0] if len(arg_nodes) == 1 else T.concat(arg_nodes, axis=1)
            out = nn.mlp_forward(model.params, feats)
            if model.labels:
                return T.take(out, model.labels.index(label), axis=1)
            return T.reshape(out, (n_points,))
        if isinstance(model, SimilarityPredicate):
            if len(arg_nodes) != 2:
                raise GroundingError(f"similarity predicate {f.name} takes two arguments")
            return similarity_node(model.kind, arg_nodes[0], arg_nodes[1], model.p)
        if isinstance(model, LambdaPredicate):
            if model.arity is not None and len(arg_nodes) != model.arity:
                raise GroundingError(
                    f"{f.name} takes {model.arity} arguments, got {len(arg_nodes)}"
                )
            out = model.fn(*arg_nodes)
            if not isinstance(out, T.Node):
                raise GroundingError(f"predicate {f.name!r} must return a graph node")
            return T.reshape(out, (n_points,))
        raise GroundingError(f"unsupported predicate model for {f.name!r}")


def eval_formula(
    f,
    grounding: Grounding,
    cfg: QuantifierConfig = DEFAULT_QUANTIFIERS,
    mode: str = "train",
) -> TruthGrid:
    """Ground a formula and evaluate it to a TruthGrid.

    mode selects the quantifier exponents ("train" or "query"); explicit
    per-quantifier p annotations win over both.  The result keeps one axis
    per free variable (pairing groups share an axis) and the graph behind
    it is differentiable, so the same call serves training and inspection.
    """
    if mode not in ("train", "query"):
        raise ValueError(f"mode must be 'train' or 'query', got {mode!r}")
    ev = _Evaluator(grounding, cfg, mode)
    grid = ev.eval(f, frozenset())
    T.forward_eval([grid.node])
    for atom, node in ev.pred_outputs:
        v = node.value
        if v is None:
            T.forward_eval([node])
            v = node.value
        if np.any(v < -1e-9) or np.any(v > 1.0 + 1e-9):
            raise TruthRangeError(
                f"predicate {atom.name!r} produced values outside [0, 1]: "
                f"min {v.min():.6g}, max {v.max():.6g}"
            )
    return grid
