"""Random closed formulas with twin groundings: graph-side and pure-python.

Used by the logic tests and the acceptance suite to compare eval_formula
against the nested-loop reference evaluator in oracle.py.  The two sides
share nothing but the AST and the drawn numbers: the graph grounds
predicates as LambdaPredicate nodes, the oracle gets plain float callables
built from the same weights.
"""

import numpy as np

from softlogic import logic as L
from softlogic import tensor as T

import oracle


def _graph_linear_pred(weights, bias):
    def fn(*args):
        z = T.const(float(bias))
        for w, a in zip(weights, args):
            z = T.add(z, T.mul(T.const(float(w)), T.mean_(a, axis=1)))
        return T.sigmoid(z)

    return fn


def _graph_tanh(x):
    two = T.const(2.0)
    return T.sub(T.mul(two, T.sigmoid(T.mul(two, x))), T.const(1.0))


def _graph_affine_fn(scale, shift):
    def fn(*args):
        feats = args[0] if len(args) == 1 else T.concat(args, axis=1)
        return _graph_tanh(T.add(T.mul(T.const(float(scale)), feats), T.const(float(shift))))

    return fn


def make_world(rng, paired=False):
    """Twin groundings over shared random data; returns (grounding, env, vars)."""
    g = L.Grounding()
    env = oracle.OracleEnv()

    if paired:
        n = int(rng.integers(2, 5))
        sizes = {"x": n, "y": n, "z": int(rng.integers(2, 5))}
        pairs = {"x": "xy", "y": "xy", "z": None}
    else:
        sizes = {v: int(rng.integers(2, 5)) for v in ("x", "y", "z")}
        pairs = {v: None for v in ("x", "y", "z")}

    widths = {v: int(rng.integers(1, 4)) for v in ("x", "y", "z")}
    for v in ("x", "y", "z"):
        data = rng.uniform(-0.9, 0.9, size=(sizes[v], widths[v]))
        g.add_variable(v, data, pair=pairs[v])
        env.add_variable(v, data.tolist(), pair=pairs[v])

    for c in ("c1", "c2"):
        w = int(rng.integers(1, 4))
        data = rng.uniform(-0.9, 0.9, size=w)
        g.add_constant(c, data)
        env.add_constant(c, data.tolist())

    for name, arity in (("P", 1), ("Q", 2), ("R", 1)):
        weights = rng.uniform(-2.0, 2.0, size=arity)
        bias = float(rng.uniform(-1.0, 1.0))
        g.add_predicate(name, L.LambdaPredicate(_graph_linear_pred(weights, bias), arity=arity))
        env.predicates[name] = oracle.linear_sigmoid_predicate(list(weights), bias)

    for fname in ("f", "h"):
        scale = float(rng.uniform(-1.5, 1.5))
        shift = float(rng.uniform(-0.5, 0.5))
        g.add_function(fname, L.LambdaFunction(_graph_affine_fn(scale, shift)))
        env.functions[fname] = oracle.affine_function(scale, shift)

    return g, env


def _random_term(rng, var, depth):
    roll = rng.random()
    if depth <= 0 or roll < 0.55:
        return L.Sym(var)
    if roll < 0.75:
        return L.Sym(str(rng.choice(["c1", "c2"])))
    fname = str(rng.choice(["f", "h"]))
    return L.Func(fname, [_random_term(rng, var, depth - 1)])


def _random_atom(rng, in_scope):
    name = str(rng.choice(["P", "Q", "R"]))
    arity = 2 if name == "Q" else 1
    args = []
    for _ in range(arity):
        var = str(rng.choice(in_scope))
        args.append(_random_term(rng, var, depth=2))
    return L.Pred(name, args)


def _random_body(rng, in_scope, depth):
    if depth <= 0 or rng.random() < 0.35:
        return _random_atom(rng, in_scope)
    kind = rng.choice(["not", "and", "or", "implies"])
    if kind == "not":
        return L.Not(_random_body(rng, in_scope, depth - 1))
    left = _random_body(rng, in_scope, depth - 1)
    right = _random_body(rng, in_scope, depth - 1)
    cls = {"and": L.And, "or": L.Or, "implies": L.Implies}[str(kind)]
    return cls(left, right)


def _free_vars(f, out):
    if isinstance(f, L.Pred):
        for t in f.args:
            _term_free(t, out)
    elif isinstance(f, L.Not):
        _free_vars(f.body, out)
    elif isinstance(f, (L.And, L.Or, L.Implies)):
        _free_vars(f.left, out)
        _free_vars(f.right, out)
    elif isinstance(f, (L.Forall, L.Exists)):
        _free_vars(f.body, out)
    return out


def _term_free(t, out):
    if isinstance(t, L.Sym):
        if t.name in ("x", "y", "z") and t.name not in out:
            out.append(t.name)
    else:
        for a in t.args:
            _term_free(a, out)


def random_closed_formula(rng, paired=False):
    """Random body over x/y/z closed by a quantifier prefix."""
    scope = ["x", "y", "z"]
    body = _random_body(rng, scope, depth=int(rng.integers(1, 4)))
    used = _free_vars(body, [])
    if not used:
        # force at least one variable so the prefix is never empty
        body = L.And(body, _random_atom(rng, scope))
        used = _free_vars(body, [])
    rng.shuffle(used)
    f = body
    if paired and "x" in used and "y" in used:
        # quantify the paired block jointly
        rest = [v for v in used if v not in ("x", "y")]
        groups = [("x", "y")] + [(v,) for v in rest]
    else:
        groups = []
        i = 0
        while i < len(used):
            k = int(rng.integers(1, min(2, len(used) - i) + 1))
            groups.append(tuple(used[i : i + k]))
            i += k
    for grp in reversed(groups):
        p = rng.choice([None, None, 2.0, 3.0, 6.0])
        p = None if p is None else float(p)
        if rng.random() < 0.5:
            f = L.Forall(grp, f, p=p)
        else:
            f = L.Exists(grp, f, p=p)
    return f


_AST_PREDS = ("P", "Q", "Attack", "is_normal", "R2")
_AST_VARS = ("x", "y", "z", "x_tcp", "p")
_AST_CONSTS = ("c", "udp", "DOS", "k_1")
_AST_FUNCS = ("f", "F", "embed")
_AST_PS = (None, None, None, 1.0, 2.0, 2.5, 4.0, 6.0, 100.0)


def _ast_term(rng, depth):
    if depth <= 0 or rng.random() < 0.6:
        pool = _AST_VARS if rng.random() < 0.6 else _AST_CONSTS
        return L.Sym(str(rng.choice(pool)))
    k = int(rng.integers(1, 3))
    return L.Func(str(rng.choice(_AST_FUNCS)), [_ast_term(rng, depth - 1) for _ in range(k)])


def random_ast(rng, depth=6):
    """Structurally random formula for print/parse round-trip checks."""
    if depth <= 0 or rng.random() < 0.25:
        k = int(rng.integers(1, 4))
        name = str(rng.choice(_AST_PREDS))
        return L.Pred(name, [_ast_term(rng, 2) for _ in range(k)])
    roll = rng.random()
    if roll < 0.15:
        return L.Not(random_ast(rng, depth - 1))
    if roll < 0.60:
        cls = {0: L.And, 1: L.Or, 2: L.Implies}[int(rng.integers(0, 3))]
        return cls(random_ast(rng, depth - 1), random_ast(rng, depth - 1))
    n_vars = int(rng.integers(1, 4))
    variables = tuple(rng.choice(_AST_VARS, size=n_vars, replace=False))
    p = _AST_PS[int(rng.integers(0, len(_AST_PS)))]
    cls = L.Forall if rng.random() < 0.5 else L.Exists
    return cls(tuple(str(v) for v in variables), random_ast(rng, depth - 1), p=p)


def compare_once(rng, paired=False, mode=None):
    """Build world + formula, return (graph value, oracle value, formula)."""
    g, env = make_world(rng, paired=paired)
    f = random_closed_formula(rng, paired=paired)
    if mode is None:
        mode = str(rng.choice(["train", "query"]))
    grid = L.eval_formula(f, g, mode=mode)
    got = grid.scalar()
    want = oracle.eval_oracle(f, env, mode=mode)
    return got, want, f
