"""Ground formulas over raw arrays and watch truth values move.

Walks the core machinery with no training loop around it: a grounding maps
variables to point batches and predicates to models, eval_formula turns a
parsed formula into a differentiable truth value, and the quantifier
exponent p decides how strict "for all" is.  At the end one trainable
parameter is nudged uphill to make a formula more true.
"""

import numpy as np

from softlogic import logic as L
from softlogic import parser as P
from softlogic import tensor as T


def closeness(threshold):
    # soft test for |x - y| < threshold, differentiable in everything
    def fn(x, y):
        diff = T.sub(x, y)
        d2 = T.sum_(T.mul(diff, diff), axis=1)
        return T.sigmoid(T.mul(T.const(8.0), T.sub(threshold, T.sqrt_(d2))))

    return L.LambdaPredicate(fn, arity=2)


def main():
    rng = np.random.default_rng(3)
    xs = rng.uniform(-1.0, 1.0, size=(6, 2))
    ys = xs + rng.normal(scale=0.15, size=xs.shape)

    threshold = T.param(np.array(0.05), name="threshold")
    g = L.Grounding()
    g.add_variable("x", xs)
    g.add_variable("y", ys)
    g.add_predicate("Close", closeness(threshold))

    f = P.parse_formula("forall x: (exists y: Close(x, y))")
    print("formula:", P.format_formula(f))
    print("train mode (p=2/2):  ", round(L.eval_formula(f, g, mode="train").scalar(), 4))
    print("query mode (p=4/6):  ", round(L.eval_formula(f, g, mode="query").scalar(), 4))

    sharp = P.parse_formula("forall x p=40: (exists y p=40: Close(x, y))")
    print("explicit p=40:       ", round(L.eval_formula(sharp, g, mode="train").scalar(), 4))
    print("(larger p pushes forall toward min and exists toward max)")

    # pairing: x and y share one axis, so Close compares row i with row i
    paired = L.Grounding()
    paired.add_variable("x", xs, pair="match")
    paired.add_variable("y", ys, pair="match")
    paired.add_predicate("Close", closeness(threshold))
    diag = P.parse_formula("forall x, y: Close(x, y)")
    print("paired rows:         ", round(L.eval_formula(diag, paired, mode="train").scalar(), 4))

    # the truth value is a graph node, so the threshold can be trained
    state = T.AdamState([threshold], learning_rate=0.05)
    for step in range(60):
        grid = L.eval_formula(diag, paired, mode="train")
        grads = T.backward(grid.node, graph=[threshold])
        # adam minimizes, so flip the sign to climb toward truth
        grads[threshold.id] = -grads[threshold.id]
        T.adam_step([threshold], grads, state)
    grid = L.eval_formula(diag, paired, mode="train")
    print(f"after training threshold: truth={grid.scalar():.4f} "
          f"threshold={float(threshold.value):.3f}")
    print("(the optimizer widened the tolerance until every pair counts as close)")


if __name__ == "__main__":
    main()
