"""Central finite-difference gradient oracle.

Independent of the reverse pass: it only ever calls forward_eval, nudging one
scalar entry of one array at a time.  Used to check every analytic gradient
in the library.
"""

import numpy as np

from softlogic import tensor as T


def fd_gradients(loss_node, arrays, feeds=None, h=1e-5):
    """Finite-difference d(loss)/d(array) for each array in ``arrays``.

    ``arrays`` are the raw ndarrays sitting inside leaf nodes (param.value);
    they are perturbed in place and restored.  The loss node is re-evaluated
    through forward_eval for every probe, so only the forward path is
    trusted.
    """

    def loss_value():
        return float(T.forward_eval([loss_node], feeds)[loss_node.id])

    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = a[i]
            a[i] = orig + h
            f_plus = loss_value()
            a[i] = orig - h
            f_minus = loss_value()
            a[i] = orig
            g[i] = (f_plus - f_minus) / (2.0 * h)
        grads.append(g)
    return grads


def max_rel_err(analytic, numeric, floor=1e-6):
    """Worst relative disagreement between analytic and FD gradients."""
    worst = 0.0
    for g, fd in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(g), np.abs(fd)), floor)
        worst = max(worst, float(np.max(np.abs(g - fd) / denom)))
    return worst


def check_gradients(loss_node, params, feeds=None, h=1e-5):
    """Run backward and compare against the FD oracle; returns max rel err."""
    T.forward_eval([loss_node], feeds)
    grads = T.backward(loss_node)
    analytic = [grads.get(p.id, np.zeros_like(p.value)) for p in params]
    numeric = fd_gradients(loss_node, [p.value for p in params], feeds, h)
    return max_rel_err(analytic, numeric)
