"""Differentiable fuzzy first-order logic with trainable neural predicates."""

__version__ = "0.1.0"

from . import data, experiments, kb, logic, metrics, nn, parser, tensor

__all__ = [
    "data",
    "experiments",
    "kb",
    "logic",
    "metrics",
    "nn",
    "parser",
    "tensor",
    "__version__",
]
