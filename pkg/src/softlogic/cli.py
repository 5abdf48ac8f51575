"""Command-line front end: one subcommand per experiment plus plot.

Every experiment flag mirrors a config key; a --config file supplies any
subset of keys and flags override it.  Errors print a single line on
stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import sys

from . import data as D
from . import experiments as E
from . import kb as K
from . import logic as L
from . import metrics as M
from . import parser as P

_FLAG_HELP = {
    "data": "'synth' (default) or a CSV path",
    "schema": "schema file (name,kind lines) for CSV input",
    "axioms": "axiom file overriding the built-in knowledge base",
    "out_dir": "artifact directory (default runs/<experiment>)",
    "n": "synthetic row count",
    "seed": "RNG seed for data, splits, and weights",
    "epochs": "training epochs",
    "batch_size": "mini-batch size",
    "learning_rate": "Adam step size",
    "test_fraction": "held-out fraction for the train/test split",
    "p_train": "quantifier exponent during training",
    "p_forall_query": "forall exponent when querying",
    "p_exists_query": "exists exponent when querying",
    "axiom_aggregation_p": "exponent folding axiom truths into satisfiability",
    "k": "number of cross-validation folds",
    "distance": "euclidean, manhattan, or minkowski",
    "minkowski_p": "order of the minkowski distance",
    "validation": "extra CSV scored by every fold's model",
}

_BEAM_FLAGS = set(E.BEAM_ONLY_KEYS)


def _add_experiment_parser(sub, experiment):
    p = sub.add_parser(experiment, help=f"run the {experiment} experiment")
    p.add_argument("--config", help="key=value file supplying any flags below")
    for key, text in _FLAG_HELP.items():
        if key in _BEAM_FLAGS and experiment != "beam-regression":
            continue
        if key == "axioms" and experiment == "kdd-dnn":
            continue
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, help=text)
    return p


def build_parser():
    top = argparse.ArgumentParser(
        prog="softlogic",
        description="train fuzzy-logic knowledge bases and their baselines",
    )
    sub = top.add_subparsers(dest="command", required=True, metavar="experiment")
    for experiment in E.EXPERIMENTS:
        _add_experiment_parser(sub, experiment)
    plot = sub.add_parser("plot", help="split a metrics CSV into plot-ready series")
    plot.add_argument("metrics_csv", help="file written by an experiment run")
    plot.add_argument("--out-dir", dest="out_dir", help="where the series files go")
    return top


def _collect_overrides(args):
    overrides = {}
    if args.config:
        overrides.update(E.parse_config_file(args.config))
    for key in _FLAG_HELP:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            out_dir = args.out_dir or "."
            for path in E.emit_plot_data(args.metrics_csv, out_dir):
                print(f"wrote {path}")
            return 0
        cfg = E.resolve(args.command, _collect_overrides(args))
        artifacts = E.run_experiment(cfg)
        for path in artifacts.all_paths():
            print(f"wrote {path}")
        return 0
    except (
        E.ConfigError,
        D.DataError,
        P.ParseError,
        M.MetricsError,
        L.GroundingError,
        K.TrainingDiverged,
        OSError,
    ) as e:
        print(f"softlogic: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
