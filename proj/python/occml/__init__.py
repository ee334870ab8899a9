"""Occupancy classification toolkit: data, models, tuning, SHAP and EDA."""

import json

from . import _occml
from ._occml import (
    Classifier,
    Dataset,
    OccmlError,
    binary_auc,
    generate_synthetic,
    lag1_autocorrelation,
    load_dataset,
    ols_fit,
    parse_dataset,
    pearson,
    set_thread_count,
    split,
)

__version__ = _occml.__version__

FEATURE_NAMES = Dataset.feature_names()


def fit(kind, x, y, num_classes=4, params=None, seed=0):
    return _occml.fit(kind, x, y, num_classes, json.dumps(params or {}), seed)


def model_from_json(doc):
    return _occml.model_from_json(doc if isinstance(doc, str) else json.dumps(doc))


def default_params(kind):
    return json.loads(_occml.default_params_json(kind))


def default_grids():
    return json.loads(_occml.default_grids_json())


def evaluate(scores, labels, num_classes=4):
    return json.loads(_occml.evaluate_json(scores, labels, num_classes))


def tune(kind, x, y, profile="fast", k=5, seed=0, grid=None):
    return json.loads(_occml.tune(kind, x, y, profile, k, seed, json.dumps(grid) if grid else ""))


def explain(model, rows, background, method="sampled", n_pairs=16, seed=0):
    return json.loads(_occml.explain_json(model, rows, background, method, n_pairs, seed))


def eda(dataset):
    return json.loads(_occml.eda_json(dataset))


def run(command, config, models=(), tune_on_demand=False):
    """Run a pipeline subcommand; returns (exit_code, stdout_text, stderr_text)."""
    return _occml.run_command(command, str(config), list(models), tune_on_demand)
