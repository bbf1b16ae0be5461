"""Python bindings for the elmc spatial field surrogate library."""

import json

from ._elmc import (
    IoError,
    Model,
    NumericalError,
    ValidationError,
    evaluate_mse,
    fit_pca,
    generate,
    load_dataset,
    load_model,
    model_from_json,
    render_pgm,
    save_dataset,
    split_indices,
)
from ._elmc import bench as _bench
from ._elmc import train as _train

__all__ = [
    "IoError",
    "Model",
    "NumericalError",
    "ValidationError",
    "bench",
    "evaluate_mse",
    "fit_pca",
    "generate",
    "load_dataset",
    "load_model",
    "model_from_json",
    "render_pgm",
    "save_dataset",
    "split_indices",
    "train",
]


def train(method, inputs, fields, grid, rank=10, seed=0, config=None):
    """Train an "elmc", "lmc" or "mlp" model. `config` is a dict of TrainConfig keys."""
    return _train(method, inputs, fields, tuple(grid), rank, seed, json.dumps(config) if config else "")


def bench(config):
    """Run a bench sweep from a config dict and return the results CSV text."""
    return _bench(json.dumps(config))
