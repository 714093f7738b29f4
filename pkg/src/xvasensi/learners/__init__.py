"""Regression learners: SVD least squares and a numpy MLP."""

from .linear import LinearModel, fit_linear, svd_solve
from .mlp import (ConstantPredictor, MlpModel, TrainConfig, fit_mlp, init_mlp, load_model,
                  save_linear)

__all__ = [
    "ConstantPredictor", "LinearModel", "MlpModel", "TrainConfig", "fit_linear", "fit_mlp",
    "init_mlp", "load_model", "save_linear", "svd_solve",
]
