"""Ordinary least squares with intercept, one column of weights per target."""
from dataclasses import dataclass

import numpy as np

from ..errors import SingularDesignError, ValidationError


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # (n_features, n_targets)
    intercept: np.ndarray  # (n_targets,)

    kind = "linear"

    def predict(self, X):
        return predict_linear(self, X)


def fit_linear(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, p = X.shape
    if n != Y.shape[0]:
        raise ValidationError("X and Y row counts differ")
    if n <= p:
        raise SingularDesignError(f"need more rows than features ({n} <= {p})")
    design = np.hstack([X, np.ones((n, 1))])
    if np.linalg.matrix_rank(design) < p + 1:
        raise SingularDesignError("design matrix (with intercept column) is rank deficient")
    coef, *_ = np.linalg.lstsq(design, Y, rcond=None)
    return LinearModel(coef[:p].copy(), coef[p].copy())


def predict_linear(model, X):
    return np.asarray(X, dtype=float) @ model.weights + model.intercept
