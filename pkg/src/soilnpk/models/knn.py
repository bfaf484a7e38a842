"""Brute-force k-nearest-neighbour regression (Euclidean, uniform weights)."""
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class KnnModel:
    X: np.ndarray
    Y: np.ndarray
    k: int = 5

    kind = "knn"

    def predict(self, X):
        return predict_knn(self, X)


def fit_knn(X, Y, k=5):
    X = np.array(X, dtype=float)
    Y = np.array(Y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("k-NN needs a non-empty training set")
    if Y.shape[0] != X.shape[0]:
        raise ValidationError("X and Y row counts differ")
    if not 1 <= k <= X.shape[0]:
        raise ValidationError(f"k must be in [1, {X.shape[0]}], got {k}")
    return KnnModel(X, Y, int(k))


def neighbours(model, X):
    """Indices of the k nearest training rows per query; ties go to the lower index."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d2 = ((X[:, None, :] - model.X[None, :, :]) ** 2).sum(axis=2)
    return np.argsort(d2, axis=1, kind="stable")[:, :model.k]


def predict_knn(model, X):
    return model.Y[neighbours(model, X)].mean(axis=1)
