"""Random forest of regression trees grown with the absolute-error criterion.

Each split minimises the summed absolute deviation of both children from
their per-output medians. Candidate thresholds are midpoints between
consecutive distinct feature values, and every feature is tried at every
node. Leaves predict per-output medians; the forest averages its trees.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..seeding import rng_for

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 20
    bootstrap: bool = True
    max_depth: int | None = None
    min_samples_split: int = 2

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValidationError("max_depth must be >= 0")
        if self.min_samples_split < 2:
            raise ValidationError("min_samples_split must be >= 2")


@dataclass(frozen=True)
class Tree:
    """Flat array form. ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_outputs)

    @property
    def n_nodes(self):
        return self.feature.size

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            f = feat[active]
            go_left = X[rows[active], f] <= self.threshold[node[active]]
            node[active] = np.where(go_left, self.left[node[active]], self.right[node[active]])
        return self.value[node]

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    config: ForestConfig
    seed: int

    kind = "forest"

    def predict(self, X):
        return predict_forest(self, X)


def prefix_abs_deviation(ys):
    """cost[j] = sum |ys[:j] - median(ys[:j])| summed over outputs, j = 0..m.

    ``ys`` is (m, q). Every prefix is sorted in one vectorised pass; the sum
    of absolute deviations is the same for any median in the middle gap, so
    the lower median is used.
    """
    m, q = ys.shape
    tri = np.tril(np.ones((m, m), dtype=bool))
    block = np.where(tri[:, :, None], ys[None, :, :], np.inf)
    block.sort(axis=1)
    med = block[np.arange(m), np.arange(m) // 2, :]
    dev = np.where(tri[:, :, None], np.abs(block - med[:, None, :]), 0.0)
    cost = np.empty(m + 1)
    cost[0] = 0.0
    cost[1:] = dev.sum(axis=(1, 2))
    return cost


def best_split(X, Y):
    """Exhaustive search for the lowest total absolute deviation.

    Returns ``(feature, threshold, cost)`` or None when no feature varies.
    Ties keep the first candidate found (lowest feature, then lowest threshold).
    """
    m = X.shape[0]
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = np.nonzero(xs[1:] > xs[:-1])[0] + 1  # left child size
        if valid.size == 0:
            continue
        ys = Y[order]
        left = prefix_abs_deviation(ys)
        right = prefix_abs_deviation(ys[::-1])
        total = left[valid] + right[m - valid]
        lowest = total.min()
        # costs equal up to summation rounding count as ties
        tol = TIE_RTOL * max(abs(lowest), 1.0)
        i = int(np.argmax(total <= lowest + tol))
        if best is None or total[i] < best[2] - tol:
            j = valid[i]
            thr = 0.5 * (xs[j - 1] + xs[j])
            if thr >= xs[j]:  # adjacent floats: midpoint rounds up
                thr = xs[j - 1]
            best = (f, thr, float(total[i]))
    return best


def grow_tree(X, Y, max_depth=None, min_samples_split=2):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.median(Y[rows], axis=0))
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if rows.size < min_samples_split or (max_depth is not None and depth >= max_depth):
            continue
        Yn = Y[rows]
        if np.all(Yn == Yn[0]):
            continue
        split = best_split(X[rows], Yn)
        if split is None:
            continue
        f, thr, _ = split
        mask = X[rows, f] <= thr
        lrows, rrows = rows[mask], rows[~mask]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))

    return Tree(np.array(feature, dtype=np.intp), np.array(threshold), np.array(left, dtype=np.intp),
                np.array(right, dtype=np.intp), np.array(value).reshape(len(value), -1))


def fit_forest(X, Y, config=ForestConfig(), seed=0):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    if n < 2 or Y.shape[0] != n:
        raise ValidationError("forest needs at least 2 rows and matching X/Y")
    trees = []
    for t in range(config.n_trees):
        if config.bootstrap:
            rows = rng_for(seed, "bootstrap", t).integers(0, n, n)
        else:
            rows = np.arange(n)
        trees.append(grow_tree(X[rows], Y[rows], config.max_depth, config.min_samples_split))
    return ForestModel(tuple(trees), config, seed)


def predict_forest(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    total = np.zeros((X.shape[0], model.trees[0].value.shape[1]))
    for tree in model.trees:
        total += tree.predict(X)
    return total / len(model.trees)
