"""Feature table container and preprocessing: scaling, PCA, Spearman, k-fold."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateFeatureError, ParseError, ValidationError

FEATURE_NAMES = ("ph", "conductivity_s_per_m", "avg_power_w")
TARGET_NAMES = ("c_hno3_mmol", "c_h3po4_mmol", "c_koh_mmol")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureTable:
    X: np.ndarray
    Y: np.ndarray
    feature_names: tuple = FEATURE_NAMES
    target_names: tuple = TARGET_NAMES

    def __post_init__(self):
        X, Y = _frozen(self.X), _frozen(self.Y)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValidationError("X and Y must be 2-D")
        if X.shape[0] != Y.shape[0]:
            raise ValidationError(f"row count mismatch: X has {X.shape[0]}, Y has {Y.shape[0]}")
        if X.shape[0] < 2:
            raise ValidationError("a feature table needs at least 2 rows")
        if X.shape[1] != len(self.feature_names) or Y.shape[1] != len(self.target_names):
            raise ValidationError("column names do not match matrix widths")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValidationError("feature table contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "target_names", tuple(self.target_names))

    def __len__(self):
        return self.X.shape[0]

    @property
    def columns(self):
        return self.feature_names + self.target_names

    def matrix(self):
        return np.hstack([self.X, self.Y])

    def subset(self, rows):
        return FeatureTable(self.X[rows], self.Y[rows], self.feature_names, self.target_names)


def table_to_csv(table):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.matrix().tolist():
        writer.writerow([repr(v) for v in row])
    return buf.getvalue()


def write_table(table, path):
    Path(path).write_text(table_to_csv(table))


def read_table(path):
    path = Path(path)
    rows = list(csv.reader(io.StringIO(path.read_text())))
    if not rows:
        raise ParseError("empty dataset file", path)
    header = tuple(h.strip() for h in rows[0])
    if header != FEATURE_NAMES + TARGET_NAMES:
        raise ParseError(f"unexpected header {header}", path, 1)
    data = []
    for row_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}", path, row_no)
        try:
            data.append([float(v) for v in row])
        except ValueError:
            raise ParseError("non-numeric value", path, row_no) from None
    data = np.array(data, dtype=float).reshape(-1, len(header))
    return FeatureTable(data[:, :3], data[:, 3:])


# ---------------------------------------------------------------- scaling


@dataclass(frozen=True)
class StandardScalerFit:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "scale", _frozen(self.scale))
        if np.any(self.scale <= 0):
            raise ValidationError("scaler SD entries must be > 0")


def fit_scaler(X, names=None):
    """Per-column mean and population SD (divisor n)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError("fit_scaler needs a 2-D matrix with at least 2 rows")
    mean = X.mean(axis=0)
    sd = np.sqrt(np.mean((X - mean) ** 2, axis=0))
    for j, s in enumerate(sd):
        # relative test so features with tiny magnitudes are not flagged
        if s == 0 or s <= 1e-12 * max(abs(mean[j]), np.finfo(float).tiny):
            raise DegenerateFeatureError(j, names[j] if names is not None else None)
    return StandardScalerFit(mean, sd)


def apply_scaler(fit, X):
    return (np.asarray(X, dtype=float) - fit.mean) / fit.scale


def invert_scaler(fit, Z):
    return np.asarray(Z, dtype=float) * fit.scale + fit.mean


# ---------------------------------------------------------------- PCA


@dataclass(frozen=True)
class PCAFit:
    mean: np.ndarray
    components: np.ndarray  # rows are principal axes
    explained_variance: np.ndarray

    def __post_init__(self):
        for name in ("mean", "components", "explained_variance"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n_components(self):
        return self.components.shape[0]


def fit_pca(X, n_components=None):
    """Eigendecomposition of the sample covariance (divisor n-1).

    Components are sorted by descending eigenvalue. Each axis is signed so
    its largest-magnitude loading is positive, which makes the fit unique.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if n < 2:
        raise ValidationError("PCA needs at least 2 rows")
    if n_components is None:
        n_components = p
    if not 1 <= n_components <= p:
        raise ValidationError(f"n_components must be in [1, {p}], got {n_components}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order].T
    for row in evecs:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return PCAFit(mean, evecs[:n_components], evals[:n_components])


def apply_pca(fit, X):
    return (np.asarray(X, dtype=float) - fit.mean) @ fit.components.T


def invert_pca(fit, Z):
    """Map scores back to the input space (exact only with all components)."""
    return np.asarray(Z, dtype=float) @ fit.components + fit.mean


# ---------------------------------------------------------------- Spearman


def average_ranks(x):
    """1-based ranks with ties sharing the mean of their positions."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ranks = np.empty(x.size)
    start = 0
    while start < x.size:
        stop = start + 1
        while stop < x.size and xs[stop] == xs[start]:
            stop += 1
        ranks[order[start:stop]] = 0.5 * (start + stop - 1) + 1.0
        start = stop
    return ranks


def spearman(x, y):
    """Rank correlation of two vectors; NaN when either is constant."""
    rx, ry = average_ranks(x), average_ranks(y)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt(np.dot(rx, rx) * np.dot(ry, ry))
    if denom == 0:
        return float("nan")
    return float(np.clip(np.dot(rx, ry) / denom, -1.0, 1.0))


def spearman_matrix(table):
    """Spearman correlation among all feature and target columns.

    Pairs involving a constant column are NaN; callers check ``np.isnan``
    rather than getting a silent zero.
    """
    if len(table) < 3:
        raise ValidationError("spearman_matrix needs at least 3 rows")
    M = table.matrix()
    k = M.shape[1]
    out = np.eye(k)
    for a in range(k):
        if np.all(M[:, a] == M[0, a]):
            out[a, a] = np.nan
    for a in range(k):
        for b in range(a + 1, k):
            out[a, b] = out[b, a] = spearman(M[:, a], M[:, b])
    return out


def correlation_csv(matrix, names):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + list(names))
    for name, row in zip(names, matrix.tolist()):
        writer.writerow([name] + ["" if np.isnan(v) else f"{v:.6f}" for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- k-fold


@dataclass(frozen=True)
class KFoldPlan:
    k: int
    folds: tuple
    seed: int

    @property
    def n_rows(self):
        return sum(len(f) for f in self.folds)

    def split(self, i):
        """(train_rows, test_rows) for fold ``i``."""
        test = np.asarray(self.folds[i])
        train = np.concatenate([np.asarray(f) for j, f in enumerate(self.folds) if j != i]) if self.k > 1 else np.array([], int)
        return np.sort(train), test


def make_kfold(n_rows, k=5, seed=0):
    """Shuffle ``range(n_rows)`` and cut it into ``k`` near-equal folds.

    The first ``n_rows % k`` folds get one extra row.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    if k > n_rows:
        raise ValidationError(f"k={k} exceeds the number of rows ({n_rows})")
    perm = np.random.default_rng(seed).permutation(n_rows)
    sizes = [n_rows // k + (1 if i < n_rows % k else 0) for i in range(k)]
    bounds = np.cumsum([0] + sizes)
    folds = tuple(tuple(int(r) for r in perm[bounds[i]:bounds[i + 1]]) for i in range(k))
    return KFoldPlan(k, folds, seed)
