"""Metrics, the k-fold cross-validation harness and the model comparison report."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .dataset import KFoldPlan
from .errors import UndefinedScoreError, ValidationError
from .pipeline import fit_pipeline
from .seeding import derive_seed


def _pair(Y, Y_hat):
    Y = np.asarray(Y, dtype=float)
    Y_hat = np.asarray(Y_hat, dtype=float)
    if Y.shape != Y_hat.shape:
        raise ValidationError(f"shape mismatch: {Y.shape} vs {Y_hat.shape}")
    return Y, Y_hat


def mae(Y, Y_hat):
    """Mean of |y - y_hat| over every sample and output."""
    Y, Y_hat = _pair(Y, Y_hat)
    return float(np.mean(np.abs(Y - Y_hat)))


def r_squared(Y, Y_hat):
    """Coefficient of determination per output, averaged uniformly."""
    Y, Y_hat = _pair(Y, Y_hat)
    if Y.ndim == 1:
        Y, Y_hat = Y[:, None], Y_hat[:, None]
    ss_tot = np.sum((Y - Y.mean(axis=0)) ** 2, axis=0)
    if np.any(ss_tot == 0):
        raise UndefinedScoreError("R^2 is undefined for an output with zero variance")
    ss_res = np.sum((Y - Y_hat) ** 2, axis=0)
    return float(np.mean(1.0 - ss_res / ss_tot))


@dataclass(frozen=True)
class FoldResult:
    model: str
    preprocessing: str
    fold: int
    train_mae: float
    test_mae: float
    r2: float | None = None
    train_curve: np.ndarray | None = field(default=None, repr=False)
    val_curve: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.train_mae < 0 or self.test_mae < 0:
            raise ValidationError("MAE cannot be negative")
        if self.fold < 0:
            raise ValidationError("fold index must be >= 0")


def run_cv(table, kind, preprocessing="raw", plan=None, seed=0, config=None, k=5):
    """Cross-validate one model on ``table``.

    Inside every fold the scaler (and PCA) is fitted on the training rows
    only and applied to both segments. Model seeds are derived from
    ``(seed, kind, fold)`` so each fold is reproducible on its own.
    """
    if plan is None:
        from .dataset import make_kfold
        plan = make_kfold(len(table), k, seed)
    if plan.n_rows != len(table):
        raise ValidationError(f"plan covers {plan.n_rows} rows, table has {len(table)}")
    results = []
    for i in range(plan.k):
        train, test = plan.split(i)
        pipe = fit_pipeline(kind, table.X[train], table.Y[train], preprocessing, config,
                            derive_seed(seed, "model", kind, i), table.X[test], table.Y[test])
        pred_train = pipe.predict(table.X[train])
        pred_test = pipe.predict(table.X[test])
        try:
            r2 = r_squared(table.Y[test], pred_test)
        except UndefinedScoreError:
            r2 = None
        curve = getattr(pipe.model, "train_curve", None)
        val = getattr(pipe.model, "val_curve", None)
        results.append(FoldResult(kind, preprocessing, i, mae(table.Y[train], pred_train),
                                  mae(table.Y[test], pred_test), r2, curve, val))
    return results


@dataclass(frozen=True)
class Summary:
    model: str
    preprocessing: str
    n_folds: int
    train_mean: float
    train_sd: float
    test_mean: float
    test_sd: float
    r2_mean: float | None = None


@dataclass(frozen=True)
class ComparisonReport:
    summaries: tuple
    ranking: tuple  # (model, preprocessing) by ascending mean test MAE

    def get(self, model, preprocessing="raw"):
        for s in self.summaries:
            if s.model == model and s.preprocessing == preprocessing:
                return s
        raise KeyError((model, preprocessing))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "preprocessing", "split", "mean_mae", "sd_mae"])
        for s in self.summaries:
            w.writerow([s.model, s.preprocessing, "train", f"{s.train_mean:.6f}", f"{s.train_sd:.6f}"])
            w.writerow([s.model, s.preprocessing, "test", f"{s.test_mean:.6f}", f"{s.test_sd:.6f}"])
        return buf.getvalue()


def mean_sd(values):
    """Mean and population SD (divisor n)."""
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std())


def compare_models(results):
    """Mean and population SD per (model, preprocessing), ranked by test MAE.

    Groups are ordered by name so the report does not depend on input order.
    """
    groups = {}
    for r in results:
        groups.setdefault((r.model, r.preprocessing), []).append(r)
    summaries = []
    for key in sorted(groups):
        rs = sorted(groups[key], key=lambda r: r.fold)
        tr = mean_sd([r.train_mae for r in rs])
        te = mean_sd([r.test_mae for r in rs])
        r2s = [r.r2 for r in rs if r.r2 is not None]
        summaries.append(Summary(key[0], key[1], len(rs), *tr, *te, float(np.mean(r2s)) if r2s else None))
    ranking = tuple((s.model, s.preprocessing) for s in sorted(summaries, key=lambda s: (s.test_mean, s.model, s.preprocessing)))
    return ComparisonReport(tuple(summaries), ranking)


def folds_csv(results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "preprocessing", "fold", "train_mae", "test_mae", "r2"])
    for r in results:
        w.writerow([r.model, r.preprocessing, r.fold, f"{r.train_mae:.6f}", f"{r.test_mae:.6f}",
                    "" if r.r2 is None else f"{r.r2:.6f}"])
    return buf.getvalue()


def epoch_curve_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "train_mae", "val_mae"])
    val = result.val_curve if result.val_curve is not None and len(result.val_curve) else None
    for e, t in enumerate(result.train_curve):
        w.writerow([e + 1, f"{t:.6f}", "" if val is None else f"{val[e]:.6f}"])
    return buf.getvalue()
