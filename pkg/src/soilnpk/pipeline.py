"""Scaler -> optional PCA -> regressor, fitted together, plus a file format.

Model files are zip archives of ``.npy`` arrays with a JSON ``meta`` entry
(format tag, model kind, preprocessing, hyperparameters). Entries carry a
fixed timestamp so saving the same pipeline twice yields identical bytes.
"""
from __future__ import annotations

import dataclasses
import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dataset
from .errors import ParseError, ValidationError
from .models import (ForestConfig, ForestModel, KnnModel, LinearModel, MlpConfig, MlpModel,
                     default_config, fit_model)
from .models.forest import Tree

FORMAT = "soilnpk-model"
VERSION = 1
PREPROCESSING = ("raw", "pca")
_ZIP_TIME = (1980, 1, 1, 0, 0, 0)


@dataclass(frozen=True)
class Pipeline:
    kind: str
    preprocessing: str
    scaler: dataset.StandardScalerFit
    pca: dataset.PCAFit | None
    model: object

    def transform(self, X):
        Z = dataset.apply_scaler(self.scaler, X)
        if self.pca is not None:
            Z = dataset.apply_pca(self.pca, Z)
        return Z

    def predict(self, X):
        return self.model.predict(self.transform(np.atleast_2d(np.asarray(X, dtype=float))))


def fit_preprocessing(X, preprocessing="raw", n_components=None):
    if preprocessing not in PREPROCESSING:
        raise ValidationError(f"preprocessing must be one of {PREPROCESSING}, got {preprocessing!r}")
    scaler = dataset.fit_scaler(X, dataset.FEATURE_NAMES if np.shape(X)[1] == 3 else None)
    pca = None
    if preprocessing == "pca":
        pca = dataset.fit_pca(dataset.apply_scaler(scaler, X), n_components)
    return scaler, pca


def fit_pipeline(kind, X, Y, preprocessing="raw", config=None, seed=0, X_val=None, Y_val=None,
                 n_components=None):
    """Fit the preprocessing on ``X`` only, then the model on the transformed rows."""
    scaler, pca = fit_preprocessing(X, preprocessing, n_components)
    partial = Pipeline(kind, preprocessing, scaler, pca, None)
    Z = partial.transform(X)
    Zv = partial.transform(X_val) if X_val is not None else None
    model = fit_model(kind, Z, Y, config, seed, Zv, Y_val)
    return dataclasses.replace(partial, model=model)


# ---------------------------------------------------------------- serialization


def _config_dict(config):
    if dataclasses.is_dataclass(config):
        return dataclasses.asdict(config)
    return dict(config)


def _model_arrays(model):
    if isinstance(model, LinearModel):
        return {"weights": model.weights, "intercept": model.intercept}, {}
    if isinstance(model, KnnModel):
        return {"X": model.X, "Y": model.Y}, {"k": model.k}
    if isinstance(model, ForestModel):
        arrays = {}
        for t, tree in enumerate(model.trees):
            for name in ("feature", "threshold", "left", "right", "value"):
                arrays[f"tree{t}_{name}"] = getattr(tree, name)
        return arrays, {"config": _config_dict(model.config), "seed": model.seed, "n_trees": len(model.trees)}
    if isinstance(model, MlpModel):
        arrays = {"train_curve": model.train_curve, "val_curve": model.val_curve}
        for i, (w, b) in enumerate(zip(model.weights, model.biases)):
            arrays[f"W{i}"] = w
            arrays[f"b{i}"] = b
        return arrays, {"config": _config_dict(model.config), "n_layers": len(model.weights)}
    raise ValidationError(f"cannot serialize {type(model).__name__}")


def _model_from_arrays(kind, arrays, params):
    if kind == "linear":
        return LinearModel(arrays["weights"], arrays["intercept"])
    if kind == "knn":
        return KnnModel(arrays["X"], arrays["Y"], int(params["k"]))
    if kind == "forest":
        cfg = ForestConfig(**params["config"])
        trees = tuple(
            Tree(*(arrays[f"tree{t}_{name}"] for name in ("feature", "threshold", "left", "right", "value")))
            for t in range(params["n_trees"]))
        return ForestModel(trees, cfg, params["seed"])
    if kind in ("mlp", "mlp_linear"):
        cfg = MlpConfig(**params["config"])
        n = params["n_layers"]
        return MlpModel(tuple(arrays[f"W{i}"] for i in range(n)), tuple(arrays[f"b{i}"] for i in range(n)),
                        cfg, arrays["train_curve"], arrays["val_curve"])
    raise ParseError(f"unknown model kind {kind!r} in model file")


def dumps(pipe):
    arrays, params = _model_arrays(pipe.model)
    arrays = {f"model/{k}": v for k, v in arrays.items()}
    arrays["scaler/mean"] = pipe.scaler.mean
    arrays["scaler/scale"] = pipe.scaler.scale
    if pipe.pca is not None:
        arrays["pca/mean"] = pipe.pca.mean
        arrays["pca/components"] = pipe.pca.components
        arrays["pca/explained_variance"] = pipe.pca.explained_variance
    meta = {"format": FORMAT, "version": VERSION, "kind": pipe.kind,
            "preprocessing": pipe.preprocessing, "params": params}
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        zf.writestr(zipfile.ZipInfo("meta.json", _ZIP_TIME), json.dumps(meta, sort_keys=True, indent=1))
        for name in sorted(arrays):
            out = io.BytesIO()
            np.lib.format.write_array(out, np.ascontiguousarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", _ZIP_TIME)
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, out.getvalue())
    return buf.getvalue()


def loads(blob, source=None):
    try:
        zf = zipfile.ZipFile(io.BytesIO(blob))
    except zipfile.BadZipFile:
        raise ParseError("not a model file", source) from None
    with zf:
        meta = json.loads(zf.read("meta.json"))
        if meta.get("format") != FORMAT:
            raise ParseError("not a model file", source)
        if meta.get("version") != VERSION:
            raise ParseError(f"unsupported model file version {meta.get('version')}", source)
        arrays = {}
        for name in zf.namelist():
            if name.endswith(".npy"):
                arrays[name[:-4]] = np.lib.format.read_array(io.BytesIO(zf.read(name)), allow_pickle=False)
    model_arrays = {k[len("model/"):]: v for k, v in arrays.items() if k.startswith("model/")}
    model = _model_from_arrays(meta["kind"], model_arrays, meta["params"])
    scaler = dataset.StandardScalerFit(arrays["scaler/mean"], arrays["scaler/scale"])
    pca = None
    if "pca/components" in arrays:
        pca = dataset.PCAFit(arrays["pca/mean"], arrays["pca/components"], arrays["pca/explained_variance"])
    return Pipeline(meta["kind"], meta["preprocessing"], scaler, pca, model)


def save(pipe, path):
    Path(path).write_bytes(dumps(pipe))


def load(path):
    path = Path(path)
    return loads(path.read_bytes(), path)


__all__ = ["Pipeline", "fit_pipeline", "fit_preprocessing", "save", "load", "dumps", "loads",
           "default_config"]
