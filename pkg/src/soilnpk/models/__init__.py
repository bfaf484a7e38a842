"""The four regressors and a small registry used by the CV harness and CLI."""
from .forest import ForestConfig, ForestModel, fit_forest, predict_forest
from .knn import KnnModel, fit_knn, predict_knn
from .linear import LinearModel, fit_linear, predict_linear
from .mlp import MlpConfig, MlpModel, fit_mlp, predict_mlp
from ..errors import ValidationError

# kind -> default config; "mlp_linear" is the MLP with identity activations
MODEL_KINDS = ("linear", "knn", "forest", "mlp", "mlp_linear")
DEFAULT_MODELS = ("linear", "knn", "forest", "mlp")


def default_config(kind):
    if kind == "linear":
        return {}
    if kind == "knn":
        return {"k": 5}
    if kind == "forest":
        return ForestConfig()
    if kind == "mlp":
        return MlpConfig()
    if kind == "mlp_linear":
        return MlpConfig(activation="linear")
    raise ValidationError(f"unknown model kind {kind!r}; choose from {', '.join(MODEL_KINDS)}")


def fit_model(kind, X, Y, config=None, seed=0, X_val=None, Y_val=None):
    """Fit any registered model. Validation data is only used for MLP epoch curves."""
    if config is None:
        config = default_config(kind)
    if kind == "linear":
        return fit_linear(X, Y)
    if kind == "knn":
        return fit_knn(X, Y, **config)
    if kind == "forest":
        return fit_forest(X, Y, config, seed)
    if kind in ("mlp", "mlp_linear"):
        return fit_mlp(X, Y, config, seed, X_val, Y_val)
    raise ValidationError(f"unknown model kind {kind!r}")


def predict(model, X):
    return model.predict(X)


__all__ = [
    "ForestConfig", "ForestModel", "KnnModel", "LinearModel", "MlpConfig", "MlpModel",
    "MODEL_KINDS", "DEFAULT_MODELS", "default_config", "fit_model", "predict",
    "fit_forest", "predict_forest", "fit_knn", "predict_knn", "fit_linear",
    "predict_linear", "fit_mlp", "predict_mlp",
]
