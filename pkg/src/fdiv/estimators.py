"""Scikit-learn style wrappers around the functional core.

Each estimator stores its constructor arguments verbatim (so ``get_params``
/ ``set_params`` / ``clone`` behave), defers all work to ``fit``, and
exposes results through trailing-underscore attributes.  The two-sample
estimators follow the convention ``fit(X, Y)`` where ``X`` is the sample
from the distribution of interest and ``Y`` the sample from the reference.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .divergences import DivergenceSpec, make_divergence
from .features import FeatureMap
from .feature_learning import learn_linear, train_neural
from .moments import compute_moments
from .mutual_info import mi_estimate, softmax_fit
from .spectral import estimate_from_moments, potentials

__all__ = [
    "SpectralDivergence",
    "MutualInformation",
    "SoftmaxSpectral",
    "LinearFeatureLearner",
    "NeuralFeatureLearner",
]


def _resolve_spec(divergence, alpha) -> DivergenceSpec:
    if isinstance(divergence, DivergenceSpec):
        return divergence
    return make_divergence(divergence, alpha=alpha)


def _require_fitted(est, attr: str):
    if not hasattr(est, attr):
        raise NotFittedError(
            f"{type(est).__name__} is not fitted; call fit() first")


class SpectralDivergence(BaseEstimator):
    """Closed-form f-divergence estimator on a fixed feature map.

    Parameters
    ----------
    feature_map : FeatureMap
        Map applied to both samples before the moment computation.
    divergence : str or DivergenceSpec, default "kl"
        Catalog name (``alpha:<value>`` works too) or a prebuilt spec.
    alpha : float or None
        Family parameter, only consulted for the alpha family.
    lambda_reg : float
        Ridge added to both second moments.
    constant_mode : {"none", "augmented_unpenalized"}
        Whether to append a constant feature kept out of the ridge shift.
    debias : bool
        Also compute the plug-in bias correction.
    """

    def __init__(self, feature_map: FeatureMap, divergence="kl",
                 alpha: float | None = None, lambda_reg: float = 1e-6,
                 constant_mode: str = "none", debias: bool = False):
        self.feature_map = feature_map
        self.divergence = divergence
        self.alpha = alpha
        self.lambda_reg = lambda_reg
        self.constant_mode = constant_mode
        self.debias = debias

    def fit(self, X, Y):
        spec = _resolve_spec(self.divergence, self.alpha)
        moments = compute_moments(self.feature_map, X, Y, self.lambda_reg,
                                  constant_mode=self.constant_mode)
        report = estimate_from_moments(moments, spec, debias=self.debias)
        self.spec_ = spec
        self.moments_ = moments
        self.report_ = report
        self.value_ = report.value
        self.correction_ = report.correction
        self.debiased_value_ = report.debiased_value
        self.potentials_ = potentials(moments, spec,
                                      feature_map=self.feature_map)
        self.n_features_in_ = moments.dim
        return self

    def potential_values(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate the fitted pair (v, w) at new points."""
        _require_fitted(self, "potentials_")
        return self.potentials_(X)

    def score(self, X, Y) -> float:
        """Out-of-sample pair functional mean v(X) + mean w(Y)."""
        _require_fitted(self, "potentials_")
        v = self.potentials_(X)[0]
        w = self.potentials_(Y)[1]
        return float(v.mean() + w.mean())


class MutualInformation(BaseEstimator):
    """f-information estimator for paired samples via product features.

    ``fit(X)`` expects rows ``(x1, x2)`` concatenated; ``dim_1`` splits the
    columns (inferred from ``feature_map_1`` when it declares an input dim).
    """

    def __init__(self, feature_map_1: FeatureMap, feature_map_2: FeatureMap,
                 divergence="kl", alpha: float | None = None,
                 lambda_reg: float = 0.0, debias: bool = False,
                 dim_1: int | None = None, dim_2: int | None = None):
        self.feature_map_1 = feature_map_1
        self.feature_map_2 = feature_map_2
        self.divergence = divergence
        self.alpha = alpha
        self.lambda_reg = lambda_reg
        self.debias = debias
        self.dim_1 = dim_1
        self.dim_2 = dim_2

    def fit(self, X, y=None):
        spec = _resolve_spec(self.divergence, self.alpha)
        report = mi_estimate(X, self.feature_map_1, self.feature_map_2, spec,
                             lambda_reg=self.lambda_reg, debias=self.debias,
                             d1=self.dim_1, d2=self.dim_2)
        self.spec_ = spec
        self.report_ = report
        self.mi_ = report.value
        self.debiased_mi_ = report.debiased_value
        return self


class SoftmaxSpectral(ClassifierMixin, BaseEstimator):
    """Classifier trained through the decomposed softmax MI estimate.

    Labels may be arbitrary; they are mapped to 1..k internally and the
    decision function returns one centered log-ratio score per class.
    """

    def __init__(self, feature_map: FeatureMap, lambda_reg: float = 0.0,
                 divergence="kl", alpha: float | None = None):
        self.feature_map = feature_map
        self.lambda_reg = lambda_reg
        self.divergence = divergence
        self.alpha = alpha

    def fit(self, X, y):
        spec = _resolve_spec(self.divergence, self.alpha)
        y = np.asarray(y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        model = softmax_fit(X, encoded + 1, self.feature_map,
                            k=self.classes_.size, spec=spec,
                            lambda_reg=self.lambda_reg)
        self.spec_ = spec
        self.model_ = model
        self.mi_ = model.mi
        return self

    def decision_function(self, X) -> np.ndarray:
        _require_fitted(self, "model_")
        return self.model_.score_all(X)

    def predict(self, X) -> np.ndarray:
        _require_fitted(self, "model_")
        return self.classes_[self.model_.predict(X) - 1]


class LinearFeatureLearner(BaseEstimator):
    """Minorize-maximize rank reduction of a fixed feature map."""

    def __init__(self, feature_map: FeatureMap, r: int = 4, divergence="kl",
                 alpha: float | None = None, lambda_reg: float = 0.0,
                 n_steps: int = 100, tol: float = 1e-10, seed: int = 0):
        self.feature_map = feature_map
        self.r = r
        self.divergence = divergence
        self.alpha = alpha
        self.lambda_reg = lambda_reg
        self.n_steps = n_steps
        self.tol = tol
        self.seed = seed

    def fit(self, X, Y):
        spec = _resolve_spec(self.divergence, self.alpha)
        res = learn_linear(X, Y, self.feature_map, spec, r=self.r,
                           lambda_reg=self.lambda_reg, n_steps=self.n_steps,
                           tol=self.tol, seed=self.seed)
        self.spec_ = spec
        self.gamma_ = res.gamma
        self.value_ = res.value
        self.trace_ = list(res.trace)
        self.feature_map_ = res.feature_map
        return self


class NeuralFeatureLearner(BaseEstimator):
    """One-hidden-layer trainer alternating SGA with closed-form solves."""

    def __init__(self, divergence="kl", alpha: float | None = None, *,
                 units: int = 50, r: int = 4, lambda_reg: float = 1e-4,
                 weight_decay: float | None = None, step_size: float = 0.05,
                 epochs: int = 40, batch: int = 32, refresh_batches: int = 8,
                 moment_epochs: int = 2, seed: int = 0):
        self.divergence = divergence
        self.alpha = alpha
        self.units = units
        self.r = r
        self.lambda_reg = lambda_reg
        self.weight_decay = weight_decay
        self.step_size = step_size
        self.epochs = epochs
        self.batch = batch
        self.refresh_batches = refresh_batches
        self.moment_epochs = moment_epochs
        self.seed = seed

    def fit(self, X, Y):
        spec = _resolve_spec(self.divergence, self.alpha)
        res = train_neural(
            X, Y, spec, units=self.units, r=self.r,
            lambda_reg=self.lambda_reg, weight_decay=self.weight_decay,
            step_size=self.step_size, epochs=self.epochs, batch=self.batch,
            refresh_batches=self.refresh_batches,
            moment_epochs=self.moment_epochs, seed=self.seed)
        self.spec_ = spec
        self.feature_map_ = res.feature_map
        self.value_ = res.value
        self.trace_ = list(res.trace)
        return self
