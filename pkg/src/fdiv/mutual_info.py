"""Mutual information through the spectral machinery.

Two routes:

* ``mi_estimate``: Kronecker features phi2 (x) phi1, joint moments vs the
  product of marginal moments, then the generic spectral estimate.  Dense
  in the product dimension m1 * m2.

* ``softmax_fit``: when the second variable is a class label, the product
  pencil is block diagonal, so the decomposition splits into k problems of
  size m1.  Block j of the pencil is (pi_j sigma_j + lam I, pi_j sigma + lam I)
  with sigma_j the class-conditional second moment and sigma the pooled one.
  Solving the blocks separately reproduces the Kronecker route bit for bit
  (same ridge placement), at cost O(m^2 n + k m^3) instead of O((km)^3).

The per-class potential blocks score v(x, j), an (unnormalized) estimate of
log p(j | x) - log p(j); adding log priors and taking argmax classifies.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .divergences import DivergenceSpec, make_divergence
from .exceptions import DomainError
from .features import FeatureMap, feature_map_from_config
from .moments import MomentSet, class_conditional_moments, kronecker_moments
from .spectral import (EstimateReport, estimate_from_moments, potentials,
                       spectral_value, _spectrum_for)
from .validation import as_samples


def mi_estimate(pairs, map1: FeatureMap, map2: FeatureMap, spec: DivergenceSpec,
                lambda_reg: float = 0.0, debias: bool = False,
                d1: int | None = None, d2: int | None = None) -> EstimateReport:
    """f-information between the two variables of a paired sample."""
    moments = kronecker_moments(map1, map2, pairs, lambda_reg, d1, d2)
    return estimate_from_moments(moments, spec, debias)


@dataclass(frozen=True)
class SoftmaxModel:
    """Per-class quadratic potentials plus the decomposed MI value."""

    k: int
    priors: np.ndarray        # (k,)
    M: np.ndarray             # (k, m, m)
    N: np.ndarray             # (k, m, m)
    c: np.ndarray             # (k, m)
    mi: float
    class_values: np.ndarray  # (k,) contributions summing to mi
    divergence: str
    alpha: float | None
    lambda_reg: float
    feature_map: FeatureMap | None = None

    def _features(self, X) -> np.ndarray:
        if self.feature_map is None:
            return as_samples(X, name="phi", dim=self.c.shape[1])
        return self.feature_map(X)

    def score(self, X, j: int) -> np.ndarray:
        """v(x, j) for class j in 1..k."""
        if not 1 <= j <= self.k:
            raise DomainError(f"class {j} outside 1..{self.k}")
        phi = self._features(X)
        i = j - 1
        return (np.einsum("ni,ij,nj->n", phi, self.M[i], phi)
                + 2.0 * phi @ self.c[i])

    def score_all(self, X) -> np.ndarray:
        phi = self._features(X)
        quad = np.einsum("ni,kij,nj->nk", phi, self.M, phi)
        return quad + 2.0 * phi @ self.c.T

    def predict(self, X) -> np.ndarray:
        with np.errstate(divide="ignore"):
            logp = np.log(self.priors)
        return np.argmax(self.score_all(X) + logp, axis=1) + 1

    def to_json(self) -> str:
        return json.dumps({
            "k": self.k,
            "priors": self.priors.tolist(),
            "M": self.M.tolist(),
            "N": self.N.tolist(),
            "c": self.c.tolist(),
            "mi": self.mi,
            "class_values": self.class_values.tolist(),
            "divergence": self.divergence,
            "alpha": self.alpha,
            "lambda_reg": self.lambda_reg,
            "feature_map": (None if self.feature_map is None
                            else self.feature_map.to_config()),
        })

    @staticmethod
    def from_json(text: str) -> "SoftmaxModel":
        d = json.loads(text)
        fmap = (None if d["feature_map"] is None
                else feature_map_from_config(d["feature_map"]))
        return SoftmaxModel(
            k=d["k"], priors=np.asarray(d["priors"]),
            M=np.asarray(d["M"]), N=np.asarray(d["N"]), c=np.asarray(d["c"]),
            mi=d["mi"], class_values=np.asarray(d["class_values"]),
            divergence=d["divergence"], alpha=d["alpha"],
            lambda_reg=d["lambda_reg"], feature_map=fmap)


def softmax_fit(x_samples, labels, fmap: FeatureMap, k: int,
                spec: DivergenceSpec, lambda_reg: float = 0.0) -> SoftmaxModel:
    """Decomposed MI estimate for an (x, label) sample; labels in 1..k."""
    cls = class_conditional_moments(fmap, x_samples, labels, k, lambda_reg)
    m = cls.dim
    M = np.zeros((k, m, m))
    N = np.zeros((k, m, m))
    c = np.zeros((k, m))
    values = np.zeros(k)
    for j in range(k):
        pi = cls.priors[j]
        if pi == 0.0:
            continue  # empty class: zero contribution, zero potentials
        block = MomentSet(
            mu_p=pi * cls.mu[j], mu_q=pi * cls.mu_pool,
            sigma_p=pi * cls.sigma[j], sigma_q=pi * cls.sigma_pool,
            n_p=int(cls.counts[j]), n_q=int(cls.counts.sum()),
            lambda_reg=lambda_reg)
        spectrum = _spectrum_for(block)
        values[j] = spectral_value(block, spec, spectrum)
        pp = potentials(block, spec, spectrum=spectrum)
        M[j], N[j], c[j] = pp.M, pp.N, pp.c
    return SoftmaxModel(k, cls.priors.copy(), M, N, c, float(values.sum()),
                        values, spec.name, spec.alpha, float(lambda_reg), fmap)


def softmax_score(model: SoftmaxModel, X, j: int) -> np.ndarray:
    return model.score(X, j)


def variational_mi_objective(scores: np.ndarray, labels, priors: np.ndarray) -> float:
    """Donsker-Varadhan style softmax objective of a score table.

    ``scores`` is (n, k) with v(x_i, j); the objective is
    mean_i [ v(x_i, y_i) - log sum_j priors_j exp(v(x_i, j)) ].
    Used to compare score models (spectral or trained) on common ground.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n, k = scores.shape
    keep = priors > 0
    if not np.all(keep):
        warnings.warn("empty classes ignored in the softmax objective", RuntimeWarning)
    shift = scores[:, keep].max(axis=1, keepdims=True)
    lse = shift[:, 0] + np.log(
        np.sum(priors[keep] * np.exp(scores[:, keep] - shift), axis=1))
    return float(np.mean(scores[np.arange(n), labels - 1] - lse))
