"""Feature first/second moments of a sample pair, with ridge bookkeeping.

The spectral machinery consumes only these summaries: means mu_p, mu_q and
(uncentered) second moments sigma_p, sigma_q of the features under the two
samples.  Regularization is stored as metadata: ``sigma_p_reg`` adds
``lambda_reg`` to the diagonal of the penalized block, leaving a trailing
constant feature unpenalized under ``constant_mode="augmented_unpenalized"``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DimensionGuard, DimensionMismatch, DomainError
from .features import ConstantAugmented, FeatureMap, KroneckerProduct
from .validation import as_labels, as_samples, symmetrize

_CHUNK = 8192  # fixed accumulation chunk: deterministic reduction order

CONSTANT_MODES = ("none", "augmented_unpenalized")


@dataclass(frozen=True)
class DatasetPair:
    """Samples from p and q, same ambient dimension."""

    x_samples: np.ndarray
    y_samples: np.ndarray

    def __post_init__(self):
        x = as_samples(self.x_samples, name="x_samples")
        y = as_samples(self.y_samples, name="y_samples")
        if x.shape[1] != y.shape[1]:
            raise DimensionMismatch("x_samples and y_samples have different widths")
        object.__setattr__(self, "x_samples", x)
        object.__setattr__(self, "y_samples", y)


@dataclass(frozen=True)
class MomentSet:
    mu_p: np.ndarray
    mu_q: np.ndarray
    sigma_p: np.ndarray
    sigma_q: np.ndarray
    n_p: int
    n_q: int
    lambda_reg: float = 0.0
    constant_mode: str = "none"

    def __post_init__(self):
        if self.constant_mode not in CONSTANT_MODES:
            raise DomainError(f"constant_mode must be one of {CONSTANT_MODES}")
        if self.lambda_reg < 0:
            raise DomainError("lambda_reg must be >= 0")
        m = self.mu_p.shape[0]
        for name in ("mu_q",):
            if getattr(self, name).shape != (m,):
                raise DimensionMismatch("mean vectors disagree in length")
        for name in ("sigma_p", "sigma_q"):
            if getattr(self, name).shape != (m, m):
                raise DimensionMismatch("second moments must be (m, m)")

    @property
    def dim(self) -> int:
        return self.mu_p.shape[0]

    @property
    def reg_shift(self) -> np.ndarray:
        """Diagonal added to both second moments before decomposition."""
        shift = np.full(self.dim, self.lambda_reg)
        if self.constant_mode == "augmented_unpenalized":
            shift[-1] = 0.0
        return shift

    @property
    def sigma_p_reg(self) -> np.ndarray:
        return self.sigma_p + np.diag(self.reg_shift)

    @property
    def sigma_q_reg(self) -> np.ndarray:
        return self.sigma_q + np.diag(self.reg_shift)

    @property
    def delta(self) -> np.ndarray:
        return self.mu_p - self.mu_q

    def with_lambda(self, lambda_reg: float) -> "MomentSet":
        return replace(self, lambda_reg=float(lambda_reg))

    def check(self, tol: float = 1e-8) -> None:
        """Debug validation: symmetry and second-moment dominance."""
        for s, mu in ((self.sigma_p, self.mu_p), (self.sigma_q, self.mu_q)):
            if np.max(np.abs(s - s.T)) > 1e-12:
                raise DomainError("second moment not symmetric")
            cov = s - np.outer(mu, mu)
            lo = float(np.linalg.eigvalsh(symmetrize(cov)).min())
            if lo < -tol * max(1.0, float(np.trace(s))):
                raise DomainError(f"second moment not dominating: min eig {lo}")


def _accumulate(fmap: FeatureMap, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    n = X.shape[0]
    mu = None
    sig = None
    for start in range(0, n, _CHUNK):
        phi = fmap(X[start : start + _CHUNK])
        if mu is None:
            mu = np.zeros(phi.shape[1])
            sig = np.zeros((phi.shape[1], phi.shape[1]))
        mu += phi.sum(axis=0)
        sig += phi.T @ phi
    return mu / n, symmetrize(sig / n), n


def effective_feature_map(fmap: FeatureMap, constant_mode: str) -> FeatureMap:
    if constant_mode == "augmented_unpenalized":
        return ConstantAugmented(fmap)
    return fmap


def compute_moments(fmap: FeatureMap, x_samples, y_samples,
                    lambda_reg: float = 0.0,
                    constant_mode: str = "none") -> MomentSet:
    """Empirical feature moments of the two samples."""
    if constant_mode not in CONSTANT_MODES:
        raise DomainError(f"constant_mode must be one of {CONSTANT_MODES}")
    emap = effective_feature_map(fmap, constant_mode)
    X = as_samples(x_samples, name="x_samples", dim=emap.input_dim)
    Y = as_samples(y_samples, name="y_samples", dim=emap.input_dim)
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch("sample sets have different widths")
    mu_p, sig_p, n_p = _accumulate(emap, X)
    mu_q, sig_q, n_q = _accumulate(emap, Y)
    return MomentSet(mu_p, mu_q, sig_p, sig_q, n_p, n_q,
                     float(lambda_reg), constant_mode)


def moments_from_features(phi_p, phi_q, lambda_reg: float = 0.0,
                          constant_mode: str = "none") -> MomentSet:
    """MomentSet straight from precomputed feature matrices."""
    P = as_samples(phi_p, name="phi_p")
    Q = as_samples(phi_q, name="phi_q")
    if P.shape[1] != Q.shape[1]:
        raise DimensionMismatch("feature matrices have different widths")
    return MomentSet(P.mean(axis=0), Q.mean(axis=0),
                     symmetrize(P.T @ P / P.shape[0]),
                     symmetrize(Q.T @ Q / Q.shape[0]),
                     P.shape[0], Q.shape[0], float(lambda_reg), constant_mode)


MAX_PRODUCT_DIM = 4096


def kronecker_moments(map1: FeatureMap, map2: FeatureMap, pairs,
                      lambda_reg: float = 0.0,
                      d1: int | None = None, d2: int | None = None) -> MomentSet:
    """Joint vs product-of-marginals moments on the Kronecker feature space.

    The "p" side is the paired sample pushed through phi2 (x) phi1; the "q"
    side is assembled from the marginal moments, so sigma_q factorizes as
    the Kronecker product of the per-variable second moments exactly.
    """
    prod = KroneckerProduct(map1, map2, d1, d2)
    if prod.output_dim > MAX_PRODUCT_DIM:
        raise DimensionGuard(
            f"product feature dimension {prod.output_dim} exceeds "
            f"{MAX_PRODUCT_DIM}; reduce the maps or use feature learning")
    X = as_samples(pairs, name="pairs", dim=prod.input_dim)
    x1, x2 = prod.split(X)
    p1, p2 = map1(x1), map2(x2)
    n = p1.shape[0]
    joint = np.einsum("nj,ni->nji", p2, p1).reshape(n, -1)
    mu_p = joint.mean(axis=0)
    sig_p = symmetrize(joint.T @ joint / n)
    m1_mean, m2_mean = p1.mean(axis=0), p2.mean(axis=0)
    s1 = symmetrize(p1.T @ p1 / n)
    s2 = symmetrize(p2.T @ p2 / n)
    mu_q = np.kron(m2_mean, m1_mean)
    sig_q = np.kron(s2, s1)
    return MomentSet(mu_p, mu_q, sig_p, sig_q, n, n, float(lambda_reg), "none")


@dataclass(frozen=True)
class ClassMoments:
    """Per-class and pooled feature moments for a labelled sample."""

    priors: np.ndarray          # (k,) empirical class frequencies
    mu: np.ndarray              # (k, m) per-class means
    sigma: np.ndarray           # (k, m, m) per-class second moments
    mu_pool: np.ndarray         # (m,)
    sigma_pool: np.ndarray      # (m, m)
    counts: np.ndarray          # (k,) integer
    lambda_reg: float = 0.0

    @property
    def k(self) -> int:
        return self.priors.shape[0]

    @property
    def dim(self) -> int:
        return self.mu_pool.shape[0]


def class_conditional_moments(fmap: FeatureMap, x_samples, labels, k: int,
                              lambda_reg: float = 0.0) -> ClassMoments:
    """Moments of phi(x) within each class and pooled over all samples.

    The pooled mean/second moment equal the prior-weighted mixtures of the
    per-class ones up to floating point.  Empty classes get zero prior and
    zero moments, with a warning.
    """
    X = as_samples(x_samples, name="x_samples", dim=fmap.input_dim)
    y = as_labels(labels, k=k)
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatch("labels and samples disagree in length")
    phi = fmap(X)
    n, m = phi.shape
    counts = np.bincount(y - 1, minlength=k)
    if np.any(counts == 0):
        empties = [j + 1 for j in np.flatnonzero(counts == 0)]
        warnings.warn(f"classes with no samples: {empties}", RuntimeWarning)
    mu = np.zeros((k, m))
    sigma = np.zeros((k, m, m))
    for j in range(k):
        mask = y == j + 1
        if counts[j]:
            block = phi[mask]
            mu[j] = block.mean(axis=0)
            sigma[j] = symmetrize(block.T @ block / counts[j])
    return ClassMoments(counts / n, mu, sigma, phi.mean(axis=0),
                        symmetrize(phi.T @ phi / n), counts, float(lambda_reg))
