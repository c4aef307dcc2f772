"""Feature maps: fixed dictionaries the moment matrices are built from.

Every map is a callable taking an (n, d) sample array to an (n, m) feature
matrix.  ``input_dim`` is the expected d (None = accept any), ``output_dim``
is m.  Maps are plain objects with a JSON config round trip so learned maps
and CLI-specified maps share one representation.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .exceptions import DimensionMismatch, DomainError
from .validation import as_samples


class FeatureMap:
    input_dim: int | None = None
    output_dim: int

    def __call__(self, X) -> np.ndarray:
        raise NotImplementedError

    def _check(self, X, name="X") -> np.ndarray:
        return as_samples(X, name=name, dim=self.input_dim)

    def to_config(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} has no config form")


def eval_features(fmap: FeatureMap, x) -> np.ndarray:
    """Feature vector of a single point."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr[None]
    return fmap(arr[None, :])[0]


class IdentityFeatures(FeatureMap):
    """Pass-through map for samples that already are feature vectors."""

    def __init__(self, dim: int):
        self.input_dim = int(dim)
        self.output_dim = int(dim)

    def __call__(self, X):
        return self._check(X)

    def to_config(self):
        return {"type": "identity", "d": self.input_dim}


class ExplicitBasis(FeatureMap):
    """Features given as a list of scalar functions of the sample row array.

    Each function maps an (n, d) array to an (n,) column.
    """

    def __init__(self, funcs: Sequence[Callable], input_dim: int | None = None):
        self.funcs = list(funcs)
        self.input_dim = input_dim
        self.output_dim = len(self.funcs)

    def __call__(self, X):
        X = self._check(X)
        return np.column_stack([np.broadcast_to(f(X), X.shape[0]) for f in self.funcs])


class TrigBasis(FeatureMap):
    """1-D trigonometric dictionary: 1, cos/sin of 2*pi*k*x up to max_freq.

    ``weighting`` scales the frequency-k pair: "flat" leaves them at 1,
    "bernoulli" uses sqrt(2)/k so the induced kernel is
    1 + sum_k (2/k^2) cos(2 pi k (x - y)).
    """

    def __init__(self, max_freq: int, weighting: str | Sequence[float] = "flat"):
        if max_freq < 1:
            raise DomainError("max_freq must be >= 1")
        self.max_freq = int(max_freq)
        self.weighting = weighting if isinstance(weighting, str) else list(weighting)
        if isinstance(weighting, str):
            if weighting == "flat":
                w = np.ones(self.max_freq)
            elif weighting == "bernoulli":
                w = math.sqrt(2.0) / np.arange(1, self.max_freq + 1)
            else:
                raise DomainError(f"unknown weighting {weighting!r}")
        else:
            w = np.asarray(weighting, dtype=float)
            if w.shape != (self.max_freq,):
                raise DimensionMismatch("weights must have one entry per frequency")
        self._weights = w
        self.input_dim = 1
        self.output_dim = 1 + 2 * self.max_freq

    def __call__(self, X):
        X = self._check(X)
        t = 2.0 * math.pi * np.outer(X[:, 0], np.arange(1, self.max_freq + 1))
        cols = [np.ones(X.shape[0])]
        c, s = np.cos(t) * self._weights, np.sin(t) * self._weights
        # interleave cos_k, sin_k so truncation keeps whole frequencies
        for k in range(self.max_freq):
            cols.append(c[:, k])
            cols.append(s[:, k])
        return np.column_stack(cols)

    def to_config(self):
        w = self.weighting if isinstance(self.weighting, str) else list(self._weights)
        return {"type": "trig", "max_freq": self.max_freq, "weighting": w}


class OneHot(FeatureMap):
    """Indicator features of an integer category in {1, ..., k}."""

    def __init__(self, k: int):
        if k < 2:
            raise DomainError("one-hot needs k >= 2 categories")
        self.k = int(k)
        self.input_dim = 1
        self.output_dim = self.k

    def __call__(self, X):
        X = self._check(X)
        labels = np.rint(X[:, 0]).astype(int)
        if np.max(np.abs(labels - X[:, 0])) > 1e-9:
            raise DomainError("one-hot input must be integer categories")
        if labels.min() < 1 or labels.max() > self.k:
            raise DomainError(f"categories must lie in 1..{self.k}")
        out = np.zeros((X.shape[0], self.k))
        out[np.arange(X.shape[0]), labels - 1] = 1.0
        return out

    def to_config(self):
        return {"type": "one_hot", "k": self.k}


class RandomReLU(FeatureMap):
    """Random positively-homogeneous ridge features of order kappa.

    Directions are drawn uniformly on the unit sphere of R^(d+1) acting on
    the augmented point (x, 1)/sqrt(2); order 0 uses the strict step
    1{w.x + b > 0}.  Features carry a 1/sqrt(m) factor so the induced
    kernel (and hence sensible lambda grids) are m-independent.
    """

    def __init__(self, input_dim: int, m: int, kappa: int = 1, seed: int = 0):
        if kappa not in (0, 1, 2):
            raise DomainError("kappa must be 0, 1 or 2")
        self.input_dim = int(input_dim)
        self.m = int(m)
        self.kappa = int(kappa)
        self.seed = int(seed)
        rng = np.random.default_rng(self.seed)
        g = rng.standard_normal((self.m, self.input_dim + 1))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        self.weights = g[:, : self.input_dim] / math.sqrt(2.0)
        self.biases = g[:, self.input_dim] / math.sqrt(2.0)
        self.output_dim = self.m

    def __call__(self, X):
        X = self._check(X)
        z = X @ self.weights.T + self.biases
        if self.kappa == 0:
            out = (z > 0.0).astype(float)
        else:
            out = np.maximum(z, 0.0) ** self.kappa
        return out / math.sqrt(self.m)

    def to_config(self):
        return {"type": "random_relu", "d": self.input_dim, "m": self.m,
                "kappa": self.kappa, "seed": self.seed}


class CircleEmbedding(FeatureMap):
    """Coordinatewise embedding of [0,1]^d into the product of circles."""

    def __init__(self, input_dim: int):
        self.input_dim = int(input_dim)
        self.output_dim = 2 * self.input_dim

    def __call__(self, X):
        X = self._check(X)
        t = 2.0 * math.pi * X
        return np.concatenate([np.cos(t), np.sin(t)], axis=1)

    def to_config(self):
        return {"type": "circle_embed", "d": self.input_dim}


class Chain(FeatureMap):
    """Composition: the second map consumes the first map's features."""

    def __init__(self, inner: FeatureMap, outer: FeatureMap):
        if outer.input_dim is not None and outer.input_dim != inner.output_dim:
            raise DimensionMismatch("chained maps have incompatible dimensions")
        self.inner = inner
        self.outer = outer
        self.input_dim = inner.input_dim
        self.output_dim = outer.output_dim

    def __call__(self, X):
        return self.outer(self.inner(X))

    def to_config(self):
        return {"type": "chain", "inner": self.inner.to_config(),
                "outer": self.outer.to_config()}


class LinearReduction(FeatureMap):
    """Reduced map gamma^T phi with a fixed m x r matrix gamma."""

    def __init__(self, inner: FeatureMap, gamma):
        # contiguous copy: strided views (e.g. reversed eigenvector columns)
        # push the projection matmul off the BLAS fast path
        gamma = np.ascontiguousarray(gamma, dtype=float)
        if gamma.ndim != 2 or gamma.shape[0] != inner.output_dim:
            raise DimensionMismatch(
                f"gamma must be ({inner.output_dim}, r), got {gamma.shape}")
        self.inner = inner
        self.gamma = gamma
        self.input_dim = inner.input_dim
        self.output_dim = gamma.shape[1]

    def __call__(self, X):
        return self.inner(X) @ self.gamma

    def to_config(self):
        return {"type": "reduced", "inner": self.inner.to_config(),
                "gamma": self.gamma.tolist()}


class NeuralOneLayer(FeatureMap):
    """One hidden ReLU layer with an optional linear read-out reduction."""

    def __init__(self, weights, biases, reduction=None):
        self.weights = np.asarray(weights, dtype=float)
        self.biases = np.asarray(biases, dtype=float)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise DimensionMismatch("weights must be (m, d) with m biases")
        self.reduction = (None if reduction is None
                          else np.ascontiguousarray(reduction, dtype=float))
        if self.reduction is not None and self.reduction.shape[0] != self.weights.shape[0]:
            raise DimensionMismatch("reduction must be (m, r)")
        self.input_dim = self.weights.shape[1]
        self.output_dim = (self.weights.shape[0] if self.reduction is None
                           else self.reduction.shape[1])

    def hidden(self, X):
        X = self._check(X)
        return np.maximum(X @ self.weights.T + self.biases, 0.0)

    def __call__(self, X):
        H = self.hidden(X)
        return H if self.reduction is None else H @ self.reduction

    def to_config(self):
        return {"type": "neural", "w": self.weights.tolist(), "b": self.biases.tolist(),
                "reduction": None if self.reduction is None else self.reduction.tolist()}


class KroneckerProduct(FeatureMap):
    """Rowwise Kronecker product phi2 (x) phi1 on paired samples (x1, x2).

    The input is the horizontal concatenation of the two variables'
    columns; entry (j, i) of the product lands at index j * m1 + i.
    """

    def __init__(self, first: FeatureMap, second: FeatureMap,
                 d1: int | None = None, d2: int | None = None):
        self.first = first
        self.second = second
        self.d1 = first.input_dim if d1 is None else int(d1)
        self.d2 = second.input_dim if d2 is None else int(d2)
        if self.d1 is None or self.d2 is None:
            raise DimensionMismatch("column split needs d1/d2 or maps with input_dim")
        self.input_dim = self.d1 + self.d2
        self.output_dim = first.output_dim * second.output_dim

    def split(self, X):
        X = self._check(X)
        return X[:, : self.d1], X[:, self.d1:]

    def __call__(self, X):
        x1, x2 = self.split(X)
        p1, p2 = self.first(x1), self.second(x2)
        n = p1.shape[0]
        return np.einsum("nj,ni->nji", p2, p1).reshape(n, -1)

    def to_config(self):
        return {"type": "product", "first": self.first.to_config(),
                "second": self.second.to_config(), "d1": self.d1, "d2": self.d2}


class ConstantAugmented(FeatureMap):
    """Appends a trailing feature identically 1 (kept out of the +lambda shift)."""

    def __init__(self, inner: FeatureMap):
        self.inner = inner
        self.input_dim = inner.input_dim
        self.output_dim = inner.output_dim + 1

    def __call__(self, X):
        phi = self.inner(X)
        return np.concatenate([phi, np.ones((phi.shape[0], 1))], axis=1)

    def to_config(self):
        return {"type": "constant_augmented", "inner": self.inner.to_config()}


def feature_map_from_config(cfg: dict) -> FeatureMap:
    """Rebuild a feature map from its JSON dict form."""
    kind = cfg.get("type")
    if kind == "identity":
        return IdentityFeatures(cfg["d"])
    if kind == "trig":
        return TrigBasis(cfg["max_freq"], cfg.get("weighting", "flat"))
    if kind == "one_hot":
        return OneHot(cfg["k"])
    if kind == "random_relu":
        return RandomReLU(cfg["d"], cfg["m"], cfg.get("kappa", 1), cfg.get("seed", 0))
    if kind == "circle_embed":
        return CircleEmbedding(cfg["d"])
    if kind == "chain":
        return Chain(feature_map_from_config(cfg["inner"]),
                     feature_map_from_config(cfg["outer"]))
    if kind == "reduced":
        return LinearReduction(feature_map_from_config(cfg["inner"]), cfg["gamma"])
    if kind == "neural":
        return NeuralOneLayer(cfg["w"], cfg["b"], cfg.get("reduction"))
    if kind == "product":
        return KroneckerProduct(feature_map_from_config(cfg["first"]),
                                feature_map_from_config(cfg["second"]),
                                cfg.get("d1"), cfg.get("d2"))
    if kind == "constant_augmented":
        return ConstantAugmented(feature_map_from_config(cfg["inner"]))
    raise DomainError(f"unknown feature map type {kind!r}")
