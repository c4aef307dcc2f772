"""Synthetic problem generators with exactly computable divergences.

Every generator pairs a sampling routine with an independent route to the
true divergence (closed form where available, otherwise dense quadrature),
so experiments can report true errors.  All constructions live on [0, 1)
intervals or tori where trigonometric features are natural and quadrature
is spectrally accurate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import i0, i1

from .divergences import DivergenceSpec
from .exceptions import DomainError, RejectionStall
from .moments import MomentSet
from .validation import as_samples

_QUAD_NODES = 2000


def _unit_leggauss(n: int = _QUAD_NODES) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * (nodes + 1.0), 0.5 * weights


@dataclass(frozen=True)
class TrigRatio1D:
    """Reference q = U[0,1); target has density 1 + amplitude * r(x).

    r is a centered trigonometric polynomial with polynomially decaying
    coefficients, rescaled to sup-norm one, so the density stays positive
    for amplitude < 1.  The target CDF is available in closed form, which
    gives exact inverse-CDF sampling.
    """

    cos_coef: np.ndarray
    sin_coef: np.ndarray
    amplitude: float

    def ratio(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        freq = 2.0 * np.pi * np.arange(1, self.cos_coef.size + 1)
        ang = np.multiply.outer(x, freq)
        r = np.cos(ang) @ self.cos_coef + np.sin(ang) @ self.sin_coef
        return 1.0 + self.amplitude * r

    def _cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        kk = np.arange(1, self.cos_coef.size + 1)
        freq = 2.0 * np.pi * kk
        ang = np.multiply.outer(x, freq)
        anti = (np.sin(ang) / freq) @ self.cos_coef \
            - ((np.cos(ang) - 1.0) / freq) @ self.sin_coef
        return x + self.amplitude * anti

    def sample_q(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 1.0, (n, 1))

    def sample_p(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.uniform(0.0, 1.0, n)
        out = np.empty(n)
        for i, ui in enumerate(u):
            out[i] = brentq(lambda t: self._cdf(t) - ui, 0.0, 1.0, xtol=1e-14)
        return out[:, None]

    def exact_divergence(self, spec: DivergenceSpec) -> float:
        nodes, weights = _unit_leggauss()
        return float(weights @ spec.f(self.ratio(nodes)))


def trig_ratio_1d(amplitude: float = 0.9, n_freq: int = 8, seed: int = 0) -> TrigRatio1D:
    rng = np.random.default_rng(seed)
    decay = np.arange(1, n_freq + 1, dtype=float) ** -1.5
    a = rng.standard_normal(n_freq) * decay
    b = rng.standard_normal(n_freq) * decay
    grid = np.linspace(0.0, 1.0, 4096, endpoint=False)
    freq = 2.0 * np.pi * np.arange(1, n_freq + 1)
    ang = np.multiply.outer(grid, freq)
    sup = np.max(np.abs(np.cos(ang) @ a + np.sin(ang) @ b))
    if not 0.0 <= amplitude < 1.0:
        raise DomainError("amplitude must lie in [0, 1) to keep the density positive")
    return TrigRatio1D(a / sup, b / sup, float(amplitude))


# --- torus densities with per-coordinate cosine log ratios ------------------


def _coord_log_ratio(x: np.ndarray, coef: np.ndarray) -> np.ndarray:
    freq = 2.0 * np.pi * np.arange(1, coef.size + 1)
    return np.cos(np.multiply.outer(x, freq)) @ coef


def _rejection_sample_coord(coef: np.ndarray, n: int, rng: np.random.Generator,
                            log_upper: float) -> np.ndarray:
    out = np.empty(n)
    filled = 0
    attempts = 0
    while filled < n:
        block = max(2 * (n - filled), 64)
        x = rng.uniform(0.0, 1.0, block)
        accept = np.log(rng.uniform(0.0, 1.0, block)) <= _coord_log_ratio(x, coef) - log_upper
        got = x[accept]
        take = min(got.size, n - filled)
        out[filled:filled + take] = got[:take]
        filled += take
        attempts += block
        if attempts > 64 and filled / attempts < 1e-3:
            raise RejectionStall("acceptance rate below 1e-3; flatten the log ratio")
    return out


@dataclass(frozen=True)
class TorusCosine:
    """Reference U[0,1)^d; target density prod_l exp(g_l(x_l)) / Z_l with
    g_l a finite cosine series.  Coordinates are independent under both."""

    coefs: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return len(self.coefs)

    def log_ratio(self, x) -> np.ndarray:
        X = as_samples(x, dim=self.dim)
        total = np.zeros(X.shape[0])
        for ell, coef in enumerate(self.coefs):
            total += _coord_log_ratio(X[:, ell], coef) - np.log(self._z(ell))
        return total

    def _z(self, ell: int) -> float:
        nodes, weights = _unit_leggauss()
        return float(weights @ np.exp(_coord_log_ratio(nodes, self.coefs[ell])))

    def sample_q(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 1.0, (n, self.dim))

    def sample_p(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cols = [_rejection_sample_coord(coef, n, rng, float(np.sum(np.abs(coef))))
                for coef in self.coefs]
        return np.column_stack(cols)

    def exact_kl(self) -> float:
        # product structure: relative entropy adds over coordinates
        nodes, weights = _unit_leggauss()
        total = 0.0
        for ell in range(self.dim):
            g = _coord_log_ratio(nodes, self.coefs[ell])
            z = float(weights @ np.exp(g))
            total += float(weights @ (np.exp(g) / z * (g - np.log(z))))
        return total

    def exact_divergence(self, spec: DivergenceSpec, grid: int = 400) -> float:
        if self.dim > 3:
            raise DomainError("tensor quadrature limited to 3 coordinates")
        nodes, weights = _unit_leggauss(grid)
        ratios = [np.exp(_coord_log_ratio(nodes, coef)) for coef in self.coefs]
        ratios = [r / (weights @ r) for r in ratios]
        mesh = ratios[0]
        w = weights
        for r in ratios[1:]:
            mesh = np.multiply.outer(mesh, r)
            w = np.multiply.outer(w, weights)
        return float(np.sum(w * spec.f(mesh)))


def torus_cosine(d: int = 2, strength: float = 1.0, n_freq: int = 2,
                 seed: int = 0) -> TorusCosine:
    rng = np.random.default_rng(seed)
    decay = np.arange(1, n_freq + 1, dtype=float) ** -2.0
    coefs = tuple(strength * rng.standard_normal(n_freq) * decay for _ in range(d))
    return TorusCosine(coefs)


# --- labelled mixture on the 2-torus for classification / MI ----------------


@dataclass(frozen=True)
class ThreeClassCosine:
    """Three class-conditional densities on [0,1)^2, each a product of
    exp(gamma cos(2 pi (x - center))) factors; exact mutual information by
    periodic trapezoid quadrature (spectrally accurate for smooth periodic
    integrands)."""

    gamma: float
    centers: np.ndarray          # (3, 2)
    priors: np.ndarray

    def class_log_density(self, x, j: int) -> np.ndarray:
        X = as_samples(x, dim=2)
        out = np.zeros(X.shape[0])
        for ell in range(2):
            ang = 2.0 * np.pi * (X[:, ell] - self.centers[j - 1, ell])
            out += self.gamma * np.cos(ang) - np.log(i0(self.gamma))
        return out

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        labels = rng.choice(3, size=n, p=self.priors) + 1
        X = np.empty((n, 2))
        for j in (1, 2, 3):
            idx = np.flatnonzero(labels == j)
            for ell in range(2):
                coef = np.array([self.gamma])
                raw = _rejection_sample_coord(coef, idx.size, rng, self.gamma)
                X[idx, ell] = (raw + self.centers[j - 1, ell]) % 1.0
        return X, labels

    def exact_mi(self, grid: int = 512) -> float:
        t = np.arange(grid) / grid
        xx, yy = np.meshgrid(t, t, indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        dens = np.stack([np.exp(self.class_log_density(pts, j)) for j in (1, 2, 3)])
        mix = self.priors @ dens.reshape(3, -1)
        total = 0.0
        for j in (1, 2, 3):
            pj = dens[j - 1].ravel()
            total += self.priors[j - 1] * np.mean(pj * np.log(pj / mix))
        return float(total)


def three_class_cosine(gamma: float = 2.0, seed: int = 0) -> ThreeClassCosine:
    rng = np.random.default_rng(seed)
    centers = (np.array([[0.0, 0.0], [1.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 1.0 / 3.0]])
               + 0.02 * rng.standard_normal((3, 2))) % 1.0
    return ThreeClassCosine(float(gamma), centers, np.full(3, 1.0 / 3.0))


# --- high-dimensional problem with one-dimensional latent structure ---------


@dataclass(frozen=True)
class LatentSubspace:
    """Reference U[0,1)^d; log ratio depends only on s = <k, x> mod 1 for an
    integer frequency vector k with k_1 = 1.  Sampling draws s from the
    tilted 1-D law and solves for the first coordinate, so all remaining
    coordinates stay uniform and independent.
    """

    freq: np.ndarray             # integer vector, freq[0] == 1
    gamma: float

    @property
    def dim(self) -> int:
        return self.freq.size

    def latent(self, x) -> np.ndarray:
        X = as_samples(x, dim=self.dim)
        return (X @ self.freq) % 1.0

    def log_ratio(self, x) -> np.ndarray:
        s = self.latent(x)
        return self.gamma * np.cos(2.0 * np.pi * s) - np.log(i0(self.gamma))

    def sample_q(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 1.0, (n, self.dim))

    def sample_p(self, n: int, rng: np.random.Generator) -> np.ndarray:
        s = _rejection_sample_coord(np.array([self.gamma]), n, rng, self.gamma)
        X = rng.uniform(0.0, 1.0, (n, self.dim))
        X[:, 0] = (s - X[:, 1:] @ self.freq[1:]) % 1.0
        return X

    def exact_kl(self) -> float:
        g = self.gamma
        return float(g * i1(g) / i0(g) - np.log(i0(g)))

    def exact_divergence(self, spec: DivergenceSpec) -> float:
        nodes, weights = _unit_leggauss()
        ratio = np.exp(self.gamma * np.cos(2.0 * np.pi * nodes)) / i0(self.gamma)
        return float(weights @ spec.f(ratio))


def latent_subspace(d: int, gamma: float = 1.5, active: int = 2) -> LatentSubspace:
    if d < 1:
        raise DomainError("need at least one coordinate")
    freq = np.zeros(d)
    freq[:min(active, d)] = 1.0
    return LatentSubspace(freq, float(gamma))


# --- discrete noisy copy channel ---------------------------------------------


@dataclass(frozen=True)
class CopyChannel:
    """X uniform on {1..k}; Y copies X with probability 1 - flip, otherwise
    resamples uniformly.  Joint and marginals are closed form, so the exact
    mutual information and the population product-feature moments are too."""

    k: int
    flip: float

    def joint(self) -> np.ndarray:
        k = self.k
        return ((1.0 - self.flip) * np.eye(k) + self.flip / k * np.ones((k, k))) / k

    def exact_mi(self) -> float:
        P = self.joint()
        px = P.sum(axis=1)
        py = P.sum(axis=0)
        mask = P > 0
        return float(np.sum(P[mask] * np.log(P[mask] / np.outer(px, py)[mask])))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        x = rng.integers(1, self.k + 1, size=n)
        y = np.where(rng.uniform(size=n) < 1.0 - self.flip,
                     x, rng.integers(1, self.k + 1, size=n))
        return np.column_stack([x, y]).astype(float)

    def population_moments(self, lambda_reg: float = 0.0) -> MomentSet:
        """Exact one-hot product-feature moments: no sampling error at all."""
        P = self.joint()
        px, py = P.sum(axis=1), P.sum(axis=0)
        vec = P.T.ravel()                     # index (y, x), second factor major
        mu_q = np.kron(py, px)
        return MomentSet(mu_p=vec, mu_q=mu_q, sigma_p=np.diag(vec),
                         sigma_q=np.diag(mu_q), n_p=2, n_q=2,
                         lambda_reg=lambda_reg)


def copy_channel(k: int = 2, flip: float = 0.0) -> CopyChannel:
    if not 0.0 <= flip <= 1.0:
        raise DomainError("flip probability must lie in [0, 1]")
    return CopyChannel(int(k), float(flip))
