"""Closed-form divergence lower bounds from a generalized eigendecomposition.

Given feature moments (mu_p, sigma_p) and (mu_q, sigma_q), the pencil
(sigma_p, sigma_q) is decomposed into eigenpairs (lambda_i, v_i) with
v_i^T sigma_q v_j = delta_ij.  The best quadratic-potential lower bound on
the f-divergence is then

    F = sum_i h(lambda_i) * ((mu_p - mu_q)^T v_i)^2,

and the optimizing potentials v(x) = phi^T M phi + 2 c^T phi and
w(x) = phi^T N phi - 2 c^T phi come from first divided differences of h
and of g(t) = t h(t) on the eigenvalues.  (M, N, 2c) are simultaneously
the derivatives of F with respect to (sigma_p, sigma_q, mu_p - mu_q).

Everything here consumes regularized moments: the diagonal ridge recorded
in the MomentSet is added to both second moments, which leaves the
weighted pencil rho*sigma_p + (1-rho)*sigma_q shifted by the same ridge
for every rho.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, eigh, solve_triangular

from .divergences import DivergenceSpec, eval_h
from .exceptions import DomainError, SingularReference, TooFewSamples
from .features import FeatureMap
from .moments import MomentSet, compute_moments, effective_feature_map
from .validation import as_samples, symmetrize

EIG_CLIP = 1e-300
EIG_NEGATIVE_TOL = 1e-8
TIE_REL_TOL = 1e-6
_SUPPORT_RTOL = 1e-12


@dataclass(frozen=True)
class GeneralizedSpectrum:
    """Eigenpairs of the moment pencil, ascending, sigma_q-orthonormal.

    ``eigenvalues`` has shape (r,), ``basis`` (m, r) with
    basis^T sigma_q_reg basis = I.  r < m only on the unregularized path
    when sigma_q is rank deficient (decomposition restricted to its range).
    """

    eigenvalues: np.ndarray
    basis: np.ndarray


def _fix_signs(V: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(V), axis=0)
    scale[scale == 0.0] = 1.0
    first = np.argmax(np.abs(V) > 1e-12 * scale, axis=0)
    signs = np.sign(V[first, np.arange(V.shape[1])])
    signs[signs == 0.0] = 1.0
    return V * signs


def _dense_gen_eig(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    L = cholesky(B, lower=True)
    C = solve_triangular(L, A, lower=True)
    C = solve_triangular(L, C.T, lower=True)
    lam, U = eigh(symmetrize(C))
    V = solve_triangular(L, U, lower=True, trans="T")
    return lam, V


def generalized_eig(moments: MomentSet, on_singular: str = "raise") -> GeneralizedSpectrum:
    """Decompose the regularized pencil (sigma_p_reg, sigma_q_reg).

    ``on_singular`` controls the rank-deficient reference case: "raise"
    (default) demands a positive definite sigma_q_reg, "project" restricts
    the decomposition to the range of sigma_q_reg (population convention
    for discrete instances at lambda_reg = 0).
    """
    A = moments.sigma_p_reg
    B = moments.sigma_q_reg
    try:
        lam, V = _dense_gen_eig(A, B)
    except np.linalg.LinAlgError:
        pass
    else:
        return _finalize_spectrum(lam, V)
    if on_singular != "project":
        raise SingularReference(
            "sigma_q (+ridge) is not positive definite; set lambda_reg > 0")
    w, Q = eigh(symmetrize(B))
    keep = w > max(w.max(), 0.0) * _SUPPORT_RTOL
    if not keep.any():
        raise SingularReference("sigma_q is identically zero")
    Qk = Q[:, keep]
    lam, Vr = _dense_gen_eig(symmetrize(Qk.T @ A @ Qk), np.diag(w[keep]))
    return _finalize_spectrum(lam, Qk @ Vr)


def _finalize_spectrum(lam: np.ndarray, V: np.ndarray) -> GeneralizedSpectrum:
    scale = max(1.0, float(np.max(np.abs(lam))) if lam.size else 1.0)
    if lam.size and lam.min() < -EIG_NEGATIVE_TOL * scale:
        raise DomainError(
            f"pencil produced eigenvalue {lam.min()}; moments are not valid "
            "second-moment matrices")
    lam = np.clip(lam, EIG_CLIP, None)
    order = np.argsort(lam)
    return GeneralizedSpectrum(lam[order], _fix_signs(V[:, order]))


def _spectrum_for(moments: MomentSet) -> GeneralizedSpectrum:
    policy = "project" if moments.lambda_reg == 0.0 else "raise"
    return generalized_eig(moments, on_singular=policy)


def spectral_value(moments: MomentSet, spec: DivergenceSpec,
                   spectrum: GeneralizedSpectrum | None = None) -> float:
    """The closed-form lower bound F for the given divergence."""
    spectrum = _spectrum_for(moments) if spectrum is None else spectrum
    d = spectrum.basis.T @ moments.delta
    return float(np.sum(eval_h(spec, spectrum.eigenvalues) * d * d))


def _loewner(lam: np.ndarray, vals: np.ndarray, derivs: np.ndarray) -> np.ndarray:
    """First divided differences, derivative on (near-)ties."""
    diff = lam[:, None] - lam[None, :]
    mag = np.maximum(1.0, np.maximum(np.abs(lam)[:, None], np.abs(lam)[None, :]))
    tie = np.abs(diff) < TIE_REL_TOL * mag
    quot = (vals[:, None] - vals[None, :]) / np.where(tie, 1.0, diff)
    return np.where(tie, (derivs[:, None] + derivs[None, :]) / 2.0, quot)


@dataclass(frozen=True)
class PotentialPair:
    """Closed-form potentials: v = phi'M phi + 2c'phi, w = phi'N phi - 2c'phi.

    The value identity tr[M sigma_p_reg] + tr[N sigma_q_reg] + 2 c'delta = F
    holds exactly; (v, w) are feasible for the variational form, i.e.
    w(x) <= -f*(v(x)) pointwise (vacuous where v leaves the conjugate
    domain).  ``feature_map`` is the effective map (already constant
    augmented when the moments were).
    """

    M: np.ndarray
    N: np.ndarray
    c: np.ndarray
    divergence: DivergenceSpec
    feature_map: FeatureMap | None = None

    def eval_features(self, phi) -> tuple[np.ndarray, np.ndarray]:
        phi = as_samples(phi, name="phi", dim=self.c.shape[0])
        quad_m = np.einsum("ni,ij,nj->n", phi, self.M, phi)
        quad_n = np.einsum("ni,ij,nj->n", phi, self.N, phi)
        lin = 2.0 * phi @ self.c
        return quad_m + lin, quad_n - lin

    def __call__(self, X) -> tuple[np.ndarray, np.ndarray]:
        if self.feature_map is None:
            raise DomainError("this PotentialPair has no feature map attached; "
                              "use eval_features on feature vectors")
        return self.eval_features(self.feature_map(X))


def potentials(moments: MomentSet, spec: DivergenceSpec,
               feature_map: FeatureMap | None = None,
               spectrum: GeneralizedSpectrum | None = None) -> PotentialPair:
    spectrum = _spectrum_for(moments) if spectrum is None else spectrum
    lam, V = spectrum.eigenvalues, spectrum.basis
    d = V.T @ moments.delta
    hv = np.atleast_1d(spec.h(lam))
    hp = np.atleast_1d(spec.h_prime(lam))
    gv = lam * hv
    gp = hv + lam * hp
    outer = np.outer(d, d)
    M = symmetrize(V @ (_loewner(lam, hv, hp) * outer) @ V.T)
    N = -symmetrize(V @ (_loewner(lam, gv, gp) * outer) @ V.T)
    c = V @ (hv * d)
    return PotentialPair(M, N, c, spec, feature_map)


def eval_potentials(pair: PotentialPair, X) -> tuple[np.ndarray, np.ndarray]:
    return pair(X)


def debias_correction(moments: MomentSet, spec: DivergenceSpec,
                      spectrum: GeneralizedSpectrum | None = None) -> float:
    """Second-order bias of the quadratic statistic under resampling.

    Equals 1/2 * integral of tr[C_hat M_hat(rho)^{-1}] dnu(rho) with
    C_hat the plug-in covariance of delta_hat, collapsed onto the
    eigenbasis: sum_i h(lambda_i) v_i' C_hat v_i.  Subtracting it from the
    plain value removes the O(1/n) term exactly in the quadratic part.
    """
    if moments.n_p < 2 or moments.n_q < 2:
        raise TooFewSamples("debiasing needs at least two samples on each side")
    spectrum = _spectrum_for(moments) if spectrum is None else spectrum
    C = ((moments.sigma_p - np.outer(moments.mu_p, moments.mu_p)) / (moments.n_p - 1)
         + (moments.sigma_q - np.outer(moments.mu_q, moments.mu_q)) / (moments.n_q - 1))
    quad = np.einsum("im,ij,jm->m", spectrum.basis, C, spectrum.basis)
    return float(np.sum(np.atleast_1d(spec.h(spectrum.eigenvalues)) * quad))


@dataclass(frozen=True)
class EstimateReport:
    value: float
    correction: float
    debiased_value: float
    divergence: str
    alpha: float | None
    lambda_reg: float
    spectrum_summary: dict
    n_p: int
    n_q: int

    def to_dict(self) -> dict:
        return {
            "divergence": self.divergence,
            "alpha": self.alpha,
            "value": self.value,
            "correction": self.correction,
            "debiased_value": self.debiased_value,
            "lambda_reg": self.lambda_reg,
            "spectrum": dict(self.spectrum_summary),
            "n_p": self.n_p,
            "n_q": self.n_q,
        }


def estimate_from_moments(moments: MomentSet, spec: DivergenceSpec,
                          debias: bool = False) -> EstimateReport:
    spectrum = _spectrum_for(moments)
    value = spectral_value(moments, spec, spectrum)
    correction = debias_correction(moments, spec, spectrum) if debias else 0.0
    lam = spectrum.eigenvalues
    summary = {
        "dim": int(moments.dim),
        "rank": int(lam.size),
        "min_eigenvalue": float(lam.min()) if lam.size else float("nan"),
        "max_eigenvalue": float(lam.max()) if lam.size else float("nan"),
    }
    return EstimateReport(value, correction, value - correction,
                          spec.name, spec.alpha, moments.lambda_reg, summary,
                          moments.n_p, moments.n_q)


def estimate(x_samples, y_samples, fmap: FeatureMap, spec: DivergenceSpec,
             lambda_reg: float = 0.0, constant_mode: str = "none",
             debias: bool = False) -> EstimateReport:
    """Sample pair -> divergence estimate, O(m^2 n + m^3)."""
    moments = compute_moments(fmap, x_samples, y_samples, lambda_reg, constant_mode)
    return estimate_from_moments(moments, spec, debias)


def fit_potentials(x_samples, y_samples, fmap: FeatureMap, spec: DivergenceSpec,
                   lambda_reg: float = 0.0,
                   constant_mode: str = "none") -> PotentialPair:
    """Sample pair -> closed-form potential pair ready to evaluate on points."""
    moments = compute_moments(fmap, x_samples, y_samples, lambda_reg, constant_mode)
    return potentials(moments, spec, effective_feature_map(fmap, constant_mode))


# --- independent integral-form routes (used as cross-checks) ---------------


def quadrature_value(moments: MomentSet, spec: DivergenceSpec,
                     nodes: int | None = None) -> float:
    """F recomputed as 1/2 * integral of delta' M(rho)^{-1} delta dnu(rho).

    Solves a linear system per quadrature node; shares no code with the
    eigendecomposition route.
    """
    A, B, delta = moments.sigma_p_reg, moments.sigma_q_reg, moments.delta

    def integrand(rho):
        rho = np.atleast_1d(rho)
        out = np.empty(rho.shape)
        for i, r in enumerate(rho):
            out[i] = 0.5 * delta @ np.linalg.solve(r * A + (1.0 - r) * B, delta)
        return out

    return spec.nu.integral(integrand, nodes)


def quadrature_debias(moments: MomentSet, spec: DivergenceSpec,
                      nodes: int | None = None) -> float:
    """Debias correction recomputed as 1/2 * integral tr[C M(rho)^{-1}] dnu."""
    if moments.n_p < 2 or moments.n_q < 2:
        raise TooFewSamples("debiasing needs at least two samples on each side")
    A, B = moments.sigma_p_reg, moments.sigma_q_reg
    C = ((moments.sigma_p - np.outer(moments.mu_p, moments.mu_p)) / (moments.n_p - 1)
         + (moments.sigma_q - np.outer(moments.mu_q, moments.mu_q)) / (moments.n_q - 1))

    def integrand(rho):
        rho = np.atleast_1d(rho)
        out = np.empty(rho.shape)
        for i, r in enumerate(rho):
            fac = cho_factor(r * A + (1.0 - r) * B)
            out[i] = 0.5 * float(np.trace(cho_solve(fac, C)))
        return out

    return spec.nu.integral(integrand, nodes)
