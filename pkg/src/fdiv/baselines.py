"""Reference estimators the spectral method is compared against.

* Donsker-Varadhan style variational KL with a linear potential in the
  features, optionally lifted to all quadratics (damped Newton; concave).
* Newton softmax regression for the conditional MI objective.
* Gaussian kernel density plug-in for KL.
* The Pearson divergence in closed form by a direct ridge solve - kept
  free of the eigendecomposition code on purpose, as an independent
  cross-check of the spectral path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp

from .exceptions import DomainError
from .features import FeatureMap
from .moments import effective_feature_map
from .spectral import EstimateReport
from .validation import as_labels, as_samples

ARMIJO = 1e-4
MAX_BACKTRACK = 50


def quadratic_lift(phi: np.ndarray) -> np.ndarray:
    """Append the upper-triangular products phi_i phi_j (i <= j)."""
    n, m = phi.shape
    iu, ju = np.triu_indices(m)
    return np.concatenate([phi, phi[:, iu] * phi[:, ju]], axis=1)


@dataclass
class VariationalSolution:
    theta: np.ndarray
    objective: float
    n_iter: int
    converged: bool
    lambda_reg: float
    quadratic: bool
    feature_map: FeatureMap | None = None

    def _features(self, X) -> np.ndarray:
        phi = self.feature_map(X) if self.feature_map is not None else as_samples(X)
        return quadratic_lift(phi) if self.quadratic else phi

    def potential(self, X) -> np.ndarray:
        return self._features(X) @ self.theta

    def evaluate(self, x_samples, y_samples) -> float:
        """Unpenalized objective on fresh data: mean_p v - log mean_q e^v."""
        vp = self.potential(x_samples)
        vq = self.potential(y_samples)
        return float(vp.mean() - (logsumexp(vq) - np.log(vq.shape[0])))


def _variational_newton(phi_p: np.ndarray, phi_q: np.ndarray, lambda_reg: float,
                        max_iter: int, grad_tol: float):
    n_q, m = phi_q.shape
    theta = np.zeros(m)
    mean_p = phi_p.mean(axis=0)

    def objective(th):
        vq = phi_q @ th
        return float(mean_p @ th - (logsumexp(vq) - np.log(n_q))
                     - 0.5 * lambda_reg * th @ th)

    obj = objective(theta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        vq = phi_q @ theta
        w = np.exp(vq - logsumexp(vq))
        mean_q = phi_q.T @ w
        grad = mean_p - mean_q - lambda_reg * theta
        if np.linalg.norm(grad) <= grad_tol:
            converged = True
            break
        H = (phi_q * w[:, None]).T @ phi_q - np.outer(mean_q, mean_q)
        H[np.diag_indices_from(H)] += lambda_reg + 1e-12
        step = np.linalg.solve(H, grad)
        t = 1.0
        ok = False
        for _ in range(MAX_BACKTRACK):
            cand = theta + t * step
            cand_obj = objective(cand)
            if np.isfinite(cand_obj) and cand_obj >= obj + ARMIJO * t * grad @ step:
                theta, obj, ok = cand, cand_obj, True
                break
            t /= 2.0
        if not ok:
            break  # stalled line search: return best iterate, flag not converged
    return theta, obj, it, converged


def variational_kl(x_samples, y_samples, fmap: FeatureMap,
                   lambda_reg: float = 1e-8, quadratic: bool = False,
                   max_iter: int = 100, grad_tol: float = 1e-9) -> VariationalSolution:
    """Maximize mean_p v - log mean_q e^v - lam/2 |theta|^2 over v = theta'phi.

    With ``quadratic`` the potential ranges over all quadratics in the
    features, which contains every spectral potential pair's v.
    """
    X = as_samples(x_samples, dim=fmap.input_dim)
    Y = as_samples(y_samples, dim=fmap.input_dim)
    phi_p, phi_q = fmap(X), fmap(Y)
    if quadratic:
        phi_p, phi_q = quadratic_lift(phi_p), quadratic_lift(phi_q)
    theta, obj, it, conv = _variational_newton(phi_p, phi_q, lambda_reg,
                                               max_iter, grad_tol)
    return VariationalSolution(theta, obj, it, conv, lambda_reg, quadratic, fmap)


@dataclass
class NewtonSoftmaxSolution:
    theta: np.ndarray         # (k, m)
    priors: np.ndarray
    objective: float
    n_iter: int
    converged: bool
    lambda_reg: float
    feature_map: FeatureMap | None = None

    def score_all(self, X) -> np.ndarray:
        phi = self.feature_map(X) if self.feature_map is not None else as_samples(X)
        return phi @ self.theta.T

    def predict(self, X) -> np.ndarray:
        with np.errstate(divide="ignore"):
            logp = np.log(self.priors)
        return np.argmax(self.score_all(X) + logp, axis=1) + 1

    def evaluate(self, X, labels) -> float:
        from .mutual_info import variational_mi_objective

        y = as_labels(labels, k=self.theta.shape[0])
        return variational_mi_objective(self.score_all(X), y, self.priors)


def softmax_newton(x_samples, labels, fmap: FeatureMap, k: int,
                   lambda_reg: float = 1e-8, max_iter: int = 100,
                   grad_tol: float = 1e-9) -> NewtonSoftmaxSolution:
    """Softmax regression on the MI variational objective with class priors.

    J(theta) = mean_i [ theta_{y_i}'phi_i - log sum_j pi_j e^{theta_j'phi_i} ]
               - lam/2 |theta|_F^2,  maximized by damped Newton.
    """
    X = as_samples(x_samples, dim=fmap.input_dim)
    y = as_labels(labels, k=k)
    phi = fmap(X)
    n, m = phi.shape
    priors = np.bincount(y - 1, minlength=k) / n
    present = priors > 0
    with np.errstate(divide="ignore"):
        log_priors = np.log(priors)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y - 1] = 1.0
    theta = np.zeros((k, m))

    def parts(th):
        scores = phi @ th.T + log_priors  # -inf columns for empty classes
        lse = logsumexp(scores, axis=1)
        obj = float(np.mean(np.sum(onehot * (phi @ th.T), axis=1) - lse)
                    - 0.5 * lambda_reg * np.sum(th * th))
        s = np.exp(scores - lse[:, None])
        return obj, s

    obj, s = parts(theta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = (onehot - s).T @ phi / n - lambda_reg * theta
        grad[~present] = 0.0
        gflat = grad.ravel()
        if np.linalg.norm(gflat) <= grad_tol:
            converged = True
            break
        H = np.zeros((k * m, k * m))
        for a in range(k):
            if not present[a]:
                H[a * m:(a + 1) * m, a * m:(a + 1) * m] = np.eye(m)
                continue
            for b in range(a, k):
                if not present[b]:
                    continue
                w = s[:, a] * ((a == b) - s[:, b])
                block = (phi * w[:, None]).T @ phi / n
                H[a * m:(a + 1) * m, b * m:(b + 1) * m] = block
                if b != a:
                    H[b * m:(b + 1) * m, a * m:(a + 1) * m] = block
        H[np.diag_indices_from(H)] += lambda_reg + 1e-12
        step = np.linalg.solve(H, gflat).reshape(k, m)
        t = 1.0
        ok = False
        for _ in range(MAX_BACKTRACK):
            cand = theta + t * step
            cand_obj, cand_s = parts(cand)
            if np.isfinite(cand_obj) and cand_obj >= obj + ARMIJO * t * gflat @ step.ravel():
                theta, obj, s, ok = cand, cand_obj, cand_s, True
                break
            t /= 2.0
        if not ok:
            break
    return NewtonSoftmaxSolution(theta, priors, obj, it, converged,
                                 lambda_reg, fmap)


def kde_log_density(train: np.ndarray, points: np.ndarray, bandwidth: float) -> np.ndarray:
    """Log density of an isotropic Gaussian KDE at the given points."""
    n, d = train.shape
    sq = (np.sum(points**2, axis=1)[:, None] - 2.0 * points @ train.T
          + np.sum(train**2, axis=1)[None, :])
    log_kernels = -sq / (2.0 * bandwidth**2)
    norm = d / 2.0 * np.log(2.0 * np.pi * bandwidth**2)
    return logsumexp(log_kernels, axis=1) - np.log(n) - norm


def kde_plugin(x_samples, y_samples, bandwidth: float,
               eval_points=None) -> float:
    """Plug-in KL: average of log(p_hat/q_hat) over (held-out) p points."""
    if bandwidth <= 0:
        raise DomainError("bandwidth must be positive")
    X = as_samples(x_samples)
    Y = as_samples(y_samples)
    pts = X if eval_points is None else as_samples(eval_points, dim=X.shape[1])
    return float(np.mean(kde_log_density(X, pts, bandwidth)
                         - kde_log_density(Y, pts, bandwidth)))


@dataclass
class PearsonSolution:
    """Direct ridge solution of the Pearson problem: v(x) = coef'phi(x).

    value = 1/2 delta'(sigma_q + ridge)^{-1} delta; 1 + v estimates dp/dq.
    """

    coef: np.ndarray
    value: float
    lambda_reg: float
    feature_map: FeatureMap | None = None

    def potential(self, X) -> np.ndarray:
        phi = self.feature_map(X) if self.feature_map is not None else as_samples(X)
        return phi @ self.coef

    def ratio(self, X, floor: float = 0.0) -> np.ndarray:
        return np.maximum(1.0 + self.potential(X), floor)


def pearson_closed_form(x_samples, y_samples, fmap: FeatureMap,
                        lambda_reg: float = 0.0,
                        constant_mode: str = "none") -> PearsonSolution:
    """One linear solve; shares no spectral code (cross-check route)."""
    emap = effective_feature_map(fmap, constant_mode)
    X = as_samples(x_samples, dim=emap.input_dim)
    Y = as_samples(y_samples, dim=emap.input_dim)
    phi_p, phi_q = emap(X), emap(Y)
    delta = phi_p.mean(axis=0) - phi_q.mean(axis=0)
    sq = phi_q.T @ phi_q / phi_q.shape[0]
    shift = np.full(sq.shape[0], lambda_reg)
    if constant_mode == "augmented_unpenalized":
        shift[-1] = 0.0
    sq[np.diag_indices_from(sq)] += shift
    coef = cho_solve(cho_factor((sq + sq.T) / 2.0), delta)
    return PearsonSolution(coef, float(0.5 * delta @ coef), lambda_reg, emap)


def pearson_report(sol: PearsonSolution, n_p: int, n_q: int) -> EstimateReport:
    summary = {"dim": int(sol.coef.shape[0]), "route": "direct-solve"}
    return EstimateReport(sol.value, 0.0, sol.value, "pearson", 2.0,
                          sol.lambda_reg, summary, n_p, n_q)
