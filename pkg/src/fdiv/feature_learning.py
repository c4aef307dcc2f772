"""Learning feature reductions by maximizing the spectral lower bound.

The bound F(Gamma), as a function of the reduced moments, is convex and
1-homogeneous, so its tangent plane at the current reduction

    T(Gamma') = tr[M Gamma'^T Sp Gamma'] + tr[N Gamma'^T Sq Gamma']
                + 2 c^T Gamma'^T (mu_p - mu_q)

(with (M, N, c) the potential blocks at the anchor and Sp, Sq the
ridge-shifted full second moments) minorizes F everywhere and touches it
at the anchor.  Since M, N are negative semidefinite, each tangent is a
concave quadratic in Gamma and is maximized by one linear solve; iterating
gives a monotone ascent (minorize-maximize).  The ridge follows the
reduce-the-shifted-moments convention: the reduced problem sees
Gamma^T (Sigma + lambda I) Gamma, which makes F scale invariant in Gamma.

The stochastic variant keeps exponential moving averages of the reduced
moments, refreshes (M, N, c) periodically, and ascends the frozen
surrogate per paired sample.  The neural trainer applies the same
machinery to a one-hidden-layer ReLU map with weight decay on the hidden
units, alternating gradient steps on (W, b) with exact tangent solves for
the linear read-out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, eigh, solve_triangular
from scipy.sparse.linalg import LinearOperator, minres

from .divergences import DivergenceSpec
from .exceptions import DivergedObjective, IndefiniteTangent
from .features import FeatureMap, LinearReduction, NeuralOneLayer
from .moments import MomentSet, compute_moments, moments_from_features
from .spectral import potentials, spectral_value
from .validation import as_samples, symmetrize

_DIRECT_SOLVE_LIMIT = 4096


@dataclass(frozen=True)
class TangentBound:
    """Tangent data of F at an anchor reduction: linear in the moments."""

    M: np.ndarray
    N: np.ndarray
    c: np.ndarray
    anchor_value: float

    def value(self, sp_red: np.ndarray, sq_red: np.ndarray, delta_red: np.ndarray) -> float:
        return float(np.sum(self.M * sp_red) + np.sum(self.N * sq_red)
                     + 2.0 * self.c @ delta_red)


def reduced_moment_set(full: MomentSet, gamma: np.ndarray) -> MomentSet:
    """Moments of the reduced map gamma^T phi, ridge inherited from ``full``."""
    g = np.asarray(gamma, dtype=float)
    return MomentSet(
        mu_p=g.T @ full.mu_p, mu_q=g.T @ full.mu_q,
        sigma_p=symmetrize(g.T @ full.sigma_p_reg @ g),
        sigma_q=symmetrize(g.T @ full.sigma_q_reg @ g),
        n_p=full.n_p, n_q=full.n_q, lambda_reg=0.0)


def tangent_bound(full: MomentSet, gamma: np.ndarray, spec: DivergenceSpec) -> TangentBound:
    red = reduced_moment_set(full, gamma)
    pp = potentials(red, spec)
    return TangentBound(pp.M, pp.N, pp.c, spectral_value(red, spec))


def _whiten(full: MomentSet, gamma: np.ndarray) -> np.ndarray:
    """Right-multiply gamma so that gamma^T sigma_q_reg gamma = I.

    F is invariant under this recombination.  Rank-deficient gammas are
    completed with reference-moment eigendirections so the column count
    is preserved (extra directions can only increase F).
    """
    B = full.sigma_q_reg
    r = gamma.shape[1]
    G = symmetrize(gamma.T @ B @ gamma)
    try:
        L = cholesky(G + 1e-14 * np.eye(r) * max(1.0, np.trace(G)), lower=True)
        return solve_triangular(L, gamma.T, lower=True).T
    except np.linalg.LinAlgError:
        pass
    w, Q = eigh(G)
    keep = w > w.max() * 1e-10
    cols = [gamma @ Q[:, keep] / np.sqrt(w[keep])]
    need = r - int(keep.sum())
    if need > 0:
        _, vecs = eigh(B)
        cand = vecs[:, ::-1]  # dominant reference directions first
        basis = np.concatenate(cols, axis=1)
        for j in range(cand.shape[1]):
            if need == 0:
                break
            v = cand[:, j]
            v = v - basis @ (basis.T @ B @ v)
            norm = float(v @ B @ v)
            if norm > 1e-12:
                v = v / np.sqrt(norm)
                basis = np.concatenate([basis, v[:, None]], axis=1)
                need -= 1
        cols = [basis]
    return np.concatenate(cols, axis=1)[:, :r]


def mm_linear_step(full: MomentSet, gamma: np.ndarray, spec: DivergenceSpec
                   ) -> tuple[np.ndarray, float, TangentBound]:
    """One minorize-maximize update of a linear reduction.

    Solves Sp G M + Sq G N = -delta c^T for the new reduction G (the
    stationarity condition of the concave tangent), then rewhitens.
    Returns (new gamma, F at new gamma, tangent at the anchor).  The new
    value never drops below the anchor value beyond roundoff.
    """
    tb = tangent_bound(full, gamma, spec)
    Sp, Sq, delta = full.sigma_p_reg, full.sigma_q_reg, full.delta
    m, r = gamma.shape
    rhs = -np.outer(delta, tb.c)
    if float(np.linalg.norm(rhs)) == 0.0:
        return gamma, tb.anchor_value, tb  # measures agree on the features
    if m * r <= _DIRECT_SOLVE_LIMIT:
        H = np.kron(Sp, tb.M) + np.kron(Sq, tb.N)
        sol, *_ = np.linalg.lstsq(H, rhs.ravel(), rcond=None)
    else:
        def matvec(v):
            G = v.reshape(m, r)
            return (Sp @ G @ tb.M + Sq @ G @ tb.N).ravel()

        op = LinearOperator((m * r, m * r), matvec=matvec)
        sol, _ = minres(op, rhs.ravel(), rtol=1e-10, maxiter=10 * m * r)
    gamma_new = sol.reshape(m, r)
    red_new = reduced_moment_set(full, gamma_new)
    if tb.value(red_new.sigma_p, red_new.sigma_q, red_new.delta) < tb.anchor_value - 1e-8 * max(
            1.0, abs(tb.anchor_value)):
        raise IndefiniteTangent("tangent maximization failed to improve; "
                                "moments are numerically inconsistent")
    gamma_new = _whiten(full, gamma_new)
    value = spectral_value(reduced_moment_set(full, gamma_new), spec)
    return gamma_new, value, tb


@dataclass
class LinearLearnResult:
    gamma: np.ndarray
    value: float
    trace: list[float]
    feature_map: FeatureMap | None = None

    def reduction(self) -> LinearReduction:
        return LinearReduction(self.feature_map, self.gamma)


def learn_linear(x_samples, y_samples, fmap: FeatureMap, spec: DivergenceSpec,
                 r: int, lambda_reg: float = 0.0, n_steps: int = 100,
                 tol: float = 1e-10, seed: int = 0,
                 full_moments: MomentSet | None = None) -> LinearLearnResult:
    """Batch minorize-maximize driver; stops on relative objective stall."""
    if full_moments is None:
        full_moments = compute_moments(fmap, x_samples, y_samples, lambda_reg)
    rng = np.random.default_rng(seed)
    gamma = _whiten(full_moments, rng.standard_normal((full_moments.dim, r)))
    trace = [spectral_value(reduced_moment_set(full_moments, gamma), spec)]
    for _ in range(n_steps):
        gamma, value, _ = mm_linear_step(full_moments, gamma, spec)
        trace.append(value)
        if value - trace[-2] <= tol * max(1.0, abs(value)):
            break
    return LinearLearnResult(gamma, trace[-1], trace, fmap)


@dataclass
class LearnerState:
    """Mutable state of the stochastic learner (reduced-space EMA moments)."""

    gamma: np.ndarray
    mu_p: np.ndarray
    mu_q: np.ndarray
    sigma_p: np.ndarray
    sigma_q: np.ndarray
    step_size: float
    ema_rate: float
    refresh_every: int
    lambda_reg: float
    iteration: int = 0
    tangent: TangentBound | None = None
    trace: list[float] = field(default_factory=list)

    @staticmethod
    def initialize(dim: int, r: int, step_size: float, ema_rate: float = 0.05,
                   refresh_every: int = 25, lambda_reg: float = 0.0,
                   seed: int = 0) -> "LearnerState":
        rng = np.random.default_rng(seed)
        gamma = rng.standard_normal((dim, r)) / np.sqrt(dim)
        return LearnerState(gamma, np.zeros(r), np.zeros(r), np.eye(r), np.eye(r),
                            step_size, ema_rate, refresh_every, lambda_reg)

    def ema_moments(self) -> MomentSet:
        return MomentSet(self.mu_p.copy(), self.mu_q.copy(),
                         symmetrize(self.sigma_p), symmetrize(self.sigma_q),
                         n_p=2, n_q=2, lambda_reg=self.lambda_reg)


def sga_epoch(state: LearnerState, x_samples, y_samples, fmap: FeatureMap,
              spec: DivergenceSpec, rng: np.random.Generator) -> LearnerState:
    """One pass of paired stochastic ascent on the frozen tangent surrogate.

    Per paired draw (x, y): update the EMA reduced moments, periodically
    refresh the tangent from them, and take one gradient step of
    psi_x' M psi_x + psi_y' N psi_y + 2 c'(psi_x - psi_y) + ridge terms
    with respect to gamma.  Appends the exact full-batch objective to the
    trace at the end of the epoch.
    """
    X = as_samples(x_samples, dim=fmap.input_dim)
    Y = as_samples(y_samples, dim=fmap.input_dim)
    n = min(X.shape[0], Y.shape[0])
    order_x = rng.permutation(X.shape[0])[:n]
    order_y = rng.permutation(Y.shape[0])[:n]
    phi_x_all, phi_y_all = fmap(X[order_x]), fmap(Y[order_y])
    lam = state.lambda_reg
    for i in range(n):
        phi_x, phi_y = phi_x_all[i], phi_y_all[i]
        psi_x, psi_y = state.gamma.T @ phi_x, state.gamma.T @ phi_y
        g = state.ema_rate
        state.mu_p += g * (psi_x - state.mu_p)
        state.mu_q += g * (psi_y - state.mu_q)
        state.sigma_p += g * (np.outer(psi_x, psi_x) - state.sigma_p)
        state.sigma_q += g * (np.outer(psi_y, psi_y) - state.sigma_q)
        if state.tangent is None or state.iteration % state.refresh_every == 0:
            state.tangent = TangentBound(
                *_tangent_from_reduced(state.ema_moments(), spec))
        tb = state.tangent
        grad = 2.0 * (np.outer(phi_x, tb.M @ psi_x + tb.c)
                      + np.outer(phi_y, tb.N @ psi_y - tb.c)
                      + lam * state.gamma @ (tb.M + tb.N))
        if not np.all(np.isfinite(grad)):
            state.iteration += 1
            continue  # skip the step, keep the pass going
        state.gamma = state.gamma + state.step_size * grad
        state.iteration += 1
    state.trace.append(exact_objective(x_samples, y_samples, fmap, spec,
                                       state.gamma, lam))
    if not np.isfinite(state.trace[-1]):
        raise DivergedObjective("stochastic learner produced a non-finite objective")
    return state


def _tangent_from_reduced(red: MomentSet, spec: DivergenceSpec):
    pp = potentials(red, spec)
    return pp.M, pp.N, pp.c, spectral_value(red, spec)


def exact_objective(x_samples, y_samples, fmap: FeatureMap, spec: DivergenceSpec,
                    gamma: np.ndarray, lambda_reg: float) -> float:
    """Full-batch F of the reduced map with the +lambda I reduced ridge."""
    phi_p = fmap(as_samples(x_samples, dim=fmap.input_dim)) @ gamma
    phi_q = fmap(as_samples(y_samples, dim=fmap.input_dim)) @ gamma
    red = moments_from_features(phi_p, phi_q, lambda_reg)
    return spectral_value(red, spec)


# --- one-hidden-layer trainer ----------------------------------------------


@dataclass
class NeuralTrainResult:
    feature_map: NeuralOneLayer
    value: float
    trace: list[float]
    state: dict | None = None


def _hidden_moments(H_p: np.ndarray, H_q: np.ndarray, lam: float) -> MomentSet:
    return moments_from_features(H_p, H_q, lam)


def _moments_as_dict(mom: MomentSet) -> dict:
    return {"mu_p": mom.mu_p.tolist(), "mu_q": mom.mu_q.tolist(),
            "sigma_p": mom.sigma_p.tolist(), "sigma_q": mom.sigma_q.tolist(),
            "n_p": mom.n_p, "n_q": mom.n_q, "lambda_reg": mom.lambda_reg}


def train_neural(x_samples, y_samples, spec: DivergenceSpec, *,
                 units: int = 50, r: int = 4, lambda_reg: float = 1e-4,
                 weight_decay: float | None = None, step_size: float = 0.05,
                 epochs: int = 40, batch: int = 32, refresh_batches: int = 8,
                 moment_epochs: int = 2, seed: int = 0,
                 resume: dict | None = None) -> NeuralTrainResult:
    """Fit a reduced one-hidden-layer ReLU map by ascending the bound.

    Alternates stochastic tangent-surrogate steps on the hidden weights
    with exact minorize-maximize solves for the read-out, re-evaluating
    full-batch moments every ``moment_epochs`` passes and halving the step
    size when the exact objective plateaus.  Weight decay applies to the
    hidden units only; the read-out is controlled by the ridge through the
    reduce-the-shifted-moments convention (scale invariant).

    ``resume`` accepts the ``state`` dict of a previous result and continues
    training from it for ``epochs`` further passes.
    """
    X = as_samples(x_samples)
    Y = as_samples(y_samples)
    d = X.shape[1]
    lam = float(lambda_reg)
    decay = lam if weight_decay is None else float(weight_decay)
    rng = np.random.default_rng(seed)
    if resume is None:
        W = rng.standard_normal((units, d))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        b = rng.uniform(-1.0, 1.0, units)
        Lam = rng.standard_normal((units, r)) / np.sqrt(units)
    else:
        W = np.asarray(resume["weights"], dtype=float).reshape(units, d)
        b = np.asarray(resume["biases"], dtype=float).reshape(units)
        Lam = np.asarray(resume["reduction"], dtype=float).reshape(units, r)
        rng.bit_generator.state = resume["rng_state"]

    def hidden(Z, W_, b_):
        return np.maximum(Z @ W_.T + b_, 0.0)

    def full_moments(W_, b_):
        return _hidden_moments(hidden(X, W_, b_), hidden(Y, W_, b_), lam)

    def penalized(value, W_, b_):
        return value - 0.5 * decay * (float(np.sum(W_ * W_)) + float(b_ @ b_))

    if resume is None:
        moments = full_moments(W, b)
        Lam = _whiten(moments, Lam)
        value = spectral_value(reduced_moment_set(moments, Lam), spec)
        trace = [penalized(value, W, b)]
        best = (trace[0], W.copy(), b.copy(), Lam.copy(), value)
        step = step_size
        stall = 0
        epoch0 = 0
    else:
        trace = [float(t) for t in resume["trace"]]
        bs = resume["best"]
        best = (float(bs["penalized"]),
                np.asarray(bs["weights"], dtype=float).reshape(units, d),
                np.asarray(bs["biases"], dtype=float).reshape(units),
                np.asarray(bs["reduction"], dtype=float).reshape(units, r),
                float(bs["value"]))
        step = float(resume["step"])
        stall = int(resume["stall"])
        epoch0 = int(resume["epoch"])
    n = min(X.shape[0], Y.shape[0])
    for epoch in range(epoch0, epoch0 + epochs):
        if epoch % moment_epochs == 0:
            moments = full_moments(W, b)
            # exact read-out refresh: one tangent solve on the hidden moments
            Lam, _, _ = mm_linear_step(moments, _whiten(moments, Lam), spec)
        tb = None
        order_x = rng.permutation(X.shape[0])[:n]
        order_y = rng.permutation(Y.shape[0])[:n]
        for start in range(0, n, batch):
            if tb is None or (start // batch) % refresh_batches == 0:
                moments = full_moments(W, b)
                red = reduced_moment_set(moments, Lam)
                pp = potentials(red, spec)
                tb = TangentBound(pp.M, pp.N, pp.c, 0.0)
            xb = X[order_x[start:start + batch]]
            yb = Y[order_y[start:start + batch]]
            Zx, Zy = xb @ W.T + b, yb @ W.T + b
            Hx, Hy = np.maximum(Zx, 0.0), np.maximum(Zy, 0.0)
            Px, Py = Hx @ Lam, Hy @ Lam
            dPx = 2.0 * (Px @ tb.M + tb.c)      # (batch, r)
            dPy = 2.0 * (Py @ tb.N - tb.c)
            gLam = (Hx.T @ dPx + Hy.T @ dPy) / xb.shape[0] \
                + 2.0 * lam * Lam @ (tb.M + tb.N)
            dHx = (dPx @ Lam.T) * (Zx > 0)
            dHy = (dPy @ Lam.T) * (Zy > 0)
            gW = (dHx.T @ xb + dHy.T @ yb) / xb.shape[0] - decay * W
            gb = (dHx.sum(axis=0) + dHy.sum(axis=0)) / xb.shape[0] - decay * b
            if not (np.all(np.isfinite(gW)) and np.all(np.isfinite(gb))
                    and np.all(np.isfinite(gLam))):
                continue
            W = W + step * gW
            b = b + step * gb
            Lam = Lam + step * gLam
        moments = full_moments(W, b)
        Lam = _whiten(moments, Lam)
        value = spectral_value(reduced_moment_set(moments, Lam), spec)
        trace.append(penalized(value, W, b))
        if trace[-1] > best[0]:
            best = (trace[-1], W.copy(), b.copy(), Lam.copy(), value)
        if trace[-1] <= trace[-2] + 1e-4 * max(1.0, abs(trace[-2])):
            stall += 1
            if stall >= 2:
                step *= 0.5
                stall = 0
        else:
            stall = 0
    state = {
        "weights": W.tolist(),
        "biases": b.tolist(),
        "reduction": Lam.tolist(),
        "rng_state": rng.bit_generator.state,
        "trace": [float(t) for t in trace],
        "best": {"penalized": best[0], "weights": best[1].tolist(),
                 "biases": best[2].tolist(), "reduction": best[3].tolist(),
                 "value": best[4]},
        "step": step,
        "stall": stall,
        "epoch": epoch0 + epochs,
        "moments": _moments_as_dict(reduced_moment_set(full_moments(W, b), Lam)),
    }
    _, W, b, Lam, value = best
    return NeuralTrainResult(NeuralOneLayer(W, b, Lam), value, trace, state)


# --- alternating reduction for mutual information ---------------------------


@dataclass
class MiLearnResult:
    gamma1: np.ndarray
    gamma2: np.ndarray
    value: float
    trace: list[float]


def mi_feature_learning(pairs, map1: FeatureMap, map2: FeatureMap,
                        spec: DivergenceSpec, r1: int, r2: int,
                        lambda_reg: float = 0.0, rounds: int = 30,
                        tol: float = 1e-10, seed: int = 0,
                        d1: int | None = None, d2: int | None = None,
                        init: tuple | None = None) -> MiLearnResult:
    """Alternating tangent maximization of reduced product features.

    The reduced map is (gamma2^T phi2) (x) (gamma1^T phi1).  With one
    factor frozen the tangent is a concave quadratic in the other, solved
    exactly; each factor is rewhitened so the product-of-marginals second
    moment of the reduced features is the identity.  The objective is
    monotone over rounds up to roundoff.  ``init`` replaces the random
    starting pair (gamma1, gamma2), e.g. to continue a previous run.
    """
    from .features import KroneckerProduct

    prod = KroneckerProduct(map1, map2, d1, d2)
    X = as_samples(pairs, dim=prod.input_dim)
    x1, x2 = prod.split(X)
    P1, P2 = map1(x1), map2(x2)
    n, m1 = P1.shape
    m2 = P2.shape[1]
    joint = np.einsum("nj,ni->nji", P2, P1).reshape(n, -1)
    T = (joint.T @ joint / n).reshape(m2, m1, m2, m1)
    mu1, mu2 = P1.mean(axis=0), P2.mean(axis=0)
    S1 = symmetrize(P1.T @ P1 / n)
    S2 = symmetrize(P2.T @ P2 / n)
    D = joint.mean(axis=0).reshape(m2, m1) - np.outer(mu2, mu1)
    lam = float(lambda_reg)

    rng = np.random.default_rng(seed)
    if init is None:
        g1 = _whiten_factor(rng.standard_normal((m1, r1)), S1)
        g2 = _whiten_factor(rng.standard_normal((m2, r2)), S2)
    else:
        g1 = np.asarray(init[0], dtype=float).reshape(m1, r1)
        g2 = np.asarray(init[1], dtype=float).reshape(m2, r2)

    def reduced(g1_, g2_) -> MomentSet:
        sp = np.einsum("aibj,aA,ik,bB,jl->AkBl", T, g2_, g1_, g2_, g1_,
                       optimize=True).reshape(r2 * r1, r2 * r1)
        sp = symmetrize(sp) + lam * np.kron(g2_.T @ g2_, g1_.T @ g1_)
        sq = np.kron(g2_.T @ S2 @ g2_, g1_.T @ S1 @ g1_) \
            + lam * np.kron(g2_.T @ g2_, g1_.T @ g1_)
        mu_p = np.einsum("ai,aA,ik->Ak", D + np.outer(mu2, mu1), g2_, g1_,
                         optimize=True).ravel()
        mu_q = np.kron(g2_.T @ mu2, g1_.T @ mu1)
        return MomentSet(mu_p, mu_q, sp, symmetrize(sq), n, n, 0.0)

    value = spectral_value(reduced(g1, g2), spec)
    trace = [value]
    for _ in range(rounds):
        red = reduced(g1, g2)
        pp = potentials(red, spec)
        if float(np.linalg.norm(pp.c)) == 0.0:
            break  # measures agree on the reduced features; F stays 0
        M4 = pp.M.reshape(r2, r1, r2, r1)
        N4 = pp.N.reshape(r2, r1, r2, r1)
        c2d = pp.c.reshape(r2, r1)
        g1 = _solve_factor(T, S1, S2, D, g2, M4, N4, c2d, lam, first=True)
        g2 = _solve_factor(T, S1, S2, D, g1, M4, N4, c2d, lam, first=False)
        # rewhiten only after both inner solves: F is invariant under the
        # recombination but the frozen tangent is not
        g1 = _whiten_factor(g1, S1)
        g2 = _whiten_factor(g2, S2)
        value = spectral_value(reduced(g1, g2), spec)
        trace.append(value)
        if trace[-1] - trace[-2] <= tol * max(1.0, abs(value)):
            break
    return MiLearnResult(g1, g2, trace[-1], trace)


def _whiten_factor(g: np.ndarray, S: np.ndarray) -> np.ndarray:
    G = symmetrize(g.T @ S @ g)
    L = cholesky(G + 1e-12 * np.eye(g.shape[1]) * max(1.0, float(np.trace(G))),
                 lower=True)
    return solve_triangular(L, g.T, lower=True).T


def _solve_factor(T, S1, S2, D, g_other, M4, N4, c2d, lam, *,
                  first: bool) -> np.ndarray:
    """Maximize the tangent over one factor, the other frozen.

    Assembles the quadratic form in vec(g): the joint-moment term through
    the contracted tensor, the factorized marginal term, and the ridge,
    then solves the stationarity system by least squares.  Row-major vec
    throughout, so a kernel S (x) B acts as g -> S g B.
    """
    if first:
        # unknown factor carries the first-argument indices (i, j) of T
        T2 = np.einsum("aibj,aA,bB->AiBj", T, g_other, g_other, optimize=True)
        Q = np.einsum("AiBj,AkBl->ikjl", T2, M4, optimize=True)
        A_other = g_other.T @ S2 @ g_other
        G_other = g_other.T @ g_other
        B_n = np.einsum("AkBl,AB->kl", N4, A_other, optimize=True)
        B_rp = lam * np.einsum("AkBl,AB->kl", M4, G_other, optimize=True)
        B_rn = lam * np.einsum("AkBl,AB->kl", N4, G_other, optimize=True)
        S_own = S1
        lin = 2.0 * (g_other.T @ D).T @ c2d       # (m1, r1)
    else:
        T2 = np.einsum("aibj,ik,jl->akbl", T, g_other, g_other, optimize=True)
        Q = np.einsum("akbl,AkBl->aAbB", T2, M4, optimize=True)
        A_other = g_other.T @ S1 @ g_other
        G_other = g_other.T @ g_other
        B_n = np.einsum("AkBl,kl->AB", N4, A_other, optimize=True)
        B_rp = lam * np.einsum("AkBl,kl->AB", M4, G_other, optimize=True)
        B_rn = lam * np.einsum("AkBl,kl->AB", N4, G_other, optimize=True)
        S_own = S2
        lin = 2.0 * (D @ g_other) @ c2d.T         # (m2, r2)
    m, r = lin.shape
    H = Q.reshape(m * r, m * r)
    H = H + np.kron(S_own, symmetrize(B_n)) + np.kron(np.eye(m),
                                                      symmetrize(B_rp + B_rn))
    H = 0.5 * (H + H.T)
    sol, *_ = np.linalg.lstsq(2.0 * H, -lin.ravel(), rcond=None)
    return sol.reshape(m, r)
