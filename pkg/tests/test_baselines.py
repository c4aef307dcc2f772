"""Baseline estimators and their cross-checks against the spectral route."""

import math

import numpy as np
import pytest
from scipy.special import logsumexp

from fdiv import (
    TrigBasis,
    estimate,
    kde_log_density,
    kde_plugin,
    make_divergence,
    pearson_closed_form,
    pearson_report,
    quadratic_lift,
    softmax_newton,
    variational_kl,
)
from fdiv.exceptions import DomainError
from fdiv.features import ExplicitBasis

KL = make_divergence("kl")
PEARSON = make_divergence("pearson")


def _coords(d=1):
    # raw-coordinate feature map for tests on unbounded data
    return ExplicitBasis([(lambda x, i=i: x[:, i]) for i in range(d)], d)


def test_quadratic_lift_layout():
    phi = np.array([[1.0, 2.0], [3.0, 4.0]])
    lifted = quadratic_lift(phi)
    assert lifted.shape == (2, 5)
    assert np.array_equal(lifted[0], [1.0, 2.0, 1.0, 2.0, 4.0])
    assert np.array_equal(lifted[1], [3.0, 4.0, 9.0, 12.0, 16.0])


def test_variational_identical_samples_gives_zero():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200, 1))
    sol = variational_kl(x, x.copy(), _coords(), lambda_reg=1e-8)
    assert sol.converged and sol.n_iter == 1
    assert abs(sol.objective) < 1e-12
    assert np.allclose(sol.theta, 0.0)


def test_variational_recovers_gaussian_shift_kl():
    rng = np.random.default_rng(1)
    mu = 0.7
    x = rng.standard_normal((20000, 1)) + mu
    y = rng.standard_normal((20000, 1))
    sol = variational_kl(x, y, _coords(), lambda_reg=1e-6, quadratic=True)
    assert sol.converged
    true_kl = mu * mu / 2.0
    assert abs(sol.objective - true_kl) < 0.05
    fresh_x = rng.standard_normal((20000, 1)) + mu
    fresh_y = rng.standard_normal((20000, 1))
    assert abs(sol.evaluate(fresh_x, fresh_y) - true_kl) < 0.05


def test_variational_first_order_optimality():
    rng = np.random.default_rng(2)
    x = rng.uniform(size=(500, 1)) ** 1.5
    y = rng.uniform(size=(500, 1))
    lam = 1e-4
    sol = variational_kl(x, y, TrigBasis(3), lambda_reg=lam, grad_tol=1e-10)
    assert sol.converged
    phi_p, phi_q = sol._features(x), sol._features(y)
    vq = phi_q @ sol.theta
    w = np.exp(vq - logsumexp(vq))
    grad = phi_p.mean(axis=0) - phi_q.T @ w - lam * sol.theta
    assert np.linalg.norm(grad) <= 1e-9


def test_linear_never_beats_quadratic_lift():
    rng = np.random.default_rng(3)
    for seed in range(5):
        r = np.random.default_rng(seed)
        x = r.uniform(size=(400, 1)) ** 2.0
        y = r.uniform(size=(400, 1))
        lin = variational_kl(x, y, TrigBasis(2), lambda_reg=1e-8)
        quad = variational_kl(x, y, TrigBasis(2), lambda_reg=1e-8, quadratic=True)
        assert lin.objective <= quad.objective + 1e-10
    del rng


def test_spectral_kl_below_quadratic_variational():
    # the spectral pair statistic is feasible for the quadratic DV problem
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        x = rng.uniform(size=(500, 1)) ** 1.7
        y = rng.uniform(size=(500, 1))
        fmap = TrigBasis(2)
        spec_val = estimate(x, y, fmap, KL, lambda_reg=1e-6).value
        quad = variational_kl(x, y, fmap, lambda_reg=1e-10, quadratic=True)
        assert spec_val <= quad.objective + 1e-8


def test_softmax_newton_separable_classes():
    rng = np.random.default_rng(4)
    x = rng.uniform(size=(1500, 1))
    y = np.where(x[:, 0] < 0.5, 1, 2)
    sol = softmax_newton(x, y, TrigBasis(4), k=2, lambda_reg=1e-6)
    assert sol.converged
    assert np.mean(sol.predict(x) == y) > 0.95
    obj = sol.evaluate(x, y)
    assert 0.3 < obj <= math.log(2.0) + 1e-9
    assert sol.score_all(x).shape == (1500, 2)


def test_softmax_newton_handles_empty_class():
    rng = np.random.default_rng(5)
    x = rng.uniform(size=(200, 1))
    y = np.ones(200, dtype=int)
    sol = softmax_newton(x, y, TrigBasis(2), k=3, lambda_reg=1e-4)
    assert sol.priors[0] == 1.0 and sol.priors[1] == 0.0
    assert np.all(sol.predict(x) == 1)


def test_kde_log_density_hand_value():
    train = np.array([[0.0], [1.0]])
    pts = np.array([[0.5]])
    got = kde_log_density(train, pts, bandwidth=1.0)
    expected = -0.125 - 0.5 * math.log(2.0 * math.pi)
    assert abs(got[0] - expected) < 1e-12


def test_kde_density_normalizes():
    rng = np.random.default_rng(6)
    train = rng.standard_normal((50, 1))
    grid = np.linspace(-8, 8, 4001).reshape(-1, 1)
    dens = np.exp(kde_log_density(train, grid, bandwidth=0.4))
    assert abs(np.trapezoid(dens, grid[:, 0]) - 1.0) < 1e-6


def test_kde_plugin_zero_on_identical_and_tracks_gaussian_kl():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((500, 2))
    assert kde_plugin(x, x.copy(), bandwidth=0.5) == 0.0
    mu = 1.0
    xs = rng.standard_normal((4000, 1)) + mu
    ys = rng.standard_normal((4000, 1))
    est = kde_plugin(xs, ys, bandwidth=0.3)
    assert abs(est - mu * mu / 2.0) < 0.15
    held_out = rng.standard_normal((2000, 1)) + mu
    est2 = kde_plugin(xs, ys, bandwidth=0.3, eval_points=held_out)
    assert abs(est2 - mu * mu / 2.0) < 0.15
    with pytest.raises(DomainError):
        kde_plugin(xs, ys, bandwidth=0.0)


@pytest.mark.parametrize("lam,mode", [(1e-4, "none"), (1e-3, "none"),
                                      (1e-4, "augmented_unpenalized")])
def test_pearson_two_routes_agree(lam, mode):
    rng = np.random.default_rng(8)
    x = rng.uniform(size=(600, 1)) ** 1.4
    y = rng.uniform(size=(600, 1))
    fmap = TrigBasis(3)
    direct = pearson_closed_form(x, y, fmap, lambda_reg=lam, constant_mode=mode)
    spectral = estimate(x, y, fmap, PEARSON, lambda_reg=lam, constant_mode=mode)
    assert abs(direct.value - spectral.value) <= 1e-10 * max(1.0, direct.value)


def test_pearson_solution_ratio_and_report():
    rng = np.random.default_rng(9)
    x = rng.uniform(size=(300, 1)) ** 2
    y = rng.uniform(size=(300, 1))
    sol = pearson_closed_form(x, y, TrigBasis(2), lambda_reg=1e-3)
    pts = rng.uniform(size=(40, 1))
    assert np.array_equal(sol.ratio(pts, floor=0.0),
                          np.maximum(1.0 + sol.potential(pts), 0.0))
    assert np.all(sol.ratio(pts, floor=0.1) >= 0.1)
    report = pearson_report(sol, 300, 300)
    d = report.to_dict()
    assert d["divergence"] == "pearson" and d["alpha"] == 2.0
    assert d["value"] == sol.value and d["n_p"] == 300
    assert d["spectrum"]["route"] == "direct-solve"
