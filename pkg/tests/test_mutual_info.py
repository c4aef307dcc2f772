"""Mutual information routes: Kronecker product vs per-class decomposition."""

import math
import warnings

import numpy as np
import pytest

from fdiv import (
    OneHot,
    SoftmaxModel,
    TrigBasis,
    make_divergence,
    mi_estimate,
    softmax_fit,
    softmax_score,
    variational_mi_objective,
)
from fdiv.exceptions import DomainError

KL = make_divergence("kl")


def _label_pairs(rng, n, k, noise):
    """x in [0,1], label tracks which of k bins x falls in, flipped w.p. noise."""
    x = rng.uniform(size=n)
    y = np.minimum((x * k).astype(int), k - 1) + 1
    flip = rng.uniform(size=n) < noise
    y[flip] = rng.integers(1, k + 1, size=int(flip.sum()))
    return np.column_stack([x, y.astype(float)]), x.reshape(-1, 1), y


def test_copy_channel_gives_log2_exactly():
    # balanced two-symbol copy channel; empirical moments are the population
    labels = np.repeat([1.0, 2.0], 256)
    pairs = np.column_stack([labels, labels])
    report = mi_estimate(pairs, OneHot(2), OneHot(2), KL)
    assert abs(report.value - math.log(2.0)) <= 1e-10


def test_independent_balanced_sample_gives_zero():
    a = np.repeat([1.0, 1.0, 2.0, 2.0], 128)
    b = np.tile(np.repeat([1.0, 2.0], 128), 2)
    report = mi_estimate(np.column_stack([a, b]), OneHot(2), OneHot(2), KL)
    assert report.value == 0.0


@pytest.mark.parametrize("lam", [0.0, 1e-3])
def test_decomposed_route_matches_kronecker_route(lam):
    rng = np.random.default_rng(0)
    pairs, x, y = _label_pairs(rng, 600, 3, noise=0.1)
    fmap = TrigBasis(2)
    dense = mi_estimate(pairs, fmap, OneHot(3), KL, lambda_reg=lam, d1=1, d2=1)
    model = softmax_fit(x, y, fmap, 3, KL, lambda_reg=lam)
    assert abs(model.mi - dense.value) <= 1e-12 * max(1.0, abs(dense.value))
    assert model.class_values.sum() == pytest.approx(model.mi, abs=1e-15)


def test_softmax_model_json_round_trip():
    rng = np.random.default_rng(1)
    _, x, y = _label_pairs(rng, 400, 3, noise=0.05)
    model = softmax_fit(x, y, TrigBasis(2), 3, KL, lambda_reg=1e-4)
    back = SoftmaxModel.from_json(model.to_json())
    pts = rng.uniform(size=(50, 1))
    assert np.array_equal(back.score_all(pts), model.score_all(pts))
    assert np.array_equal(back.predict(pts), model.predict(pts))
    assert back.mi == model.mi and back.k == model.k
    assert back.feature_map is not None


def test_predict_recovers_separable_classes():
    rng = np.random.default_rng(2)
    _, x, y = _label_pairs(rng, 2000, 2, noise=0.0)
    model = softmax_fit(x, y, TrigBasis(4), 2, KL, lambda_reg=1e-5)
    pred = model.predict(x)
    assert set(np.unique(pred)) <= {1, 2}
    assert np.mean(pred == y) > 0.9
    assert model.mi > 0.3  # true MI is log 2 ~ 0.693, estimate is a lower bound


def test_score_matches_score_all_and_validates_class_index():
    rng = np.random.default_rng(3)
    _, x, y = _label_pairs(rng, 200, 3, noise=0.2)
    model = softmax_fit(x, y, TrigBasis(2), 3, KL, lambda_reg=1e-3)
    pts = rng.uniform(size=(20, 1))
    table = model.score_all(pts)
    for j in (1, 2, 3):
        assert np.allclose(softmax_score(model, pts, j), table[:, j - 1],
                           atol=1e-14)
    with pytest.raises(DomainError):
        model.score(pts, 0)
    with pytest.raises(DomainError):
        model.score(pts, 4)


def test_model_accepts_precomputed_features():
    rng = np.random.default_rng(4)
    _, x, y = _label_pairs(rng, 300, 2, noise=0.1)
    fmap = TrigBasis(2)
    model = softmax_fit(x, y, fmap, 2, KL, lambda_reg=1e-3)
    bare = SoftmaxModel(model.k, model.priors, model.M, model.N, model.c,
                        model.mi, model.class_values, model.divergence,
                        model.alpha, model.lambda_reg, feature_map=None)
    pts = rng.uniform(size=(10, 1))
    assert np.array_equal(bare.score_all(fmap(pts)), model.score_all(pts))


def test_variational_objective_hand_value():
    scores = np.array([[1.0, -1.0], [0.0, 2.0]])
    priors = np.array([0.5, 0.5])
    lse1 = math.log(0.5 * math.e + 0.5 / math.e)
    lse2 = math.log(0.5 + 0.5 * math.e ** 2)
    expected = ((1.0 - lse1) + (2.0 - lse2)) / 2.0
    got = variational_mi_objective(scores, np.array([1, 2]), priors)
    assert abs(got - expected) < 1e-14


def test_empty_class_handling():
    rng = np.random.default_rng(5)
    x = rng.uniform(size=(100, 1))
    y = np.ones(100, dtype=int)  # class 2 never appears
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = softmax_fit(x, y, TrigBasis(2), 2, KL, lambda_reg=1e-3)
    assert model.priors[1] == 0.0
    assert np.all(model.M[1] == 0.0) and np.all(model.c[1] == 0.0)
    with pytest.warns(RuntimeWarning):
        variational_mi_objective(model.score_all(x), y, model.priors)
    assert np.all(model.predict(x) == 1)  # -inf log prior kills class 2


def test_debias_flag_produces_nonnegative_correction():
    rng = np.random.default_rng(6)
    pairs, _, _ = _label_pairs(rng, 500, 3, noise=0.2)
    report = mi_estimate(pairs, TrigBasis(2), OneHot(3), KL,
                         lambda_reg=1e-3, debias=True, d1=1, d2=1)
    assert report.correction >= 0.0
    assert report.debiased_value == pytest.approx(
        report.value - report.correction, abs=1e-15)


def test_mi_lower_bounds_true_value_on_noisy_channel():
    rng = np.random.default_rng(7)
    n, k, noise = 8000, 2, 0.25
    pairs, _, _ = _label_pairs(rng, n, k, noise)
    report = mi_estimate(pairs, TrigBasis(3), OneHot(2), KL,
                         lambda_reg=1e-4, d1=1, d2=1)
    # channel: label correct w.p. 1 - noise/2, flipped otherwise
    eps = noise / 2.0
    true_mi = math.log(2.0) + (1 - eps) * math.log(1 - eps) + eps * math.log(eps)
    assert report.value <= true_mi + 0.05  # sampling slack
    assert report.value > 0.5 * true_mi
