"""Estimator wrappers: sklearn conventions over the functional core."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fdiv import (
    LinearFeatureLearner,
    MutualInformation,
    NeuralFeatureLearner,
    OneHot,
    SoftmaxSpectral,
    SpectralDivergence,
    TrigBasis,
    estimate,
    learn_linear,
    make_divergence,
    mi_estimate,
    softmax_fit,
)


@pytest.fixture
def beta_vs_uniform():
    rng = np.random.default_rng(0)
    return rng.beta(2.0, 1.0, size=(600, 1)), rng.uniform(size=(600, 1))


def test_get_params_and_clone_round_trip():
    est = SpectralDivergence(TrigBasis(3), divergence="hellinger",
                             lambda_reg=1e-3, debias=True)
    params = est.get_params()
    assert params["divergence"] == "hellinger"
    assert params["lambda_reg"] == 1e-3
    dup = clone(est)
    dup_params = dup.get_params()
    # clone deep-copies the map; compare by config, the rest by value
    assert dup_params.pop("feature_map").to_config() == \
        params.pop("feature_map").to_config()
    assert dup_params == params
    dup.set_params(lambda_reg=1e-2)
    assert dup.lambda_reg == 1e-2 and est.lambda_reg == 1e-3


def test_spectral_divergence_matches_functional_route(beta_vs_uniform):
    x, y = beta_vs_uniform
    est = SpectralDivergence(TrigBasis(3), divergence="kl", lambda_reg=1e-4,
                             debias=True).fit(x, y)
    report = estimate(x, y, TrigBasis(3), make_divergence("kl"),
                      lambda_reg=1e-4, debias=True)
    assert est.value_ == report.value
    assert est.correction_ == report.correction
    assert est.debiased_value_ == report.debiased_value
    assert est.n_features_in_ == TrigBasis(3).output_dim
    v, w = est.potential_values(x[:10])
    assert v.shape == (10,) and w.shape == (10,)
    # fit works on ridge-shifted moments, so the in-sample pair statistic
    # differs from the fitted value by exactly the ridge trace term
    ridge_term = 1e-4 * float(np.trace(est.potentials_.M)
                              + np.trace(est.potentials_.N))
    assert est.score(x, y) == pytest.approx(est.value_ - ridge_term, rel=1e-10)


def test_unfitted_estimators_raise(beta_vs_uniform):
    x, y = beta_vs_uniform
    with pytest.raises(NotFittedError):
        SpectralDivergence(TrigBasis(2)).potential_values(x)
    with pytest.raises(NotFittedError):
        SpectralDivergence(TrigBasis(2)).score(x, y)
    with pytest.raises(NotFittedError):
        SoftmaxSpectral(TrigBasis(2)).predict(x)


def test_mutual_information_wrapper():
    rng = np.random.default_rng(1)
    x = rng.uniform(size=400)
    labels = (x > 0.5).astype(float) + 1.0
    pairs = np.column_stack([x, labels])
    est = MutualInformation(TrigBasis(2), OneHot(2), lambda_reg=1e-4,
                            debias=True, dim_1=1, dim_2=1).fit(pairs)
    report = mi_estimate(pairs, TrigBasis(2), OneHot(2), make_divergence("kl"),
                         lambda_reg=1e-4, debias=True, d1=1, d2=1)
    assert est.mi_ == report.value
    assert est.debiased_mi_ == report.debiased_value
    assert est.report_.spectrum_summary == report.spectrum_summary


def test_softmax_classifier_with_arbitrary_labels():
    rng = np.random.default_rng(2)
    x = rng.uniform(size=(900, 1))
    names = np.array(["low", "mid", "high"])
    y = names[np.minimum((x[:, 0] * 3).astype(int), 2)]
    clf = SoftmaxSpectral(TrigBasis(4), lambda_reg=1e-4).fit(x, y)
    assert list(clf.classes_) == ["high", "low", "mid"]  # np.unique order
    pred = clf.predict(x)
    assert set(pred) <= set(names)
    assert np.mean(pred == y) > 0.85
    assert clf.decision_function(x).shape == (900, 3)
    # route equivalence with the dense product estimator
    encoded = np.searchsorted(clf.classes_, y) + 1.0
    dense = MutualInformation(TrigBasis(4), OneHot(3), lambda_reg=1e-4,
                              dim_1=1, dim_2=1).fit(
        np.column_stack([x[:, 0], encoded]))
    assert clf.mi_ == pytest.approx(dense.mi_, rel=1e-12)
    # ClassifierMixin accuracy score
    assert clf.score(x, y) > 0.85


def test_softmax_matches_functional_fit():
    rng = np.random.default_rng(3)
    x = rng.uniform(size=(300, 1))
    y = (x[:, 0] > 0.4).astype(int)  # 0-based labels get remapped
    clf = SoftmaxSpectral(TrigBasis(2), lambda_reg=1e-3).fit(x, y)
    direct = softmax_fit(x, y + 1, TrigBasis(2), 2, make_divergence("kl"),
                         lambda_reg=1e-3)
    assert clf.mi_ == direct.mi
    assert np.array_equal(clf.classes_[clf.model_.predict(x) - 1],
                          clf.predict(x))


def test_linear_feature_learner(beta_vs_uniform):
    x, y = beta_vs_uniform
    est = LinearFeatureLearner(TrigBasis(3), r=2, lambda_reg=1e-4,
                               n_steps=20, seed=4).fit(x, y)
    res = learn_linear(x, y, TrigBasis(3), make_divergence("kl"), r=2,
                       lambda_reg=1e-4, n_steps=20, seed=4)
    assert est.value_ == res.value
    assert np.array_equal(est.gamma_, res.gamma)
    assert est.trace_ == res.trace
    assert est.gamma_.shape == (TrigBasis(3).output_dim, 2)


def test_neural_feature_learner(beta_vs_uniform):
    x, y = beta_vs_uniform
    est = NeuralFeatureLearner(units=8, r=2, lambda_reg=1e-3, step_size=0.02,
                               epochs=3, seed=5).fit(x, y)
    assert est.feature_map_.output_dim == 2
    assert len(est.trace_) == 4
    assert np.isfinite(est.value_)
    dup = clone(est)
    assert dup.get_params()["units"] == 8
    refit = NeuralFeatureLearner(units=8, r=2, lambda_reg=1e-3, step_size=0.02,
                                 epochs=3, seed=5).fit(x, y)
    assert refit.trace_ == est.trace_
