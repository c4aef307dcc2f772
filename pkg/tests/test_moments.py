"""Moment computation: accumulation, ridge bookkeeping, product structure."""

import numpy as np
import pytest

from fdiv import (
    CircleEmbedding,
    MomentSet,
    OneHot,
    TrigBasis,
    class_conditional_moments,
    compute_moments,
    kronecker_moments,
    moments_from_features,
)
from fdiv.exceptions import DimensionGuard, DimensionMismatch, DomainError
from fdiv.features import RandomReLU
from fdiv.moments import DatasetPair


def test_compute_moments_matches_direct_formulas():
    rng = np.random.default_rng(0)
    x, y = rng.uniform(size=(50, 1)), rng.uniform(size=(70, 1))
    fmap = TrigBasis(2)
    mom = compute_moments(fmap, x, y, lambda_reg=0.1)
    px, py = fmap(x), fmap(y)
    assert np.allclose(mom.mu_p, px.mean(axis=0))
    assert np.allclose(mom.mu_q, py.mean(axis=0))
    assert np.allclose(mom.sigma_p, px.T @ px / 50)
    assert np.allclose(mom.sigma_q, py.T @ py / 70)
    assert mom.n_p == 50 and mom.n_q == 70
    assert np.allclose(mom.delta, mom.mu_p - mom.mu_q)
    assert np.allclose(mom.sigma_p_reg, mom.sigma_p + 0.1 * np.eye(mom.dim))


def test_chunked_accumulation_is_exact():
    # more rows than the accumulation chunk; same result as one shot
    rng = np.random.default_rng(1)
    x = rng.uniform(size=(9000, 1))
    y = rng.uniform(size=(8500, 1))
    fmap = TrigBasis(1)
    mom = compute_moments(fmap, x, y)
    ref = moments_from_features(fmap(x), fmap(y))
    assert np.allclose(mom.sigma_p, ref.sigma_p, atol=1e-12)
    assert np.allclose(mom.mu_q, ref.mu_q, atol=1e-13)


def test_constant_mode_leaves_last_diagonal_unshifted():
    rng = np.random.default_rng(2)
    x, y = rng.uniform(size=(30, 1)), rng.uniform(size=(30, 1))
    mom = compute_moments(TrigBasis(1), x, y, lambda_reg=0.5,
                          constant_mode="augmented_unpenalized")
    assert mom.dim == 4  # trailing constant appended
    shift = np.diag(mom.sigma_p_reg - mom.sigma_p)
    assert np.allclose(shift, [0.5, 0.5, 0.5, 0.0])
    assert np.allclose(mom.sigma_p[-1, -1], 1.0)
    with pytest.raises(DomainError):
        compute_moments(TrigBasis(1), x, y, constant_mode="center")


def test_with_lambda_returns_new_instance():
    rng = np.random.default_rng(3)
    mom = compute_moments(TrigBasis(1), rng.uniform(size=(10, 1)),
                          rng.uniform(size=(10, 1)), lambda_reg=0.0)
    shifted = mom.with_lambda(1e-3)
    assert shifted.lambda_reg == 1e-3 and mom.lambda_reg == 0.0
    assert shifted.sigma_p is mom.sigma_p


def test_moment_set_validation():
    mu = np.zeros(3)
    sig = np.eye(3)
    with pytest.raises(DimensionMismatch):
        MomentSet(mu, np.zeros(2), sig, sig, 1, 1)
    with pytest.raises(DimensionMismatch):
        MomentSet(mu, mu, np.eye(2), sig, 1, 1)
    with pytest.raises(DomainError):
        MomentSet(mu, mu, sig, sig, 1, 1, lambda_reg=-1.0)
    MomentSet(mu, mu, sig, sig, 1, 1).check()
    bad = MomentSet(np.array([2.0, 0.0, 0.0]), mu, sig, sig, 1, 1)
    with pytest.raises(DomainError):
        bad.check()  # mean outer product exceeds second moment


def test_dataset_pair_width_check():
    with pytest.raises(DimensionMismatch):
        DatasetPair(np.zeros((3, 2)), np.zeros((3, 1)))


def test_kronecker_moments_product_side_factorizes():
    rng = np.random.default_rng(4)
    pairs = np.column_stack([rng.uniform(size=40),
                             rng.integers(1, 4, size=40).astype(float)])
    map1, map2 = TrigBasis(1), OneHot(3)
    mom = kronecker_moments(map1, map2, pairs, lambda_reg=1e-3)
    p1 = map1(pairs[:, :1])
    p2 = map2(pairs[:, 1:])
    s1 = p1.T @ p1 / 40
    s2 = p2.T @ p2 / 40
    assert np.allclose(mom.sigma_q, np.kron(s2, s1), atol=1e-12)
    assert np.allclose(mom.mu_q, np.kron(p2.mean(axis=0), p1.mean(axis=0)))
    # p side is the raw joint moment
    joint = np.stack([np.kron(p2[i], p1[i]) for i in range(40)])
    assert np.allclose(mom.sigma_p, joint.T @ joint / 40, atol=1e-12)


def test_kronecker_moments_dimension_guard():
    with pytest.raises(DimensionGuard):
        kronecker_moments(RandomReLU(1, 70, seed=0), RandomReLU(1, 70, seed=1),
                          np.zeros((5, 2)))


def test_class_conditional_moments_pooled_identity():
    rng = np.random.default_rng(5)
    x = rng.uniform(size=(120, 1))
    labels = rng.integers(1, 4, size=120)
    cls = class_conditional_moments(TrigBasis(2), x, labels, k=3)
    assert abs(cls.priors.sum() - 1.0) < 1e-15
    mixed_mu = np.einsum("j,jm->m", cls.priors, cls.mu)
    mixed_sig = np.einsum("j,jmn->mn", cls.priors, cls.sigma)
    assert np.allclose(mixed_mu, cls.mu_pool, atol=1e-12)
    assert np.allclose(mixed_sig, cls.sigma_pool, atol=1e-12)


def test_class_conditional_empty_class_warns():
    x = np.full((4, 1), 0.25)
    labels = np.array([1, 1, 2, 2])
    with pytest.warns(RuntimeWarning):
        cls = class_conditional_moments(TrigBasis(1), x, labels, k=3)
    assert cls.priors[2] == 0.0
    assert np.all(cls.sigma[2] == 0.0)


def test_circle_embedding_moments_dimension():
    rng = np.random.default_rng(6)
    mom = compute_moments(CircleEmbedding(2), rng.uniform(size=(25, 2)),
                          rng.uniform(size=(25, 2)))
    assert mom.dim == 4
