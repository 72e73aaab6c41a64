import math

import numpy as np
import pytest

from mixkern.errors import DimensionMismatch, UnknownParameter
from mixkern.gp import GpModel, Objective, log_marginal_likelihood, lml_gradient, mse, posterior_predict, sample_prior
from mixkern.kernels import RBF, Matern, Mixture, Nugget, Separable, gram_matrix, parameters, scalar_block, structure, with_parameters

LOG_2PI = math.log(2 * math.pi)


def test_lml_single_point():
    model = GpModel(Matern(1, 1, 0.5))
    np.testing.assert_allclose(log_marginal_likelihood(model, [[0.0]], [0.0]), -0.5 * LOG_2PI, rtol=1e-15)
    np.testing.assert_allclose(log_marginal_likelihood(model, [[0.0]], [1.0]), -0.5 - 0.5 * LOG_2PI, rtol=1e-15)


def test_lml_scaling_identity(rng):
    X = rng.uniform(0, 5, (12, 1))
    y = rng.normal(size=12)
    a = log_marginal_likelihood(GpModel(Matern(1.0, 1.3, 1.5), 0.01), X, y)
    b = log_marginal_likelihood(GpModel(Matern(2.0, 1.3, 1.5), 0.02), X, math.sqrt(2) * y)
    np.testing.assert_allclose(b - a, -6 * math.log(2), rtol=1e-12)


def test_lml_matches_dense_formula(rng):
    X = rng.uniform(0, 3, (10, 2))
    y = rng.normal(size=10)
    k = Mixture((0.4, 0.6), (Matern(1, 2, 0.5), RBF(2, 0.3)))
    C = gram_matrix(k, X, 0.05)
    sign, logdet = np.linalg.slogdet(C)
    expected = -0.5 * y @ np.linalg.solve(C, y) - 0.5 * logdet - 5 * LOG_2PI
    np.testing.assert_allclose(log_marginal_likelihood(GpModel(k, 0.05), X, y), expected, rtol=1e-12)


def test_sigma2_gradient_vanishes_at_mle():
    # widely spaced points give C = sigma2 * I
    X = np.arange(6.0)[:, None] * 100
    y = np.array([1.0, -1.0, 1.0, 1.0, -1.0, -1.0])
    g = lml_gradient(GpModel(Matern(1.0, 1.0, 0.5)), X, y, ["sigma2"])
    assert abs(g[0]) < 1e-12


KERNELS = [
    Matern(1.5, 0.8, 0.5),
    Matern(2.0, 1.3, 3.5),
    RBF(1.2, 0.4),
    Mixture((0.2, 0.3, 0.5), (Matern(2, 1, 0.5), Matern(1, 2, 1.5), Matern(3, 0.5, 2.5))),
    Mixture((0.5, 0.5), (Matern(2, 1, 0.5), RBF(1, 0.7))),
    Nugget(0.3, Matern(1, 1, 1.5)),
    Nugget(0.2, Mixture((0.6, 0.4), (Matern(1, 1, 0.5), Matern(1, 3, 2.5)))),
    Separable([[2.0, 0.5], [0.5, 1.0]], Matern(1.5, 0.9, 0.5)),
    Separable([[1.0, -0.3], [-0.3, 2.0]], Mixture((0.5, 0.5), (Matern(1, 1, 0.5), Matern(2, 2, 1.5)))),
    Nugget(0.1, Separable([[1.0, 0.2], [0.2, 0.7]], RBF(1, 1))),
]


def _data(rng, k, n=10, p=1):
    m = structure(k).m
    X = rng.uniform(-2, 2, (n, p))
    y = rng.normal(size=(n, m)) if m > 1 else rng.normal(size=n)
    return X, y


def _fd_gradient(k, X, y, jitter, kron=False):
    out = []
    for name, v in parameters(k).items():
        h = 1e-6 * max(1.0, abs(v))
        up = log_marginal_likelihood(GpModel(with_parameters(k, {name: v + h}), jitter, kron), X, y)
        down = log_marginal_likelihood(GpModel(with_parameters(k, {name: v - h}), jitter, kron), X, y)
        out.append((up - down) / (2 * h))
    return np.array(out)


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: type(k).__name__)
def test_gradient_matches_finite_differences(backend, rng, k):
    X, y = _data(rng, k)
    for kron in (False, True):
        g = lml_gradient(GpModel(k, 0.01, kron), X, y)
        np.testing.assert_allclose(g, _fd_gradient(k, X, y, 0.01, kron), rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("k", [KERNELS[3], KERNELS[6], KERNELS[7], KERNELS[8]], ids=lambda k: type(k).__name__)
def test_fast_paths_match_generic(backend, rng, k):
    X, y = _data(rng, k, n=25, p=2)
    parts = structure(k)
    for kron in (False, True):
        obj = Objective(X, y, 0.01, kron, parts.m)
        lml, g = obj(k)
        K0, g0 = scalar_block(parts.base, obj.D, symmetric=True, grads=True)
        lml_ref, g_ref = obj._dense(k, parts, K0, g0, True)
        np.testing.assert_allclose(lml, lml_ref, rtol=1e-11)
        np.testing.assert_allclose(g, g_ref, rtol=1e-9, atol=1e-11)


def test_identical_components_share_weight_gradient(rng):
    X, y = _data(rng, KERNELS[0])
    c = Matern(1.0, 1.2, 1.5)
    g = lml_gradient(GpModel(Mixture((0.5, 0.5), (c, c))), X, y, ["w[0]", "w[1]"])
    g_single = lml_gradient(GpModel(c), X, y, ["sigma2"])
    np.testing.assert_allclose(g, [g_single[0], g_single[0]], rtol=1e-10)


def test_gradient_param_selection(rng):
    X, y = _data(rng, KERNELS[0])
    with pytest.raises(UnknownParameter):
        lml_gradient(GpModel(KERNELS[0]), X, y, ["bogus"])
    with pytest.raises(DimensionMismatch):
        log_marginal_likelihood(GpModel(KERNELS[7]), X, y)


def test_posterior_interpolates(rng):
    X = rng.uniform(0, 5, (8, 1))
    y = rng.normal(size=8)
    post = posterior_predict(GpModel(Matern(1, 1, 1.5)), X, y, X)
    np.testing.assert_allclose(post.mean, y, atol=1e-6)
    assert np.all(post.var <= 1e-6)


def test_posterior_single_point():
    # kernel value 1 at the training point, 0.5 between train and test
    k = Matern(1.0, 1.0, 0.5)
    d = math.log(2.0)
    post = posterior_predict(GpModel(k), [[0.0]], [2.0], [[d]])
    np.testing.assert_allclose(post.mean, [1.0], rtol=1e-14)
    np.testing.assert_allclose(post.var, [0.75], rtol=1e-14)


def test_posterior_reverts_to_prior_far_away():
    k = Nugget(0.2, Mixture((0.5, 0.5), (Matern(2, 1, 0.5), Matern(1, 1, 1.5))))
    post = posterior_predict(GpModel(k, 0.01), [[0.0], [1.0]], [1.0, -2.0], [[100.0]])
    assert abs(post.mean[0]) < 1e-10
    np.testing.assert_allclose(post.var, [1.5], atol=1e-10)


def test_posterior_multi_output(rng):
    k = Separable([[2.0, 0.5], [0.5, 1.0]], Matern(1, 1, 0.5))
    X = rng.uniform(0, 3, (5, 1))
    y = rng.normal(size=(5, 2))
    post = posterior_predict(GpModel(k), X, y, X)
    np.testing.assert_allclose(post.per_output(2), y, atol=1e-8)


def test_sample_prior_deterministic_and_moments():
    X = np.linspace(0, 5, 20)[:, None]
    k = Mixture((0.03, 0.33, 0.63), (Matern(3, 1, 0.5), Matern(3, 1, 1.5), Matern(3, 1, 2.5)))
    model = GpModel(k, 1e-9)
    np.testing.assert_array_equal(sample_prior(model, X, 1, 7), sample_prior(model, X, 1, 7))
    Y = sample_prior(model, X, 5000, 11)
    C = gram_matrix(k, X)
    assert np.all(np.abs(Y.mean(axis=0)) <= 4 * np.sqrt(np.diag(C) / 5000))
    S = Y[:2000].T @ Y[:2000] / 2000
    assert np.linalg.norm(S - C) / np.linalg.norm(C) <= 0.05


def test_mse():
    assert mse([1, 2], [1, 2]) == 0.0
    assert mse([0, 0], [1, 1]) == 1.0
    np.testing.assert_allclose(mse([1, 2, 3], [2, 4, 3]), 5 / 3)
    with pytest.raises(DimensionMismatch):
        mse([1, 2], [1])
