import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixkern import _backend
from mixkern.errors import DimensionMismatch, InvalidKernel, UnknownParameter, UnsupportedNu
from mixkern.kernels import (
    RBF,
    Matern,
    Mixture,
    Nugget,
    Separable,
    SimplexWarning,
    eval_kernel,
    gram_gradient,
    gram_matrix,
    parameters,
    with_parameters,
)
from oracles import matern_oracle


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5, 3.5, 4.5])
def test_matern_matches_bessel_oracle(backend, rng, nu):
    for _ in range(20):
        alpha, d = rng.uniform(0.1, 5.0), rng.uniform(0.0, 4.0)
        got = eval_kernel(Matern(1.3, alpha, nu), [0.0], [d])
        assert abs(got - matern_oracle(1.3, alpha, nu, d)) < 1e-8


def test_matern_values(backend):
    assert eval_kernel(Matern(3, 1, 0.5), [0.0], [0.0]) == 3.0
    np.testing.assert_allclose(eval_kernel(Matern(3, 1, 0.5), [0.0], [2.0]), 3 * math.exp(-2), rtol=1e-14)
    np.testing.assert_allclose(eval_kernel(Matern(1, 2, 1.5), [0.0], [0.5]), 2 * math.exp(-1), rtol=1e-14)
    np.testing.assert_allclose(eval_kernel(Matern(1, 1, 2.5), [1.0], [2.0]), (1 + 1 + 1 / 3) * math.exp(-1), rtol=1e-14)


def test_zero_distance_is_variance_exactly(backend):
    for nu in (0.5, 1.5, 2.5, 3.5, 4.5):
        assert eval_kernel(Matern(2.7, 3.1, nu), [0.4, 1.0], [0.4, 1.0]) == 2.7


def test_mixture_and_rbf_values(backend):
    k = Mixture((0.5, 0.5), (Matern(1, 1, 0.5), Matern(1, 1, 1.5)))
    assert eval_kernel(k, [0.0], [0.0]) == 1.0
    np.testing.assert_allclose(eval_kernel(RBF(2, 0.5), [0.0], [2.0]), 2 * math.exp(-2), rtol=1e-14)


def test_separable_value():
    k = Separable([[5, 1], [1, 5]], Matern(10, 1, 0.5))
    np.testing.assert_array_equal(eval_kernel(k, [0.0], [0.0]), [[50, 10], [10, 50]])
    np.testing.assert_array_equal(gram_matrix(k, [[0.0]]), [[50, 10], [10, 50]])


def test_nugget_only_on_identical_points():
    k = Nugget(0.1, Matern(1, 1, 0.5))
    assert eval_kernel(k, [1.0], [1.0]) == pytest.approx(1.1)
    assert eval_kernel(k, [1.0], [2.0]) == pytest.approx(math.exp(-1))
    C = gram_matrix(k, np.array([[0.0], [0.0]]))
    np.testing.assert_allclose(C, [[1.1, 1.0], [1.0, 1.1]])


def test_gram_single_point_with_jitter():
    np.testing.assert_allclose(gram_matrix(Matern(2, 1, 0.5), [[0.3]], jitter=0.1), [[2.1]])


def test_mixture_gram_is_weighted_sum(backend, rng):
    X = rng.uniform(-3, 3, (15, 2))
    comps = (Matern(2, 1.5, 0.5), Matern(1, 0.7, 1.5), RBF(3, 0.2))
    w = (0.2, 0.5, 0.3)
    expected = sum(wi * gram_matrix(c, X) for wi, c in zip(w, comps))
    np.testing.assert_allclose(gram_matrix(Mixture(w, comps), X), expected, atol=1e-12)


def test_separable_gram_is_location_major_kron(rng):
    X = rng.uniform(0, 1, (4, 1))
    A = np.array([[2.0, 0.3], [0.3, 1.0]])
    base = Matern(1, 2, 1.5)
    np.testing.assert_allclose(gram_matrix(Separable(A, base), X), np.kron(gram_matrix(base, X), A))


def test_backends_agree(rng):
    if len(_backend.available()) < 2:
        pytest.skip("compiled backend not built")
    X = rng.uniform(-5, 5, (40, 3))
    k = Mixture((0.3, 0.3, 0.4), (Matern(1, 1, 0.5), Matern(2, 0.5, 2.5), Matern(1, 3, 4.5)))
    out = {}
    for name in ("python", "cython"):
        prev = _backend.use(name)
        out[name] = gram_matrix(k, X)
        _backend.use(prev)
    np.testing.assert_allclose(out["python"], out["cython"], rtol=1e-13, atol=1e-15)


def test_matern_derivatives(backend):
    X = np.array([[0.0], [2.0]])
    np.testing.assert_allclose(gram_gradient(Matern(3, 1, 0.5), X, "sigma2")[0, 1], math.exp(-2), rtol=1e-14)
    k = Mixture((0.4, 0.6), (Matern(1, 2, 0.5), Matern(3, 1, 1.5)))
    np.testing.assert_array_equal(gram_gradient(k, X, "w[0]"), gram_matrix(Matern(1, 2, 0.5), X))


KERNELS = [
    Matern(1.5, 0.8, 0.5),
    Matern(2.0, 1.3, 2.5),
    RBF(1.2, 0.4),
    Mixture((0.2, 0.3, 0.5), (Matern(2, 1, 0.5), Matern(1, 2, 1.5), Matern(3, 0.5, 2.5))),
    Nugget(0.3, Matern(1, 1, 1.5)),
    Separable([[2.0, 0.5], [0.5, 1.0]], Matern(1.5, 0.9, 0.5)),
    Nugget(0.2, Separable([[1.0, -0.3, 0.1], [-0.3, 2.0, 0.0], [0.1, 0.0, 1.5]], Mixture((0.5, 0.5), (Matern(1, 1, 0.5), RBF(1, 1))))),
]


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: type(k).__name__)
def test_gram_gradient_matches_finite_differences(backend, rng, k):
    X = rng.uniform(-2, 2, (6, 2))
    for name, value in parameters(k).items():
        h = 1e-6 * max(1.0, abs(value))
        up = gram_matrix(with_parameters(k, {name: value + h}), X)
        down = gram_matrix(with_parameters(k, {name: value - h}), X)
        fd = (up - down) / (2 * h)
        np.testing.assert_allclose(gram_gradient(k, X, name), fd, rtol=1e-5, atol=1e-8, err_msg=name)


def test_parameter_roundtrip():
    k = KERNELS[-1]
    rebuilt = with_parameters(k, parameters(k))
    np.testing.assert_allclose(list(parameters(rebuilt).values()), list(parameters(k).values()), rtol=1e-14)
    np.testing.assert_allclose(rebuilt.base.matrix, k.base.matrix, rtol=1e-14, atol=1e-15)
    with pytest.raises(UnknownParameter):
        with_parameters(k, {"bogus": 1.0})
    with pytest.raises(UnknownParameter):
        gram_gradient(k, [[0.0]], "bogus")


def test_validation():
    with pytest.raises(UnsupportedNu):
        Matern(1, 1, 1.0)
    with pytest.raises(InvalidKernel):
        Matern(-1, 1, 0.5)
    with pytest.raises(InvalidKernel):
        Separable([[1, 2], [2, 1]], Matern(1, 1, 0.5))
    with pytest.raises(InvalidKernel):
        Nugget(0.1, Nugget(0.1, Matern(1, 1, 0.5)))
    with pytest.raises(InvalidKernel):
        Mixture((-0.5, 1.5), (Matern(1, 1, 0.5), Matern(1, 1, 1.5)))
    with pytest.warns(SimplexWarning):
        Mixture((0.03, 0.33, 0.63), (Matern(3, 1, 0.5), Matern(3, 1, 1.5), Matern(3, 1, 2.5)))
    with pytest.raises(DimensionMismatch):
        eval_kernel(Matern(1, 1, 0.5), [0.0, 1.0], [0.0])


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=12),
    st.sampled_from([0.5, 1.5, 2.5, 3.5, 4.5]),
    st.floats(0.05, 5.0),
)
def test_gram_symmetric_and_psd(xs, nu, alpha):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        K = gram_matrix(Matern(1.0, alpha, nu), np.array(xs)[:, None])
    np.testing.assert_array_equal(K, K.T)
    assert np.min(np.linalg.eigvalsh(K)) > -1e-9 * len(xs)
