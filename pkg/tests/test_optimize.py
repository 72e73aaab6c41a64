import numpy as np
import pytest

from mixkern.dataio import Dataset
from mixkern.errors import NonFinite
from mixkern.experiments.common import design_points
from mixkern.gp import GpModel, sample_prior
from mixkern.kernels import Matern, Mixture, Nugget, Separable
from mixkern.optimize import OptimizerConfig, OptimizerState, ParamTransform, fit, optimizer_step
from mixkern.rng import RngStream


def test_transform_identity_points():
    tr = ParamTransform(Matern(1.0, 1.0, 0.5))
    np.testing.assert_array_equal(tr.to_unconstrained(Matern(1.0, 1.0, 0.5)), [0.0, 0.0])
    k = Mixture((1 / 3, 1 / 3, 1 / 3), (Matern(1, 1, 0.5), Matern(1, 1, 1.5), Matern(1, 1, 2.5)))
    v = ParamTransform(k).to_unconstrained(k)
    np.testing.assert_allclose(v[:2], [0.0, 0.0], atol=1e-15)


def test_transform_roundtrip_separable():
    k = Nugget(0.1, Separable([[5, 1], [1, 5]], Matern(10, 1, 0.5)))
    tr = ParamTransform(k)
    back = tr.from_unconstrained(tr.to_unconstrained(k))
    np.testing.assert_allclose(back.base.matrix, [[5, 1], [1, 5]], atol=1e-12)
    assert back.tau2 == pytest.approx(0.1, rel=1e-14)


def test_chain_rule_matches_finite_differences(rng):
    k = Mixture((0.2, 0.3, 0.5), (Matern(2, 1, 0.5), Matern(1, 2, 1.5), Matern(3, 0.5, 2.5)))
    tr = ParamTransform(k)
    v = tr.to_unconstrained(k)
    c = rng.normal(size=len(tr.names))  # linear function of the natural parameters

    def f(u):
        return float(c @ np.array(list(tr.natural(u).values())))

    fd = np.array([(f(v + h) - f(v - h)) / 2e-6 for h in np.eye(len(v)) * 1e-6])
    np.testing.assert_allclose(tr.chain(v, c), fd, rtol=1e-6, atol=1e-9)


def test_zero_weight_has_no_unconstrained_value():
    k = Mixture((0.0, 1.0), (Matern(1, 1, 0.5), Matern(1, 1, 1.5)))
    with pytest.raises(NonFinite):
        ParamTransform(k).to_unconstrained(k)


def test_sgd_step():
    _, x = optimizer_step(OptimizerState(), np.array([1.0]), np.array([2.0]), OptimizerConfig("sgd", 0.1))
    np.testing.assert_allclose(x, [0.8])


def test_adam_first_step_is_learning_rate():
    cfg = OptimizerConfig("adam", 0.01)
    _, x = optimizer_step(OptimizerState(), np.array([1.0, 1.0]), np.array([3.0, -1e-3]), cfg)
    np.testing.assert_allclose(np.abs(x - 1.0), [0.01, 0.01], rtol=1e-4)
    _, x = optimizer_step(OptimizerState(), np.array([1.0]), np.array([0.0]), cfg)
    np.testing.assert_array_equal(x, [1.0])


def test_nonfinite_gradient_rejected():
    with pytest.raises(NonFinite):
        optimizer_step(OptimizerState(), np.array([1.0]), np.array([np.nan]), OptimizerConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig("newton")
    with pytest.raises(ValueError):
        OptimizerConfig(learning_rate=0)
    with pytest.raises(ValueError):
        OptimizerConfig(epochs=0)


def _simulated(truth, n, seed, jitter):
    X = design_points(n, -10, 10, 0.2, RngStream(seed, (0, n, 0)))
    y = sample_prior(GpModel(truth, jitter), X, 1, seed, (0, n, 1))[0]
    return Dataset(X, y)


@pytest.mark.parametrize("method,lr,epochs", [("adam", 0.05, 300), ("sgd", 0.002, 300), ("lbfgs", 1.0, 100)])
def test_fit_descends(method, lr, epochs):
    data = _simulated(Matern(2, 1, 0.5), 80, 3, 0.1)
    rep = fit(GpModel(Matern(1, 5, 0.5), 0.1), data, OptimizerConfig(method, lr, epochs))
    assert rep.loss_trace[-1] < rep.loss_trace[0]
    assert np.all(np.isfinite(rep.loss_trace))
    assert rep.microergodic is not None


def test_lbfgs_reaches_stationary_point():
    data = _simulated(Matern(2, 1, 0.5), 60, 5, 0.1)
    rep = fit(GpModel(Matern(1, 5, 0.5), 0.1), data, OptimizerConfig("lbfgs", 1.0, 200, tol=1e-6))
    assert rep.converged and rep.stop_reason == "gradient"


def test_fit_is_deterministic():
    data = _simulated(Matern(2, 1, 1.5), 40, 1, 0.1)
    cfg = OptimizerConfig("adam", 0.05, 50)
    a = fit(GpModel(Matern(1, 2, 1.5), 0.1), data, cfg)
    b = fit(GpModel(Matern(1, 2, 1.5), 0.1), data, cfg, seed=99)
    np.testing.assert_array_equal(a.loss_trace, b.loss_trace)
    assert a.kernel == b.kernel


def test_microergodic_consistency_single_matern():
    # sigma2 * alpha is consistently estimable; median over 20 replications
    truth = Matern(2.0, 1.5, 0.5)
    est = []
    for rep in range(20):
        data = _simulated(truth, 200, 100 + rep, 0.01)
        r = fit(GpModel(Matern(1.0, 0.5, 0.5), 0.01), data, OptimizerConfig("lbfgs", 1.0, 200, tol=1e-6))
        est.append(r.kernel.sigma2 * r.kernel.alpha)
    assert abs(np.median(est) - 3.0) / 3.0 <= 0.2
