import math
import warnings

import numpy as np
import pytest

from mixkern.config import parse_config_text, parse_kernel
from mixkern.errors import MaskTooLarge, SplitTooSmall
from mixkern.experiments import (
    centered_mask,
    design_points,
    kernel_label,
    record_values,
    run_image_inpaint,
    run_regression_benchmark,
    run_sim_identifiability,
    run_sim_same_nu,
    run_sim_separable,
    run_sim_smoothness,
    simulate,
    smoothness_report,
    split_indices,
    synthetic_co2,
    synthetic_digit,
    synthetic_matern,
)
from mixkern.kernels import Matern, SimplexWarning
from mixkern.optimize import OptimizerConfig
from mixkern.rng import RngStream


def test_design_points():
    X = design_points(100, -10, 10, 0.2, RngStream(0))
    assert X.shape == (100, 1)
    assert np.max(np.abs(X[:, 0] - np.linspace(-10, 10, 100))) < 0.002
    X2 = design_points(50, 0, 1, 0.2, RngStream(0), dim=2)
    assert X2.shape == (50, 2) and not np.array_equal(X2[:, 0], X2[:, 1])


def test_record_values_truths():
    sim2 = parse_config_text("", "sim2")
    assert record_values(sim2.kernel)["microergodic"] == pytest.approx(6.4)
    sim3 = parse_config_text("", "sim3")
    v = record_values(sim3.kernel)
    assert (v["micro[0,0]"], v["micro[0,1]"], v["micro[1,1]"]) == pytest.approx((50, 10, 50))
    assert record_values(parse_config_text("", "sim4").kernel)["microergodic"] == pytest.approx(9.6)


def test_smoothness_report_closed_form():
    r = smoothness_report(Matern(1, 1, 0.5), 5000, 100, 0.0, 0, (8, 0))
    x = r.x_points[-1]
    np.testing.assert_allclose(r.beta[-1], 2 * (1 - math.exp(-x)), rtol=0.1)
    assert r.gamma_slope > 0.7 and r.differentiable_flag is False and r.beta_limit_flag
    r = smoothness_report(Matern(3, 1, 1.5), 1000, 100, 1e-9, 0, (8, 1))
    assert r.gamma_slope < 0.3 and r.differentiable_flag is True
    assert np.all(r.beta >= 0) and np.all(r.gamma >= 0)
    with pytest.raises(ValueError):
        smoothness_report(Matern(1, 1, 0.5), 100, 10, 0.0, 0, ())


def test_sim1_weight_warning():
    cfg = parse_config_text("smooth.T = 500\nsmooth.I = 20\n", "sim1")
    with pytest.warns(SimplexWarning):
        reports = run_sim_smoothness(cfg, 0)
    assert len(reports) == 4


def _small(exp, extra=""):
    return parse_config_text(f"replications = 2\nopt.epochs = 20\n{extra}", exp)


def test_simulate_shapes():
    cfg = _small("sim3", "sample_sizes = [10]\n")
    d = simulate(cfg, 0, 3, 10, 0)
    assert d.X.shape == (10, 1) and d.y.shape == (10, 2)


@pytest.mark.parametrize(
    "exp,fn,param",
    [
        ("sim2", run_sim_identifiability, "microergodic"),
        ("sim3", run_sim_separable, "micro[0,1]"),
        ("sim4", run_sim_same_nu, "microergodic"),
    ],
)
def test_replication_table(tmp_path, exp, fn, param):
    cfg = _small(exp, "sample_sizes = [15, 25]\n")
    table = fn(cfg, 0)
    assert table.sample_sizes == [15, 25]
    assert len(table.estimates(25, param)) == 2
    assert table.stats(15, param)["count"] == 2
    table.write(tmp_path / "a", exp)
    again = fn(cfg, 0)
    again.write(tmp_path / "b", exp)
    for suffix in ("", "_summary", "_failures"):
        name = f"{exp}{suffix}.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_replications_independent_of_workers():
    cfg = _small("sim4", "sample_sizes = [12]\n")
    a = run_sim_same_nu(cfg, 5, workers=1)
    b = run_sim_same_nu(cfg, 5, workers=2)
    assert a.rows == b.rows


def test_structure_mismatch_rejected():
    cfg = _small("sim2", 'init = "matern(1,1,0.5)"\n')
    with pytest.raises(ValueError):
        run_sim_identifiability(cfg, 0)


def test_split_guards():
    tr, te = split_indices(40, 0.75, 0, 0, 0)
    assert len(tr) == 30 and len(te) == 10 and not set(tr) & set(te)
    np.testing.assert_array_equal(split_indices(40, 0.75, 0, 0, 0)[0], tr)
    with pytest.raises(SplitTooSmall):
        split_indices(40, 1.0, 0, 0, 0)
    with pytest.raises(SplitTooSmall):
        split_indices(40, 0.001, 0, 0, 0)
    with pytest.raises(SplitTooSmall):
        run_regression_benchmark(synthetic_matern(30), [Matern(1, 1, 0.5)], [0.5], 1, 0)


def test_regression_benchmark_deterministic(tmp_path):
    data = synthetic_co2(60, 0)
    kernels = [parse_kernel("matern(10,4,0.5)"), parse_kernel("mix(0.5*matern(10,4,0.5), 0.5*matern(500,0.1,1.5))")]
    opt = OptimizerConfig("adam", 0.05, 10)
    a = run_regression_benchmark(data, kernels, [0.5, 0.8], 2, 3, opt, 0.01)
    b = run_regression_benchmark(data, kernels, [0.5, 0.8], 2, 3, opt, 0.01)
    a.write(tmp_path / "a")
    b.write(tmp_path / "b")
    assert (tmp_path / "a" / "regression.csv").read_bytes() == (tmp_path / "b" / "regression.csv").read_bytes()
    assert len(a.rows) == 8 and a.kernels == ["1/2", "1/2+3/2"]


def test_kernel_labels():
    assert kernel_label(parse_kernel("mix(0.5*matern(1,1,0.5), 0.5*matern(1,1,2.5))")) == "1/2+5/2"
    assert kernel_label(parse_kernel("rbf(1,1)")) == "rbf"


def test_synthetic_data():
    co2 = synthetic_co2(120, 0)
    assert co2.X[0, 0] > 1958 and np.all(np.diff(co2.X[:, 0]) > 0)
    assert co2.y[-1] > co2.y[0]
    np.testing.assert_array_equal(synthetic_co2(120, 0).y, co2.y)
    img = synthetic_digit(32)
    assert img.shape == (32, 32) and img.min() >= 0 and img.max() <= 255


def test_mask_guards():
    assert centered_mask((32, 32), 8).sum() == 64
    assert centered_mask((32, 32), 8)[12:20, 12:20].all()
    with pytest.raises(MaskTooLarge):
        centered_mask((32, 32), 32)


def test_inpaint_constant_image():
    img = np.full((12, 12), 100.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = run_image_inpaint(img, 4, [Matern(1, 1, 0.5)], OptimizerConfig("adam", 0.05, 5), 0.01)
    pred = r.images["1/2"][r.mask]
    assert np.ptp(pred) < 1e-3 and r.mse["1/2"] < 1e-6
