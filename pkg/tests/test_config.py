import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixkern.config import EXPERIMENTS, dump_config, format_kernel, parse_config, parse_config_text, parse_kernel
from mixkern.errors import InvalidKernelSpec, ParseError, UnknownKey
from mixkern.kernels import RBF, Matern, Mixture, Nugget, Separable


def test_parse_leaf_kernels():
    assert parse_kernel("matern(16,4,0.5)") == Matern(16, 4, 0.5)
    assert parse_kernel(" rbf(1, 0.5) ") == RBF(1, 0.5)


def test_parse_composites():
    k = parse_kernel("mix(0.1*matern(16,4,0.5), 0.3*matern(4,2,1.5), 0.6*matern(1,1,2.5)) + nugget(0.1)")
    assert isinstance(k, Nugget) and k.tau2 == 0.1
    assert k.base.weights == (0.1, 0.3, 0.6)
    s = parse_kernel("sep([[5,1],[1,5]], matern(10,1,0.5))")
    assert isinstance(s, Separable)
    np.testing.assert_array_equal(s.matrix, [[5, 1], [1, 5]])
    third = parse_kernel("mix(1/3*matern(1,1,0.5), 2/3*matern(1,1,1.5))")
    assert third.weights == (1 / 3, 2 / 3)


@pytest.mark.parametrize(
    "spec",
    [
        "matern(1,1)",
        "matern(1,1,0.7)",
        "gauss(1,1)",
        "mix()",
        "mix(matern(1,1,0.5))",
        "matern(1,1,0.5) + rbf(1,1)",
        "sep([1,2], matern(1,1,0.5))",
        "matern(1,1/0,0.5)",
        "matern(1,1,0.5",
        "matern(x,1,0.5)",
        "matern(-1,1,0.5)",
    ],
)
def test_invalid_kernel_specs(spec):
    with pytest.raises(InvalidKernelSpec):
        parse_kernel(spec)


KERNEL_SPECS = [
    "matern(16,4,0.5)",
    "rbf(1,0.5) + nugget(0.2)",
    "mix(0.1*matern(16,4,0.5), 0.3*matern(4,2,1.5), 0.6*matern(1,1,2.5))",
    "sep([[5,1],[1,5]], mix(0.5*matern(10,1,0.5), 0.5*rbf(1,2))) + nugget(0.1)",
]


@pytest.mark.parametrize("spec", KERNEL_SPECS)
def test_format_roundtrip(spec):
    k = parse_kernel(spec)
    assert parse_kernel(format_kernel(k)) == k


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6), st.sampled_from([0.5, 1.5, 2.5, 3.5, 4.5]))
def test_format_roundtrip_exact_floats(s2, a, nu):
    k = Matern(s2, a, nu)
    assert parse_kernel(format_kernel(k)) == k


def test_config_values():
    cfg = parse_config_text('opt.lr = 0.005\nkernel = "matern(16,4,0.5)"\n', "fit")
    assert cfg.opt.learning_rate == 0.005
    assert cfg.kernel == Matern(16, 4, 0.5)
    cfg = parse_config_text("[opt]\nmethod = 'sgd'\nepochs = 7\n[smooth]\nT = 600\n", "sim1")
    assert cfg.opt.method == "sgd" and cfg.opt.epochs == 7 and cfg.smooth_T == 600


def test_experiment_defaults():
    sim2 = parse_config_text("", "sim2")
    assert sim2.sample_sizes == (20, 50, 100, 500)
    assert sim2.replications == 20
    assert sim2.opt.method == "sgd" and sim2.opt.learning_rate == 0.005 and sim2.opt.epochs == 1000
    sim3 = parse_config_text("", "sim3")
    assert sim3.kron and sim3.jitter == 0.5
    assert len(parse_config_text("", "sim1").kernels) == 4


def test_config_errors(tmp_path):
    with pytest.raises(ParseError):
        parse_config(tmp_path / "missing.toml")
    with pytest.raises(UnknownKey) as e:
        parse_config_text('kernel = "matern(1,1,0.5)"\nbogus = 3\n')
    assert e.value.line == 2
    with pytest.raises(InvalidKernelSpec) as e:
        parse_config_text('\n\nkernel = "matern(1,1,0.7)"\n')
    assert e.value.line == 3
    with pytest.raises(ParseError) as e:
        parse_config_text("jitter = = 1\n")
    assert e.value.line == 1
    with pytest.raises(ParseError):
        parse_config_text('replications = "many"\n')
    with pytest.raises(ParseError):
        parse_config_text("replications = 0\n")
    with pytest.raises(ParseError):
        parse_config_text('experiment = "sim2"\n', "sim3")
    with pytest.raises(ParseError):
        parse_config_text("seed = 1\nopt.seed = 2\n")


@pytest.mark.parametrize("exp", EXPERIMENTS)
def test_dump_roundtrip(exp):
    cfg = parse_config_text("seed = 12345678901234567890\n", exp)
    again = parse_config_text(dump_config(cfg))
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_parse_config_file(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('experiment = "sim4"\nreplications = 3\n')
    cfg = parse_config(path)
    assert cfg.experiment == "sim4" and cfg.replications == 3 and cfg.opt.method == "adam"
