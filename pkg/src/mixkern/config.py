"""Experiment configuration files and the kernel specification grammar.

Config files are flat TOML: ``key = value`` lines, where keys may be dotted
(``opt.lr = 0.005``), strings are quoted and lists use brackets. Unknown
keys are errors. Kernel specifications are strings such as::

    matern(16, 4, 0.5)
    rbf(1, 0.5)
    mix(0.1*matern(16,4,0.5), 0.3*matern(4,2,1.5), 0.6*matern(1,1,2.5)) + nugget(0.1)
    sep([[5,1],[1,5]], matern(10,1,0.5))

Numeric arguments may be simple arithmetic (``1/3``, ``-1``).
"""
from __future__ import annotations

import ast
import dataclasses
import hashlib
import operator
import re
import sys
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidKernel, InvalidKernelSpec, ParseError, UnknownKey, UnsupportedNu
from .kernels import RBF, KernelExpr, Matern, Mixture, Nugget, Separable
from .optimize import OptimizerConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


# ------------------------------------------------------------ kernel grammar

_ARITH = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _number(node, spec):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _number(node.operand, spec)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _ARITH:
        try:
            return _ARITH[type(node.op)](_number(node.left, spec), _number(node.right, spec))
        except ZeroDivisionError:
            raise InvalidKernelSpec(f"division by zero in {spec!r}") from None
    raise InvalidKernelSpec(f"expected a number in {spec!r}, got {ast.unparse(node)!r}")


def _call(node, spec):
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)) or node.keywords:
        raise InvalidKernelSpec(f"expected a kernel call in {spec!r}, got {ast.unparse(node)!r}")
    return node.func.id, node.args


def _arity(name, args, n, spec):
    if len(args) != n:
        raise InvalidKernelSpec(f"{name}() takes {n} arguments in {spec!r}")


def _leaf(node, spec):
    name, args = _call(node, spec)
    if name == "matern":
        _arity(name, args, 3, spec)
        return Matern(*(_number(a, spec) for a in args))
    if name == "rbf":
        _arity(name, args, 2, spec)
        return RBF(*(_number(a, spec) for a in args))
    raise InvalidKernelSpec(f"unknown kernel {name!r} in {spec!r}")


def _scalar(node, spec):
    name, args = _call(node, spec)
    if name != "mix":
        return _leaf(node, spec)
    if not args:
        raise InvalidKernelSpec(f"mix() needs at least one term in {spec!r}")
    weights, comps = [], []
    for term in args:
        if not (isinstance(term, ast.BinOp) and isinstance(term.op, ast.Mult)):
            raise InvalidKernelSpec(f"mixture terms must look like w*kernel in {spec!r}")
        weights.append(_number(term.left, spec))
        comps.append(_leaf(term.right, spec))
    return Mixture(tuple(weights), tuple(comps))


def _matrix(node, spec):
    if not isinstance(node, ast.List) or not all(isinstance(r, ast.List) for r in node.elts):
        raise InvalidKernelSpec(f"sep() needs a nested list matrix in {spec!r}")
    return tuple(tuple(_number(v, spec) for v in row.elts) for row in node.elts)


def _expr(node, spec):
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Add):
        name, args = _call(node.right, spec)
        if name != "nugget":
            raise InvalidKernelSpec(f"only '+ nugget(t)' may follow a kernel in {spec!r}")
        _arity(name, args, 1, spec)
        return Nugget(_number(args[0], spec), _expr_base(node.left, spec))
    return _expr_base(node, spec)


def _expr_base(node, spec):
    name, args = _call(node, spec)
    if name == "sep":
        _arity(name, args, 2, spec)
        return Separable(_matrix(args[0], spec), _scalar(args[1], spec))
    return _scalar(node, spec)


def parse_kernel(spec: str) -> KernelExpr:
    """Build a kernel from its text specification."""
    try:
        tree = ast.parse(spec.strip(), mode="eval")
    except SyntaxError as e:
        raise InvalidKernelSpec(f"cannot parse {spec!r}: {e.msg}") from None
    try:
        return _expr(tree.body, spec)
    except (InvalidKernel, UnsupportedNu) as e:
        raise InvalidKernelSpec(f"{spec!r}: {e}") from None


def _num(v):
    return repr(float(v))


def _format_leaf(k):
    if isinstance(k, Matern):
        return f"matern({_num(k.sigma2)}, {_num(k.alpha)}, {_num(k.nu)})"
    return f"rbf({_num(k.sigma2)}, {_num(k.alpha)})"


def _format_scalar(k):
    if isinstance(k, Mixture):
        terms = ", ".join(f"{_num(w)}*{_format_leaf(c)}" for w, c in zip(k.weights, k.components))
        return f"mix({terms})"
    return _format_leaf(k)


def format_kernel(k: KernelExpr) -> str:
    """Canonical text form; ``parse_kernel(format_kernel(k)) == k``."""
    if isinstance(k, Nugget):
        return f"{format_kernel(k.base)} + nugget({_num(k.tau2)})"
    if isinstance(k, Separable):
        rows = ", ".join("[" + ", ".join(_num(v) for v in row) + "]" for row in k.A)
        return f"sep([{rows}], {_format_scalar(k.base)})"
    return _format_scalar(k)


# ------------------------------------------------------------ experiment config

EXPERIMENTS = (
    "sample", "fit", "predict", "equiv-test", "smoothness",
    "sim1", "sim2", "sim3", "sim4", "regression", "inpaint",
)
DEFAULT_FRACTIONS = (0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "fit"
    kernel: Optional[KernelExpr] = None
    init: Optional[KernelExpr] = None
    kernels: tuple = ()
    kernel2: Optional[KernelExpr] = None
    sample_sizes: tuple = (100,)
    replications: int = 20
    jitter: float = 0.0
    x_low: float = -10.0
    x_high: float = 10.0
    x_noise: float = 0.2
    input_dim: int = 1
    draws: int = 1
    data: Optional[str] = None
    test_data: Optional[str] = None
    synthetic: str = "co2"
    synthetic_n: int = 200
    image: Optional[str] = None
    image_size: int = 32
    mask: int = 8
    fractions: tuple = DEFAULT_FRACTIONS
    smooth_T: int = 5000
    smooth_I: int = 200
    spectral_p: int = 1
    spectral_d: int = 0
    spectral_delta: float = 1.0
    spectral_cutoffs: tuple = (1e1, 1e2, 1e3, 1e4)
    opt: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    kron: bool = False
    out: str = "out"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.sample_sizes or any(n < 1 for n in self.sample_sizes):
            raise ValueError("sample sizes must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def digest(self):
        """Stable hash of the canonical config text, ignoring the output directory."""
        return hashlib.sha256(dump_config(self.replace(out="")).encode()).hexdigest()[:16]


# key -> (attribute, type)  for top-level attributes;  opt.* map into OptimizerConfig
_KEYS = {
    "experiment": ("experiment", "str"),
    "kernel": ("kernel", "kernel"),
    "init": ("init", "kernel"),
    "kernels": ("kernels", "kernels"),
    "kernel2": ("kernel2", "kernel"),
    "sample_sizes": ("sample_sizes", "ints"),
    "replications": ("replications", "int"),
    "jitter": ("jitter", "float"),
    "x_low": ("x_low", "float"),
    "x_high": ("x_high", "float"),
    "x_noise": ("x_noise", "float"),
    "input_dim": ("input_dim", "int"),
    "draws": ("draws", "int"),
    "data": ("data", "str"),
    "test_data": ("test_data", "str"),
    "synthetic": ("synthetic", "str"),
    "synthetic_n": ("synthetic_n", "int"),
    "image": ("image", "str"),
    "image_size": ("image_size", "int"),
    "mask": ("mask", "int"),
    "fractions": ("fractions", "floats"),
    "smooth.T": ("smooth_T", "int"),
    "smooth.I": ("smooth_I", "int"),
    "spectral.p": ("spectral_p", "int"),
    "spectral.d": ("spectral_d", "int"),
    "spectral.delta": ("spectral_delta", "float"),
    "spectral.cutoffs": ("spectral_cutoffs", "floats"),
    "seed": ("seed", "int"),
    "opt.seed": ("seed", "int"),
    "kron": ("kron", "bool"),
    "out": ("out", "str"),
}
_OPT_KEYS = {
    "opt.method": ("method", "str"),
    "opt.lr": ("learning_rate", "float"),
    "opt.epochs": ("epochs", "int"),
    "opt.beta1": ("adam_beta1", "float"),
    "opt.beta2": ("adam_beta2", "float"),
    "opt.eps": ("adam_eps", "float"),
    "opt.memory": ("lbfgs_memory", "int"),
    "opt.tol": ("tol", "float"),
}
KNOWN_KEYS = tuple(_KEYS) + tuple(_OPT_KEYS)

_SIM1_KERNELS = [
    "mix(0.03*matern(3,1,0.5), 0.33*matern(3,1,1.5), 0.63*matern(3,1,2.5))",
    "matern(3,1,0.5)",
    "matern(3,1,1.5)",
    "matern(3,1,2.5)",
]
_SIM2_TRUTH = "mix(0.1*matern(16,4,0.5), 0.3*matern(4,2,1.5), 0.6*matern(1,1,2.5))"
_SIM2_INIT = "mix(0.2*matern(5.0067,0.7615,0.5), 0.3*matern(10,0.4702,1.5), 0.5*matern(15,0.3280,2.5))"

# raw values, in config-file form, that each experiment starts from
DEFAULTS = {
    "sim1": {"kernels": _SIM1_KERNELS, "jitter": 1e-9, "smooth.T": 5000, "smooth.I": 200},
    "smoothness": {"kernel": _SIM1_KERNELS[0], "jitter": 1e-9, "smooth.T": 5000, "smooth.I": 200},
    "sim2": {
        "kernel": _SIM2_TRUTH,
        "init": _SIM2_INIT,
        "sample_sizes": [20, 50, 100, 500],
        "jitter": 0.1,
        "x_noise": 0.2,
        "opt.method": "sgd",
        "opt.lr": 0.005,
        "opt.epochs": 1000,
    },
    "sim3": {
        "kernel": "sep([[5,1],[1,5]], matern(10,1,0.5))",
        "init": "sep([[1,0],[0,1]], matern(1,10,0.5))",
        "sample_sizes": [50, 100, 200, 400],
        "jitter": 0.5,
        "x_noise": 0.2,
        "kron": True,
        "opt.method": "sgd",
        "opt.lr": 0.001,
        "opt.epochs": 2000,
    },
    "sim4": {
        "kernel": "mix(0.2*matern(16,2,0.5), 0.3*matern(4,1,0.5), 0.5*matern(1,4,0.5))",
        "init": "mix(0.2*matern(16,4,0.5), 0.3*matern(4,2,0.5), 0.5*matern(1,1,0.5))",
        "sample_sizes": [20, 50, 100, 500],
        "jitter": 0.1,
        "x_noise": 0.1,
        "opt.method": "adam",
        "opt.lr": 0.01,
        "opt.epochs": 1000,
    },
    "regression": {
        "kernels": [
            "mix(0.5*matern(10,4,0.5), 0.5*matern(500,0.1,1.5))",
            "mix(1/3*matern(10,4,0.5), 1/3*matern(500,0.1,1.5), 1/3*matern(500,0.1,2.5))",
            "mix(0.5*matern(500,0.1,1.5), 0.5*matern(500,0.1,2.5))",
            "matern(10,4,0.5)",
            "matern(500,0.1,1.5)",
            "matern(500,0.1,2.5)",
        ],
        "replications": 10,
        "jitter": 0.01,
        "synthetic": "co2",
        "synthetic_n": 200,
        "opt.method": "adam",
        "opt.lr": 0.05,
        "opt.epochs": 150,
    },
    "inpaint": {
        "kernels": [
            "mix(1/3*matern(1,1,0.5), 1/3*matern(1,1,1.5), 1/3*matern(1,1,2.5))",
            "matern(1,1,0.5)",
        ],
        "jitter": 0.01,
        "mask": 8,
        "image_size": 32,
        "opt.method": "adam",
        "opt.lr": 0.05,
        "opt.epochs": 200,
    },
}


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _line_of(text, key):
    last = re.escape(key.split(".")[-1])
    full = re.escape(key)
    for pattern in (rf"^\s*(\"?){full}\1\s*=", rf"^\s*(\"?){last}\1\s*="):
        for i, line in enumerate(text.splitlines(), 1):
            if re.match(pattern, line):
                return i
    return None


def _convert(key, kind, value, line):
    def bad(what):
        return ParseError(f"{key}: expected {what}, got {value!r}", line)

    try:
        if kind == "str":
            if not isinstance(value, str):
                raise bad("a quoted string")
            return value
        if kind == "kernel":
            if not isinstance(value, str):
                raise bad("a quoted kernel specification")
            try:
                return parse_kernel(value)
            except InvalidKernelSpec as e:
                raise InvalidKernelSpec(str(e), line) from None
        if kind == "kernels":
            if isinstance(value, str):
                value = [value]
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise bad("a list of kernel specifications")
            return tuple(_convert(key, "kernel", v, line) for v in value)
        if kind == "bool":
            if not isinstance(value, bool):
                raise bad("true or false")
            return value
        if kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise bad("an integer")
            return value
        if kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise bad("a number")
            return float(value)
        if kind in ("ints", "floats"):
            if not isinstance(value, list):
                raise bad("a bracketed list")
            return tuple(_convert(key, kind[:-1], v, line) for v in value)
    except ParseError:
        raise
    raise AssertionError(kind)  # pragma: no cover


def config_from_mapping(raw: dict, experiment=None, text="") -> ExperimentConfig:
    """Build a config from flat ``key -> value`` entries over the experiment's defaults."""
    for key in raw:
        if key not in _KEYS and key not in _OPT_KEYS:
            raise UnknownKey(f"unknown key {key!r}", _line_of(text, key))
    file_exp = raw.get("experiment")
    if experiment is not None and file_exp is not None and file_exp != experiment:
        raise ParseError(f"config is for {file_exp!r}, not {experiment!r}", _line_of(text, "experiment"))
    exp = experiment or file_exp or "fit"
    if exp not in EXPERIMENTS:
        raise ParseError(f"unknown experiment {exp!r}", _line_of(text, "experiment"))
    merged = dict(DEFAULTS.get(exp, {}))
    merged.update(raw)
    merged["experiment"] = exp
    if "seed" in raw and "opt.seed" in raw and raw["seed"] != raw["opt.seed"]:
        raise ParseError("seed and opt.seed disagree", _line_of(text, "opt.seed"))
    attrs, opt = {}, {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # weight-sum warnings resurface when experiments run
        for key, value in merged.items():
            line = _line_of(text, key) if key in raw else None
            if key in _OPT_KEYS:
                name, kind = _OPT_KEYS[key]
                opt[name] = _convert(key, kind, value, line)
            else:
                name, kind = _KEYS[key]
                attrs[name] = _convert(key, kind, value, line)
    try:
        attrs["opt"] = OptimizerConfig(**opt)
        return ExperimentConfig(**attrs)
    except ValueError as e:
        raise ParseError(str(e)) from None


def parse_config_text(text: str, experiment=None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        raise ParseError(str(e), int(m.group(1)) if m else None) from None
    return config_from_mapping(_flatten(raw), experiment, text)


def parse_config(path, experiment=None) -> ExperimentConfig:
    """Read a config file. ``experiment`` selects defaults when the file has no ``experiment`` key."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ParseError(f"cannot read config {path}: {e.strerror or e}") from None
    return parse_config_text(text, experiment)


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(type(v))


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize every setting; ``parse_config_text(dump_config(c)) == c``."""
    lines = []
    for key, (name, kind) in _KEYS.items():
        if key == "opt.seed":
            continue
        v = getattr(cfg, name)
        if v is None:
            continue
        if kind == "kernel":
            v = format_kernel(v)
        elif kind == "kernels":
            v = [format_kernel(k) for k in v]
        elif kind in ("ints", "floats"):
            v = list(v)
        lines.append(f"{key} = {_toml_value(v)}")
    for key, (name, _) in _OPT_KEYS.items():
        lines.append(f"{key} = {_toml_value(getattr(cfg.opt, name))}")
    return "\n".join(lines) + "\n"
