"""Maximum-likelihood fitting by first-order optimizers.

Parameters are optimized in an unconstrained space:

* ``sigma2``, ``alpha``, ``tau2`` and the diagonal of the factor ``G`` -- log;
* off-diagonal entries of ``G`` -- unchanged;
* mixture weights -- softmax of logits, with the first logit pinned to 0.

The objective is the negative log marginal likelihood of the full data set,
minimized with full-batch gradients. SGD and Adam take fixed-rule steps;
L-BFGS steps are accepted by a backtracking Armijo search.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import MixedCase, NonFinite, NotPositiveDefinite, UnsupportedKernel
from .gp import GpModel, Objective
from .kernels import KernelExpr, parameters, structure, with_parameters

_DIAG_RE = re.compile(r"G\[(\d+),(\d+)\]$")
_W_RE = re.compile(r"w\[(\d+)\]$")

METHODS = ("sgd", "adam", "lbfgs")


class ParamTransform:
    """Map between a kernel's natural parameters and an unconstrained vector."""

    def __init__(self, template: KernelExpr):
        self.template = template
        self.names = list(parameters(template))
        self.weight_names = [n for n in self.names if _W_RE.match(n)]
        self.kinds = {}
        for name in self.names:
            g = _DIAG_RE.match(name)
            if _W_RE.match(name):
                self.kinds[name] = "logit"
            elif g and g.group(1) != g.group(2):
                self.kinds[name] = "id"
            else:
                self.kinds[name] = "log"
        # unconstrained coordinates: every name except the pinned first weight
        self.free = [n for n in self.names if not (self.weight_names and n == self.weight_names[0])]

    @property
    def size(self):
        return len(self.free)

    def to_unconstrained(self, k: KernelExpr):
        vals = parameters(k)
        if list(vals) != self.names:
            raise ValueError("kernel structure does not match the template")
        w0 = vals[self.weight_names[0]] if self.weight_names else None
        out = []
        with np.errstate(divide="ignore", invalid="ignore"):
            for name in self.free:
                kind, v = self.kinds[name], vals[name]
                if kind == "log":
                    out.append(np.log(v))
                elif kind == "logit":
                    out.append(np.log(v) - np.log(w0))
                else:
                    out.append(v)
        out = np.array(out, dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFinite("parameter has no finite unconstrained value (zero weight or variance?)")
        return out

    def natural(self, v):
        """Natural parameter values (dict) for an unconstrained vector."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,) or not np.all(np.isfinite(v)):
            raise NonFinite("unconstrained vector must be finite with the template's length")
        free = dict(zip(self.free, v))
        vals = {}
        if self.weight_names:
            logits = np.array([0.0] + [free[n] for n in self.weight_names[1:]])
            e = np.exp(logits - logits.max())
            w = e / e.sum()
            vals.update(zip(self.weight_names, w.tolist()))
        for name in self.free:
            kind = self.kinds[name]
            if kind == "log":
                vals[name] = float(np.exp(free[name]))
            elif kind == "id":
                vals[name] = float(free[name])
        return {name: vals[name] for name in self.names}

    def from_unconstrained(self, v) -> KernelExpr:
        return with_parameters(self.template, self.natural(v))

    def chain(self, v, grad_natural):
        """Pull a natural-space gradient back to the unconstrained coordinates."""
        vals = self.natural(v)
        g = dict(zip(self.names, np.asarray(grad_natural, dtype=float)))
        mean_w = sum(vals[n] * g[n] for n in self.weight_names)
        out = np.empty(self.size)
        for i, name in enumerate(self.free):
            kind = self.kinds[name]
            if kind == "log":
                out[i] = g[name] * vals[name]
            elif kind == "logit":
                out[i] = vals[name] * (g[name] - mean_w)
            else:
                out[i] = g[name]
        return out


def to_unconstrained(k: KernelExpr):
    return ParamTransform(k).to_unconstrained(k)


def from_unconstrained(template: KernelExpr, v) -> KernelExpr:
    return ParamTransform(template).from_unconstrained(v)


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "adam"
    learning_rate: float = 0.01
    epochs: int = 1000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    lbfgs_memory: int = 10
    tol: float = 1e-8

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown optimizer {self.method!r}; choose from {METHODS}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if int(self.epochs) < 1:
            raise ValueError("epochs must be at least 1")


@dataclass
class OptimizerState:
    t: int = 0
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    history: list = field(default_factory=list)
    prev_x: Optional[np.ndarray] = None
    prev_g: Optional[np.ndarray] = None


def optimizer_step(state: OptimizerState, x, grad, cfg: OptimizerConfig):
    """One descent step on a loss with gradient ``grad`` at ``x``.

    Returns ``(state, x_new)``; ``state`` is updated in place.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFinite("non-finite gradient")
    state.t += 1
    lr = cfg.learning_rate
    if cfg.method == "sgd":
        return state, x - lr * g
    if cfg.method == "adam":
        if state.m is None:
            state.m = np.zeros_like(x)
            state.v = np.zeros_like(x)
        b1, b2 = cfg.adam_beta1, cfg.adam_beta2
        state.m = b1 * state.m + (1 - b1) * g
        state.v = b2 * state.v + (1 - b2) * g * g
        m_hat = state.m / (1 - b1**state.t)
        v_hat = state.v / (1 - b2**state.t)
        return state, x - lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return state, x - lr * _lbfgs_direction(state, x, g, cfg.lbfgs_memory)


ARMIJO_C = 1e-4
MAX_BACKTRACKS = 40


def _lbfgs_search(state, x, loss, g, evaluate, cfg):
    """L-BFGS direction plus a backtracking Armijo search starting at ``learning_rate``.

    The first direction is scaled to unit infinity norm. Returns
    ``(x, loss, g)`` at the accepted point, or None if no decrease was found.
    """
    d = -_lbfgs_direction(state, x, g, cfg.lbfgs_memory)
    slope = float(g @ d)
    if not slope < 0:  # curvature pairs went stale; restart from steepest descent
        state.history.clear()
        d, slope = -g, -float(g @ g)
    if not state.history:
        scale = 1.0 / max(np.max(np.abs(d)), 1.0)
        d, slope = d * scale, slope * scale
    t = cfg.learning_rate
    for _ in range(MAX_BACKTRACKS):
        x_new = x + t * d
        try:
            new_loss, new_g = evaluate(x_new)
        except (NonFinite, NotPositiveDefinite):
            new_loss = np.inf
        if np.isfinite(new_loss) and new_loss <= loss + ARMIJO_C * t * slope and np.all(np.isfinite(new_g)):
            state.t += 1
            return x_new, new_loss, new_g
        t *= 0.5
    return None


def _lbfgs_direction(state, x, g, memory):
    if state.prev_x is not None:
        s, y = x - state.prev_x, g - state.prev_g
        if float(s @ y) > 1e-12:
            state.history.append((s, y))
            del state.history[:-memory]
    state.prev_x, state.prev_g = x.copy(), g.copy()
    q = g.copy()
    coeffs = []
    for s, y in reversed(state.history):
        a = float(s @ q) / float(y @ s)
        q -= a * y
        coeffs.append(a)
    if state.history:
        s, y = state.history[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y), a in zip(state.history, reversed(coeffs)):
        b = float(y @ q) / float(y @ s)
        q += s * (a - b)
    return q


@dataclass
class FitReport:
    loss_trace: np.ndarray
    kernel: KernelExpr
    final_params: dict
    microergodic: object
    converged: bool
    epochs: int
    final_loss: float
    stop_reason: str = "epochs"


def _microergodic_or_none(kernel, p):
    from .spectral import microergodic

    try:
        return microergodic(kernel, p)
    except (MixedCase, UnsupportedKernel):
        return None


def fit(model: GpModel, data, cfg: OptimizerConfig, seed=None) -> FitReport:
    """Fit the model's free parameters to ``data`` (anything with ``X`` and ``y``).

    The model's kernel is the initialization. Gradients are full-batch, so
    the fit is deterministic; ``seed`` is accepted for interface symmetry
    with the experiment drivers and does not affect the result. Raises ``NonFinite`` when the
    objective is not finite at the starting point and ``NotPositiveDefinite``
    when a covariance cannot be factored even after the jitter retry.
    """
    X = np.asarray(data.X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    m = structure(model.kernel).m
    obj = Objective(X, data.y, model.jitter, model.kron, m)
    tr = ParamTransform(model.kernel)
    x = tr.to_unconstrained(model.kernel)

    def evaluate(v):
        lml, g = obj(tr.from_unconstrained(v))
        return -lml, -tr.chain(v, g)

    state = OptimizerState()
    trace = []
    stop = "epochs"
    loss, gu = evaluate(x)
    if not (np.isfinite(loss) and np.all(np.isfinite(gu))):
        raise NonFinite("objective is not finite at the initial parameters")
    for _ in range(int(cfg.epochs)):
        trace.append(loss)
        if np.max(np.abs(gu), initial=0.0) < cfg.tol:
            stop = "gradient"
            break
        if cfg.method == "lbfgs":
            step = _lbfgs_search(state, x, loss, gu, evaluate, cfg)
            if step is None:
                stop = "line-search"
                break
            x, loss, gu = step
            continue
        state, x_new = optimizer_step(state, x, gu, cfg)
        try:
            new_loss, new_gu = evaluate(x_new)
        except NonFinite:
            stop = "nonfinite"
            break
        if not (np.isfinite(new_loss) and np.all(np.isfinite(new_gu))):
            stop = "nonfinite"
            break
        x, loss, gu = x_new, new_loss, new_gu
    kernel = tr.from_unconstrained(x)
    return FitReport(
        loss_trace=np.array(trace),
        kernel=kernel,
        final_params=parameters(kernel),
        microergodic=_microergodic_or_none(kernel, X.shape[1]),
        converged=bool(np.max(np.abs(gu), initial=0.0) < cfg.tol),
        epochs=len(trace),
        final_loss=float(loss),
        stop_reason=stop,
    )
