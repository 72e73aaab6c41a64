"""Empirical mean-square continuity and differentiability of sample paths.

Paths are drawn at ``x_0 = 0`` and ``x_i = 1/i``. With ``T`` draws,

    beta_i  = mean_t (y_i - y_0)^2           (-> 0 iff continuous)
    gamma_i = beta_i / x_i^2                 (bounded iff differentiable)

``gamma_slope`` is the least-squares slope of ``log gamma_i`` against
``log(1/x_i)`` over the smallest decade of ``x``: near 1 when ``gamma``
blows up like ``1/x``, near 0 when it converges.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import format_kernel
from ..gp import GpModel, sample_prior
from ..kernels import Mixture, SimplexWarning
from .common import STREAM_CODES

CONTINUITY_RATIO = 0.05
SLOPE_DIFFERENTIABLE = 0.3
SLOPE_ROUGH = 0.7


@dataclass
class SmoothnessReport:
    kernel: str
    x_points: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    beta_limit_flag: bool
    gamma_slope: float
    differentiable_flag: Optional[bool]

    def rows(self):
        return [(self.kernel, i + 1, x, b, g) for i, (x, b, g) in enumerate(zip(self.x_points, self.beta, self.gamma))]

    def summary_row(self):
        d = "inconclusive" if self.differentiable_flag is None else str(self.differentiable_flag).lower()
        return (self.kernel, self.gamma_slope, str(self.beta_limit_flag).lower(), d)


def smoothness_points(I):
    return np.concatenate([[0.0], 1.0 / np.arange(1, I + 1)])


def gamma_slope(x, gamma):
    keep = x <= 10.0 * x.min()
    return float(np.polyfit(np.log(1.0 / x[keep]), np.log(gamma[keep]), 1)[0])


def path_increments(kernel, T, I, jitter, seed, path):
    """(x_i, beta_i, gamma_i) from ``T`` sampled paths."""
    X = smoothness_points(I)[:, None]
    Y = sample_prior(GpModel(kernel, jitter), X, T, seed, path)
    diff = Y[:, 1:] - Y[:, :1]
    x = X[1:, 0]
    beta = np.mean(diff * diff, axis=0)
    return x, beta, beta / (x * x)


def smoothness_report(kernel, T, I, jitter, seed, path):
    if T < 500:
        raise ValueError("at least 500 sampled paths are needed")
    x, beta, gamma = path_increments(kernel, T, I, jitter, seed, path)
    slope = gamma_slope(x, gamma)
    if slope < SLOPE_DIFFERENTIABLE:
        diff = True
    elif slope > SLOPE_ROUGH:
        diff = False
    else:
        diff = None
    return SmoothnessReport(
        kernel=format_kernel(kernel),
        x_points=x,
        beta=beta,
        gamma=gamma,
        beta_limit_flag=bool(beta[-1] < CONTINUITY_RATIO * beta[0]),
        gamma_slope=slope,
        differentiable_flag=diff,
    )


def run_sim_smoothness(cfg, seed):
    """One :class:`SmoothnessReport` per kernel in ``cfg.kernels`` (or ``cfg.kernel``)."""
    kernels = cfg.kernels or (cfg.kernel,)
    code = STREAM_CODES.get(cfg.experiment, STREAM_CODES["sim1"])
    reports = []
    for idx, k in enumerate(kernels):
        if isinstance(k, Mixture) and abs(sum(k.weights) - 1.0) > 1e-12:
            # used as given: a nonnegative combination is still a valid kernel
            warnings.warn(f"mixture weights sum to {sum(k.weights)!r}; not renormalized", SimplexWarning, stacklevel=2)
        reports.append(smoothness_report(k, cfg.smooth_T, cfg.smooth_I, cfg.jitter, seed, (code, idx)))
    return reports
