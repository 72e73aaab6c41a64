"""Bundled stand-in data sets, generated deterministically from a seed."""
from __future__ import annotations

import numpy as np

from ..dataio import Dataset
from ..gp import GpModel, sample_prior
from ..kernels import Matern
from ..rng import RngStream
from .common import DESIGN, RESPONSE, STREAM_CODES, design_points

_CODE = STREAM_CODES["synthetic"]


def synthetic_co2(n=200, seed=0):
    """Monthly CO2-like series: linear trend, annual cycle, Matérn(1/2) residual.

    Inputs are decimal years from 1958; outputs are in ppm.
    """
    t = 1958.0 + (np.arange(n) + 0.5) / 12.0
    trend = 315.0 + 1.3 * (t - 1958.0)
    season = 2.8 * np.sin(2 * np.pi * t) + 0.7 * np.cos(4 * np.pi * t)
    resid = sample_prior(GpModel(Matern(0.3, 1.0, 0.5)), t[:, None], 1, seed, (_CODE, 1, n, RESPONSE))[0]
    return Dataset(t[:, None], trend + season + resid)


def synthetic_matern(n=400, kernel=None, jitter=0.01, seed=0, low=0.0, high=10.0):
    """Noisy draw from a GP (default Matérn(1, 1, 1/2)) at jittered equal-spaced points."""
    kernel = kernel or Matern(1.0, 1.0, 0.5)
    X = design_points(n, low, high, 0.2, RngStream(seed, (_CODE, 2, n, DESIGN)))
    y = sample_prior(GpModel(kernel, jitter), X, 1, seed, (_CODE, 2, n, RESPONSE))[0]
    return Dataset(X, y)


def synthetic_digit(size=32):
    """A handwritten-zero-like grayscale image: a slightly tilted elliptical ring."""
    c = (size - 1) / 2.0
    r, q = np.mgrid[0:size, 0:size].astype(float)
    u, v = (r - c) / (0.36 * size), (q - c) / (0.26 * size)
    theta = 0.25
    a = u * np.cos(theta) + v * np.sin(theta)
    b = -u * np.sin(theta) + v * np.cos(theta)
    radius = np.sqrt(a * a + b * b)
    stroke = np.exp(-(((radius - 1.0) / 0.22) ** 2))
    return np.clip(np.rint(255.0 * stroke), 0, 255)
