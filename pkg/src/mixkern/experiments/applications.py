"""Prediction benchmarks: random-split regression and image inpainting."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..dataio import Dataset, csv_text, write_pgm
from ..errors import MaskTooLarge, NonFinite, NotPositiveDefinite, SplitTooSmall
from ..gp import GpModel, mse, posterior_predict
from ..kernels import leaves
from ..optimize import OptimizerConfig, fit
from ..rng import RngStream
from .common import SPLIT, STREAM_CODES, run_tasks, write_text

MIN_ROWS = 40


def kernel_label(k):
    """Smoothness signature such as ``1/2+3/2``."""
    return "+".join(str(Fraction(c.nu).limit_denominator(2)) if hasattr(c, "nu") else "rbf" for c in leaves(k))


def _labels(kernels):
    labels = [kernel_label(k) for k in kernels]
    if len(set(labels)) < len(labels):
        labels = [f"{i}:{lab}" for i, lab in enumerate(labels)]
    return labels


def fit_predict(kernel, jitter, opt, X_train, y_train, X_test):
    """Fit on centered targets, predict at ``X_test``, restore the mean."""
    mu = float(np.mean(y_train))
    model = GpModel(kernel, jitter)
    report = fit(model, Dataset(X_train, y_train - mu), opt)
    post = posterior_predict(model.replace(report.kernel), X_train, y_train - mu, X_test)
    return post.mean + mu, report


@dataclass
class MseTable:
    rows: list = field(default_factory=list)  # (kernel, fraction, rep, mse)

    def sort(self, labels):
        order = {lab: i for i, lab in enumerate(labels)}
        self.rows.sort(key=lambda r: (order[r[0]], r[1], r[2]))

    def values(self, kernel, fraction):
        return np.array([r[3] for r in self.rows if r[0] == kernel and r[1] == fraction])

    def median(self, kernel, fraction):
        return float(np.nanmedian(self.values(kernel, fraction)))

    @property
    def kernels(self):
        return list(dict.fromkeys(r[0] for r in self.rows))

    @property
    def fractions(self):
        return sorted({r[1] for r in self.rows})

    def summary_rows(self):
        return [(k, f, self.median(k, f)) for k in self.kernels for f in self.fractions]

    def write(self, out_dir, stem="regression"):
        out = Path(out_dir)
        write_text(out / f"{stem}.csv", csv_text(self.rows, ["kernel", "fraction", "rep", "mse"]))
        write_text(out / f"{stem}_summary.csv", csv_text(self.summary_rows(), ["kernel", "fraction", "median_mse"]))


def split_indices(n, fraction, seed, fi, rep):
    """Deterministic random train/test split; raises SplitTooSmall when either side is empty."""
    if not 0 < fraction < 1:
        raise SplitTooSmall(f"training fraction must lie strictly between 0 and 1, got {fraction}")
    n_train = int(round(fraction * n))
    if n_train < 1 or n_train >= n:
        raise SplitTooSmall(f"fraction {fraction} of {n} rows leaves an empty side")
    u = RngStream(seed, (STREAM_CODES["regression"], fi, rep, SPLIT)).uniform(n)
    perm = np.argsort(u, kind="stable")
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def _regress_task(task):
    data, kernel, label, fraction, fi, rep, seed, jitter, opt = task
    tr, te = split_indices(data.n, fraction, seed, fi, rep)
    try:
        pred, _ = fit_predict(kernel, jitter, opt, data.X[tr], data.y[tr], data.X[te])
        err = mse(pred, data.y[te])
    except (NotPositiveDefinite, NonFinite):
        err = float("nan")
    return label, fraction, rep, err


def run_regression_benchmark(
    data: Dataset, kernels, fractions, reps, seed, opt: OptimizerConfig = None, jitter=0.0, workers=1
) -> MseTable:
    """Test MSE of each kernel for every (training fraction, random split).

    All kernels see the same splits. Targets are centered by the training
    mean before fitting.
    """
    if data.n < MIN_ROWS:
        raise SplitTooSmall(f"need at least {MIN_ROWS} rows, got {data.n}")
    if data.m != 1:
        raise ValueError("regression benchmark expects a single output")
    opt = opt or OptimizerConfig()
    for f in fractions:  # validate before doing any work
        split_indices(data.n, f, seed, 0, 0)
    labels = _labels(kernels)
    tasks = [
        (data, k, lab, float(f), fi, rep, seed, jitter, opt)
        for k, lab in zip(kernels, labels)
        for fi, f in enumerate(fractions)
        for rep in range(reps)
    ]
    table = MseTable(run_tasks(_regress_task, tasks, workers))
    table.sort(labels)
    return table


# ------------------------------------------------------------------ inpainting


def centered_mask(shape, side):
    """Boolean mask of a centered ``side x side`` square."""
    h, w = shape
    if side < 1 or side >= min(h, w):
        raise MaskTooLarge(f"mask side {side} must be between 1 and {min(h, w) - 1} for a {h}x{w} image")
    mask = np.zeros(shape, dtype=bool)
    r0, c0 = (h - side) // 2, (w - side) // 2
    mask[r0 : r0 + side, c0 : c0 + side] = True
    return mask


@dataclass
class InpaintResult:
    labels: list
    images: dict  # label -> full image with the masked block predicted
    mse: dict  # label -> test MSE on the masked pixels (0..255 units)
    kernels: dict  # label -> fitted kernel
    mask: np.ndarray

    def rows(self):
        return [(lab, self.mse[lab]) for lab in self.labels]

    def write(self, out_dir, stem="inpaint"):
        out = Path(out_dir)
        write_text(out / f"{stem}.csv", csv_text(self.rows(), ["kernel", "mse"]))
        for i, lab in enumerate(self.labels):
            write_pgm(self.images[lab], out / f"{stem}_{i}.pgm")


def run_image_inpaint(image, side, kernels, opt: OptimizerConfig, jitter=0.01, seed=0) -> InpaintResult:
    """Predict a centered square block from the remaining pixels.

    Pixel coordinates (row, column) are the inputs. Intensities are scaled
    to [0, 1] and centered by the training mean before fitting; predictions
    are mapped back to the 0..255 range.
    """
    img = np.asarray(image, dtype=float)
    mask = centered_mask(img.shape, side)
    rows, cols = np.indices(img.shape)
    coords = np.column_stack([rows.ravel(), cols.ravel()]).astype(float)
    flat, m = img.ravel() / 255.0, mask.ravel()
    labels = _labels(kernels)
    images, errors, fitted = {}, {}, {}
    for k, lab in zip(kernels, labels):
        pred, report = fit_predict(k, jitter, opt, coords[~m], flat[~m], coords[m])
        out = img.copy()
        out[mask] = 255.0 * pred
        images[lab] = out
        errors[lab] = mse(255.0 * pred, img[mask])
        fitted[lab] = report.kernel
    return InpaintResult(labels, images, errors, fitted, mask)
