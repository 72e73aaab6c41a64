"""Shared plumbing for the experiment drivers: designs, result tables, outputs."""
from __future__ import annotations

import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .. import __version__, _backend
from ..dataio import csv_text
from ..kernels import Nugget, Separable, parameters, structure
from ..rng import RngStream, uniform_jitter
from ..spectral import microergodic

# first element of every RNG stream path
STREAM_CODES = {
    "sim1": 1, "sim2": 2, "sim3": 3, "sim4": 4, "regression": 5, "inpaint": 6,
    "sample": 7, "smoothness": 8, "synthetic": 9,
}
# last element: what the draw is for
DESIGN, RESPONSE, SPLIT = 0, 1, 2


def design_points(n, low, high, noise, stream: RngStream, dim=1):
    """Equal-spaced points on [low, high], each moved by uniform(-noise/n, noise/n).

    With ``dim > 1`` every coordinate is an independently perturbed copy of
    the same sequence.
    """
    base = np.linspace(low, high, n)
    cols = [base + uniform_jitter(stream.child(j), n, noise) for j in range(dim)]
    return np.column_stack(cols)


def record_values(kernel, p=1):
    """Ordered ``name -> value`` of the reportable parameters of a fitted kernel.

    Separable kernels report the upper triangle of ``A`` rather than its
    Cholesky factor; the identifiable combination is appended as
    ``microergodic`` (scalar) or ``micro[i,j]`` (matrix).
    """
    out = {}
    k = kernel.base if isinstance(kernel, Nugget) else kernel
    if isinstance(kernel, Nugget):
        out["tau2"] = kernel.tau2
    if isinstance(k, Separable):
        A = k.matrix
        for i in range(A.shape[0]):
            for j in range(i, A.shape[0]):
                out[f"A[{i},{j}]"] = float(A[i, j])
        out.update(parameters(k.base))
        M = microergodic(k, p).primary_value
        for i in range(M.shape[0]):
            for j in range(i, M.shape[0]):
                out[f"micro[{i},{j}]"] = float(M[i, j])
        return out
    out.update({n: v for n, v in parameters(k).items()})
    out["microergodic"] = float(microergodic(k, p).primary_value)
    return out


@dataclass
class ReplicationTable:
    """One row per (sample size, replication, parameter)."""

    rows: list = field(default_factory=list)  # (n, rep, param, estimate, truth)
    failures: list = field(default_factory=list)  # (n, rep, reason)
    params: list = field(default_factory=list)  # reporting order

    def add(self, n, rep, estimates: dict, truths: dict):
        if not self.params:
            self.params = list(truths)
        for name in self.params:
            self.rows.append((n, rep, name, float(estimates[name]), float(truths[name])))

    def sort(self):
        order = {p: i for i, p in enumerate(self.params)}
        self.rows.sort(key=lambda r: (r[0], r[1], order[r[2]]))
        self.failures.sort()

    @property
    def sample_sizes(self):
        return sorted({r[0] for r in self.rows})

    def estimates(self, n, param):
        return np.array([r[3] for r in self.rows if r[0] == n and r[2] == param])

    def truth(self, param):
        return next(r[4] for r in self.rows if r[2] == param)

    def stats(self, n, param):
        est = self.estimates(n, param)
        q1, med, q3 = np.percentile(est, [25, 50, 75])
        truth = self.truth(param)
        return {
            "median": float(med),
            "q1": float(q1),
            "q3": float(q3),
            "iqr": float(q3 - q1),
            "truth": truth,
            "rel_error": abs(float(med) - truth) / abs(truth) if truth else float("nan"),
            "count": int(est.size),
        }

    def summary_rows(self):
        out = []
        for n in self.sample_sizes:
            for p in self.params:
                s = self.stats(n, p)
                out.append((n, p, s["median"], s["q1"], s["q3"], s["iqr"], s["truth"], s["count"]))
        return out

    def write(self, out_dir, stem):
        self.sort()
        out = Path(out_dir)
        write_text(out / f"{stem}.csv", csv_text(self.rows, ["n", "rep", "param", "estimate", "truth"]))
        write_text(
            out / f"{stem}_summary.csv",
            csv_text(self.summary_rows(), ["n", "param", "median", "q1", "q3", "iqr", "truth", "count"]),
        )
        write_text(out / f"{stem}_failures.csv", csv_text(self.failures, ["n", "rep", "reason"]))


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


def write_manifest(out_dir, cfg, seed, extra=()):
    lines = [
        f"experiment = {cfg.experiment}",
        f"config_hash = {cfg.digest()}",
        f"seed = {seed}",
        f"mixkern = {__version__}",
        f"backend = {_backend.name}",
        f"numpy = {np.__version__}",
        f"scipy = {scipy.__version__}",
        f"python = {platform.python_version()}",
    ]
    lines += [f"{k} = {v}" for k, v in extra]
    write_text(Path(out_dir) / "manifest.txt", "\n".join(lines) + "\n")


def run_tasks(fn, tasks, workers=1):
    """Apply ``fn`` to every task, in worker processes when ``workers > 1``.

    Each task carries its own RNG stream path, so results do not depend on
    scheduling; callers sort before writing.
    """
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def output_dim_of(kernel):
    return structure(kernel).m
