"""Replicated maximum-likelihood fits on simulated data.

For each sample size ``n`` and replication ``r``: draw design points, draw
``y ~ N(0, K + jitter I)`` from the true kernel, fit from the configured
initialization, and record every parameter alongside its identifiable
combination. Fits that fail numerically are counted and skipped.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..dataio import Dataset
from ..errors import NonFinite, NotPositiveDefinite
from ..gp import GpModel, sample_prior
from ..kernels import Separable, structure
from ..optimize import fit
from ..rng import RngStream
from .common import DESIGN, RESPONSE, STREAM_CODES, ReplicationTable, design_points, record_values, run_tasks


@dataclass(frozen=True)
class _Task:
    cfg: object
    seed: int
    code: int
    n: int
    rep: int


def simulate(cfg, seed, code, n, rep):
    """Design points and responses for one replication."""
    X = design_points(
        n, cfg.x_low, cfg.x_high, cfg.x_noise, RngStream(seed, (code, n, rep, DESIGN)), cfg.input_dim
    )
    m = structure(cfg.kernel).m
    y = sample_prior(GpModel(cfg.kernel, cfg.jitter), X, 1, seed, (code, n, rep, RESPONSE))[0]
    return Dataset(X, y.reshape(n, m) if m > 1 else y)


def _replicate(task: _Task):
    cfg = task.cfg
    data = simulate(cfg, task.seed, task.code, task.n, task.rep)
    model = GpModel(cfg.init, cfg.jitter, kron=cfg.kron)
    try:
        report = fit(model, data, cfg.opt, task.seed)
    except (NotPositiveDefinite, NonFinite) as e:
        return task.n, task.rep, None, type(e).__name__
    return task.n, task.rep, record_values(report.kernel, cfg.input_dim), None


def run_replications(cfg, seed, code, sizes=None, reps=None, workers=1) -> ReplicationTable:
    sizes = tuple(sizes or cfg.sample_sizes)
    reps = tuple(range(cfg.replications)) if reps is None else tuple(reps)
    truths = record_values(cfg.kernel, cfg.input_dim)
    table = ReplicationTable(params=list(truths))
    tasks = [_Task(cfg, seed, code, n, r) for n in sizes for r in reps]
    for n, rep, values, failure in run_tasks(_replicate, tasks, workers):
        if values is None:
            table.failures.append((n, rep, failure))
        else:
            table.add(n, rep, values, truths)
    table.sort()
    return table


def _check_structure(cfg):
    if type(cfg.kernel) is not type(cfg.init) or list(record_values(cfg.kernel)) != list(record_values(cfg.init)):
        raise ValueError("fit kernel structure must match the true kernel")


def run_sim_identifiability(cfg, seed, workers=1) -> ReplicationTable:
    """Mixture with distinct smoothness values; microergodic ``w1 s1 a1^(2 nu1)``."""
    _check_structure(cfg)
    return run_replications(cfg, seed, STREAM_CODES["sim2"], workers=workers)


def run_sim_separable(cfg, seed, workers=1) -> ReplicationTable:
    """Separable ``A * Matern`` kernel; identifiable matrix ``s a^(2 nu) A``."""
    _check_structure(cfg)
    if not isinstance(cfg.kernel, Separable):
        raise ValueError("separable simulation needs a sep(...) kernel")
    return run_replications(cfg, seed, STREAM_CODES["sim3"], workers=workers)


def run_sim_same_nu(cfg, seed, workers=1) -> ReplicationTable:
    """Mixture with one shared smoothness; identifiable ``sum w s a^(2 nu)``."""
    _check_structure(cfg)
    return run_replications(cfg, seed, STREAM_CODES["sim4"], workers=workers)
