"""Seeded simulation and benchmark drivers; every run is a pure function of (config, seed)."""
from .applications import (
    InpaintResult,
    MseTable,
    centered_mask,
    fit_predict,
    kernel_label,
    run_image_inpaint,
    run_regression_benchmark,
    split_indices,
)
from .common import STREAM_CODES, ReplicationTable, design_points, record_values, write_manifest
from .identifiability import run_sim_identifiability, run_sim_same_nu, run_sim_separable, simulate
from .smoothness import SmoothnessReport, run_sim_smoothness, smoothness_report
from .synthetic import synthetic_co2, synthetic_digit, synthetic_matern

__all__ = [
    "InpaintResult",
    "MseTable",
    "ReplicationTable",
    "SmoothnessReport",
    "STREAM_CODES",
    "centered_mask",
    "design_points",
    "fit_predict",
    "kernel_label",
    "record_values",
    "run_image_inpaint",
    "run_regression_benchmark",
    "run_sim_identifiability",
    "run_sim_same_nu",
    "run_sim_separable",
    "run_sim_smoothness",
    "simulate",
    "smoothness_report",
    "split_indices",
    "synthetic_co2",
    "synthetic_digit",
    "synthetic_matern",
    "write_manifest",
]
