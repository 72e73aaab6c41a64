"""``mixkern <subcommand> --config path [--seed u64] [--out dir] [--paper-scale]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
Every subcommand writes its CSV outputs and a ``manifest.txt`` into ``--out``.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import errors
from .config import config_from_mapping, format_kernel, parse_config
from .dataio import Dataset, csv_text, read_csv_dataset, read_csv_inputs, read_pgm, write_dataset, write_pgm
from .experiments import applications, identifiability, smoothness, synthetic
from .experiments.common import DESIGN, RESPONSE, STREAM_CODES, design_points, write_manifest, write_text
from .gp import GpModel, mse, posterior_predict, sample_prior
from .kernels import structure
from .optimize import fit
from .rng import RngStream
from .spectral import equivalence_diagnostic, moment_integral_diagnostic

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
PAPER_REPLICATIONS = 100

SUBCOMMANDS = (
    "sample", "fit", "predict", "equiv-test", "smoothness",
    "sim1", "sim2", "sim3", "sim4", "regress", "inpaint",
)
_EXPERIMENT = {"regress": "regression"}

_NUMERIC = (errors.NotPositiveDefinite, errors.NonFinite, errors.QuadratureFailure)
_IO = (OSError, errors.SchemaMismatch, errors.NonFiniteValue, errors.UnsupportedFormat, errors.CorruptHeader)


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="mixkern", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="experiment config file (defaults apply when omitted)")
        p.add_argument("--seed", type=_u64, help="root seed, overrides the config")
        p.add_argument("--out", help="output directory, overrides the config")
        p.add_argument("--paper-scale", action="store_true", help=f"{PAPER_REPLICATIONS} replications")
        p.add_argument("--input-dim", type=int, help="input dimension for simulated designs")
        p.add_argument("--workers", type=int, default=1, help="worker processes for replications")
    return ap


def load_config(args):
    exp = _EXPERIMENT.get(args.command, args.command)
    if args.config:
        cfg = parse_config(args.config, exp)
    else:
        cfg = config_from_mapping({}, exp)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    if args.paper_scale:
        changes["replications"] = PAPER_REPLICATIONS
    if args.input_dim is not None:
        changes["input_dim"] = args.input_dim
    return cfg.replace(**changes) if changes else cfg


def _need(value, key):
    if value is None:
        raise errors.ParseError(f"missing required key {key!r}")
    return value


# ------------------------------------------------------------------ commands


def cmd_sample(cfg, out, workers):
    kernel = _need(cfg.kernel, "kernel")
    code = STREAM_CODES["sample"]
    files = []
    for n in cfg.sample_sizes:
        X = design_points(n, cfg.x_low, cfg.x_high, cfg.x_noise, RngStream(cfg.seed, (code, n, 0, DESIGN)), cfg.input_dim)
        Y = sample_prior(GpModel(kernel, cfg.jitter), X, cfg.draws, cfg.seed, (code, n, 0, RESPONSE))
        m = structure(kernel).m
        for t in range(cfg.draws):
            y = Y[t].reshape(n, m) if m > 1 else Y[t]
            name = f"sample_n{n}.csv" if cfg.draws == 1 else f"sample_n{n}_{t}.csv"
            write_dataset(Dataset(X, y), out / name)
            files.append(name)
    return [("files", " ".join(files))]


def _load_data(cfg):
    return read_csv_dataset(_need(cfg.data, "data"))


def cmd_fit(cfg, out, workers):
    data = _load_data(cfg)
    init = cfg.init or _need(cfg.kernel, "kernel")
    report = fit(GpModel(init, cfg.jitter, cfg.kron), data, cfg.opt, cfg.seed)
    trace = [(i, v) for i, v in enumerate(report.loss_trace)]
    write_text(out / "fit_trace.csv", csv_text(trace, ["epoch", "loss"]))
    write_text(out / "fit_params.csv", csv_text(report.final_params.items(), ["param", "value"]))
    write_text(out / "fit_kernel.txt", format_kernel(report.kernel) + "\n")
    return [("epochs", report.epochs), ("stop_reason", report.stop_reason), ("final_loss", repr(report.final_loss))]


def cmd_predict(cfg, out, workers):
    data = _load_data(cfg)
    kernel = _need(cfg.kernel, "kernel")
    X_test = read_csv_inputs(cfg.test_data) if cfg.test_data else data.X
    m = structure(kernel).m
    post = posterior_predict(GpModel(kernel, cfg.jitter), data.X, data.y, X_test)
    mean = post.per_output(m)
    var = np.maximum(post.var, 0.0).reshape(-1, m)
    header = [f"x{i + 1}" for i in range(X_test.shape[1])]
    header += ["mean", "var"] if m == 1 else [f"mean{j + 1}" for j in range(m)] + [f"var{j + 1}" for j in range(m)]
    rows = [list(x) + list(mu) + list(v) for x, mu, v in zip(X_test, mean, var)]
    write_text(out / "predict.csv", csv_text(rows, header))
    extra = []
    if cfg.test_data:
        try:
            test = read_csv_dataset(cfg.test_data)
        except errors.SchemaMismatch:
            test = None
        if test is not None:
            extra.append(("test_mse", repr(mse(mean, test.y))))
    return extra


def cmd_equiv(cfg, out, workers):
    k1, k2 = _need(cfg.kernel, "kernel"), _need(cfg.kernel2, "kernel2")
    verdict = equivalence_diagnostic(k1, k2, cfg.spectral_p, cfg.spectral_delta, cfg.spectral_cutoffs)
    header = ["classification", "tail_slope", "integral_1", "integral_2", "integral_3"]
    text = csv_text([verdict.csv_row()], header)
    sys.stdout.write(text)
    write_text(out / "equiv.csv", text)
    return [("classification", verdict.classification)]


def _moment_rows(cfg, kernels, orders):
    rows = []
    for k in kernels:
        for d in orders:
            v = moment_integral_diagnostic(k, cfg.spectral_p, d, cfg.spectral_cutoffs)
            rows.append((format_kernel(k), d, v.classification, v.tail_slope))
    return rows


def _write_smoothness(cfg, out, stem, orders):
    reports = smoothness.run_sim_smoothness(cfg, cfg.seed)
    write_text(out / f"{stem}.csv", csv_text([r for rep in reports for r in rep.rows()], ["kernel", "i", "x", "beta", "gamma"]))
    write_text(
        out / f"{stem}_summary.csv",
        csv_text([rep.summary_row() for rep in reports], ["kernel", "gamma_slope", "continuous", "differentiable"]),
    )
    kernels = cfg.kernels or (cfg.kernel,)
    write_text(out / f"{stem}_moments.csv", csv_text(_moment_rows(cfg, kernels, orders), ["kernel", "d", "verdict", "slope"]))
    return [("kernels", len(reports))]


def cmd_smoothness(cfg, out, workers):
    orders = sorted({cfg.spectral_d, 0, 1})
    return _write_smoothness(cfg, out, "smoothness", orders)


def cmd_sim1(cfg, out, workers):
    return _write_smoothness(cfg, out, "sim1", (0, 1))


def _sim(fn, stem):
    def run(cfg, out, workers):
        table = fn(cfg, cfg.seed, workers=workers)
        table.write(out, stem)
        return [("replications", cfg.replications), ("failures", len(table.failures))]

    return run


def _regression_data(cfg):
    if cfg.data:
        return read_csv_dataset(cfg.data)
    if cfg.synthetic == "co2":
        return synthetic.synthetic_co2(cfg.synthetic_n, cfg.seed)
    if cfg.synthetic == "matern":
        return synthetic.synthetic_matern(cfg.synthetic_n, seed=cfg.seed)
    raise errors.ParseError(f"synthetic must be 'co2' or 'matern', got {cfg.synthetic!r}")


def cmd_regress(cfg, out, workers):
    data = _regression_data(cfg)
    kernels = cfg.kernels or (_need(cfg.kernel, "kernels"),)
    table = applications.run_regression_benchmark(
        data, kernels, cfg.fractions, cfg.replications, cfg.seed, cfg.opt, cfg.jitter, workers
    )
    table.write(out)
    return [("rows", data.n)]


def cmd_inpaint(cfg, out, workers):
    image = read_pgm(cfg.image) if cfg.image else synthetic.synthetic_digit(cfg.image_size)
    kernels = cfg.kernels or (_need(cfg.kernel, "kernels"),)
    result = applications.run_image_inpaint(image, cfg.mask, kernels, cfg.opt, cfg.jitter, cfg.seed)
    result.write(out)
    masked = image.copy()
    masked[result.mask] = 0
    write_pgm(masked, out / "inpaint_input.pgm")
    return [(f"mse[{lab}]", repr(result.mse[lab])) for lab in result.labels]


COMMANDS = {
    "sample": cmd_sample,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "equiv-test": cmd_equiv,
    "smoothness": cmd_smoothness,
    "sim1": cmd_sim1,
    "sim2": _sim(identifiability.run_sim_identifiability, "sim2"),
    "sim3": _sim(identifiability.run_sim_separable, "sim3"),
    "sim4": _sim(identifiability.run_sim_same_nu, "sim4"),
    "regress": cmd_regress,
    "inpaint": cmd_inpaint,
}


def run(argv=None):
    """Parse arguments and run one subcommand; returns the exit code."""
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            extra = COMMANDS[args.command](cfg, out, max(1, args.workers))
        write_manifest(out, cfg, cfg.seed, extra)
    except _IO as e:
        print(f"mixkern: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except _NUMERIC as e:
        print(f"mixkern: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (errors.MixkernError, ValueError) as e:
        print(f"mixkern: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
