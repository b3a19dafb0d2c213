"""Command-line experiments; every subcommand writes one CSV file.

Each file starts with ``#`` lines recording the resolved configuration, the
command line and the RNG algorithm, so a run can be repeated exactly.
"""

import argparse
import csv
import json
import math
import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, gp
from ._rng import RNG_ALGORITHM, make_rng
from .benchmark import STAGES, speedup_rows
from .exceptions import ConvergenceError
from .kernels import MATERN, SQEXP, KernelSpec, equispaced_grid, gram_matrix, synthetic_psd
from .lowrank import (
    condition_number,
    jacobi_eig,
    projection_error,
    randomized_lowrank,
    range_finder,
    tail_bound,
)
from .transforms import SKETCH_KINDS

SQEXP_SWEEP = (0.05, 0.5, 1.0, 1.5, 2.0, 10.0)
MATERN_SWEEP = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
COND_RANKS = (100, 50, 20, 15, 10, 5)
DENSE_ORACLE_MAX_N = 512


class RunConfig(dict):
    """Resolved settings of one run, echoed into the output header."""

    def header_lines(self, subcommand, argv, notes=()):
        lines = [
            f"sketchinv {subcommand}",
            f"version: {__version__}",
            f"rng: {RNG_ALGORITHM}",
            f"argv: {json.dumps(list(argv))}",
            f"config: {json.dumps(self, sort_keys=True)}",
        ]
        lines.extend(f"note: {note}" for note in notes)
        return lines


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header_lines, columns, rows):
    stream = sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8", newline="")
    try:
        for line in header_lines:
            stream.write(f"# {line}\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    finally:
        if stream is not sys.stdout:
            stream.close()


def _floats(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in str(text).split(",") if t.strip()]


def _sketches(text):
    kinds = [t.strip().lower() for t in str(text).split(",") if t.strip()]
    for k in kinds:
        if k not in SKETCH_KINDS:
            raise ValueError(f"unknown sketch {k!r}; choose from {', '.join(SKETCH_KINDS)}")
    return kinds


def _single(values, flag):
    if len(values) != 1:
        raise ValueError(f"{flag} takes a single value for this subcommand")
    return values[0]


def _scheme(text):
    return "sequential" if text in ("seq", "sequential") else "tree"


def _resolve(args, **defaults):
    return {k: (getattr(args, k) if getattr(args, k, None) is not None else v)
            for k, v in defaults.items()}


def _kernel_spec(kernel, theta1, theta2, nu):
    if kernel == MATERN:
        return KernelSpec.matern(theta1, theta2, nu)
    return KernelSpec.squared_exponential(theta1, theta2)


def _sweep_specs(cfg):
    if cfg["kernel"] == MATERN:
        return "nu", [KernelSpec.matern(cfg["theta1"], cfg["theta2"], v) for v in cfg["sweep"]]
    return "theta2", [KernelSpec.squared_exponential(cfg["theta1"], v) for v in cfg["sweep"]]


def _grid_config(args):
    cfg = _resolve(args, kernel=SQEXP, theta1=1.0, theta2=1.0, nu=0.5, n="100", sweep=None,
                   grid_a=0.0, grid_b=1.0)
    cfg["n"] = _single(_ints(cfg["n"]), "--n")
    default = MATERN_SWEEP if cfg["kernel"] == MATERN else SQEXP_SWEEP
    cfg["sweep"] = _floats(cfg["sweep"]) if cfg["sweep"] is not None else list(default)
    return cfg


def _grid_spectra(cfg):
    pts = equispaced_grid(cfg["n"], cfg["grid_a"], cfg["grid_b"])
    name, specs = _sweep_specs(cfg)
    for value, spec in zip(cfg["sweep"], specs):
        yield name, value, jacobi_eig(gram_matrix(spec, pts)).eigenvalues


def cmd_decay(args):
    cfg = RunConfig(_grid_config(args))
    rows = []
    for name, value, d in _grid_spectra(cfg):
        for i, ev in enumerate(d, start=1):
            rows.append({"kernel": cfg["kernel"], "param_name": name, "param": value,
                         "index": i, "eigenvalue": ev})
    columns = ["kernel", "param_name", "param", "index", "eigenvalue"]
    return cfg, columns, rows, ()


def cmd_cond(args):
    cfg = _grid_config(args)
    cfg["ranks"] = _ints(args.ranks) if args.ranks else [m for m in COND_RANKS if m <= cfg["n"]]
    cfg = RunConfig(cfg)
    rows = []
    for name, value, d in _grid_spectra(cfg):
        for m in cfg["ranks"]:
            c = condition_number(d, m)
            rows.append({"kernel": cfg["kernel"], "param_name": name, "param": value, "m": m,
                         "condition_number": c,
                         "log10_condition": math.log10(c) if math.isfinite(c) else math.inf,
                         "is_inf": math.isinf(c)})
    notes = ("double precision saturates full-matrix condition numbers near 1e16; "
             "nonpositive computed eigenvalues are reported as inf",)
    columns = ["kernel", "param_name", "param", "m", "condition_number", "log10_condition",
               "is_inf"]
    return cfg, columns, rows, notes


def _source_matrix(cfg):
    """Return (K, exact spectrum) for a synthetic or kernel-grid matrix."""
    if cfg["source"] == "synthetic":
        return synthetic_psd(cfg["n"], cfg["lambda1"], cfg["lambda2"], cfg["matrix_seed"])
    spec = _kernel_spec(cfg["kernel"], cfg["theta1"], cfg["theta2"], cfg["nu"])
    K = gram_matrix(spec, equispaced_grid(cfg["n"]))
    return K, jacobi_eig(K).eigenvalues


def cmd_sketch_error(args):
    cfg = _resolve(args, source="synthetic", n="256", r=40, sketch="gaussian,dct,dht,wht",
                   trials=100, seed=0, matrix_seed=0, lambda1=1.0, lambda2=0.05,
                   blocks=None, scheme="tree", workers="1", kernel=SQEXP, theta1=1.0,
                   theta2=10.0, nu=0.5)
    cfg["n"] = _single(_ints(cfg["n"]), "--n")
    cfg["workers"] = _single(_ints(cfg["workers"]), "--workers")
    cfg["sketch"] = _sketches(cfg["sketch"])
    cfg["scheme"] = _scheme(cfg["scheme"])
    cfg = RunConfig(cfg)
    K, d = _source_matrix(cfg)
    bound = tail_bound(d, cfg["r"], cfg["n"])
    rows = []
    for kind in cfg["sketch"]:
        for t in range(cfg["trials"]):
            seed = cfg["seed"] + t
            Q = range_finder(K, cfg["r"], kind, seed, cfg["blocks"], cfg["scheme"],
                             workers=cfg["workers"]).Q
            fro = projection_error(K, Q, "fro", cfg["workers"])
            try:
                spectral = projection_error(K, Q, "spectral", cfg["workers"])
            except ConvergenceError:
                spectral = math.nan
            rows.append({"seed": seed, "sketch": kind, "n": cfg["n"], "r": cfg["r"],
                         "frobenius_error": fro, "spectral_error": spectral, "bound": bound,
                         "within_bound": fro <= bound})
    notes = ("bound = (1 + sqrt(7 n / r)) * sum of exact eigenvalues beyond r; "
             "spectral_error is nan where power iteration did not converge",)
    columns = ["seed", "sketch", "n", "r", "frobenius_error", "spectral_error", "bound",
               "within_bound"]
    return cfg, columns, rows, notes


def cmd_speedup(args):
    cfg = _resolve(args, n="2048,4096", r=64, workers="1,2,4,8", stage="pipeline", sketch="dct",
                   blocks=None, scheme="tree", repeats=3, seed=0, kernel=SQEXP, theta1=1.0,
                   theta2=10.0, nu=0.5)
    cfg["n"] = _ints(cfg["n"])
    cfg["workers"] = _ints(cfg["workers"])
    cfg["sketch"] = _single(_sketches(cfg["sketch"]), "--sketch")
    cfg["scheme"] = _scheme(cfg["scheme"])
    cfg = RunConfig(cfg)
    spec = _kernel_spec(cfg["kernel"], cfg["theta1"], cfg["theta2"], cfg["nu"])
    rows = list(speedup_rows(cfg["n"], cfg["r"], cfg["workers"], cfg["stage"], cfg["sketch"],
                             cfg["blocks"], cfg["scheme"], cfg["repeats"], cfg["seed"], spec))
    notes = ("timing columns: median_seconds, efficiency (= t(1 worker) / t(w workers)); "
             "setup and JIT warm-up excluded",)
    columns = ["n", "r", "blocks", "stage", "sketch", "workers", "median_seconds", "efficiency",
               "r_checksum"]
    return cfg, columns, rows, notes


def dense_log_likelihood(K, nugget, y):
    """Exact zero-mean Gaussian log-density with covariance ``K + nugget I``."""
    C = K + nugget * np.eye(K.shape[0])
    L = np.linalg.cholesky(C)
    z = np.linalg.solve(L, y)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * (K.shape[0] * math.log(2 * math.pi) + logdet + z @ z)


def cmd_loglik(args):
    cfg = _resolve(args, source="synthetic", n="256", r=40, sketch="dct", seed=0, matrix_seed=0,
                   lambda1=1.0, lambda2=0.5, nugget=1e-2, data=None, blocks=None, scheme="tree",
                   workers="1", repeats=3, kernel=SQEXP, theta1=1.0, theta2=10.0, nu=0.5)
    cfg["n"] = _single(_ints(cfg["n"]), "--n")
    cfg["workers"] = _ints(cfg["workers"])
    cfg["sketch"] = _single(_sketches(cfg["sketch"]), "--sketch")
    cfg["scheme"] = _scheme(cfg["scheme"])
    cfg = RunConfig(cfg)
    K, _ = _source_matrix(cfg)
    n = cfg["n"]
    if cfg["data"]:
        y = np.loadtxt(cfg["data"], delimiter=",", comments="#", ndmin=1).reshape(-1)
        if y.shape[0] != n:
            raise ValueError(f"data file has {y.shape[0]} values, expected n = {n}")
    else:
        C = K + cfg["nugget"] * np.eye(n)
        y = np.linalg.cholesky(C) @ make_rng(cfg["seed"]).standard_normal(n)
    dense = dense_log_likelihood(K, cfg["nugget"], y) if n <= DENSE_ORACLE_MAX_N else math.nan
    rows = []
    for w in cfg["workers"]:
        times = []
        for _ in range(max(1, cfg["repeats"])):
            t0 = time.perf_counter()
            factor = randomized_lowrank(K, cfg["r"], cfg["sketch"], cfg["seed"], cfg["blocks"],
                                        cfg["scheme"], workers=w)
            ll = gp.log_likelihood(gp.GpModel(factor, cfg["nugget"]), y)
            times.append(time.perf_counter() - t0)
        rows.append({"n": n, "r": cfg["r"], "sketch": cfg["sketch"], "nugget": cfg["nugget"],
                     "workers": w, "loglik": ll, "dense_loglik": dense,
                     "abs_gap": abs(ll - dense), "seconds": float(np.median(times))})
    notes = (f"dense_loglik is the exact Gaussian log-density (n <= {DENSE_ORACLE_MAX_N}); "
             "timing column: seconds",)
    columns = ["n", "r", "sketch", "nugget", "workers", "loglik", "dense_loglik", "abs_gap",
               "seconds"]
    return cfg, columns, rows, notes


COMMANDS = {
    "decay": cmd_decay,
    "cond": cmd_cond,
    "sketch-error": cmd_sketch_error,
    "speedup": cmd_speedup,
    "loglik": cmd_loglik,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", help="matrix order (comma list for speedup)")
    common.add_argument("--r", type=int, help="sketch size / rank")
    common.add_argument("--blocks", type=int, help="TSQR row blocks (default floor(n/2r)+1)")
    common.add_argument("--scheme", choices=["tree", "seq", "sequential"])
    common.add_argument("--sketch", help="gaussian, wht, dct or dht (comma list for sketch-error)")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", help="worker threads (comma list for speedup and loglik)")
    common.add_argument("--trials", type=int)
    common.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    common.add_argument("--kernel", choices=[SQEXP, MATERN])
    common.add_argument("--theta1", type=float)
    common.add_argument("--theta2", type=float)
    common.add_argument("--nu", type=float)

    parser = argparse.ArgumentParser(
        prog="sketchinv",
        description="Randomized low-rank approximation experiments with blocked TSQR.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("decay", "cond"):
        p = sub.add_parser(name, parents=[common],
                           help=("eigenvalues of grid Gram matrices" if name == "decay"
                                 else "condition numbers of truncated Gram spectra"))
        p.add_argument("--sweep", help="comma list of theta2 (sqexp) or nu (matern) values")
        p.add_argument("--grid-a", type=float, dest="grid_a")
        p.add_argument("--grid-b", type=float, dest="grid_b")
        if name == "cond":
            p.add_argument("--ranks", help="comma list of truncation ranks m")

    for name, help_text in (("sketch-error", "projection error of random sketches vs the bound"),
                            ("loglik", "low-rank GP log-likelihood vs the dense oracle")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--source", choices=["synthetic", "kernel"])
        p.add_argument("--lambda1", type=float)
        p.add_argument("--lambda2", type=float)
        p.add_argument("--matrix-seed", type=int, dest="matrix_seed")
        if name == "loglik":
            p.add_argument("--nugget", type=float)
            p.add_argument("--data", help="CSV/text file with the n observations")
            p.add_argument("--repeats", type=int)

    p = sub.add_parser("speedup", parents=[common], help="wall time versus worker count")
    p.add_argument("--stage", choices=list(STAGES))
    p.add_argument("--repeats", type=int)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        with threadpool_limits(limits=1):
            cfg, columns, rows, notes = COMMANDS[args.command](args)
        write_csv(args.out, cfg.header_lines(args.command, argv, notes), columns, rows)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, ConvergenceError, OSError) as err:
        print(f"sketchinv: error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
