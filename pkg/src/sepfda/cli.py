"""Command line interface.

Exit status is 0 on success, 2 for invalid input or configuration and 3 when
a numerical step fails.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .basis import BasisSystem, make_basis, smooth
from .distances import chi2_cutoff, fmmd2_spectral, qq_points
from .errors import InvalidConfigError, InvalidInputError, NumericalError, ValidationError
from .fpca import separable_fpca
from .matnorm import SeparableFit, mmd2, mmle_flipflop
from .metrics import auc, confusion_metrics, cov_error, mean_error, relative_error
from .mmcd import MmcdConfig, mmcd_fit
from .shapley import DomainPartition, interval_grams, shapley_time_coordinate_grams
from .simulate import (
    MEAN_FUNCTIONS,
    KernelSpec,
    OutlierSpec,
    inject_outliers,
    kernel_eigenfunctions,
    make_sigma_row,
    matern_kernel,
    ou_kernel,
    sample_process,
    trapezoid_weights,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InvalidConfigError(message)


def _coefficients(curves, basis: BasisSystem | None) -> np.ndarray:
    if basis is None:
        return curves.values.transpose(0, 2, 1)
    return smooth(curves, basis)


def _weights(basis: BasisSystem | None, grid) -> np.ndarray:
    """Inner-product matrix on the coefficient space: basis Gram or grid quadrature weights."""
    return basis.gram() if basis is not None else np.diag(trapezoid_weights(grid))


def _basis_for(curves, m: int, degree: int) -> BasisSystem:
    return make_basis((float(curves.grid[0]), float(curves.grid[-1])), m, degree)


def _distances(A, fit, W, truncation):
    full = fit.m * fit.p
    if truncation is None or truncation == full:
        return mmd2(A, fit), full
    return fmmd2_spectral(A, fit, W, truncation), truncation


def _load_fit(path):
    doc = io.read_json(path)
    try:
        cfg = doc["config_echo"]
        fit = SeparableFit(np.array(doc["mean_coefficients"]), np.array(doc["sigma_row"]),
                           np.array(doc["sigma_col"]), provenance=cfg.get("provenance", "mmle"))
        if cfg["mode"] == "raw":
            basis = None
        else:
            b = cfg["basis"]
            basis = make_basis(tuple(b["domain"]), b["m"], b["degree"])
        grid = np.array(cfg["grid"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"{path}: not a fit document ({exc})") from None
    return doc, fit, basis, grid


def _check_grid(curves, grid, basis):
    if basis is None and not np.array_equal(curves.grid, grid):
        raise InvalidInputError("raw-mode fit requires data on the grid it was fitted on")


def cmd_smooth(args):
    curves = io.read_curves(args.data)
    basis = _basis_for(curves, args.m, args.degree)
    A = smooth(curves, basis)
    rows = (
        (sid, k + 1, j + 1, float(A[i, j, k]))
        for i, sid in enumerate(curves.ids)
        for k in range(A.shape[2])
        for j in range(A.shape[1])
    )
    io.write_rows(args.out, ["sample_id", "coordinate", "basis_index", "coefficient"], rows)


def cmd_fit(args):
    curves = io.read_curves(args.data)
    if args.estimator == "mmcd" and args.seed is None:
        raise InvalidConfigError("--seed is required with --estimator mmcd")
    basis = None if args.mode == "raw" else _basis_for(curves, args.m, args.degree)
    A = _coefficients(curves, basis)
    h_subset = None
    objective = None
    if args.estimator == "mmle":
        fit = mmle_flipflop(A)
    else:
        cfg = MmcdConfig(alpha=args.alpha, n_initial_subsets=args.n_subsets, n_best_kept=args.n_best,
                         reweight_quantile=args.quantile, seed=args.seed, consistency=not args.no_consistency)
        report = mmcd_fit(A, cfg)
        fit = report.reweighted_fit
        h_subset = [curves.ids[i] for i in report.h_subset]
        objective = report.objective
    W = _weights(basis, curves.grid)
    d, dof = _distances(A, fit, W, args.truncation)
    cutoff = chi2_cutoff(dof, args.quantile)
    echo = {
        "estimator": args.estimator,
        "mode": args.mode,
        "basis": None if basis is None else {"domain": list(basis.domain), "m": basis.m, "degree": basis.degree},
        "grid": curves.grid,
        "alpha": args.alpha,
        "n_subsets": args.n_subsets,
        "n_best": args.n_best,
        "seed": args.seed,
        "quantile": args.quantile,
        "truncation": dof,
        "consistency": not args.no_consistency,
        "provenance": fit.provenance,
        "objective": objective,
    }
    io.write_json(
        {
            "mean_coefficients": fit.mean,
            "sigma_row": fit.sigma_row,
            "sigma_col": fit.sigma_col,
            "scale_convention": fit.scale_convention,
            "h_subset": h_subset,
            "distances": dict(zip(curves.ids, d)),
            "cutoff": cutoff,
            "flags": {sid: bool(x > cutoff) for sid, x in zip(curves.ids, d)},
            "config_echo": echo,
        },
        args.out,
    )


def cmd_distance(args):
    curves = io.read_curves(args.data)
    _, fit, basis, grid = _load_fit(args.fit)
    _check_grid(curves, grid, basis)
    A = _coefficients(curves, basis)
    d, dof = _distances(A, fit, _weights(basis, curves.grid), args.truncation)
    cutoff = chi2_cutoff(dof, args.quantile)
    io.write_rows(args.out, ["sample_id", "squared_distance", "cutoff", "flag"],
                  ((sid, float(x), cutoff, int(x > cutoff)) for sid, x in zip(curves.ids, d)))
    if args.emit_qq:
        io.write_rows(args.emit_qq, ["empirical_quantile", "chi2_quantile"], (map(float, r) for r in qq_points(d, dof)))


def cmd_shapley(args):
    curves = io.read_curves(args.data)
    _, fit, basis, grid = _load_fit(args.fit)
    _check_grid(curves, grid, basis)
    A = _coefficients(curves, basis)
    if basis is None:
        part = DomainPartition.uniform((grid[0], grid[-1]), args.intervals)
        w = trapezoid_weights(grid)
        where = part.locate(grid)
        W = np.diag(w)
        parts = [np.diag(np.where(where == a, w, 0.0)) for a in range(part.d)]
    else:
        part = DomainPartition.uniform(basis.domain, args.intervals)
        W = basis.gram()
        parts = interval_grams(basis, part)
    rows = []
    for sid, a in zip(curves.ids, A):
        smap = shapley_time_coordinate_grams(a, fit, W, parts)
        norm = smap.normalized()
        for k in range(fit.p):
            for j in range(part.d):
                rows.append((sid, k + 1, j + 1, float(smap.cell[k, j]), float(norm[k, j])))
    io.write_rows(args.out, ["sample_id", "coordinate", "interval_index", "contribution", "normalized_contribution"], rows)


def cmd_fpca(args):
    _, fit, basis, grid = _load_fit(args.fit)
    model = separable_fpca(fit, _weights(basis, grid), args.truncation)
    io.write_json(
        {
            "kernel_eigenvalues": model.kernel_values,
            "row_eigenvalues": model.row_values,
            "product_eigenvalues": model.products[: model.M],
            "eigenfunction_coefficients": model.kernel_coefs.T,
            "row_eigenvectors": model.row_vectors.T,
            "product_index": model.index[: model.M] + 1,
        },
        args.out,
    )


def _kernel_from_args(args) -> KernelSpec:
    if args.kernel == "ou":
        return ou_kernel()
    return matern_kernel()


def cmd_simulate(args):
    if args.seed is None:
        raise InvalidConfigError("--seed is required for simulate")
    if args.n < 1 or args.p < 1 or args.q < 2:
        raise InvalidConfigError("need n >= 1, p >= 1 and q >= 2")
    rng = np.random.default_rng(args.seed)
    grid = np.linspace(0.0, 1.0, args.q)
    kernel = _kernel_from_args(args)
    mean_name = "linear" if args.outlier == "isolated" else "default"
    mean_fn = MEAN_FUNCTIONS[mean_name]
    sigma_row = make_sigma_row(args.p, rng)
    curves = sample_process(args.n, args.p, grid, sigma_row, kernel, mean_fn,
                            "t" if args.df else "gaussian", args.df, rng)
    if args.outlier != "none" and args.eps > 0:
        spec = OutlierSpec(args.outlier, args.eps, args.eps_coord, args.magnitude, nu=args.nu, tau=args.tau)
        eig = None
        if args.outlier in ("shift", "shape"):
            _, eig = kernel_eigenfunctions(kernel, grid, 10)
        curves = inject_outliers(curves, spec, eig, rng, mean_fn)
    width = len(str(args.n))
    curves.ids = [f"s{i + 1:0{width}d}" for i in range(args.n)]
    out = Path(args.out)
    io.write_curves(curves, out)
    io.write_labels(curves.ids, curves.labels, args.labels_out or out.with_suffix(".labels.csv"))
    io.write_json({"sigma_row": sigma_row, "kernel": kernel.to_dict(), "mean": mean_name, "grid": grid},
                  args.truth_out or out.with_suffix(".truth.json"))


def cmd_evaluate(args):
    doc, fit, basis, _ = _load_fit(args.fit)
    labels = io.read_labels(args.labels)
    ids = list(doc["distances"])
    missing = [s for s in ids if s not in labels]
    if missing:
        raise InvalidInputError(f"labels file lacks sample ids such as {missing[0]!r}")
    y = np.array([labels[s] for s in ids])
    flags = np.array([bool(doc["flags"][s]) for s in ids])
    scores = np.array([float(doc["distances"][s]) for s in ids])
    report = confusion_metrics(flags, y)
    if 0 < y.sum() < y.size:
        report.auc = auc(scores, y)
    if args.truth:
        truth = io.read_json(args.truth)
        grid = np.array(truth["grid"])
        mean_fn = MEAN_FUNCTIONS[truth["mean"]]
        report.mean_error = mean_error(fit.mean, mean_fn, basis, grid)
        report.cov_error = cov_error(fit, np.array(truth["sigma_row"]), KernelSpec.from_dict(truth["kernel"]), basis, grid)
        if args.benchmark_cov_error is not None:
            report.relative_cov_error = relative_error(report.cov_error, args.benchmark_cov_error)
    elif args.benchmark_cov_error is not None:
        raise InvalidConfigError("--benchmark-cov-error needs --truth")
    io.write_json(report.to_dict(), args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sepfda", description="Robust separable functional outlier detection.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def basis_opts(p):
        p.add_argument("--m", type=int, default=10, help="basis size")
        p.add_argument("--degree", type=int, default=3)

    p = sub.add_parser("smooth", help="smooth curves into B-spline coefficients")
    p.add_argument("--data", required=True)
    basis_opts(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("fit", help="estimate mean and separable covariance, then flag outliers")
    p.add_argument("--data", required=True)
    basis_opts(p)
    p.add_argument("--estimator", choices=["mmle", "mmcd"], default="mmcd")
    p.add_argument("--mode", choices=["smoothed", "raw"], default="smoothed")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--n-subsets", type=int, default=500)
    p.add_argument("--n-best", type=int, default=10)
    p.add_argument("--seed", type=int)
    p.add_argument("--quantile", type=float, default=0.99)
    p.add_argument("--truncation", type=int)
    p.add_argument("--no-consistency", action="store_true", help="skip the consistency scaling")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("distance", help="squared distances of curves under a fitted model")
    p.add_argument("--data", required=True)
    p.add_argument("--fit", required=True)
    p.add_argument("--truncation", type=int)
    p.add_argument("--quantile", type=float, default=0.99)
    p.add_argument("--out", required=True)
    p.add_argument("--emit-qq", metavar="PATH")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("shapley", help="coordinate by time-interval outlyingness contributions")
    p.add_argument("--data", required=True)
    p.add_argument("--fit", required=True)
    p.add_argument("--intervals", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shapley)

    p = sub.add_parser("fpca", help="separable functional principal components of a fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--truncation", type=int)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_fpca)

    p = sub.add_parser("simulate", help="generate synthetic curves with optional outliers")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--q", type=int, default=100)
    p.add_argument("--kernel", choices=["ou", "matern"], default="ou")
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--eps-coord", type=float, default=1.0)
    p.add_argument("--outlier", choices=["none", "shift", "shape", "isolated", "covariance"], default="none")
    p.add_argument("--magnitude", type=float, default=15.0)
    p.add_argument("--nu", type=float, default=0.1, help="smoothness of covariance outliers")
    p.add_argument("--tau", type=float, default=10.0, help="inverse range of covariance outliers")
    p.add_argument("--df", type=float, help="use t innovations with this many degrees of freedom")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out")
    p.add_argument("--truth-out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="detection metrics and estimation errors for a fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--truth", help="truth JSON written by simulate; enables mean and covariance errors")
    p.add_argument("--benchmark-cov-error", type=float, help="reference error, e.g. clean-data MMLE, for the relative error")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_evaluate)
    return ap


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
