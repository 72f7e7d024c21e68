"""Detection metrics and integrated estimation errors."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .basis import BasisSystem, eval_basis
from .errors import ShapeError, UndefinedMetricError
from .matnorm import SeparableFit
from .simulate import KernelSpec, kernel_matrix, trapezoid_weights


@dataclass
class MetricReport:
    precision: float
    recall: float
    f_score: float
    tp: int
    fp: int
    tn: int
    fn: int
    auc: float | None = None
    mean_error: float | None = None
    cov_error: float | None = None
    relative_cov_error: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def confusion_metrics(flags, labels) -> MetricReport:
    f = np.asarray(flags, dtype=bool)
    y = np.asarray(labels, dtype=bool)
    if f.shape != y.shape:
        raise ShapeError(f"flags ({f.size}) and labels ({y.size}) differ in length")
    tp = int(np.sum(f & y))
    fp = int(np.sum(f & ~y))
    fn = int(np.sum(~f & y))
    tn = int(np.sum(~f & ~y))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f_score = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricReport(precision, recall, f_score, tp, fp, tn, fn)


def auc(scores, labels) -> float:
    """Mann-Whitney estimate of the area under the ROC curve, ties at midrank."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise ShapeError("scores and labels differ in length")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both outliers and inliers")
    ranks = stats.rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _trapz(values, grid, axis=-1):
    return np.trapezoid(values, grid, axis=axis)


def fitted_mean_curves(mean_coefs, basis: BasisSystem | None, grid) -> np.ndarray:
    """Fitted mean on the grid as a (p, q) array; without a basis the coefficients are the grid values."""
    Mc = np.asarray(mean_coefs, dtype=float)
    if basis is None:
        return Mc.T
    return (eval_basis(basis, np.asarray(grid, dtype=float)) @ Mc).T


def mean_error(mean_coefs, true_mean, basis: BasisSystem | None, grid) -> float:
    """(p |T|)^-1 ∫ ||μ(t) − μ̂(t)||² dt by the trapezoid rule.

    ``true_mean`` is a callable of t returning (q,) or (p, q) values, or an array.
    """
    grid = np.asarray(grid, dtype=float)
    fitted = fitted_mean_curves(mean_coefs, basis, grid)
    truth = true_mean(grid) if callable(true_mean) else np.asarray(true_mean, dtype=float)
    truth = np.broadcast_to(truth, fitted.shape)
    p = fitted.shape[0]
    length = grid[-1] - grid[0]
    return float(_trapz(np.sum((truth - fitted) ** 2, axis=0), grid) / (p * length))


def fitted_kernel(fit: SeparableFit, basis: BasisSystem | None, grid) -> np.ndarray:
    if basis is None:
        return fit.sigma_col
    Phi = eval_basis(basis, np.asarray(grid, dtype=float))
    return Phi @ fit.sigma_col @ Phi.T


def cov_error(fit: SeparableFit, sigma_row_true, kernel_true, basis: BasisSystem | None, grid) -> float:
    """(p |T|)^-2 ∬ ||Σrow κ(s,t) − Σ̂row κ̂(s,t)||_F² ds dt on the grid.

    ``kernel_true`` is a :class:`KernelSpec` or a q x q matrix of grid values.
    The integrand expands as ||Σ||² κ² − 2 tr(Σ Σ̂) κ κ̂ + ||Σ̂||² κ̂².
    """
    grid = np.asarray(grid, dtype=float)
    K = kernel_matrix(kernel_true, grid) if isinstance(kernel_true, KernelSpec) else np.asarray(kernel_true, dtype=float)
    Kh = fitted_kernel(fit, basis, grid)
    S = np.asarray(sigma_row_true, dtype=float)
    Sh = fit.sigma_row
    if S.shape != Sh.shape:
        raise ShapeError("true and fitted row covariances differ in size")
    surface = np.sum(S * S) * K**2 - 2 * np.sum(S * Sh) * K * Kh + np.sum(Sh * Sh) * Kh**2
    w = trapezoid_weights(grid)
    p = S.shape[0]
    length = grid[-1] - grid[0]
    return float(max(w @ surface @ w, 0.0) / (p * length) ** 2)


def relative_error(error: float, benchmark: float) -> float:
    """Error relative to a benchmark, e.g. clean-data MMLE."""
    if benchmark <= 0:
        raise UndefinedMetricError("benchmark error must be positive")
    return float(error / benchmark)
