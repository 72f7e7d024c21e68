"""Matrix-normal model on m x p coefficient matrices.

A sample ``A`` has column covariance ``sigma_col`` (m x m, across basis
coefficients) and row covariance ``sigma_row`` (p x p, across coordinates),
so that ``vec(A)`` has covariance ``kron(sigma_row, sigma_col)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import linalg

from .errors import (
    InsufficientDataError,
    InsufficientVariationError,
    ShapeError,
)
from .numerics import logdet_spd, spd_factor, spd_inverse

SCALE_CONVENTION = "trace_row_equals_p"
LOG_2PI = float(np.log(2 * np.pi))


@dataclass
class SeparableFit:
    mean: np.ndarray  # m x p
    sigma_row: np.ndarray  # p x p
    sigma_col: np.ndarray  # m x m
    scale_convention: str = SCALE_CONVENTION
    provenance: str = "mmle"
    h_subset: np.ndarray | None = None
    distances: np.ndarray | None = None
    converged: bool = True
    n_iter: int = 0
    floored: bool = False
    objective: float | None = None

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.sigma_row = np.asarray(self.sigma_row, dtype=float)
        self.sigma_col = np.asarray(self.sigma_col, dtype=float)
        m, p = self.mean.shape
        if self.sigma_row.shape != (p, p) or self.sigma_col.shape != (m, m):
            raise ShapeError(
                f"mean is {m}x{p} but sigma_row is {self.sigma_row.shape} "
                f"and sigma_col is {self.sigma_col.shape}"
            )

    @property
    def m(self) -> int:
        return self.mean.shape[0]

    @property
    def p(self) -> int:
        return self.mean.shape[1]

    @cached_property
    def row_factor(self) -> np.ndarray:
        return spd_factor(self.sigma_row)

    @cached_property
    def col_factor(self) -> np.ndarray:
        return spd_factor(self.sigma_col)

    @cached_property
    def row_precision(self) -> np.ndarray:
        return spd_inverse(self.sigma_row)

    @cached_property
    def col_precision(self) -> np.ndarray:
        return spd_inverse(self.sigma_col)

    def kronecker(self) -> np.ndarray:
        """Covariance of vec(A) (column-major stacking)."""
        return np.kron(self.sigma_row, self.sigma_col)

    def with_covariances(self, sigma_row, sigma_col, **changes) -> "SeparableFit":
        return replace(self, sigma_row=sigma_row, sigma_col=sigma_col, **changes)


def scale_to_convention(sigma_row, sigma_col):
    """Rescale so that trace(sigma_row) == p, compensating sigma_col."""
    sigma_row = np.asarray(sigma_row, dtype=float)
    c = sigma_row.shape[0] / np.trace(sigma_row)
    return sigma_row * c, np.asarray(sigma_col, dtype=float) / c


def normalized(fit: SeparableFit) -> SeparableFit:
    row, col = scale_to_convention(fit.sigma_row, fit.sigma_col)
    return fit.with_covariances(row, col, scale_convention=SCALE_CONVENTION)


def _check_samples(A, fit: SeparableFit) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape[-2:] != fit.mean.shape:
        raise ShapeError(f"sample shape {A.shape[-2:]} does not match fit shape {fit.mean.shape}")
    return A


def whiten(A, fit: SeparableFit) -> np.ndarray:
    """L_col^{-1} (A - M) L_row^{-T}; its squared Frobenius norm is the distance."""
    D = _check_samples(A, fit) - fit.mean
    lead = D.shape[:-2]
    D = D.reshape(-1, fit.m, fit.p)
    n = D.shape[0]
    Z = linalg.solve_triangular(fit.col_factor, D.transpose(1, 0, 2).reshape(fit.m, n * fit.p), lower=True)
    Z = Z.reshape(fit.m, n, fit.p).transpose(1, 0, 2)
    Z = linalg.solve_triangular(
        fit.row_factor, Z.transpose(2, 0, 1).reshape(fit.p, n * fit.m), lower=True
    )
    return Z.reshape(fit.p, n, fit.m).transpose(1, 2, 0).reshape(*lead, fit.m, fit.p)


def mmd2(A, fit: SeparableFit):
    """Squared matrix Mahalanobis distance tr(Σrow⁻¹ (A−M)' Σcol⁻¹ (A−M)).

    Accepts one m x p matrix or a stack of shape (n, m, p).
    """
    Z = whiten(A, fit)
    out = np.sum(Z * Z, axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


def matnorm_logpdf(A, fit: SeparableFit):
    m, p = fit.mean.shape
    const = (
        0.5 * m * p * LOG_2PI
        + 0.5 * p * logdet_spd(factor=fit.col_factor)
        + 0.5 * m * logdet_spd(factor=fit.row_factor)
    )
    return -0.5 * mmd2(A, fit) - const


def existence_threshold(m: int, p: int) -> int:
    """Smallest sample count for which the flip-flop estimate exists: floor(m/p + p/m) + 2."""
    return (m * m + p * p) // (m * p) + 2


def _robust_factor(S: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    n = S.shape[0]
    try:
        L = np.linalg.cholesky(S)
        if np.min(np.diag(L)) ** 2 > n * 1e-14 * np.max(np.diag(S)):
            return S, L, False
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    top = w.max()
    if not top > 0:
        raise InsufficientVariationError("covariance update is zero; samples do not vary")
    w = np.maximum(w, 1e-12 * top)
    S = (V * w) @ V.T
    S = 0.5 * (S + S.T)
    return S, spd_factor(S), True


def _logdet(L: np.ndarray) -> float:
    return float(2.0 * np.sum(np.log(np.diag(L))))


def _tri_solve(L, B):
    return linalg.solve_triangular(L, B, lower=True, check_finite=False)


@dataclass
class FlipFlopResult:
    sigma_row: np.ndarray
    sigma_col: np.ndarray
    objective: float
    n_iter: int
    converged: bool
    floored: bool
    loglik_trace: list = field(default_factory=list)


def flipflop(D: np.ndarray, sigma_col0=None, tol: float = 1e-8, max_iter: int = 100,
             trace: bool = False) -> FlipFlopResult:
    """Alternating covariance updates for centred samples ``D`` of shape (h, m, p).

    The row covariance is updated first, given ``sigma_col0`` (identity by
    default). The objective p·logdet(Σcol) + m·logdet(Σrow) is reported for the
    unnormalized pair and is invariant to the scale trade-off. Iteration stops
    once the objective moves by at most ``tol`` per model dimension (m·p); the
    objective itself shifts under a change of coordinates, its increments do
    not, so the stopping iteration is equivariant.
    """
    h, m, p = D.shape
    Sc = np.eye(m) if sigma_col0 is None else np.asarray(sigma_col0, dtype=float)
    Sc, Lc, floored = _robust_factor(Sc)
    Dm = D.transpose(1, 0, 2).reshape(m, h * p)  # columns: (sample, coordinate)
    Dp = D.transpose(2, 0, 1).reshape(p, h * m)  # columns: (sample, coefficient)
    prev = None
    lltrace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        Z = _tri_solve(Lc, Dm).reshape(m * h, p)
        Sr = Z.T @ Z / (m * h)
        Sr, Lr, fl = _robust_factor(0.5 * (Sr + Sr.T))
        floored |= fl
        Y = _tri_solve(Lr, Dp).reshape(p * h, m)
        Sc = Y.T @ Y / (p * h)
        Sc, Lc, fl = _robust_factor(0.5 * (Sc + Sc.T))
        floored |= fl
        obj = p * _logdet(Lc) + m * _logdet(Lr)
        if trace:
            W = _tri_solve(Lc, Dm).reshape(m, h, p).transpose(2, 1, 0)
            W = _tri_solve(Lr, W.reshape(p, h * m))
            mean_d2 = float(np.sum(W * W)) / h
            lltrace.append(-0.5 * (mean_d2 + m * p * LOG_2PI + obj))
        if prev is not None and abs(obj - prev) <= tol * m * p:
            converged = True
            break
        prev = obj
    return FlipFlopResult(Sr, Sc, obj, it, converged, floored, lltrace)


def mmle_flipflop(samples, tol: float = 1e-8, max_iter: int = 100, sigma_col0=None,
                  provenance: str = "mmle") -> SeparableFit:
    """Maximum likelihood fit of a matrix-normal model to samples of shape (n, m, p)."""
    A = np.asarray(samples, dtype=float)
    if A.ndim != 3:
        raise ShapeError(f"samples must be (n, m, p), got shape {A.shape}")
    n, m, p = A.shape
    need = existence_threshold(m, p)
    if n < need:
        raise InsufficientDataError(
            f"{n} samples given but at least {need} are needed for m={m}, p={p}"
        )
    M = A.mean(axis=0)
    D = A - M
    if np.abs(D).max() <= 1e-12 * max(1.0, np.abs(A).max()):
        raise InsufficientVariationError("all samples are identical up to rounding")
    res = flipflop(D, sigma_col0, tol, max_iter)
    if not res.converged:
        warnings.warn(f"flip-flop did not converge in {max_iter} iterations", RuntimeWarning, stacklevel=2)
    row, col = scale_to_convention(res.sigma_row, res.sigma_col)
    return SeparableFit(M, row, col, provenance=provenance, converged=res.converged,
                        n_iter=res.n_iter, floored=res.floored, objective=res.objective)


def sample_matrix_normal(fit: SeparableFit, rng, size: int | None = None) -> np.ndarray:
    """Draw M + L_col Z L_row'; returns (m, p) or (size, m, p)."""
    rng = np.random.default_rng(rng)
    shape = (fit.m, fit.p) if size is None else (size, fit.m, fit.p)
    Z = rng.standard_normal(shape)
    return fit.mean + fit.col_factor @ Z @ fit.row_factor.T
