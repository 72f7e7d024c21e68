"""Functional Mahalanobis distances, chi-square cutoffs and outlier flags."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InvalidInputError, ShapeError, TruncationError
from .fpca import FpcaModel, check_truncation, gram_of, scores, separable_fpca
from .matnorm import SeparableFit, mmd2
from .numerics import sym_eigen, sym_inv_sqrt, sym_sqrt


@dataclass(frozen=True)
class DistanceResult:
    distance: float
    truncation: int
    cutoff: float
    flag: bool


def fmmd2_coef(A, fit: SeparableFit):
    """Full-rank functional distance, computed in coefficient space."""
    return mmd2(A, fit)


def fmmd2_spectral(A, fit: SeparableFit, basis, M: int | None = None,
                   model: FpcaModel | None = None):
    """Truncated distance Σ_{k≤M} score_k² / π_k from the separable eigen-expansion.

    ``basis`` may be a :class:`BasisSystem` or its Gram matrix; a precomputed
    ``model`` skips the eigendecompositions.
    """
    if model is None:
        model = separable_fpca(fit, basis, M)
    M = model.M if M is None else int(M)
    check_truncation(model.products, M)
    if M % fit.p and _near_identity(fit.sigma_row):
        warnings.warn(
            f"M={M} is not a multiple of p={fit.p}; with near-identity row covariance "
            "the retained components are not uniquely defined",
            RuntimeWarning,
            stacklevel=2,
        )
    s = scores(A, fit, model, M)
    out = np.sum(s * s / model.products[:M], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _near_identity(S, rtol=1e-6):
    p = S.shape[0]
    return np.allclose(S, np.trace(S) / p * np.eye(p), rtol=0, atol=rtol * np.trace(S) / p)


def fmd2(a, mean, sigma_col, basis, m_trunc: int | None = None) -> float:
    """Univariate truncated distance over the leading kernel eigenpairs."""
    a = np.asarray(a, dtype=float)
    d = a - np.asarray(mean, dtype=float)
    m = d.shape[-1]
    m_trunc = m if m_trunc is None else int(m_trunc)
    if not 1 <= m_trunc <= m:
        raise TruncationError(f"truncation {m_trunc} must lie in [1, {m}]")
    W = gram_of(basis)
    if W.shape != (m, m) or np.shape(sigma_col) != (m, m):
        raise ShapeError("coefficient length does not match the Gram or covariance size")
    half = sym_sqrt(W)
    lam, U = sym_eigen(half @ np.asarray(sigma_col, dtype=float) @ half)
    if not lam[m_trunc - 1] > 0:
        raise TruncationError(f"kernel eigenvalue {m_trunc} is not positive")
    B = sym_inv_sqrt(W) @ U[:, :m_trunc]
    s = d @ W @ B
    out = np.sum(s * s / lam[:m_trunc], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def chi2_cutoff(dof: int, quantile: float) -> float:
    if dof < 1 or not 0 < quantile < 1:
        raise InvalidInputError(f"need dof >= 1 and quantile in (0, 1), got {dof}, {quantile}")
    return float(stats.chi2.ppf(quantile, dof))


def flag_outliers(distances, dof: int, quantile: float = 0.99) -> list[DistanceResult]:
    d = np.asarray(distances, dtype=float).ravel()
    if d.size == 0:
        return []
    if np.any(~np.isfinite(d)) or np.any(d < 0):
        raise InvalidInputError("squared distances must be finite and nonnegative")
    cut = chi2_cutoff(dof, quantile)
    return [DistanceResult(float(x), int(dof), cut, bool(x > cut)) for x in d]


def qq_points(distances, dof: int) -> np.ndarray:
    """Sorted distances paired with chi-square quantiles at (i - 0.5)/n."""
    d = np.sort(np.asarray(distances, dtype=float))
    probs = (np.arange(1, d.size + 1) - 0.5) / d.size
    return np.column_stack([d, stats.chi2.ppf(probs, dof)])
