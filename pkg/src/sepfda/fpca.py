"""Separable functional principal components.

Kernel eigenfunctions come from W^{1/2} Σcol W^{1/2}; multivariate
eigenvalues are products of kernel and row-covariance eigenvalues.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import BasisSystem
from .errors import ShapeError, TruncationError
from .matnorm import SeparableFit
from .numerics import sym_eigen, sym_inv_sqrt, sym_sqrt


@dataclass(frozen=True)
class FpcaModel:
    kernel_values: np.ndarray  # (m,) descending
    kernel_coefs: np.ndarray  # (m, m); column i holds b_i
    row_values: np.ndarray  # (p,) descending
    row_vectors: np.ndarray  # (p, p); column j holds v_j
    products: np.ndarray  # (m*p,) descending
    index: np.ndarray  # (m*p, 2) rows (kernel index i, row index j)
    gram: np.ndarray
    M: int

    def components(self, M: int | None = None) -> np.ndarray:
        return self.index[: self.M if M is None else M]


def ranked_products(kernel_values, row_values):
    """Products λ_i·λ_j sorted descending, ties by (kernel index, row index)."""
    m, p = len(kernel_values), len(row_values)
    ii, jj = np.meshgrid(np.arange(m), np.arange(p), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    prod = np.asarray(kernel_values)[ii] * np.asarray(row_values)[jj]
    order = np.lexsort((jj, ii, -prod))
    return prod[order], np.column_stack([ii[order], jj[order]])


def check_truncation(products: np.ndarray, M: int, warn: bool = True) -> None:
    if not 1 <= M <= products.size:
        raise TruncationError(f"truncation M={M} must lie in [1, {products.size}]")
    if not products[M - 1] > 0:
        raise TruncationError(f"eigenvalue {M} is not positive ({products[M - 1]:.3e})")
    if warn and M < products.size:
        a, b = products[M - 1], products[M]
        if abs(a - b) <= 1e-10 * abs(a):
            warnings.warn(
                f"eigenvalues {M} and {M + 1} are tied; the cut splits a tied group",
                RuntimeWarning,
                stacklevel=3,
            )


def gram_of(basis_or_gram) -> np.ndarray:
    """Full-domain Gram matrix of a basis, or the argument itself if it already is one."""
    if isinstance(basis_or_gram, BasisSystem):
        return basis_or_gram.gram()
    return np.asarray(basis_or_gram, dtype=float)


def separable_fpca(fit: SeparableFit, basis, M: int | None = None) -> FpcaModel:
    """Eigen-structure of the separable covariance.

    ``basis`` is a :class:`BasisSystem` or its Gram matrix. For raw grid data
    pass the quadrature weight matrix instead.
    """
    W = gram_of(basis)
    m, p = fit.m, fit.p
    if W.shape != (m, m):
        raise ShapeError(f"Gram matrix shape {W.shape} does not match basis size {m}")
    M = m * p if M is None else int(M)
    half = sym_sqrt(W)
    inv_half = sym_inv_sqrt(W)
    lam, U = sym_eigen(half @ fit.sigma_col @ half)
    B = inv_half @ U
    rho, V = sym_eigen(fit.sigma_row)
    prod, index = ranked_products(lam, rho)
    check_truncation(prod, M)
    return FpcaModel(lam, B, rho, V, prod, index, W, M)


def score_matrix(A, fit: SeparableFit, model: FpcaModel) -> np.ndarray:
    """All scores b_i' W (A − M) v_j as an (..., m, p) array."""
    D = np.asarray(A, dtype=float) - fit.mean
    if D.shape[-2:] != fit.mean.shape:
        raise ShapeError(f"sample shape {D.shape[-2:]} does not match fit shape {fit.mean.shape}")
    left = model.kernel_coefs.T @ model.gram
    return left @ D @ model.row_vectors


def scores(A, fit: SeparableFit, model: FpcaModel, M: int | None = None) -> np.ndarray:
    """Scores of the first M product components, ordered by descending eigenvalue."""
    M = model.M if M is None else int(M)
    check_truncation(model.products, M, warn=False)
    S = score_matrix(A, fit, model)
    idx = model.index[:M]
    return S[..., idx[:, 0], idx[:, 1]]


def kernel_reconstruction(model: FpcaModel) -> np.ndarray:
    """Σ_i λ_i b_i b_i', which reproduces the column covariance."""
    B = model.kernel_coefs
    return (B * model.kernel_values) @ B.T
