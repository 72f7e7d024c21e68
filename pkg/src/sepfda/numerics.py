"""Dense symmetric and SPD linear algebra shared by the other modules.

All routines return new arrays and never mutate their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidInputError, NotPositiveDefiniteError


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray  # descending
    vectors: np.ndarray  # column k pairs with values[k]

    def __iter__(self):
        yield self.values
        yield self.vectors


def _as_symmetric(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidInputError("matrix has non-finite entries")
    return 0.5 * (S + S.T)


def sign_normalize(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry is positive (first index wins ties)."""
    V = np.array(vectors, dtype=float, copy=True)
    if V.size == 0:
        return V
    lead = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[lead, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eigen(S) -> EigenPairs:
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    Equal eigenvalues keep the order returned by the solver, which for an
    already diagonal matrix is the axis order.
    """
    S = _as_symmetric(S)
    w, V = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    return EigenPairs(w[order], sign_normalize(V[:, order]))


def spd_factor(S) -> np.ndarray:
    """Lower Cholesky factor L with L @ L.T == S."""
    S = _as_symmetric(S)
    n = S.shape[0]
    diag = np.diag(S)
    max_diag = float(diag.max()) if n else 0.0
    if n == 0 or max_diag <= 0:
        raise NotPositiveDefiniteError("matrix has no positive diagonal entry")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from None
    pivots = np.diag(L) ** 2
    threshold = n * 1e-14 * max_diag
    bad = np.flatnonzero(pivots <= threshold)
    if bad.size:
        raise NotPositiveDefiniteError(
            f"pivot {bad[0]} = {pivots[bad[0]]:.3e} below threshold {threshold:.3e}"
        )
    return L


def logdet_spd(S=None, *, factor: np.ndarray | None = None) -> float:
    """log det of an SPD matrix from its Cholesky diagonal."""
    L = spd_factor(S) if factor is None else factor
    return float(2.0 * np.sum(np.log(np.diag(L))))


def spd_inverse(S) -> np.ndarray:
    L = spd_factor(S)
    inv = linalg.cho_solve((L, True), np.eye(L.shape[0]))
    return 0.5 * (inv + inv.T)


def spd_solve(S, B, *, factor: np.ndarray | None = None) -> np.ndarray:
    L = spd_factor(S) if factor is None else factor
    return linalg.cho_solve((L, True), B)


def _floored_spectrum(S: np.ndarray) -> EigenPairs:
    pairs = sym_eigen(S)
    w = pairs.values
    n = S.shape[0]
    top = float(w[0]) if n else 0.0
    if top <= 0:
        raise InvalidInputError("matrix has no positive eigenvalue")
    if w[-1] < -n * 1e-10 * top:
        raise InvalidInputError(f"matrix is not positive semi-definite (eigenvalue {w[-1]:.3e})")
    return EigenPairs(np.maximum(w, n * 1e-12 * top), pairs.vectors)


def sym_sqrt(S) -> np.ndarray:
    """Symmetric square root of a PSD matrix with tiny eigenvalues floored."""
    S = _as_symmetric(S)
    w, V = _floored_spectrum(S)
    R = (V * np.sqrt(w)) @ V.T
    return 0.5 * (R + R.T)


def sym_inv_sqrt(S) -> np.ndarray:
    """Inverse symmetric square root, using the same eigenvalue floor as :func:`sym_sqrt`."""
    S = _as_symmetric(S)
    w, V = _floored_spectrum(S)
    R = (V / np.sqrt(w)) @ V.T
    return 0.5 * (R + R.T)
