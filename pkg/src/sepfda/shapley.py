"""Shapley decompositions of squared Mahalanobis outlyingness.

Coefficient matrices are m x p (column k = coordinate k). With D = A − M,
the contribution of coordinate k on the sub-interval T_a is

    d_k' W_{T_a} W⁻¹ Σcol⁻¹ D Σrow⁻¹ e_k,

where W is the full-domain Gram matrix and W_{T_a} its restriction to T_a.
Summing over intervals gives d_k' Σcol⁻¹ D Σrow⁻¹ e_k, and summing over
coordinates gives the squared distance.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .basis import BasisSystem, gram
from .errors import InvalidInputError, ShapeError, SizeError
from .matnorm import SeparableFit
from .numerics import spd_solve

MAX_PLAYERS = 12


@dataclass(frozen=True)
class DomainPartition:
    breakpoints: tuple[float, ...]

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0):
            raise InvalidInputError("partition breakpoints must be strictly increasing, at least two")
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in b))

    @classmethod
    def uniform(cls, domain, d: int) -> "DomainPartition":
        if d < 1:
            raise InvalidInputError(f"number of intervals must be positive, got {d}")
        return cls(tuple(np.linspace(domain[0], domain[1], d + 1)))

    @property
    def d(self) -> int:
        return len(self.breakpoints) - 1

    def intervals(self):
        b = self.breakpoints
        return list(zip(b[:-1], b[1:]))

    def locate(self, t) -> np.ndarray:
        """Interval index of each point; right endpoints belong to the interval on their left."""
        b = np.asarray(self.breakpoints)
        t = np.asarray(t, dtype=float)
        if np.any(t < b[0]) or np.any(t > b[-1]):
            raise InvalidInputError("points fall outside the partition")
        return np.clip(np.searchsorted(b, t, side="left") - 1, 0, self.d - 1)


@dataclass(frozen=True)
class ShapleyMap:
    cell: np.ndarray  # p x d

    @property
    def row_sums(self) -> np.ndarray:
        return self.cell.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.cell.sum(axis=0)

    @property
    def total(self) -> float:
        return float(self.cell.sum())

    def normalized(self) -> np.ndarray:
        t = self.total
        return self.cell / t if t != 0 else np.zeros_like(self.cell)


def interval_grams(basis: BasisSystem, partition: DomainPartition) -> list[np.ndarray]:
    _check_cover(basis.domain, partition)
    return [gram(basis, iv) for iv in partition.intervals()]


def _check_cover(domain, partition: DomainPartition):
    b = partition.breakpoints
    if not (np.isclose(b[0], domain[0], rtol=0, atol=1e-12) and np.isclose(b[-1], domain[1], rtol=0, atol=1e-12)):
        raise InvalidInputError(f"partition {b[0]}..{b[-1]} does not cover the domain {domain}")


def _centred(A, fit: SeparableFit) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != fit.mean.shape:
        raise ShapeError(f"sample shape {A.shape} does not match fit shape {fit.mean.shape}")
    return A - fit.mean


def shapley_multivariate(x, mean, covariance) -> np.ndarray:
    """θ_k = (x_k − μ_k) Σ_j (x_j − μ_j) Ω_jk with Ω the precision matrix."""
    d = np.atleast_1d(np.asarray(x, dtype=float) - np.asarray(mean, dtype=float))
    S = np.atleast_2d(np.asarray(covariance, dtype=float))
    if S.shape != (d.size, d.size):
        raise ShapeError(f"covariance shape {S.shape} does not match vector length {d.size}")
    return d * spd_solve(S, d)


def time_coordinate_cells(D: np.ndarray, weighted: np.ndarray, parts) -> np.ndarray:
    """Contributions Θ[k, a] = d_k' W_a G[:, k] for a precomputed G = W⁻¹ Σcol⁻¹ D Σrow⁻¹."""
    return np.column_stack([np.sum(D * (Wa @ weighted), axis=0) for Wa in parts])


def shapley_time_coordinate_grams(A, fit: SeparableFit, W, parts) -> ShapleyMap:
    """Time-coordinate map from explicit Gram matrices (full domain and per interval)."""
    D = _centred(A, fit)
    inner = fit.col_precision @ D @ fit.row_precision
    G = spd_solve(W, inner)
    return ShapleyMap(time_coordinate_cells(D, G, parts))


def shapley_time_coordinate(A, fit: SeparableFit, basis: BasisSystem, partition: DomainPartition) -> ShapleyMap:
    return shapley_time_coordinate_grams(A, fit, basis.gram(), interval_grams(basis, partition))


def shapley_time_univariate(a, mean, sigma_col, basis: BasisSystem, partition: DomainPartition) -> np.ndarray:
    """θ_a = (a − μ)' W_{T_a} W⁻¹ Σ⁻¹ (a − μ) for a single coordinate."""
    d = np.asarray(a, dtype=float) - np.asarray(mean, dtype=float)
    S = np.asarray(sigma_col, dtype=float)
    if d.shape != (basis.m,) or S.shape != (basis.m, basis.m):
        raise ShapeError("coefficient vector or covariance does not match the basis size")
    g = spd_solve(basis.gram(), spd_solve(S, d))
    return np.array([d @ Wa @ g for Wa in interval_grams(basis, partition)])


def shapley_coordinate(A, fit: SeparableFit) -> np.ndarray:
    """θ_k = d_k' Σcol⁻¹ D Σrow⁻¹ e_k, the diagonal of D' Σcol⁻¹ D Σrow⁻¹."""
    D = _centred(A, fit)
    return np.sum(D * (fit.col_precision @ D @ fit.row_precision), axis=0)


def shapley_time(A, fit: SeparableFit, basis: BasisSystem, partition: DomainPartition) -> np.ndarray:
    return shapley_time_coordinate(A, fit, basis, partition).col_sums


def shapley_matrix_cellwise(A, fit: SeparableFit) -> np.ndarray:
    """Per-entry contributions as a p x m array (coordinate x coefficient)."""
    D = _centred(A, fit)
    return (D * (fit.col_precision @ D @ fit.row_precision)).T


def shapley_bruteforce(value_function, n: int) -> np.ndarray:
    """Exact Shapley values by enumerating all 2**n coalitions.

    ``value_function`` receives a boolean mask of length n.
    """
    if not 1 <= n <= MAX_PLAYERS:
        raise SizeError(f"brute-force enumeration supports 1..{MAX_PLAYERS} players, got {n}")
    codes = np.arange(2**n)
    bits = (codes[:, None] >> np.arange(n)) & 1
    values = np.array([float(value_function(row.astype(bool))) for row in bits])
    sizes = bits.sum(axis=1)
    weights = np.array([factorial(s) * factorial(n - s - 1) / factorial(n) for s in range(n)])
    phi = np.empty(n)
    for i in range(n):
        without = codes[bits[:, i] == 0]
        phi[i] = np.sum(weights[sizes[without]] * (values[without | (1 << i)] - values[without]))
    return phi
