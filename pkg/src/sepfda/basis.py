"""Clamped B-spline bases, Gram matrices and least-squares smoothing."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (
    DomainError,
    InvalidConfigError,
    InvalidInputError,
    RankDeficiencyError,
    ShapeError,
)


@dataclass(frozen=True)
class BasisSystem:
    domain: tuple[float, float]
    degree: int
    m: int
    knots: np.ndarray = field(repr=False)

    def __call__(self, t) -> np.ndarray:
        return eval_basis(self, t)

    def gram(self, interval: tuple[float, float] | None = None) -> np.ndarray:
        return gram(self, interval)


@dataclass
class DiscreteCurves:
    """Curves on a shared grid; ``values`` has shape (n, p, q)."""

    grid: np.ndarray
    values: np.ndarray
    ids: list[str] | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise ShapeError(f"values must be (n, p, q), got shape {self.values.shape}")
        if self.grid.ndim != 1 or self.grid.size != self.values.shape[2]:
            raise ShapeError("grid length does not match the last axis of values")
        if self.grid.size < 2 or np.any(np.diff(self.grid) <= 0):
            raise InvalidInputError("grid must be strictly increasing with at least 2 points")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("curve values must be finite")
        if self.ids is None:
            self.ids = [str(i + 1) for i in range(self.n)]
        elif len(self.ids) != self.n:
            raise ShapeError("number of ids does not match number of samples")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=bool)
            if self.labels.shape != (self.n,):
                raise ShapeError("labels must have one entry per sample")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def q(self) -> int:
        return self.values.shape[2]


def make_basis(domain=(0.0, 1.0), m: int = 10, degree: int = 3) -> BasisSystem:
    lo, hi = (float(x) for x in domain)
    if not hi > lo:
        raise InvalidConfigError(f"domain must have positive length, got {domain}")
    if degree < 0 or m < degree + 1:
        raise InvalidConfigError(f"basis size m={m} must be at least degree+1={degree + 1}")
    interior = np.linspace(lo, hi, m - degree + 1)[1:-1]
    knots = np.concatenate([np.full(degree + 1, lo), interior, np.full(degree + 1, hi)])
    return BasisSystem((lo, hi), int(degree), int(m), knots)


def eval_basis(basis: BasisSystem, t) -> np.ndarray:
    """Basis values at ``t``; a scalar gives an m-vector, an array gives (len(t), m).

    Uses the Cox-de Boor recursion. The right endpoint belongs to the last
    non-degenerate knot span so that the basis stays a partition of unity there.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lo, hi = basis.domain
    if np.any(~np.isfinite(t)) or np.any(t < lo) or np.any(t > hi):
        raise DomainError(f"evaluation points must lie in [{lo}, {hi}]")
    k, deg = basis.knots, basis.degree
    n_spans = k.size - 1
    span = np.searchsorted(k, t, side="right") - 1
    last = np.flatnonzero(k[:-1] < k[1:])[-1]
    span = np.clip(span, 0, last)

    B = np.zeros((t.size, n_spans))
    B[np.arange(t.size), span] = 1.0
    for d in range(1, deg + 1):
        nxt = np.zeros((t.size, n_spans - d))
        for i in range(n_spans - d):
            left = k[i + d] - k[i]
            right = k[i + d + 1] - k[i + 1]
            if left > 0:
                nxt[:, i] += (t - k[i]) / left * B[:, i]
            if right > 0:
                nxt[:, i] += (k[i + d + 1] - t) / right * B[:, i + 1]
        B = nxt
    return B[0] if scalar else B


def gram(basis: BasisSystem, interval=None) -> np.ndarray:
    """Matrix of inner products of basis functions over ``interval`` (default: whole domain).

    Integrates exactly with Gauss-Legendre on each knot span clipped to the interval.
    """
    lo, hi = basis.domain
    a, b = (lo, hi) if interval is None else (float(interval[0]), float(interval[1]))
    if not b > a:
        raise InvalidInputError(f"interval ({a}, {b}) is empty")
    if a < lo or b > hi:
        raise DomainError(f"interval ({a}, {b}) is not inside the domain [{lo}, {hi}]")
    inner = basis.knots[(basis.knots > a) & (basis.knots < b)]
    cuts = np.unique(np.concatenate([[a], inner, [b]]))
    nodes, weights = np.polynomial.legendre.leggauss(basis.degree + 1)
    left, right = cuts[:-1, None], cuts[1:, None]
    half = 0.5 * (right - left)
    x = (left + right) / 2 + half * nodes
    w = (half * weights).ravel()
    Phi = eval_basis(basis, np.clip(x.ravel(), lo, hi))
    G = (Phi * w[:, None]).T @ Phi
    return 0.5 * (G + G.T)


def smooth(curves: DiscreteCurves, basis: BasisSystem) -> np.ndarray:
    """Least-squares basis coefficients for every sample, shape (n, m, p).

    Column j of each m x p block holds the coefficients of coordinate j.
    """
    grid = curves.grid
    m = basis.m
    if grid.size < m:
        raise RankDeficiencyError(f"basis size m={m} exceeds the number of grid points {grid.size}")
    design = eval_basis(basis, grid)
    Q, R = np.linalg.qr(design)
    diag = np.abs(np.diag(R))
    if diag.min() <= grid.size * np.finfo(float).eps * diag.max():
        raise RankDeficiencyError(
            f"design matrix for basis size m={m} is rank deficient on this grid; use a smaller m"
        )
    n, p, q = curves.values.shape
    Y = curves.values.transpose(2, 0, 1).reshape(q, n * p)
    coef = linalg.solve_triangular(R, Q.T @ Y)
    return coef.reshape(m, n, p).transpose(1, 0, 2)


def curves_from_coefficients(coefs: np.ndarray, basis: BasisSystem, grid) -> np.ndarray:
    """Evaluate coefficient matrices (n, m, p) on a grid, giving (n, p, q)."""
    Phi = eval_basis(basis, np.asarray(grid, dtype=float))
    return np.einsum("qm,nmp->npq", Phi, np.asarray(coefs, dtype=float))
