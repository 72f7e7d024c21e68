"""Synthetic multivariate functional data with separable covariance.

Curves are returned as (n, p, q) arrays: sample, coordinate, grid point.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .basis import DiscreteCurves
from .errors import InvalidConfigError, KernelDegeneracyError, NotPositiveDefiniteError
from .numerics import sign_normalize, spd_factor, sym_eigen


@dataclass(frozen=True)
class KernelSpec:
    """Stationary covariance kernel.

    ``ou``: variance * exp(-|s-t| / length).
    ``matern``: variance * 2^(1-nu)/Gamma(nu) * (tau r)^nu * K_nu(tau r).
    """

    kind: str
    variance: float
    length: float = 0.3  # ou
    tau: float = 5.0  # matern
    nu: float = 0.5  # matern

    def __post_init__(self):
        if self.kind not in ("ou", "matern"):
            raise InvalidConfigError(f"unknown kernel kind {self.kind!r}")
        params = (self.variance, self.length) if self.kind == "ou" else (self.variance, self.tau, self.nu)
        if not all(x > 0 for x in params):
            raise InvalidConfigError(f"kernel parameters must be positive: {self}")

    def to_dict(self) -> dict:
        if self.kind == "ou":
            return {"kind": "ou", "variance": self.variance, "length": self.length}
        return {"kind": "matern", "variance": self.variance, "tau": self.tau, "nu": self.nu}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(**d)


def ou_kernel(variance: float = 0.3, length: float = 0.3) -> KernelSpec:
    return KernelSpec("ou", variance, length=length)


def matern_kernel(variance: float = 1.0, tau: float = 5.0, nu: float = 0.5) -> KernelSpec:
    return KernelSpec("matern", variance, tau=tau, nu=nu)


def kernel_eval(spec: KernelSpec, s, t):
    r = np.abs(np.asarray(s, dtype=float) - np.asarray(t, dtype=float))
    if spec.kind == "ou":
        out = spec.variance * np.exp(-r / spec.length)
    else:
        x = spec.tau * r
        nu = spec.nu
        with np.errstate(invalid="ignore", over="ignore"):
            out = spec.variance * 2 ** (1 - nu) / special.gamma(nu) * x**nu * special.kv(nu, x)
        # K_nu overflows only as x -> 0 where the limit is the variance
        out = np.where(x == 0, spec.variance, out)
        out = np.where(np.isfinite(out), out, spec.variance)
    return float(out) if np.ndim(out) == 0 else out


def kernel_matrix(spec: KernelSpec, grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    K = kernel_eval(spec, g[:, None], g[None, :])
    return 0.5 * (K + K.T)


def kernel_factor(spec: KernelSpec, grid) -> np.ndarray:
    """Cholesky factor of the grid covariance after adding 1e-10 * variance jitter."""
    K = kernel_matrix(spec, grid) + 1e-10 * spec.variance * np.eye(len(grid))
    try:
        return spd_factor(K)
    except NotPositiveDefiniteError as exc:
        raise KernelDegeneracyError(f"kernel Gram on the grid is not positive definite: {exc}") from None


def trapezoid_weights(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    w = np.zeros_like(g)
    h = np.diff(g)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def kernel_eigenfunctions(spec: KernelSpec, grid, k: int | None = None):
    """Leading eigenpairs of the kernel integral operator discretized on the grid.

    Returns (values, functions) with functions shaped (k, q) and normalized so
    that the trapezoid integral of each squared function is one.
    """
    w = trapezoid_weights(grid)
    sw = np.sqrt(w)
    K = kernel_matrix(spec, grid)
    vals, U = sym_eigen(sw[:, None] * K * sw[None, :])
    k = len(grid) if k is None else k
    funcs = sign_normalize(U[:, :k] / sw[:, None]).T
    return vals[:k], funcs


def make_sigma_row(p: int, rng) -> np.ndarray:
    """Random correlation matrix from Dirichlet eigenvalues and a random rotation."""
    rng = np.random.default_rng(rng)
    if p == 1:
        return np.ones((1, 1))
    lam = rng.dirichlet(np.ones(p)) * p
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    Q = Q * np.sign(np.diag(R))
    S = (Q * lam) @ Q.T
    s = 1 / np.sqrt(np.diag(S))
    C = S * s[:, None] * s[None, :]
    C = 0.5 * (C + C.T)
    np.fill_diagonal(C, 1.0)
    return C


def default_mean(t):
    t = np.asarray(t, dtype=float)
    return 30 * t * (1 - t) ** 1.5


def linear_mean(t):
    return 4 * np.asarray(t, dtype=float)


MEAN_FUNCTIONS = {"default": default_mean, "linear": linear_mean}


def _centred_draws(n, sigma_row, kernel, grid, rng, innovation="gaussian", df=None) -> np.ndarray:
    sigma_row = np.atleast_2d(np.asarray(sigma_row, dtype=float))
    p = sigma_row.shape[0]
    L_row = spd_factor(sigma_row)
    L_grid = kernel_factor(kernel, grid)
    Z = rng.standard_normal((n, p, len(grid)))
    X = L_row @ Z @ L_grid.T
    if innovation == "t":
        if df is None or df <= 0:
            raise InvalidConfigError("t innovations need positive degrees of freedom")
        X = X / np.sqrt(rng.chisquare(df, size=n) / df)[:, None, None]
    elif innovation != "gaussian":
        raise InvalidConfigError(f"unknown innovation {innovation!r}")
    return X


def sample_process(n: int, p: int, grid, sigma_row, kernel: KernelSpec, mean_fn=default_mean,
                   innovation: str = "gaussian", df: float | None = None, rng=None) -> DiscreteCurves:
    """Draw n curves mean + L_row Z L_grid' (p x q each)."""
    rng = np.random.default_rng(rng)
    grid = np.asarray(grid, dtype=float)
    if np.shape(sigma_row) != (p, p):
        raise InvalidConfigError(f"sigma_row must be {p}x{p}")
    X = _centred_draws(n, sigma_row, kernel, grid, rng, innovation, df)
    mu = np.asarray(mean_fn(grid), dtype=float)
    return DiscreteCurves(grid, X + mu, labels=np.zeros(n, dtype=bool))


@dataclass(frozen=True)
class OutlierSpec:
    kind: str  # shift, shape, isolated, covariance
    fraction: float
    coord_fraction: float = 1.0
    magnitude: float = 1.0
    nu: float = 0.1  # covariance outliers
    tau: float = 10.0
    variance: float = 1.0

    def __post_init__(self):
        if self.kind not in ("shift", "shape", "isolated", "covariance"):
            raise InvalidConfigError(f"unknown outlier kind {self.kind!r}")
        if not (0 <= self.fraction <= 1 and 0 <= self.coord_fraction <= 1):
            raise InvalidConfigError("outlier fractions must lie in [0, 1]")


def isolated_bump(t, magnitude, sign, centre):
    t = np.asarray(t, dtype=float)
    return magnitude * sign * (1.8 - (0.02 * np.pi) ** -0.5 * np.exp(-((t - centre) ** 2) / 0.02))


def inject_outliers(curves: DiscreteCurves, spec: OutlierSpec, eigenfunctions=None, rng=None,
                    mean_fn=default_mean) -> DiscreteCurves:
    """Contaminate a random subset of ceil(fraction * n) samples.

    ``eigenfunctions`` is the (k, q) array from :func:`kernel_eigenfunctions`;
    shift outliers need at least one row and shape outliers at least ten.
    Covariance outliers redraw the chosen coordinates around ``mean_fn`` from
    a Matérn process with the outlier settings' (variance, tau, nu).
    """
    rng = np.random.default_rng(rng)
    X = curves.values.copy()
    n, p, q = X.shape
    labels = np.zeros(n, dtype=bool) if curves.labels is None else curves.labels.copy()
    n_out = math.ceil(round(spec.fraction * n, 9))
    n_coord = math.floor(round(spec.coord_fraction * p, 9))
    if n_out == 0:
        return DiscreteCurves(curves.grid, X, list(curves.ids), labels)
    if n_coord == 0:
        warnings.warn("coordinate fraction selects no coordinate; outliers are unchanged", RuntimeWarning, stacklevel=2)
    rows = np.sort(rng.choice(n, n_out, replace=False))
    grid = curves.grid

    if spec.kind in ("shift", "shape"):
        need = 1 if spec.kind == "shift" else 10
        if eigenfunctions is None or len(eigenfunctions) < need:
            raise InvalidConfigError(f"{spec.kind} outliers need at least {need} kernel eigenfunctions")
        direction = spec.magnitude * np.asarray(eigenfunctions)[need - 1]
    if spec.kind == "covariance":
        L = kernel_factor(matern_kernel(spec.variance, spec.tau, spec.nu), grid)
        mu = np.asarray(mean_fn(grid), dtype=float)

    for i in rows:
        cols = np.sort(rng.choice(p, n_coord, replace=False))
        for k in cols:
            if spec.kind in ("shift", "shape"):
                X[i, k] = X[i, k] + direction
            elif spec.kind == "isolated":
                sign = -1.0 if rng.random() < 0.5 else 1.0
                centre = rng.uniform(0.25, 0.75)
                X[i, k] = X[i, k] + isolated_bump(grid, spec.magnitude, sign, centre)
            else:
                X[i, k] = mu + L @ rng.standard_normal(q)
    labels[rows] = True
    return DiscreteCurves(grid, X, list(curves.ids), labels)


@dataclass(frozen=True)
class SeparableComponent:
    sigma_row: np.ndarray
    kernel: KernelSpec


def sample_nonseparable(n: int, p: int, grid, components, mean_fn=default_mean, rng=None) -> DiscreteCurves:
    """Sum of independent separable Gaussian draws, one per component."""
    rng = np.random.default_rng(rng)
    if len(components) < 1:
        raise InvalidConfigError("need at least one separable component")
    grid = np.asarray(grid, dtype=float)
    X = np.zeros((n, p, grid.size))
    for comp in components:
        X += _centred_draws(n, comp.sigma_row, comp.kernel, grid, rng)
    return DiscreteCurves(grid, X + np.asarray(mean_fn(grid), dtype=float), labels=np.zeros(n, dtype=bool))
