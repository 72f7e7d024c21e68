"""Independent reference computations used by the tests.

Each oracle takes a different route from the package code: explicit
Kronecker products, subset enumeration, symbolic values, scipy densities.
"""
from __future__ import annotations

import numpy as np
from scipy import stats

from sepfda.matnorm import SeparableFit

# mpmath root-finding on the regularized incomplete gamma function (30 digits)
CHI2_1_Q99 = 6.634896601021215
CHI2_15_Q99 = 30.577914166892494
CONSISTENCY_HALF_DOF1 = 7.010074539703235


def random_spd(rng, n, ridge=0.5):
    G = rng.standard_normal((n, n))
    return G @ G.T / n + ridge * np.eye(n)


def random_fit(rng, m, p, ridge=0.5) -> SeparableFit:
    return SeparableFit(rng.standard_normal((m, p)), random_spd(rng, p, ridge), random_spd(rng, m, ridge))


def vec(A):
    return np.asarray(A).reshape(-1, order="F")


def kron_mmd2(A, fit: SeparableFit) -> float:
    d = vec(A - fit.mean)
    return float(d @ np.linalg.solve(np.kron(fit.sigma_row, fit.sigma_col), d))


def kron_logpdf(A, fit: SeparableFit) -> float:
    return float(stats.multivariate_normal(vec(fit.mean), np.kron(fit.sigma_row, fit.sigma_col)).logpdf(vec(A)))


def multivariate_value(x, mean, cov):
    """Replacement-rule coalition value: squared distance with outside players reset to the mean."""
    d = np.asarray(x, float) - np.asarray(mean, float)
    P = np.linalg.inv(cov)

    def value(mask):
        z = np.where(mask, d, 0.0)
        return z @ P @ z

    return value


def spectral_time_coordinate_value(D, Wparts, kernel_values, kernel_coefs, row_values, row_vectors):
    """Coalition value over (coordinate, interval) players, player k*d + a.

    The coalition curve keeps X - μ on its cells and is zero elsewhere; its
    value is Σ_(i,j) score_ij² / (λ_i ρ_j) with score_ij = Σ_cells v_jk d_k' W_a b_i.
    """
    p = D.shape[1]
    d = len(Wparts)
    proj = np.array([[kernel_coefs.T @ Wa @ D[:, k] for a, Wa in enumerate(Wparts)] for k in range(p)])  # p, d, m
    denom = np.outer(kernel_values, row_values)

    def value(mask):
        mask = mask.reshape(p, d)
        S = np.zeros_like(denom)
        for k in range(p):
            for a in range(d):
                if mask[k, a]:
                    S += np.outer(proj[k, a], row_vectors[k])
        return float(np.sum(S * S / denom))

    return value


def univariate_time_value(d, Wparts, lam, B):
    def value(mask):
        s = sum((B.T @ Wa @ d for Wa, on in zip(Wparts, mask) if on), np.zeros(len(lam)))
        return float(np.sum(s * s / lam))

    return value


def ks_distance(sample, cdf) -> float:
    x = np.sort(np.asarray(sample))
    n = x.size
    F = cdf(x)
    return float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))
