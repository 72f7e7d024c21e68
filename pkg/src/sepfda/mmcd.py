"""Matrix minimum covariance determinant (MMCD) estimation.

The search follows the FAST-MCD pattern: many elemental starts, two
concentration steps each, then full concentration of the best few. Every
start draws from its own random substream, so the result does not depend on
the order in which starts are evaluated.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import (
    EstimationError,
    InsufficientDataError,
    InvalidConfigError,
    NumericalError,
    ShapeError,
)
from .matnorm import (
    SeparableFit,
    existence_threshold,
    flipflop,
    mmd2,
    mmle_flipflop,
    scale_to_convention,
)

THREADS_ENV = "SEPFDA_NUM_THREADS"


@dataclass
class MmcdConfig:
    alpha: float = 0.5
    n_initial_subsets: int = 500
    n_best_kept: int = 10
    max_csteps: int = 100
    reweight_quantile: float = 0.99
    seed: int = 0
    consistency: bool = True
    tol: float = 1e-8
    max_iter: int = 100
    n_threads: int | None = None

    def validate(self):
        if not 0.5 <= self.alpha <= 1:
            raise InvalidConfigError(f"alpha must lie in [0.5, 1], got {self.alpha}")
        if not 0.5 < self.reweight_quantile < 1:
            raise InvalidConfigError(f"reweight quantile must lie in (0.5, 1), got {self.reweight_quantile}")
        if self.n_initial_subsets < 1 or self.n_best_kept < 1 or self.max_csteps < 1:
            raise InvalidConfigError("subset counts and max_csteps must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfigError("seed must be an unsigned 64-bit integer")


@dataclass
class RobustFitReport:
    raw_fit: SeparableFit
    reweighted_fit: SeparableFit
    objective: float
    h_subset: np.ndarray
    weights: np.ndarray
    n_csteps_used: int
    chains: list = field(default_factory=list, repr=False)


def subset_size(alpha: float, n: int) -> int:
    return math.ceil(round(alpha * n, 9))


def consistency_factor(alpha: float, dof: int) -> float:
    """Trimming correction alpha / F_{chi2(dof+2)}(chi2_dof quantile at alpha)."""
    if not 0 < alpha <= 1:
        raise InvalidConfigError(f"alpha must lie in (0, 1], got {alpha}")
    if alpha == 1:
        return 1.0
    q = stats.chi2.ppf(alpha, dof)
    return float(alpha / stats.chi2.cdf(q, dof + 2))


def subset_mmle(samples, H, sigma_col0=None, tol: float = 1e-8, max_iter: int = 100) -> SeparableFit:
    """Flip-flop fit restricted to the samples indexed by ``H``.

    The returned fit carries ``objective`` = p·logdet(Σcol) + m·logdet(Σrow).
    """
    A = np.asarray(samples, dtype=float)
    H = np.sort(np.asarray(H, dtype=np.intp))
    _, m, p = A.shape
    need = existence_threshold(m, p)
    if H.size < need:
        raise InsufficientDataError(f"subset of size {H.size} is below the minimum {need} for m={m}, p={p}")
    sub = A[H]
    M = sub.mean(axis=0)
    res = flipflop(sub - M, sigma_col0, tol, max_iter)
    row, col = scale_to_convention(res.sigma_row, res.sigma_col)
    return SeparableFit(M, row, col, provenance="mmcd_raw", h_subset=H, converged=res.converged,
                        n_iter=res.n_iter, floored=res.floored, objective=res.objective)


def cstep(samples, current: SeparableFit, h: int, tol: float = 1e-8, max_iter: int = 100):
    """One concentration step: refit on the h samples closest under ``current``.

    Ties at the boundary go to the lower sample index. The refit is warm-started
    from the current column covariance, which keeps the objective non-increasing.
    """
    d = mmd2(samples, current)
    H = np.sort(np.argsort(d, kind="stable")[:h])
    fit = subset_mmle(samples, H, current.sigma_col, tol, max_iter)
    return H, fit, fit.objective


def _initial_subset(A: np.ndarray, canon: np.ndarray, size: int, rng: np.random.Generator,
                    tol, max_iter) -> SeparableFit:
    perm = canon[rng.permutation(A.shape[0])]
    n = A.shape[0]
    k = size
    while True:
        try:
            return subset_mmle(A, perm[:k], None, tol, max_iter)
        except NumericalError:
            if k >= n:
                raise
            k += 1


def _start(A, canon, k, h, h0, cfg: MmcdConfig):
    rng = np.random.default_rng(np.random.SeedSequence(int(cfg.seed), spawn_key=(k,)))
    try:
        fit = _initial_subset(A, canon, h0, rng, cfg.tol, cfg.max_iter)
        chain = []
        for _ in range(2):
            _, fit, obj = cstep(A, fit, h, cfg.tol, cfg.max_iter)
            chain.append(obj)
    except NumericalError:
        return None
    return fit, chain


def _canonical_order(A: np.ndarray, cfg: MmcdConfig) -> np.ndarray:
    """Sample order used when drawing starts.

    Ranking by distance under the full-sample fit makes the random starts
    select the same samples after any permutation or affine transformation
    of the data, so the search is equivariant and not just its target.
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            d = mmd2(A, mmle_flipflop(A, cfg.tol, cfg.max_iter))
    except NumericalError:
        return np.arange(A.shape[0])
    return np.argsort(d, kind="stable")


def _rank_key(fit: SeparableFit):
    return (fit.objective, tuple(fit.h_subset.tolist()))


def _resolve_threads(n_threads):
    if n_threads is None:
        n_threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(n_threads))


def mmcd_fit(samples, config: MmcdConfig | None = None) -> RobustFitReport:
    cfg = config or MmcdConfig()
    cfg.validate()
    A = np.asarray(samples, dtype=float)
    if A.ndim != 3:
        raise ShapeError(f"samples must be (n, m, p), got shape {A.shape}")
    n, m, p = A.shape
    h = subset_size(cfg.alpha, n)
    h0 = existence_threshold(m, p)
    if h < h0:
        raise InsufficientDataError(
            f"subset size h={h} (alpha={cfg.alpha}, n={n}) is below the minimum {h0} for m={m}, p={p}"
        )

    canon = _canonical_order(A, cfg)
    threads = _resolve_threads(cfg.n_threads)
    starts = range(cfg.n_initial_subsets)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda k: _start(A, canon, k, h, h0, cfg), starts))
    else:
        results = [_start(A, canon, k, h, h0, cfg) for k in starts]

    chains = [r[1] for r in results if r is not None]
    candidates = {}
    for r in results:
        if r is not None:
            key = tuple(r[0].h_subset.tolist())
            if key not in candidates or r[0].objective < candidates[key].objective:
                candidates[key] = r[0]
    if not candidates:
        raise EstimationError(
            f"all {cfg.n_initial_subsets} initial subsets were singular (n={n}, m={m}, p={p}, h={h})"
        )
    best = sorted(candidates.values(), key=_rank_key)[: cfg.n_best_kept]

    finals = []
    for fit in best:
        chain = [fit.objective]
        steps = 0
        while steps < cfg.max_csteps:
            H, new, obj = cstep(A, fit, h, cfg.tol, cfg.max_iter)
            steps += 1
            chain.append(obj)
            same = np.array_equal(H, fit.h_subset)
            fit = new
            if same:
                break
        chains.append(chain)
        finals.append((fit, steps))
    winner, steps = min(finals, key=lambda fs: _rank_key(fs[0]))

    dof = m * p
    col = winner.sigma_col * (consistency_factor(cfg.alpha, dof) if cfg.consistency else 1.0)
    raw = winner.with_covariances(winner.sigma_row, col, provenance="mmcd_raw")
    raw.distances = mmd2(A, raw)

    cutoff = stats.chi2.ppf(cfg.reweight_quantile, dof)
    weights = (raw.distances <= cutoff).astype(int)
    keep = np.flatnonzero(weights)
    if keep.size >= existence_threshold(m, p) and keep.size > 1:
        rw = mmle_flipflop(A[keep], cfg.tol, cfg.max_iter, provenance="mmcd_reweighted")
        factor = consistency_factor(cfg.reweight_quantile, dof) if cfg.consistency else 1.0
        rw = rw.with_covariances(rw.sigma_row, rw.sigma_col * factor, h_subset=keep)
    else:
        warnings.warn("too few samples survive reweighting; returning the raw fit", RuntimeWarning, stacklevel=2)
        rw = raw.with_covariances(raw.sigma_row, raw.sigma_col, provenance="mmcd_reweighted", h_subset=keep)
    rw.distances = mmd2(A, rw)
    return RobustFitReport(raw, rw, winner.objective, winner.h_subset, weights, steps, chains)
