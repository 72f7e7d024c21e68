"""Robust covariance estimation and explainable outlier detection for
multivariate functional data with separable covariance."""

from .basis import BasisSystem, DiscreteCurves, eval_basis, gram, make_basis, smooth
from .distances import (
    DistanceResult,
    chi2_cutoff,
    flag_outliers,
    fmd2,
    fmmd2_coef,
    fmmd2_spectral,
)
from .fpca import FpcaModel, scores, separable_fpca
from .matnorm import (
    SeparableFit,
    matnorm_logpdf,
    mmd2,
    mmle_flipflop,
    sample_matrix_normal,
)
from .metrics import MetricReport, auc, confusion_metrics, cov_error, mean_error
from .mmcd import MmcdConfig, RobustFitReport, consistency_factor, cstep, mmcd_fit, subset_mmle
from .numerics import EigenPairs, spd_factor, spd_inverse, sym_eigen, sym_sqrt
from .shapley import (
    DomainPartition,
    ShapleyMap,
    shapley_bruteforce,
    shapley_coordinate,
    shapley_matrix_cellwise,
    shapley_multivariate,
    shapley_time,
    shapley_time_coordinate,
    shapley_time_univariate,
)
from .simulate import (
    KernelSpec,
    OutlierSpec,
    inject_outliers,
    kernel_eval,
    make_sigma_row,
    matern_kernel,
    ou_kernel,
    sample_nonseparable,
    sample_process,
)

__all__ = [
    "BasisSystem",
    "DiscreteCurves",
    "DistanceResult",
    "DomainPartition",
    "EigenPairs",
    "FpcaModel",
    "KernelSpec",
    "MetricReport",
    "MmcdConfig",
    "OutlierSpec",
    "RobustFitReport",
    "SeparableFit",
    "ShapleyMap",
    "auc",
    "chi2_cutoff",
    "confusion_metrics",
    "consistency_factor",
    "cov_error",
    "cstep",
    "eval_basis",
    "flag_outliers",
    "fmd2",
    "fmmd2_coef",
    "fmmd2_spectral",
    "gram",
    "inject_outliers",
    "kernel_eval",
    "make_basis",
    "make_sigma_row",
    "matern_kernel",
    "matnorm_logpdf",
    "mean_error",
    "mmcd_fit",
    "mmd2",
    "mmle_flipflop",
    "ou_kernel",
    "sample_matrix_normal",
    "sample_nonseparable",
    "sample_process",
    "scores",
    "separable_fpca",
    "shapley_bruteforce",
    "shapley_coordinate",
    "shapley_matrix_cellwise",
    "shapley_multivariate",
    "shapley_time",
    "shapley_time_coordinate",
    "shapley_time_univariate",
    "smooth",
    "spd_factor",
    "spd_inverse",
    "subset_mmle",
    "sym_eigen",
    "sym_sqrt",
]

__version__ = "0.1.0"
