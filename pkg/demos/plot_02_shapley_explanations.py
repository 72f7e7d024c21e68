"""
Explaining an outlier by coordinate and time interval
=====================================================

Shapley contributions split a sample's squared distance into a coordinate
by interval table whose entries add up to the distance.
"""
import numpy as np

from sepfda import (
    DomainPartition,
    MmcdConfig,
    make_basis,
    make_sigma_row,
    mmcd_fit,
    ou_kernel,
    sample_process,
    shapley_coordinate,
    shapley_time,
    shapley_time_coordinate,
    smooth,
)

###############################################################################
# A single localized anomaly
# -------------------------
# Add a bump to coordinate 2 of sample 0 on the interval [0.5, 0.75].
rng = np.random.default_rng(3)
grid = np.linspace(0, 1, 100)
curves = sample_process(120, 3, grid, make_sigma_row(3, rng), ou_kernel(), rng=rng)
window = (grid >= 0.5) & (grid <= 0.75)
curves.values[0, 1, window] += 3.0

basis = make_basis((0, 1), 12)
coefs = smooth(curves, basis)
fit = mmcd_fit(coefs, MmcdConfig(seed=0, n_initial_subsets=200)).reweighted_fit

###############################################################################
# Coordinate by interval contributions
# ------------------------------------
partition = DomainPartition.uniform((0, 1), 4)
table = shapley_time_coordinate(coefs[0], fit, basis, partition)
np.set_printoptions(precision=2, suppress=True)
print("contributions (rows: coordinates, columns: intervals)")
print(table.cell)
print("sum:", table.total, "distance:", fit.distances[0])

###############################################################################
# Marginal views
# --------------
print("per coordinate:", shapley_coordinate(coefs[0], fit))
print("per interval:  ", shapley_time(coefs[0], fit, basis, partition))
