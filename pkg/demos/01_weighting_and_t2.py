"""One day of a telehealth panel, start to finish.

Run with ``python demos/01_weighting_and_t2.py``.
"""
from datetime import date

import numpy as np

from dqchart import published
from dqchart.chart import reduce_dimensions, t_squared
from dqchart.weighting import scaled_covariance, summary_from_members, weight_matrix

np.set_printoptions(precision=4, suppress=True)

est = published.center_a()
print("signs:", est.signs)
print("Phase I center:", est.mu_hat)

# Four participants.  P2 skipped the blood pressure cuff, P4 only measured
# temperature and SpO2, and nobody measured DBP at all.
members = [
    {"P1": 36.1, "P2": 35.8, "P3": 36.0, "P4": 36.4},  # BT
    {"P1": 128.0, "P3": 141.0},                        # SBP
    {},                                                # DBP
    {"P1": 71.0, "P2": 80.0, "P3": 66.0},              # HR
    {"P1": 97.0, "P2": 98.0, "P3": 96.0, "P4": 99.0},  # SpO2
]
day = summary_from_members(est.signs, members, date(2018, 3, 5))
print("\ncounts per sign:", day.counts)
print("daily means:", day.means)

# W[j, k] = |U_j & U_k| / (n_j n_k); DBP has no participants so it drops out
w = weight_matrix(day)
print("\nweights (DBP row/column undefined):")
print(w.entries)

# Covariance of the daily mean vector over the active signs
cov = scaled_covariance(w, est.sigma_hat)
print("\nW * Sigma on", day.active_signs)
print(cov)

red = reduce_dimensions(day, est)
print("\nT2 on the reduced system:", t_squared(red.mean, red.mu, red.sigma))

# Same number by brute force, for comparison only
dev = red.mean - red.mu
print("explicit inverse:         ", dev @ np.linalg.inv(red.sigma) @ dev)
