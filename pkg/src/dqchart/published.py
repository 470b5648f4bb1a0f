"""Phase I OGK estimates reported for the two telehealth centers.

Used as generator parameters for synthetic studies and for reproducing the
reported control limits.  Sign order: BT, SBP, DBP, HR, SpO2.
"""
import numpy as np

from .robust import RobustEstimates

SIGNS = ("BT", "SBP", "DBP", "HR", "SpO2")

CENTER_A_MU = np.array([35.93, 131.31, 67.55, 73.38, 97.94])
CENTER_A_SIGMA = np.array([
    [0.10, -0.01, -0.06, 0.28, 0.00],
    [-0.01, 254.92, 22.33, -48.58, 0.56],
    [-0.06, 22.33, 87.13, 3.54, -0.04],
    [0.28, -48.58, 3.54, 130.38, 5.18],
    [0.00, 0.56, -0.04, 5.18, 2.36],
])

CENTER_B_MU = np.array([36.83, 133.96, 69.80, 71.11, 96.96])
CENTER_B_SIGMA = np.array([
    [0.12, 0.90, -0.06, 0.55, 0.23],
    [0.90, 328.42, 29.28, 60.74, 5.59],
    [-0.06, 29.28, 69.99, 27.13, -0.39],
    [0.55, 60.74, 27.13, 184.52, 0.29],
    [0.23, 5.59, -0.39, 0.29, 3.34],
])

# participants, Phase I days and average daily sample size per center
CENTER_A_N, CENTER_A_M, CENTER_A_NBAR = 24, 19, 20
CENTER_B_N, CENTER_B_M, CENTER_B_NBAR = 12, 19, 9

# reported control limits at alpha = 0.02
CENTER_A_UCL = 17.31
CENTER_B_UCL = 18.59
CENTER_A_UCL_BT_HR_SPO2 = 13.29


def center_a() -> RobustEstimates:
    return RobustEstimates(SIGNS, CENTER_A_MU.copy(), CENTER_A_SIGMA.copy(), 0)


def center_b() -> RobustEstimates:
    return RobustEstimates(SIGNS, CENTER_B_MU.copy(), CENTER_B_SIGMA.copy(), 0)
