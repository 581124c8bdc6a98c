"""
Picking the monitor threshold
=============================

The IoU between the two channels' boxes is modelled with a Beta
distribution. The threshold is the quantile that leaves the wanted fraction
of frames valid.
"""

import numpy as np

from dualsafe.calibration import (
    BetaParams,
    beta_cdf,
    beta_from_moments,
    beta_quantile,
    calibrate_threshold,
    iou_histogram,
)
from dualsafe.channels import sample_beta

# Summary statistics of the reference study, fitted by the method of moments.
params = beta_from_moments(0.661, 0.02266)
print(f"alpha={params.alpha:.3f} beta={params.beta:.3f} sd={np.sqrt(params.variance):.3f}")

###############################################################################
# Thresholds for a few availability targets

for avail in (0.90, 0.95, 0.99):
    print(f"availability {avail:.2f} -> threshold {beta_quantile(params, 1 - avail):.4f}")

# The published threshold of 0.32 corresponds to a higher availability than 95%.
print("availability at 0.32:", round(1 - beta_cdf(params, 0.32), 4))

###############################################################################
# Calibrating from samples
# ------------------------
#
# With real channel outputs the pair IoUs come from the replay. Here they are
# drawn from the fitted distribution itself, so the fit should recover it.

samples = sample_beta(BetaParams(5.88, 3.01), 5000, seed=1)
result = calibrate_threshold(samples, 0.95)
print(result.params, round(result.threshold, 4), round(result.empirical_threshold, 4))

hist = iou_histogram(samples)
for lo, n in zip(hist["edges"], hist["counts"]):
    print(f"{lo:4.2f} {'#' * (n // 25)}")
