import math

import numpy as np
from scipy.stats import norm

from exceptions import InputError

CONFIDENCE = 0.99


def failure_rate(failures, trials):
    """Point estimate of the logical failure rate"""
    if trials <= 0:
        raise InputError("need at least one trial")
    if not 0 <= failures <= trials:
        raise InputError(f"{failures} failures out of {trials} trials")
    return failures / trials


def binomial_sigma(p, trials):
    """Standard deviation of a binomial rate estimate"""
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


def wilson_interval(failures, trials, confidence=CONFIDENCE):
    """
    Wilson score interval for a binomial proportion.

    Behaves sensibly at 0 and `trials` failures, where the normal
    approximation collapses to a point.
    """
    p = failure_rate(failures, trials)
    z = norm.ppf(0.5 + confidence / 2)
    z2 = z * z
    denom = 1 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def intervals_overlap(a, b):
    return a[0] <= b[1] and b[0] <= a[1]


def inverse_variance_weights(pfail, trials):
    """
    Fit weights 1/var for binomial rates.

    Rates of exactly 0 or 1 use the add-half estimate so weights stay finite.
    """
    pfail = np.asarray(pfail, dtype=float)
    trials = np.asarray(trials, dtype=float)
    smoothed = (pfail * trials + 0.5) / (trials + 1)
    return trials / (smoothed * (1 - smoothed))


def summarize_batch(failures, trials, confidence=CONFIDENCE):
    """Run all batch statistics"""
    p = failure_rate(failures, trials)
    lo, hi = wilson_interval(failures, trials, confidence)
    return {
        "pfail": p,
        "ci_lo": lo,
        "ci_hi": hi,
        "sigma": binomial_sigma(p, trials),
    }
