"""
Threshold estimation from failure-rate curves.

Near threshold the failure rate is fitted to a quadratic in the rescaled
variable x = (p - tau) * d**(1/nu):

    pfail = A + B x + C x**2

Confidence intervals come from a parametric bootstrap: binomial resamples of
the fitted curve are refitted and the parameter percentiles reported.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from analysis.metrics import CONFIDENCE, inverse_variance_weights
from exceptions import FitError, InputError, NoCrossingError

logger = logging.getLogger(__name__)

PARAMETERS = ("tau", "nu", "A", "B", "C")
DEFAULT_BOOTSTRAP = 200


@dataclass
class ThresholdFit:
    tau: float
    nu: float
    A: float
    B: float
    C: float
    intervals: dict = field(default_factory=dict)
    residuals: list = field(default_factory=list)
    chi2: float = 0.0
    distances: tuple = ()
    points: int = 0
    restarts: int = 0

    @property
    def params(self):
        return np.array([self.tau, self.nu, self.A, self.B, self.C])

    def to_dict(self):
        return {
            "tau": self.tau,
            "nu": self.nu,
            "A": self.A,
            "B": self.B,
            "C": self.C,
            "intervals": {k: list(v) for k, v in self.intervals.items()},
            "residuals": self.residuals,
            "chi2": self.chi2,
            "distances": list(self.distances),
            "points": self.points,
            "restarts": self.restarts,
        }


def scaling_ansatz(params, strength, d):
    tau, nu, a, b, c = params
    x = (np.asarray(strength, dtype=float) - tau) * np.asarray(d, dtype=float) ** (1.0 / nu)
    return a + b * x + c * x * x


def crossing_estimate(curve_a, curve_b):
    """
    Strength where two piecewise-linear curves of (strength, pfail) cross.

    Both curves are interpolated onto the union of their strengths inside the
    common range; the first sign change of their difference is interpolated.
    """
    a = sorted(curve_a)
    b = sorted(curve_b)
    if len(a) < 2 or len(b) < 2:
        raise InputError("each curve needs at least two points")
    xa, ya = np.array(a, dtype=float).T
    xb, yb = np.array(b, dtype=float).T
    lo, hi = max(xa[0], xb[0]), min(xa[-1], xb[-1])
    if lo >= hi:
        raise NoCrossingError("curves share no strength range")
    grid = np.union1d(xa, xb)
    grid = grid[(grid >= lo) & (grid <= hi)]
    diff = np.interp(grid, xa, ya) - np.interp(grid, xb, yb)
    if np.all(diff == 0):
        raise NoCrossingError("curves coincide")
    for i in range(len(grid)):
        if diff[i] == 0:
            return float(grid[i])
        if i + 1 < len(grid) and diff[i] * diff[i + 1] < 0:
            t = diff[i] / (diff[i] - diff[i + 1])
            return float(grid[i] + t * (grid[i + 1] - grid[i]))
    raise NoCrossingError("no sign change between the curves")


def _table_arrays(table, distances):
    rows = [r for r in table if distances is None or r.d in distances]
    by_d = {}
    for r in rows:
        by_d.setdefault(r.d, []).append(r)
    if len(by_d) < 2:
        raise InputError("fitting needs at least two distances")
    for d, group in by_d.items():
        if len({r.strength for r in group}) < 4:
            raise InputError(f"distance {d} has fewer than four strengths")
    strength = np.array([r.strength for r in rows], dtype=float)
    d = np.array([r.d for r in rows], dtype=float)
    pfail = np.array([r.pfail for r in rows], dtype=float)
    trials = np.array([r.trials for r in rows], dtype=float)
    return by_d, strength, d, pfail, trials


def _initial_tau(by_d):
    ds = sorted(by_d)
    estimates = []
    for small, large in zip(ds, ds[1:]):
        try:
            estimates.append(crossing_estimate(
                [(r.strength, r.pfail) for r in by_d[small]],
                [(r.strength, r.pfail) for r in by_d[large]],
            ))
        except NoCrossingError:
            continue
    if not estimates:
        raise FitError("failure-rate curves of different distances never cross")
    return float(np.mean(estimates))


def _solve(strength, d, y, weights, start, bounds):
    root_w = np.sqrt(weights)

    def residual(params):
        return (scaling_ansatz(params, strength, d) - y) * root_w

    return least_squares(residual, start, bounds=bounds, method="trf", x_scale="jac")


def _polynomial_start(tau, nu, strength, d, y, weights):
    x = (strength - tau) * d ** (1.0 / nu)
    design = np.vstack([np.ones_like(x), x, x * x]).T
    root_w = np.sqrt(weights)
    coeffs, *_ = np.linalg.lstsq(design * root_w[:, None], y * root_w, rcond=None)
    return np.array([tau, nu, *coeffs])


def fit_threshold(table, distances=None, bootstrap=DEFAULT_BOOTSTRAP, seed=0, restarts=5):
    """
    Weighted least-squares fit of the scaling ansatz to a scan table.

    Raises FitError (carrying the best iterate, if any) when no start converges
    to a threshold inside the scanned range.
    """
    by_d, strength, d, y, trials = _table_arrays(table, set(distances) if distances else None)
    weights = inverse_variance_weights(y, trials)
    s_lo, s_hi = float(strength.min()), float(strength.max())
    bounds = ([s_lo, 1e-2, -np.inf, -np.inf, -np.inf], [s_hi, 20.0, np.inf, np.inf, np.inf])

    tau0 = _initial_tau(by_d)
    starts = [tau0] + list(np.linspace(s_lo, s_hi, restarts + 2)[1:-1])
    best, accepted, attempts = None, None, 0
    for tau_start in starts:
        attempts += 1
        start = _polynomial_start(tau_start, 1.0, strength, d, y, weights)
        solution = _solve(strength, d, y, weights, start, bounds)
        if best is None or solution.cost < best.cost:
            best = solution
        if solution.success and s_lo < solution.x[0] < s_hi and solution.x[1] > 0:
            accepted = solution
            break
        logger.warning("fit from tau=%.4g did not converge inside the range; restarting", tau_start)
    if accepted is None:
        raise FitError("threshold fit did not converge inside the scanned range", best=best.x)

    params = accepted.x
    fitted = scaling_ansatz(params, strength, d)
    residuals = (y - fitted).tolist()
    chi2 = float(np.sum(weights * (y - fitted) ** 2))

    intervals = {}
    if bootstrap:
        samples = _bootstrap(params, strength, d, trials, bounds, bootstrap, seed)
        tail = 100 * (1 - CONFIDENCE) / 2
        for i, name in enumerate(PARAMETERS):
            lo, hi = np.percentile(samples[:, i], [tail, 100 - tail])
            intervals[name] = (float(lo), float(hi))

    fit = ThresholdFit(
        *[float(v) for v in params],
        intervals=intervals,
        residuals=residuals,
        chi2=chi2,
        distances=tuple(sorted(by_d)),
        points=len(y),
        restarts=attempts - 1,
    )
    logger.info("threshold fit: tau=%.5g nu=%.3g (chi2=%.3g, %d points)", fit.tau, fit.nu, chi2, fit.points)
    return fit


def _bootstrap(params, strength, d, trials, bounds, resamples, seed):
    rng = np.random.default_rng(seed)
    expected = np.clip(scaling_ansatz(params, strength, d), 0.0, 1.0)
    samples = []
    for _ in range(resamples):
        counts = rng.binomial(trials.astype(int), expected)
        y = counts / trials
        weights = inverse_variance_weights(y, trials)
        solution = _solve(strength, d, y, weights, params, bounds)
        samples.append(solution.x)
    return np.array(samples)
