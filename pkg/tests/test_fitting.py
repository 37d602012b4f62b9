import numpy as np
import pytest

from analysis.fitting import crossing_estimate, fit_threshold, scaling_ansatz
from analysis.threshold import TrialBatchResult
from exceptions import FitError, InputError, NoCrossingError

TRUE = (0.0256, 1.0, 0.1, 2.0, 5.0)
STRENGTHS = np.linspace(0.0216, 0.0296, 9)
DISTANCES = (3, 5, 7)
TRIALS = 10_000


def row(d, strength, pfail, trials=TRIALS):
    failures = int(round(pfail * trials))
    return TrialBatchResult(
        model="depolarizing", strength=float(strength), d=d, C=1, chi="exact",
        trials=trials, failures=failures, pfail=failures / trials,
        ci_lo=0.0, ci_hi=1.0, max_bond=1.0, discarded_weight=0.0, seed=0,
    )


def synthetic_table(rng=None):
    table = []
    for d in DISTANCES:
        for s in STRENGTHS:
            p = float(scaling_ansatz(TRUE, s, d))
            if rng is not None:
                p = rng.binomial(TRIALS, p) / TRIALS
            table.append(row(d, s, p))
    return table


def test_crossing_between_grid_points():
    assert crossing_estimate([(1, 0), (2, 1)], [(1, 1), (2, 0)]) == pytest.approx(1.5)


def test_crossing_on_a_grid_point():
    assert crossing_estimate([(0, 0), (1, 1), (2, 2)], [(0, 1), (1, 1), (2, 1)]) == pytest.approx(1.0)


def test_crossing_with_different_grids():
    a = [(0.0, 0.0), (1.0, 1.0)]
    b = [(0.0, 0.8), (0.5, 0.6), (1.0, 0.4)]
    # a - b changes sign where x = 0.8 - 0.4x
    assert crossing_estimate(a, b) == pytest.approx(0.8 / 1.4)


def test_identical_curves_do_not_cross():
    curve = [(0.0, 0.1), (1.0, 0.2)]
    with pytest.raises(NoCrossingError):
        crossing_estimate(curve, list(curve))


def test_parallel_and_disjoint_curves():
    with pytest.raises(NoCrossingError):
        crossing_estimate([(0, 0), (1, 1)], [(0, 1), (1, 2)])
    with pytest.raises(NoCrossingError):
        crossing_estimate([(0, 0), (1, 1)], [(2, 1), (3, 0)])


def test_crossing_needs_two_points():
    with pytest.raises(InputError):
        crossing_estimate([(0, 0)], [(0, 1), (1, 0)])


def test_fit_recovers_clean_data():
    fit = fit_threshold(synthetic_table(), bootstrap=0)
    assert fit.tau == pytest.approx(TRUE[0], rel=1e-3)
    assert fit.nu == pytest.approx(TRUE[1], rel=5e-2)
    assert fit.distances == DISTANCES
    assert fit.points == len(DISTANCES) * len(STRENGTHS)
    assert fit.intervals == {}


def test_fit_recovers_noisy_data():
    fit = fit_threshold(synthetic_table(np.random.default_rng(3)), bootstrap=0)
    assert fit.tau == pytest.approx(TRUE[0], rel=0.05)
    assert len(fit.residuals) == fit.points


def test_bootstrap_intervals():
    fit = fit_threshold(synthetic_table(), bootstrap=20, seed=1)
    lo, hi = fit.intervals["tau"]
    assert lo <= fit.tau <= hi
    assert set(fit.intervals) == {"tau", "nu", "A", "B", "C"}
    again = fit_threshold(synthetic_table(), bootstrap=20, seed=1)
    assert again.intervals == fit.intervals


def test_flat_curves_fail():
    table = [row(d, s, 0.1) for d in DISTANCES for s in STRENGTHS]
    with pytest.raises(FitError):
        fit_threshold(table, bootstrap=0)


def test_fit_needs_two_distances():
    table = [r for r in synthetic_table() if r.d == 3]
    with pytest.raises(InputError):
        fit_threshold(table, bootstrap=0)
    with pytest.raises(InputError):
        fit_threshold(synthetic_table(), distances=[5], bootstrap=0)


def test_fit_needs_four_strengths():
    table = [r for r in synthetic_table() if r.strength < STRENGTHS[3]]
    with pytest.raises(InputError):
        fit_threshold(table, bootstrap=0)


def test_converged_fit_wins_over_cheaper_out_of_range_start(monkeypatch):
    from types import SimpleNamespace

    from analysis import fitting

    real_solve = fitting._solve
    calls = []

    def solve(strength, d, y, weights, start, bounds):
        calls.append(start)
        if len(calls) == 1:
            pinned = np.array([bounds[0][0], 1.0, 0.1, 2.0, 5.0])
            return SimpleNamespace(x=pinned, cost=0.0, success=True)
        return real_solve(strength, d, y, weights, start, bounds)

    monkeypatch.setattr(fitting, "_solve", solve)
    fit = fit_threshold(synthetic_table(), bootstrap=0)
    assert fit.tau == pytest.approx(TRUE[0], rel=1e-3)
    assert fit.restarts == 1
