import pytest

from analysis.threshold import read_results
from analysis.truncation import truncation_sweep
from exceptions import InputError


def test_sweep_starts_from_exact_reference(tmp_path):
    path = str(tmp_path / "truncation.csv")
    points = truncation_sweep(3, 1, [1, 2], trials=4, seed=3, results_path=path)
    assert [p.chi for p in points] == ["exact", 1, 2]
    reference = points[0]
    assert reference.chi_ratio == 1.0
    assert reference.pfail == 0.0
    chi_exact = 1 / points[1].chi_ratio
    assert points[2].chi_ratio == pytest.approx(2 / chi_exact)
    assert chi_exact >= 2
    assert len(read_results(path)) == 3


def test_full_cap_matches_exact():
    exact, capped = truncation_sweep(3, 1, [1024], trials=3, seed=1)
    assert capped.chi_ratio > 1
    assert capped.pfail == 0.0
    assert capped.result.discarded_weight == pytest.approx(0.0, abs=1e-12)


def test_sweep_rejects_bad_caps():
    with pytest.raises(InputError):
        truncation_sweep(3, 1, [0], trials=1)


def test_bond_dimension_one_reads_all_zeros(d3_layout, d3_circuit):
    from simulation.noise import NoiseModel
    from simulation.runner import run_trial

    for trial in range(10):
        outcome = run_trial(
            d3_layout, d3_circuit, NoiseModel("depolarizing", 0.0), trial, 0, chi_cap=1
        )
        assert set(outcome.record.readout.values()) == {0}
        assert not outcome.failed
        assert outcome.max_bond == 1


@pytest.mark.slow
def test_quarter_of_exact_bond_dimension_fails_at_distance_five():
    exact, quarter = truncation_sweep(5, 1, [128], trials=30, seed=0)
    assert quarter.chi_ratio == pytest.approx(0.25)
    assert quarter.result.failures > 0
    assert quarter.result.ci_lo > 0
