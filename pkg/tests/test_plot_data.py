import csv

from analysis import plot_data
from analysis.threshold import TrialBatchResult, append_result


def result(d, strength, chi="exact", pfail=0.1, max_bond=16.0):
    return TrialBatchResult(
        model="depolarizing", strength=strength, d=d, C=1, chi=chi, trials=100,
        failures=int(round(pfail * 100)), pfail=pfail, ci_lo=pfail / 2, ci_hi=pfail * 2,
        max_bond=max_bond, discarded_weight=0.0, seed=0,
    )


def read(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def write_results(path, rows):
    for r in rows:
        append_result(str(path), r)
    return str(path)


def test_strength_view_is_sorted():
    header, body = plot_data.strength_rows([result(5, 0.02), result(3, 0.03), result(3, 0.01)])
    assert header == ["model", "d", "C", "chi", "strength", "pfail", "ci_lo", "ci_hi"]
    assert [(row[1], row[4]) for row in body] == [(3, "0.01"), (3, "0.03"), (5, "0.02")]


def test_distance_view_groups_by_strength():
    _, body = plot_data.distance_rows([result(5, 0.02), result(3, 0.02), result(3, 0.01)])
    assert [(row[1], row[4]) for row in body] == [("0.01", 3), ("0.02", 3), ("0.02", 5)]


def test_chi_ratio_uses_exact_reference():
    table = [result(3, 0.0, pfail=0.0), result(3, 0.0, chi=4, pfail=0.2), result(5, 0.0, chi=4)]
    header, body = plot_data.chi_ratio_rows(table)
    assert header == ["chi_ratio", "pfail", "ci_lo", "ci_hi"]
    assert [row[:2] for row in body] == [["0.25", "0.2"], ["1.0", "0.0"]]


def test_emit_writes_every_view(tmp_path):
    path = write_results(tmp_path / "results.csv", [result(3, 0.0), result(3, 0.0, chi=8)])
    written = plot_data.emit_plot_data(path)
    names = sorted(p.rsplit("/", 1)[-1] for p in written)
    assert names == sorted([plot_data.STRENGTH_VIEW, plot_data.DISTANCE_VIEW, plot_data.CHI_VIEW])


def test_emit_is_idempotent(tmp_path):
    path = write_results(tmp_path / "results.csv", [result(5, 0.02), result(3, 0.01)])
    first = [read(p) for p in plot_data.emit_plot_data(path)]
    second = [read(p) for p in plot_data.emit_plot_data(path)]
    assert first == second
    assert len(first) == 2


def test_emit_into_other_directory(tmp_path):
    path = write_results(tmp_path / "results.csv", [result(3, 0.01)])
    out = tmp_path / "plots"
    written = plot_data.emit_plot_data(path, str(out))
    assert all(p.startswith(str(out)) for p in written)


def test_empty_results(tmp_path):
    assert plot_data.emit_plot_data(str(tmp_path / "missing.csv")) == []
