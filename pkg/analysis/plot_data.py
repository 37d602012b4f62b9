"""
Plot-ready tables derived from a results CSV.

Nothing is rendered; each view is written as its own CSV so any plotting tool
can pick it up. Rows are sorted, so re-running on the same input produces
identical files.
"""

import csv
import logging
import os

from analysis.threshold import EXACT_CHI, read_results

logger = logging.getLogger(__name__)

STRENGTH_VIEW = "pfail_vs_strength.csv"
DISTANCE_VIEW = "pfail_vs_distance.csv"
CHI_VIEW = "pfail_vs_chi_ratio.csv"


def _chi_order(chi):
    # exact sorts after every integer cap
    return (1, 0) if chi == EXACT_CHI else (0, int(chi))


def _num(value):
    return repr(float(value))


def strength_rows(table):
    """Failure rate against noise strength, one curve per (model, d, C, chi)."""
    rows = sorted(table, key=lambda r: (r.model, r.d, r.C, _chi_order(r.chi), r.strength))
    header = ["model", "d", "C", "chi", "strength", "pfail", "ci_lo", "ci_hi"]
    body = [
        [r.model, r.d, r.C, r.chi, _num(r.strength), _num(r.pfail), _num(r.ci_lo), _num(r.ci_hi)]
        for r in rows
    ]
    return header, body


def distance_rows(table):
    """Failure rate against code distance at fixed strength."""
    rows = sorted(table, key=lambda r: (r.model, r.strength, r.C, _chi_order(r.chi), r.d))
    header = ["model", "strength", "C", "chi", "d", "pfail", "ci_lo", "ci_hi"]
    body = [
        [r.model, _num(r.strength), r.C, r.chi, r.d, _num(r.pfail), _num(r.ci_lo), _num(r.ci_hi)]
        for r in rows
    ]
    return header, body


def chi_ratio_rows(table):
    """
    Failure rate against chi / chi_exact.

    Only cells with an uncapped reference row contribute; its mean largest
    bond is taken as chi_exact.
    """
    exact = {
        (r.model, r.strength, r.d, r.C): r.max_bond
        for r in table if r.chi == EXACT_CHI and r.max_bond > 0
    }
    points = []
    for r in table:
        reference = exact.get((r.model, r.strength, r.d, r.C))
        if reference is None:
            continue
        ratio = 1.0 if r.chi == EXACT_CHI else int(r.chi) / reference
        points.append((ratio, r))
    points.sort(key=lambda item: (item[1].model, item[1].d, item[1].C, item[1].strength, item[0]))
    header = ["chi_ratio", "pfail", "ci_lo", "ci_hi"]
    body = [[_num(ratio), _num(r.pfail), _num(r.ci_lo), _num(r.ci_hi)] for ratio, r in points]
    return header, body


def _write(path, header, body):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(body)
    return path


def emit_plot_data(results_path, out_dir=None):
    """Write every view next to the results (or into `out_dir`); returns the written paths."""
    table = read_results(results_path)
    if not table:
        logger.warning("no results in %s; nothing to export", results_path)
        return []
    out_dir = out_dir or os.path.dirname(os.path.abspath(results_path))
    os.makedirs(out_dir, exist_ok=True)

    written = [
        _write(os.path.join(out_dir, STRENGTH_VIEW), *strength_rows(table)),
        _write(os.path.join(out_dir, DISTANCE_VIEW), *distance_rows(table)),
    ]
    header, body = chi_ratio_rows(table)
    if body:
        written.append(_write(os.path.join(out_dir, CHI_VIEW), header, body))
    logger.info("wrote %d plot tables to %s", len(written), out_dir)
    return written
