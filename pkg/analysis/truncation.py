"""
Logical failures caused by the tensor-network representation alone.

A noiseless memory circuit never fails when simulated exactly, so any failure
seen at a capped bond dimension is a truncation artifact. Layout optimization
is kept off: the sweep always uses the default qubit order.
"""

import logging
from dataclasses import dataclass

from analysis.threshold import EXACT_CHI, append_result, estimate_pfail
from exceptions import InputError
from qec.color_code import build_layout, build_memory_circuit
from simulation.layout import default_layout, measure_chi_exact
from simulation.noise import NoiseModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TruncationPoint:
    chi: object
    chi_ratio: float
    result: object

    @property
    def pfail(self):
        return self.result.pfail


def truncation_sweep(d, cycles, chi_grid, trials, seed=0, results_path=None, workers=None, progress=None):
    """
    Failure rate of the noiseless memory experiment for each bond cap in `chi_grid`.

    The uncapped bond dimension is measured first; the returned list starts
    with that exact reference point followed by one point per cap.
    """
    chi_grid = [int(c) for c in chi_grid]
    if any(c < 1 for c in chi_grid):
        raise InputError("bond caps must be positive")
    code = build_layout(d)
    circuit = build_memory_circuit(code, cycles)
    assignment = default_layout(circuit.num_qubits)
    chi_exact = measure_chi_exact(circuit, assignment, seed)
    logger.info("d=%d C=%d: chi_exact=%d with the default layout", d, cycles, chi_exact)

    model = NoiseModel("depolarizing", 0.0)
    points = []
    for cap in [None] + chi_grid:
        result = estimate_pfail(
            d, cycles, model, 0.0, trials, chi_cap=cap, master_seed=seed,
            leaf_map=assignment.leaves, workers=workers, progress=progress,
        )
        if results_path:
            append_result(results_path, result)
        chi = EXACT_CHI if cap is None else cap
        ratio = 1.0 if cap is None else cap / chi_exact
        logger.info("chi=%s (ratio %.3g): pfail=%.4g", chi, ratio, result.pfail)
        points.append(TruncationPoint(chi=chi, chi_ratio=ratio, result=result))
    return points
