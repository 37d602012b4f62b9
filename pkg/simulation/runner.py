"""
Executes circuits on a simulator backend and runs single memory-experiment trials.

Backends:
    ttn          bond-capped tree tensor network (any noise model)
    statevector  dense oracle, small circuits only
    stabilizer   Clifford tableau (Pauli noise only)
"""

import logging
import math
from dataclasses import dataclass

from exceptions import IncompatibleBackendError, InputError
from gate_ops import CLIFFORD_GATES, GateLibrary
from qec.color_code import extract_records
from qec.decoder import decode_and_adjudicate
from simulation.circuit import OpKind
from simulation.noise import apply_trajectory_channel, inject_noise
from simulation.stabilizer import StabilizerState
from simulation.statevector import StateVector
from simulation.ttn import TTNState
from utils import trial_stream

logger = logging.getLogger(__name__)

BACKENDS = ("ttn", "statevector", "stabilizer")


def tree_depth_for(num_qubits, leaf_map=None):
    leaves = max(num_qubits, 2)
    if leaf_map:
        leaves = max(leaves, max(leaf_map) + 1)
    return math.ceil(math.log2(leaves))


def initial_preparations(circuit):
    """
    Inits that act first on their qubit, as qubit -> basis label.

    These are folded into the product state instead of being executed.
    """
    first = {}
    for _, op in circuit.operations():
        for q in op.qubits:
            first.setdefault(q, op)
    return {q: op.basis for q, op in first.items() if op.kind is OpKind.INIT}


def make_state(backend, circuit, chi_cap=None, leaf_map=None, depth=None):
    prepared = initial_preparations(circuit)
    n = circuit.num_qubits
    if backend == "ttn":
        leaf_map = list(leaf_map) if leaf_map is not None else list(range(n))
        depth = depth or tree_depth_for(n, leaf_map)
        return TTNState.init_product_state(depth, leaf_map, prepared, chi_cap=chi_cap)
    if backend == "statevector":
        return StateVector.init_product_state(n, prepared)
    if backend == "stabilizer":
        return StabilizerState.init_product_state(n, prepared)
    raise InputError(f"unknown backend {backend!r}, expected one of {BACKENDS}")


def _prepare(state, q, basis, rng):
    state.reset_qubit(q, rng)
    if isinstance(state, StabilizerState):
        state.prepare_basis(q, basis)
        return
    if basis in ("1", "-"):
        state.apply_one_qubit(q, GateLibrary.pauli_x())
    if basis in ("+", "-"):
        state.apply_one_qubit(q, GateLibrary.hadamard())


def execute(circuit, state, error_rng, measurement_rng, after_two_qubit=None):
    """
    Run every operation of `circuit` on `state`.

    `after_two_qubit`, if given, is called with each two-qubit operation once
    it has been applied.

    Returns the measurement results as (qubit, bit) in execution order.
    """
    clifford = isinstance(state, StabilizerState)
    skipped = set(initial_preparations(circuit))
    results = []
    for _, op in circuit.operations():
        kind = op.kind
        if kind is OpKind.BARRIER:
            continue
        if op.is_unitary:
            if clifford:
                if op.name not in CLIFFORD_GATES:
                    raise IncompatibleBackendError(f"gate {op.name!r} is not Clifford")
                state.apply_clifford(op.name, op.qubits)
            elif kind is OpKind.ONE_QUBIT_UNITARY:
                state.apply_one_qubit(op.qubits[0], op.operator)
            else:
                state.apply_two_qubit(op.qubits[0], op.qubits[1], op.operator)
            if after_two_qubit is not None and kind is OpKind.TWO_QUBIT_UNITARY:
                after_two_qubit(op)
        elif kind is OpKind.MEASURE:
            results.append((op.qubits[0], state.measure_qubit(op.qubits[0], measurement_rng)))
        elif kind is OpKind.RESET:
            state.reset_qubit(op.qubits[0], measurement_rng)
        elif kind is OpKind.INIT:
            q = op.qubits[0]
            if q in skipped:
                skipped.discard(q)
                continue
            _prepare(state, q, op.basis, measurement_rng)
        elif kind is OpKind.KRAUS_BRANCH_POINT:
            if clifford:
                raise IncompatibleBackendError("Kraus branch points need a tensor-network backend")
            model, strength, mode = op.channel
            if model != "ad":
                raise InputError(f"unknown Kraus channel {model!r}")
            apply_trajectory_channel(state, op.qubits[0], strength, error_rng, mode)
    return results


def check_backend(model, backend):
    if backend not in BACKENDS:
        raise InputError(f"unknown backend {backend!r}, expected one of {BACKENDS}")
    if backend == "stabilizer" and not model.is_pauli:
        raise IncompatibleBackendError(
            f"{model.label} noise is not a Pauli channel; use the ttn backend or twirl it"
        )


def simulate_records(layout, circuit, model, trial, master_seed, backend="ttn", chi_cap=None, leaf_map=None):
    """
    Syndrome records of one noisy trial, and the final simulator state.

    Randomness comes from two streams keyed by (master_seed, trial): errors and
    measurement outcomes, so different backends can share a trial exactly.
    """
    check_backend(model, backend)
    error_rng = trial_stream(master_seed, trial, "error")
    measurement_rng = trial_stream(master_seed, trial, "measurement")
    noisy = inject_noise(circuit, model, error_rng)
    state = make_state(backend, noisy, chi_cap=chi_cap, leaf_map=leaf_map)
    results = execute(noisy, state, error_rng, measurement_rng)
    cycles = len(circuit.cycle_boundaries) - 1
    return extract_records(layout, cycles, results), state


@dataclass
class TrialRecord:
    trial: int
    record: object
    failed: bool
    color: str
    max_bond: int
    discarded_weight: float


def run_trial(layout, circuit, model, trial, master_seed, backend="ttn", chi_cap=None,
              leaf_map=None, x_reference="first-round"):
    """One memory-experiment trial: inject noise, simulate, decode, adjudicate."""
    record, state = simulate_records(
        layout, circuit, model, trial, master_seed, backend, chi_cap, leaf_map
    )
    failed, correction = decode_and_adjudicate(record, layout, x_reference)
    if failed:
        logger.debug("trial %d: logical failure", trial)
    return TrialRecord(
        trial=trial,
        record=record,
        failed=failed,
        color=correction.color if correction else None,
        max_bond=state.max_bond_seen,
        discarded_weight=state.cumulative_discarded_weight,
    )
