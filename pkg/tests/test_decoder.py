import itertools

import numpy as np
import pytest

from exceptions import InputError
from gate_ops import PauliString
from qec.color_code import (
    MemoryRecord,
    build_layout,
    build_memory_circuit,
    logical_operators,
    memory_operations,
    stabilizers,
)
from qec.decoder import (
    BOUNDARY,
    adjudicate,
    build_detectors,
    code_capacity_history,
    concatenated_decode,
    decode_and_adjudicate,
    restricted_decode,
)
from simulation.circuit import CircuitMetadata, OpKind, Operation, schedule_moments
from simulation.noise import NoiseModel
from simulation.runner import simulate_records


def quiet_record(layout, cycles):
    zeros = tuple(tuple(0 for _ in layout.plaquettes) for _ in range(cycles))
    return MemoryRecord(zeros, zeros, {q: 0 for q in layout.data_qubits})


def is_harmless(layout, residual):
    """Residual error acts trivially on the code space."""
    x_bar, z_bar = logical_operators(layout)
    return all(residual.commutes_with(s) for s, _, _ in stabilizers(layout)) and (
        residual.commutes_with(x_bar) and residual.commutes_with(z_bar)
    )


def test_quiet_record_has_no_defects(d3_layout):
    history = build_detectors(quiet_record(d3_layout, 2), d3_layout)
    assert history.is_trivial()
    assert history.z_block.rounds == (1, 2, 3)
    assert history.x_block.rounds == (2,)
    assert concatenated_decode(history, d3_layout).pauli.weight == 0


def test_ideal_reference_keeps_first_round(d3_layout):
    history = build_detectors(quiet_record(d3_layout, 2), d3_layout, x_reference="ideal")
    assert history.x_block.rounds == (1, 2)
    assert history.detector_count == 3 * 3 + 2 * 3


def test_unknown_reference(d3_layout):
    with pytest.raises(InputError):
        build_detectors(quiet_record(d3_layout, 1), d3_layout, x_reference="last")


def test_readout_must_cover_data(d3_layout):
    record = quiet_record(d3_layout, 1)
    with pytest.raises(InputError):
        build_detectors(MemoryRecord(record.x_syndromes, record.z_syndromes, {0: 0}), d3_layout)


@pytest.mark.parametrize("d", [3, 5])
def test_every_single_qubit_error_is_corrected(d):
    layout = build_layout(d)
    corrected = 0
    for q, letter in itertools.product(layout.data_qubits, "XYZ"):
        error = PauliString.from_dict({q: letter})
        correction = concatenated_decode(code_capacity_history(layout, error), layout)
        assert is_harmless(layout, correction.pauli * error), (q, letter, str(correction.pauli))
        corrected += 1
    assert corrected == 3 * layout.num_data


@pytest.mark.slow
def test_random_two_qubit_errors_at_distance_five(d5_layout):
    rng = np.random.default_rng(2024)
    failures = 0
    for _ in range(10_000):
        weight = int(rng.integers(1, 3))
        qubits = rng.choice(d5_layout.data_qubits, size=weight, replace=False)
        error = PauliString.from_letters(qubits, rng.choice(list("XYZ"), size=weight))
        correction = concatenated_decode(code_capacity_history(d5_layout, error), d5_layout)
        failures += not is_harmless(d5_layout, correction.pauli * error)
    assert failures == 0


@pytest.mark.parametrize("letter", ["X", "Z"])
def test_every_pure_two_qubit_error_at_distance_five(d5_layout, letter):
    for pair in itertools.combinations(d5_layout.data_qubits, 2):
        error = PauliString.from_dict({q: letter for q in pair})
        history = code_capacity_history(d5_layout, error)
        correction = concatenated_decode(history, d5_layout)
        assert is_harmless(d5_layout, correction.pauli * error), (pair, str(correction.pauli))


def test_code_capacity_blocks_close_with_a_quiet_round(d3_layout):
    error = PauliString.from_dict({d3_layout.data_qubits[0]: "Y"})
    history = code_capacity_history(d3_layout, error)
    for block in (history.z_block, history.x_block):
        assert block.rounds == (1, 2)
        assert not any(block.bits[1])
        assert any(block.bits[0])


def test_restricted_decode_pairs_a_lone_defect_with_the_boundary(d3_layout):
    q = d3_layout.data_qubits[0]
    face = d3_layout.plaquettes[d3_layout.faces_of[q][0]]
    history = code_capacity_history(d3_layout, PauliString.from_dict({q: "X"}))
    other = next(c for c in ("red", "green", "blue") if c != face.color)
    edges = restricted_decode(history, d3_layout, other)
    assert edges
    assert any(BOUNDARY in edge or (face.index, 1) in edge for edge in edges)


def test_measurement_flip_needs_no_data_correction(d3_layout):
    rows = [[0, 0, 0], [0, 0, 0]]
    rows[0][1] = 1
    record = MemoryRecord(
        x_syndromes=((0, 0, 0), (0, 0, 0)),
        z_syndromes=tuple(tuple(r) for r in rows),
        readout={q: 0 for q in d3_layout.data_qubits},
    )
    failed, correction = decode_and_adjudicate(record, d3_layout)
    assert not failed
    assert correction.pauli.weight == 0
    assert correction.weight == 1


def test_adjudicate_detects_a_logical_flip(d3_layout):
    readout = {q: 0 for q in d3_layout.data_qubits}
    for q in d3_layout.logical_z_support:
        readout[q] = 1
    assert adjudicate(PauliString(), readout, d3_layout)
    x_bar, _ = logical_operators(d3_layout)
    assert not adjudicate(x_bar, readout, d3_layout)


@pytest.mark.parametrize("cycles", [1, 2])
@pytest.mark.parametrize("letter", ["X", "Y"])
def test_deliberate_fault_in_a_memory_run(d3_layout, cycles, letter):
    for q in d3_layout.data_qubits:
        fault = [Operation.gate(letter, q, tag="fault")]
        circuit = build_memory_circuit(d3_layout, cycles, extra_before_extraction=fault)
        record, _ = simulate_records(
            d3_layout, circuit, NoiseModel("depolarizing", 0.0), 0, 0, backend="stabilizer"
        )
        failed, correction = decode_and_adjudicate(record, d3_layout)
        assert not failed
        assert q in correction.pauli.x_support


def test_two_flips_on_the_logical_support_fail(d3_layout):
    pairs = list(itertools.combinations(sorted(d3_layout.logical_z_support), 2))
    assert len(pairs) == 3
    for pair in pairs:
        error = PauliString.from_dict({q: "X" for q in pair})
        correction = concatenated_decode(code_capacity_history(d3_layout, error), d3_layout)
        readout = {q: int(q in pair) for q in d3_layout.data_qubits}
        assert adjudicate(correction.pauli, readout, d3_layout), pair


def test_fault_between_cycles_fires_in_the_second_cycle_only(d3_layout):
    q = d3_layout.data_qubits[2]
    ops = memory_operations(d3_layout, 2)
    barriers = [i for i, op in enumerate(ops) if op.kind is OpKind.BARRIER]
    ops.insert(barriers[1] + 1, Operation.gate("X", q, tag="fault"))
    metadata = CircuitMetadata(data_qubits=d3_layout.data_qubits, ancilla_qubits=d3_layout.ancilla_qubits)
    circuit = schedule_moments(ops, d3_layout.num_qubits, metadata)
    record, _ = simulate_records(
        d3_layout, circuit, NoiseModel("depolarizing", 0.0), 0, 0, backend="stabilizer"
    )
    assert not any(record.z_syndromes[0])
    fired = {f for f, bit in enumerate(record.z_syndromes[1]) if bit}
    assert fired == set(d3_layout.faces_of[q])

    history = build_detectors(record, d3_layout)
    assert history.z_block.defects() == {(f, 2) for f in d3_layout.faces_of[q]}
    assert not history.x_block.defects()
    failed, correction = decode_and_adjudicate(record, d3_layout)
    assert not failed
    assert q in correction.pauli.x_support
