import numpy as np
import pytest

from exceptions import IncompatibleBackendError, InputError
from simulation.noise import NoiseModel
from simulation.runner import simulate_records
from simulation.stabilizer import StabilizerState, gf2_rank


def test_basis_preparations_measure_as_expected(rng):
    state = StabilizerState.init_product_state(3, ["0", "1", "-"])
    assert state.measure_qubit(0, rng) == 0
    assert state.measure_qubit(1, rng) == 1
    state.apply_clifford("H", (2,))
    assert state.measure_qubit(2, rng) == 1


def test_pauli_and_phase_gates(rng):
    state = StabilizerState(2, debug=True)
    state.apply_clifford("Y", (0,))
    for gate in ("H", "S", "S", "H"):
        state.apply_clifford(gate, (1,))
    assert state.measure_qubit(0, rng) == 1
    assert state.measure_qubit(1, rng) == 1


def test_bell_pair_outcomes_agree():
    rng = np.random.default_rng(9)
    outcomes = []
    for _ in range(200):
        state = StabilizerState(2, debug=True)
        state.apply_clifford("H", (0,))
        state.apply_clifford("CNOT", (0, 1))
        first = state.measure_qubit(0, rng)
        assert state.measure_qubit(1, rng) == first
        outcomes.append(first)
    assert 60 < sum(outcomes) < 140


def test_repeated_measurement_is_stable(rng):
    state = StabilizerState.init_product_state(1, ["+"])
    first = state.measure_qubit(0, rng)
    assert all(state.measure_qubit(0, rng) == first for _ in range(5))


def test_reset_after_entangling(rng):
    state = StabilizerState(3, debug=True)
    state.apply_clifford("H", (0,))
    state.apply_clifford("CNOT", (0, 1))
    state.apply_clifford("CNOT", (1, 2))
    state.reset_qubit(1, rng)
    assert state.measure_qubit(1, rng) == 0
    assert state.measure_qubit(0, rng) == state.measure_qubit(2, rng)


def test_random_cliffords_keep_the_tableau_symplectic():
    rng = np.random.default_rng(21)
    state = StabilizerState(6, debug=True)
    for _ in range(300):
        if rng.random() < 0.5:
            state.apply_clifford(str(rng.choice(["H", "S", "X", "Y", "Z"])), (int(rng.integers(6)),))
        elif rng.random() < 0.8:
            a, b = (int(x) for x in rng.choice(6, size=2, replace=False))
            state.apply_clifford("CNOT", (a, b))
        else:
            state.measure_qubit(int(rng.integers(6)), rng)
    state.check_symplectic()


def test_unknown_gate_rejected():
    with pytest.raises(InputError):
        StabilizerState(1).apply_clifford("T", (0,))


def test_non_pauli_noise_is_refused(d3_layout, d3_circuit):
    with pytest.raises(IncompatibleBackendError):
        simulate_records(d3_layout, d3_circuit, NoiseModel("srx", 0.01), 0, 0, backend="stabilizer")


@pytest.mark.slow
def test_paired_seeds_give_identical_records(d3_layout, d3_circuit):
    model = NoiseModel("depolarizing", 0.02)
    for trial in range(100):
        ttn, _ = simulate_records(d3_layout, d3_circuit, model, trial, 17, backend="ttn")
        tableau, _ = simulate_records(d3_layout, d3_circuit, model, trial, 17, backend="stabilizer")
        assert ttn == tableau


def test_twirled_noise_runs_on_both_backends(d3_layout, d3_circuit):
    model = NoiseModel("ad", 0.01, twirled=True)
    for trial in range(5):
        ttn, _ = simulate_records(d3_layout, d3_circuit, model, trial, 3, backend="ttn")
        tableau, _ = simulate_records(d3_layout, d3_circuit, model, trial, 3, backend="stabilizer")
        assert ttn == tableau


def test_entanglement_entropy_of_cuts():
    state = StabilizerState(4)
    assert state.entanglement_entropy([0, 1]) == 0
    state.apply_clifford("H", (0,))
    state.apply_clifford("CNOT", (0, 1))
    state.apply_clifford("CNOT", (0, 2))
    assert state.entanglement_entropy([0]) == 1
    assert state.entanglement_entropy([0, 1]) == 1
    assert state.entanglement_entropy([3]) == 0
    assert state.entanglement_entropy(range(4)) == 0
    state.apply_clifford("H", (3,))
    state.apply_clifford("CNOT", (3, 1))
    assert state.entanglement_entropy([0, 3]) == 2


def test_gf2_rank():
    assert gf2_rank(np.eye(3, dtype=bool)) == 3
    assert gf2_rank([[1, 1, 0], [0, 1, 1], [1, 0, 1]]) == 2
    assert gf2_rank(np.zeros((2, 2), dtype=bool)) == 0
