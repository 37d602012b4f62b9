import numpy as np
import pytest

from exceptions import CapacityError, InputError
from qec.color_code import build_layout, build_memory_circuit
from simulation.circuit import Operation, schedule_moments
from simulation.layout import (
    LeafAssignment,
    cluster,
    default_layout,
    find_tree_structure,
    measure_chi_exact,
    postselect_layouts,
    random_even_split,
    read_layout_csv,
    reduce_to_two_clusters,
    similarity_matrix,
    snake_layout,
    tableau_chi_exact,
    write_layout_csv,
)


def cnots(pairs, num_qubits):
    return schedule_moments([Operation.gate("CNOT", a, b) for a, b in pairs], num_qubits=num_qubits)


def test_similarity_of_a_single_shared_gate():
    sim = similarity_matrix(cnots([(0, 1)], 2))
    assert sim[0, 1] == pytest.approx(1.5)


def test_similarity_without_shared_gates():
    circuit = cnots([(0, 2)] * 3 + [(1, 3)] * 5, 4)
    sim = similarity_matrix(circuit)
    assert sim[0, 1] == pytest.approx(1 / 8)
    assert sim[0, 2] == pytest.approx(3 + 1 / 6)


def test_similarity_without_gates_is_zero():
    circuit = schedule_moments([Operation.gate("H", q) for q in range(3)], num_qubits=3)
    np.testing.assert_array_equal(similarity_matrix(circuit), np.zeros((3, 3)))


def test_similarity_is_symmetric(d3_circuit):
    sim = similarity_matrix(d3_circuit)
    np.testing.assert_allclose(sim, sim.T)
    assert np.all(np.diag(sim) == 0)
    assert np.all(sim >= 0)


def block_similarity(groups, cross=0.0):
    n = sum(len(g) for g in groups)
    sim = np.full((n, n), cross)
    for g in groups:
        sim[np.ix_(g, g)] = 1.0
    np.fill_diagonal(sim, 0.0)
    return sim


def as_partition(qubits, labels):
    parts = {}
    for q, label in zip(qubits, labels):
        parts.setdefault(int(label), set()).add(q)
    return {frozenset(p) for p in parts.values()}


@pytest.mark.parametrize("cross", [0.0, 0.01])
def test_cluster_recovers_blocks(rng, cross):
    groups = [[0, 1, 2], [3, 4, 5]]
    labels = cluster(range(6), 2, block_similarity(groups, cross), rng)
    assert as_partition(range(6), labels) == {frozenset(g) for g in groups}
    assert set(labels.tolist()) == {0, 1}


def test_cluster_into_singletons(rng):
    labels = cluster([2, 5, 7], 3, block_similarity([[0, 1, 2, 3, 4, 5, 6, 7]]), rng)
    assert sorted(labels.tolist()) == [0, 1, 2]


def test_cluster_uses_every_label(rng):
    sim = block_similarity([list(range(8))])
    for k in (2, 3, 5):
        labels = cluster(range(8), k, sim, rng)
        assert set(labels.tolist()) == set(range(k))


def test_cluster_rejects_bad_k(rng):
    with pytest.raises(InputError):
        cluster([0, 1], 3, np.zeros((2, 2)), rng)


def test_reduce_balances_greedily():
    labels = [0] * 4 + [1] * 3 + [2] * 2 + [3]
    sides = reduce_to_two_clusters(labels)
    assert sorted(np.bincount(sides).tolist()) == [5, 5]
    assert sides[0] == sides[9] and sides[4] == sides[7]


def test_reduce_cannot_split_clusters():
    sides = reduce_to_two_clusters([0] * 7 + [1])
    assert sorted(np.bincount(sides).tolist()) == [1, 7]


def test_reduce_keeps_two_clusters():
    labels = [0, 1, 1, 0, 1]
    assert as_partition(range(5), reduce_to_two_clusters(labels)) == as_partition(range(5), labels)


def test_reduce_needs_two_labels():
    with pytest.raises(InputError):
        reduce_to_two_clusters([0, 0])


def test_random_even_split(rng):
    left, right = random_even_split(list(range(7)), rng)
    assert len(left) == 4 and len(right) == 3
    assert sorted(left + right) == list(range(7))


def test_pairs_become_siblings(rng):
    circuit = cnots([(0, 1)] * 3 + [(2, 3)] * 3, 4)
    leaves = find_tree_structure(circuit, 2, rng).leaves
    assert leaves[0] // 2 == leaves[1] // 2
    assert leaves[2] // 2 == leaves[3] // 2


def test_memory_circuit_fits_sixteen_leaves(d3_circuit, rng):
    assignment = find_tree_structure(d3_circuit, 4, rng)
    assert len(set(assignment.leaves)) == 13
    assert all(0 <= leaf < 16 for leaf in assignment.leaves)


def test_uniform_similarity_still_terminates(rng):
    circuit = cnots([(0, 1)], 4)
    sim = np.ones((4, 4)) - np.eye(4)
    assignment = find_tree_structure(circuit, 2, rng, sim=sim)
    assert sorted(assignment.leaves) == [0, 1, 2, 3]


def test_tree_too_small(d3_circuit, rng):
    with pytest.raises(CapacityError):
        find_tree_structure(d3_circuit, 3, rng)


def test_assignment_must_be_injective():
    with pytest.raises(CapacityError):
        LeafAssignment(2, (0, 0))
    with pytest.raises(CapacityError):
        LeafAssignment(1, (0, 2))


def test_snake_layout_is_valid(d5_layout):
    assignment = snake_layout(d5_layout)
    assert sorted(assignment.leaves) == list(range(d5_layout.num_qubits))
    assert assignment.depth == 6


def test_postselection_is_reproducible(d3_circuit):
    best, chi, scores = postselect_layouts(d3_circuit, candidates=3, seed=4, workers=1)
    again, chi_again, _ = postselect_layouts(d3_circuit, candidates=3, seed=4, workers=3)
    assert best == again and chi == chi_again
    assert chi == min(scores)
    assert measure_chi_exact(d3_circuit, best, 4) == chi


def test_more_candidates_never_hurt(d3_circuit):
    _, few, _ = postselect_layouts(d3_circuit, candidates=2, seed=1)
    _, many, _ = postselect_layouts(d3_circuit, candidates=4, seed=1)
    assert many <= few


BOND_DIMENSIONS = {
    # (d, cycles): chi_exact for the default, snake and optimized layouts
    (3, 1): (8, 8, 8),
    (3, 3): (16, 16, 16),
}


@pytest.mark.parametrize("d, cycles", sorted(BOND_DIMENSIONS))
def test_bond_dimension_per_layout(d, cycles):
    code = build_layout(d)
    circuit = build_memory_circuit(code, cycles)
    default, snake, optimized = BOND_DIMENSIONS[(d, cycles)]
    assert measure_chi_exact(circuit, default_layout(code.num_qubits)) == default
    assert measure_chi_exact(circuit, snake_layout(code)) == snake
    _, chi, _ = postselect_layouts(circuit)
    assert chi == optimized


@pytest.mark.parametrize("d, cycles", [(3, 1), (3, 3)])
def test_tableau_entropy_agrees_with_tensor_network(d, cycles, rng):
    code = build_layout(d)
    circuit = build_memory_circuit(code, cycles)
    layouts = [default_layout(code.num_qubits), snake_layout(code), find_tree_structure(circuit, 4, rng)]
    for assignment in layouts:
        assert tableau_chi_exact(circuit, assignment) == measure_chi_exact(circuit, assignment)


@pytest.mark.slow
def test_bond_dimension_at_distance_five(d5_layout):
    circuit = build_memory_circuit(d5_layout, 1)
    snake = snake_layout(d5_layout)
    assert measure_chi_exact(circuit, snake) == 512
    assert tableau_chi_exact(circuit, snake) == 512
    _, chi, _ = postselect_layouts(circuit, candidates=20)
    assert chi <= 32


def test_layout_csv(tmp_path):
    assignment = LeafAssignment(3, (5, 0, 7, 2))
    path = write_layout_csv(tmp_path / "layout.csv", assignment)
    assert read_layout_csv(path, depth=3) == assignment
    assert (tmp_path / "layout.csv").read_text().splitlines()[0] == "qubit,leaf"


def test_layout_csv_rejects_gaps(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("qubit,leaf\n0,1\n2,3\n")
    with pytest.raises(InputError):
        read_layout_csv(path)
