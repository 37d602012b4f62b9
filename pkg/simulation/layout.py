"""
Qubit-to-leaf assignment for the tree tensor network.

Qubits that share many two-qubit gates should sit close in the tree. The tree
is built top-down: at each node the qubits are spectrally clustered on a gate
similarity, clusters are merged into two balanced sides, and each side is
placed in one subtree. Several seeded candidates are scored by the largest
bond dimension of an uncapped noiseless run; the smallest wins.
"""

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components
from sklearn.cluster import KMeans

from exceptions import CapacityError, InputError
from simulation.runner import execute, make_state
from utils import trial_stream, worker_count

logger = logging.getLogger(__name__)

DEFAULT_CANDIDATES = 20
BUILTIN_LAYOUTS = ("default", "snake", "optimized")


@dataclass(frozen=True)
class LeafAssignment:
    depth: int
    leaves: tuple

    def __post_init__(self):
        if len(set(self.leaves)) != len(self.leaves):
            raise CapacityError("leaf assignment is not injective")
        if any(not 0 <= leaf < 2 ** self.depth for leaf in self.leaves):
            raise CapacityError(f"leaf index outside a depth-{self.depth} tree")

    @property
    def num_qubits(self):
        return len(self.leaves)


# ---------- similarity ----------

def similarity_matrix(circuit):
    """
    f(i, j) = |G_i & G_j| + 1 / (|G_i| + |G_j|), G_q the multi-qubit gates on q.

    The second term is 0 when neither qubit has any multi-qubit gate.
    """
    n = circuit.num_qubits
    gates = circuit.multi_qubit_gates()
    incidence = np.zeros((n, len(gates)))
    for g, op in enumerate(gates):
        incidence[list(op.qubits), g] = 1.0
    shared = incidence @ incidence.T
    sizes = incidence.sum(axis=1)
    total = sizes[:, None] + sizes[None, :]
    with np.errstate(divide="ignore"):
        spread = np.where(total > 0, 1.0 / np.where(total > 0, total, 1.0), 0.0)
    sim = shared + spread
    np.fill_diagonal(sim, 0.0)
    return sim


# ---------- clustering ----------

def _canonical(labels):
    """Relabel in order of first appearance."""
    order = {}
    for label in labels:
        order.setdefault(label, len(order))
    return np.array([order[label] for label in labels], dtype=int)


def _balanced_groups(sizes, k):
    """Greedy largest-first packing of items with given sizes into k groups."""
    groups = [0] * k
    assignment = {}
    for item in sorted(range(len(sizes)), key=lambda i: (-sizes[i], i)):
        target = min(range(k), key=lambda g: (groups[g], g))
        assignment[item] = target
        groups[target] += sizes[item]
    return assignment


def cluster(qubits, k, sim, rng):
    """
    Spectral clustering of `qubits` into k groups (labels 0..k-1, all used).

    Disconnected similarity graphs with at least k components are clustered by
    component directly.
    """
    qubits = list(qubits)
    n = len(qubits)
    if not 2 <= k <= n:
        raise InputError(f"cannot form {k} clusters from {n} qubits")
    if k == n:
        return np.arange(n)
    sub = np.asarray(sim)[np.ix_(qubits, qubits)]

    n_comp, comp = connected_components(sub > 0, directed=False)
    if n_comp >= k:
        sizes = np.bincount(comp, minlength=n_comp)
        assignment = _balanced_groups(sizes, k)
        return _canonical([assignment[c] for c in comp])

    degree = sub.sum(axis=1)
    inv_sqrt = np.where(degree > 0, 1.0 / np.sqrt(np.where(degree > 0, degree, 1.0)), 0.0)
    lap = np.eye(n) - inv_sqrt[:, None] * sub * inv_sqrt[None, :]
    _, vecs = scipy.linalg.eigh(lap, subset_by_index=[0, k - 1])
    norms = np.linalg.norm(vecs, axis=1)
    embedding = vecs / np.where(norms > 0, norms, 1.0)[:, None]

    seed = int(rng.integers(2**31 - 1))
    labels = KMeans(n_clusters=k, init="k-means++", n_init=10, random_state=seed).fit(embedding).labels_
    labels = _canonical(labels)

    # k-means may merge duplicated embeddings; hand every missing label one member
    present = set(labels.tolist())
    for missing in range(k):
        if missing in present:
            continue
        counts = np.bincount(labels, minlength=k)
        donor = int(np.argmax(counts))
        member = int(np.flatnonzero(labels == donor)[-1])
        labels[member] = missing
        present.add(missing)
    return labels


def reduce_to_two_clusters(labels):
    """Merge cluster labels into two sides, largest cluster first onto the smaller side."""
    labels = np.asarray(labels)
    names = sorted(set(labels.tolist()))
    if len(names) < 2:
        raise InputError("need at least two clusters to reduce")
    sizes = [int(np.sum(labels == name)) for name in names]
    assignment = _balanced_groups(sizes, 2)
    side_of = {name: assignment[i] for i, name in enumerate(names)}
    return np.array([side_of[label] for label in labels.tolist()], dtype=int)


def random_even_split(qubits, rng):
    shuffled = [qubits[i] for i in rng.permutation(len(qubits))]
    half = (len(shuffled) + 1) // 2
    return shuffled[:half], shuffled[half:]


def find_tree_structure(circuit, depth, rng, sim=None):
    """Recursive top-down qubit placement; returns a LeafAssignment."""
    n = circuit.num_qubits
    if n > 2 ** depth:
        raise CapacityError(f"a depth-{depth} tree has {2 ** depth} leaves, circuit needs {n}")
    sim = similarity_matrix(circuit) if sim is None else sim
    leaves = [None] * n

    def create_subtree(qubits, layers, offset):
        if not qubits:
            return
        if len(qubits) == 1 or layers == 0:
            leaves[qubits[0]] = offset
            return
        half = 2 ** (layers - 1)
        if len(qubits) <= 2 and layers == 1:
            for i, q in enumerate(qubits):
                leaves[q] = offset + i
            return
        left = right = None
        for k in range(2, len(qubits) + 1):
            sides = reduce_to_two_clusters(cluster(qubits, k, sim, rng))
            a = [q for q, s in zip(qubits, sides) if s == 0]
            b = [q for q, s in zip(qubits, sides) if s == 1]
            if len(a) <= half and len(b) <= half:
                left, right = a, b
                break
        if left is None:
            logger.debug("no clustering fits %d qubits in two subtrees of %d", len(qubits), half)
            left, right = random_even_split(qubits, rng)
        create_subtree(left, layers - 1, offset)
        create_subtree(right, layers - 1, offset + half)

    create_subtree(list(range(n)), depth, 0)
    return LeafAssignment(depth, tuple(leaves))


# ---------- reference layouts ----------

def default_layout(num_qubits, depth=None):
    depth = depth or max(1, int(np.ceil(np.log2(max(num_qubits, 2)))))
    return LeafAssignment(depth, tuple(range(num_qubits)))


def snake_layout(code_layout, depth=None):
    """Boustrophedon path over the lattice rows; the k-th qubit on the path gets leaf k."""
    rows = {}
    for q, x, y in code_layout.coordinates:
        rows.setdefault(y, []).append((x, q))
    order = []
    for y in sorted(rows):
        row = sorted(rows[y])
        if y % 2:
            row = sorted(row, key=lambda item: (-item[0], item[1]))
        order += [q for _, q in row]
    leaves = [0] * len(order)
    for position, q in enumerate(order):
        leaves[q] = position
    depth = depth or max(1, int(np.ceil(np.log2(len(order)))))
    return LeafAssignment(depth, tuple(leaves))


# ---------- post-selection ----------

def measure_chi_exact(circuit, assignment, seed=0):
    """Largest bond dimension of an uncapped noiseless run with this assignment."""
    state = make_state("ttn", circuit, chi_cap=None, leaf_map=assignment.leaves, depth=assignment.depth)
    execute(circuit, state, trial_stream(seed, 0, "error"), trial_stream(seed, 0, "measurement"))
    return state.max_bond_seen


def _subtree_qubits(assignment):
    """Tree node -> frozenset of the qubits on leaves below it (root excluded)."""
    first_leaf = 2 ** assignment.depth
    below = {}
    for q, leaf in enumerate(assignment.leaves):
        node = first_leaf + leaf
        while node > 1:
            below.setdefault(node, set()).add(q)
            node //= 2
    return {node: frozenset(qs) for node, qs in below.items()}


def tableau_chi_exact(circuit, assignment, seed=0):
    """
    measure_chi_exact for Clifford circuits, read off the stabilizer tableau.

    After each two-qubit gate the entropy is evaluated on every bond of the
    tree path between the two leaves, the only bonds the gate can change.
    """
    state = make_state("stabilizer", circuit)
    first_leaf = 2 ** assignment.depth
    below = _subtree_qubits(assignment)
    largest = [0]

    def check_path(op):
        a = first_leaf + assignment.leaves[op.qubits[0]]
        b = first_leaf + assignment.leaves[op.qubits[1]]
        bonds = []
        while a != b:
            if a > b:
                bonds.append(a)
                a //= 2
            else:
                bonds.append(b)
                b //= 2
        for node in bonds:
            largest[0] = max(largest[0], state.entanglement_entropy(below[node]))

    execute(
        circuit, state, trial_stream(seed, 0, "error"), trial_stream(seed, 0, "measurement"),
        after_two_qubit=check_path,
    )
    return 2 ** largest[0]


def postselect_layouts(circuit, candidates=DEFAULT_CANDIDATES, seed=0, depth=None, workers=None):
    """
    Build `candidates` seeded assignments and keep the one with the smallest
    uncapped bond dimension; ties go to the earliest candidate.

    Candidate i always uses the seed (seed, i), so asking for more candidates
    only adds to the pool.
    """
    if candidates < 1:
        raise InputError("need at least one layout candidate")
    n = circuit.num_qubits
    depth = depth or max(1, int(np.ceil(np.log2(max(n, 2)))))
    sim = similarity_matrix(circuit)

    def score(index):
        rng = np.random.default_rng([seed, index])
        assignment = find_tree_structure(circuit, depth, rng, sim=sim)
        chi = measure_chi_exact(circuit, assignment, seed)
        logger.debug("layout candidate %d: chi_exact=%d", index, chi)
        return assignment, chi

    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        scored = list(pool.map(score, range(candidates)))
    best_index = min(range(candidates), key=lambda i: (scored[i][1], i))
    best, chi = scored[best_index]
    logger.info("best of %d layouts: candidate %d with chi_exact=%d", candidates, best_index, chi)
    return best, chi, [c for _, c in scored]


# ---------- persistence ----------

def write_layout_csv(path, assignment):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["qubit", "leaf"])
        for q, leaf in enumerate(assignment.leaves):
            writer.writerow([q, leaf])
    return path


def read_layout_csv(path, depth=None):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    try:
        mapping = {int(r["qubit"]): int(r["leaf"]) for r in rows}
    except (KeyError, ValueError) as exc:
        raise InputError(f"{path}: expected integer columns qubit,leaf") from exc
    if sorted(mapping) != list(range(len(mapping))):
        raise InputError(f"{path}: qubits must be numbered 0..N-1")
    leaves = tuple(mapping[q] for q in range(len(mapping)))
    if depth is None:
        depth = max(1, int(np.ceil(np.log2(max(max(leaves, default=0) + 1, len(leaves), 2)))))
    return LeafAssignment(depth, leaves)
