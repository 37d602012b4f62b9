"""
Pure-state simulator on a complete binary Tree Tensor Network.

Nodes use heap numbering: the root is node 1, node n has children 2n and 2n+1,
and leaf j (0-based, left to right) is node 2**depth + j. Tensor legs are
ordered (physical, up) on leaves and (left, right, up) on internal nodes; the
root's up leg has extent 1.

The state is kept in an isometric gauge around a single orthogonality center.
Two-qubit gates are threaded along the leaf-to-leaf path as an operator-Schmidt
decomposition, swept once with QR towards the second leaf and once with
truncating SVDs back to the first.
"""

import logging

import numpy as np
import scipy.linalg

from exceptions import CapacityError, InputError, NumericalError
from gate_ops import GateLibrary, basis_state, operator_schmidt
from utils import ensure_finite, is_unitary

logger = logging.getLogger(__name__)

SCHMIDT_FLOOR = 1e-14


def tree_path(a, b):
    """Node sequence from node a to node b through their lowest common ancestor."""
    up_a, up_b = [a], [b]
    while a != b:
        if a > b:
            a //= 2
            up_a.append(a)
        else:
            b //= 2
            up_b.append(b)
    # both lists end at the common ancestor
    return up_a + up_b[-2::-1]


class TTNState:
    def __init__(self, depth, qubit_to_leaf, tensors, chi_cap=None):
        self.depth = depth
        self.leaf_count = 2 ** depth
        self.qubit_to_leaf = tuple(qubit_to_leaf)
        self.tensors = tensors
        self.chi_cap = chi_cap
        self.center = 1
        self.max_bond_seen = max(self.bond_dims().values(), default=1)
        self.cumulative_discarded_weight = 0.0

    # ----- construction -----

    @classmethod
    def init_product_state(cls, depth, qubit_to_leaf, initial_states=None, chi_cap=None):
        """
        Product state with qubit q on leaf qubit_to_leaf[q].

        initial_states maps qubit -> one of "0", "1", "+", "-" (default "0").
        Unused leaves are frozen in |0>.
        """
        if depth < 1:
            raise CapacityError(f"tree depth must be at least 1, got {depth}")
        leaves = list(qubit_to_leaf)
        if len(leaves) > 2 ** depth:
            raise CapacityError(f"{len(leaves)} qubits do not fit on {2 ** depth} leaves")
        if len(set(leaves)) != len(leaves):
            raise CapacityError("qubit-to-leaf map is not injective")
        if any(not 0 <= leaf < 2 ** depth for leaf in leaves):
            raise CapacityError("leaf index outside the tree")
        if chi_cap is not None and chi_cap < 1:
            raise InputError("chi_cap must be a positive integer")

        initial_states = initial_states or {}
        if not isinstance(initial_states, dict):
            initial_states = dict(enumerate(initial_states))
        labels = {leaf: initial_states.get(q, "0") for q, leaf in enumerate(leaves)}

        tensors = {}
        first_leaf = 2 ** depth
        for node in range(1, 2 * first_leaf):
            if node >= first_leaf:
                vec = basis_state(labels.get(node - first_leaf, "0"))
                tensors[node] = vec.reshape(2, 1)
            else:
                tensors[node] = np.ones((1, 1, 1), dtype=np.complex128)
        return cls(depth, leaves, tensors, chi_cap)

    # ----- geometry -----

    @property
    def num_qubits(self):
        return len(self.qubit_to_leaf)

    def leaf_node(self, q):
        if not 0 <= q < self.num_qubits:
            raise InputError(f"qubit {q} is not assigned to a leaf")
        return self.leaf_count + self.qubit_to_leaf[q]

    def is_leaf(self, node):
        return node >= self.leaf_count

    def _leg(self, node, neighbor):
        """Index of the leg of `node` that points at `neighbor`."""
        if neighbor == node // 2:
            return self.tensors[node].ndim - 1
        if neighbor == 2 * node:
            return 0
        if neighbor == 2 * node + 1:
            return 1
        raise ValueError(f"nodes {node} and {neighbor} are not adjacent")

    def bond_dims(self):
        """Extent of the bond between each non-root node and its parent."""
        return {node: self.tensors[node].shape[-1] for node in range(2, 2 * self.leaf_count)}

    # ----- gauge -----

    def _shift_center(self, node, neighbor):
        """QR-move the orthogonality center from `node` onto the adjacent `neighbor`."""
        tensor = self.tensors[node]
        leg = self._leg(node, neighbor)
        moved = np.moveaxis(tensor, leg, -1)
        rest_shape = moved.shape[:-1]
        try:
            q, r = scipy.linalg.qr(moved.reshape(-1, moved.shape[-1]), mode="economic")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError("QR failed", {"node": node, "shape": tensor.shape}) from exc
        self.tensors[node] = np.moveaxis(q.reshape(*rest_shape, q.shape[-1]), -1, leg)
        self._absorb(neighbor, self._leg(neighbor, node), r)
        self.center = neighbor

    def _absorb(self, node, leg, mat):
        """Contract mat (new, old) into leg `leg` of the tensor at `node`."""
        tensor = np.tensordot(mat, self.tensors[node], axes=([1], [leg]))
        self.tensors[node] = np.moveaxis(tensor, 0, leg)

    def move_center_to_node(self, target):
        path = tree_path(self.center, target)
        for node, nxt in zip(path, path[1:]):
            self._shift_center(node, nxt)

    def move_center_to(self, q):
        """Move the orthogonality center onto the leaf of qubit q."""
        self.move_center_to_node(self.leaf_node(q))

    # ----- one-qubit operations -----

    def apply_one_qubit(self, q, mat, renormalize=False):
        """
        Contract a 2x2 operator into the leaf of qubit q.

        Returns the squared norm of the state after the contraction and before
        any renormalization; for a Kraus branch this is its Born weight.
        """
        mat = ensure_finite(mat)
        if mat.shape != (2, 2):
            raise InputError(f"one-qubit operator must be 2x2, got {mat.shape}")
        node = self.leaf_node(q)
        if is_unitary(mat):
            self.tensors[node] = mat @ self.tensors[node]
            return 1.0
        self.move_center_to_node(node)
        updated = mat @ self.tensors[node]
        norm_sq = float(np.vdot(updated, updated).real)
        if renormalize:
            if norm_sq <= 0:
                raise NumericalError("zero-weight branch", {"qubit": q})
            updated = updated / np.sqrt(norm_sq)
        self.tensors[node] = updated
        return norm_sq

    def reduced_density_matrix(self, q):
        node = self.leaf_node(q)
        self.move_center_to_node(node)
        leaf = self.tensors[node]
        rho = leaf @ leaf.conj().T
        trace = np.trace(rho).real
        if trace <= 0:
            raise NumericalError("state has zero norm", {"qubit": q})
        return rho / trace

    def measure_qubit(self, q, rng):
        """Projective Z measurement; outcome 1 iff the drawn uniform is >= p(0)."""
        node = self.leaf_node(q)
        self.move_center_to_node(node)
        leaf = self.tensors[node]
        weights = np.sum(np.abs(leaf) ** 2, axis=1)
        total = weights.sum()
        if total <= 0:
            raise NumericalError("degenerate state at measurement", {"qubit": q})
        p0 = weights[0] / total
        outcome = int(rng.random() >= p0)
        if weights[outcome] <= 0:
            raise NumericalError("sampled a zero-probability outcome", {"qubit": q, "p0": p0})
        projected = np.zeros_like(leaf)
        projected[outcome] = leaf[outcome] / np.sqrt(weights[outcome])
        self.tensors[node] = projected
        return outcome

    def reset_qubit(self, q, rng):
        outcome = self.measure_qubit(q, rng)
        if outcome:
            self.apply_one_qubit(q, GateLibrary.pauli_x())
        return outcome

    # ----- two-qubit operations -----

    def apply_two_qubit(self, q1, q2, mat):
        """
        Apply a 4x4 operator on |q1 q2> along the tree path between the two leaves.

        Every SVD on the path keeps at most chi_cap singular values and drops
        those below SCHMIDT_FLOOR; the state is renormalized after truncation.
        Returns the discarded weight of this application.
        """
        mat = ensure_finite(mat)
        if mat.shape != (4, 4):
            raise InputError(f"two-qubit operator must be 4x4, got {mat.shape}")
        if q1 == q2:
            raise InputError("two-qubit operator needs distinct qubits")
        a, b = self.leaf_node(q1), self.leaf_node(q2)
        self.move_center_to_node(a)
        left, right = operator_schmidt(mat)
        rank = left.shape[0]
        path = tree_path(a, b)

        self.tensors[a] = np.einsum("koi,iu->ouk", left, self.tensors[a]).reshape(2, -1)
        self.tensors[b] = np.einsum("koi,iu->ouk", right, self.tensors[b]).reshape(2, -1)
        delta = np.eye(rank, dtype=np.complex128)
        for prev, node, nxt in zip(path, path[1:], path[2:]):
            self.tensors[node] = self._thread_delta(node, prev, nxt, delta)

        for node, nxt in zip(path, path[1:]):
            self._shift_center(node, nxt)

        discarded = 0.0
        for node, prev in zip(path[::-1], path[-2::-1]):
            discarded += self._split_towards(node, prev)

        for node in path:
            self.max_bond_seen = max(self.max_bond_seen, self.tensors[node].shape[-1])
        if discarded > 0:
            self.cumulative_discarded_weight += discarded
            logger.debug("truncated %.3e weight applying gate on (%d, %d)", discarded, q1, q2)
        return discarded

    def _thread_delta(self, node, prev, nxt, delta):
        """Widen the legs towards prev and nxt by the operator-Schmidt index."""
        tensor = self.tensors[node]
        leg_in, leg_out = self._leg(node, prev), self._leg(node, nxt)
        rest = [i for i in range(tensor.ndim) if i not in (leg_in, leg_out)]
        perm = [leg_in, leg_out] + rest
        moved = tensor.transpose(perm)
        din, dout = moved.shape[:2]
        widened = np.einsum("abc,kl->akblc", moved.reshape(din, dout, -1), delta)
        rank = delta.shape[0]
        widened = widened.reshape(din * rank, dout * rank, *moved.shape[2:])
        return widened.transpose(np.argsort(perm))

    def _split_towards(self, node, prev):
        """
        SVD the center tensor across its bond to `prev`, truncate, and move the
        center onto `prev`. Returns the discarded squared weight.
        """
        tensor = self.tensors[node]
        leg = self._leg(node, prev)
        moved = np.moveaxis(tensor, leg, -1)
        rest_shape = moved.shape[:-1]
        matrix = moved.reshape(-1, moved.shape[-1])
        try:
            u, s, vh = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesdd")
        except np.linalg.LinAlgError:
            try:
                u, s, vh = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")
            except np.linalg.LinAlgError as exc:
                raise NumericalError("SVD did not converge", {"node": node, "shape": tensor.shape}) from exc

        total = float(np.sum(s**2))
        if total <= 0:
            raise NumericalError("state has zero norm", {"node": node})
        keep = int(np.count_nonzero(s > SCHMIDT_FLOOR * np.sqrt(total)))
        keep = max(keep, 1)
        if self.chi_cap is not None:
            keep = min(keep, self.chi_cap)
        kept_weight = float(np.sum(s[:keep] ** 2))
        discarded = (total - kept_weight) / total

        s = s[:keep] / np.sqrt(kept_weight)
        self.tensors[node] = np.moveaxis(u[:, :keep].reshape(*rest_shape, keep), -1, leg)
        self._absorb(prev, self._leg(prev, node), s[:, None] * vh[:keep, :])
        self.center = prev
        return max(discarded, 0.0)

    # ----- readout -----

    def norm(self):
        leaf = self.tensors[self.center]
        return float(np.sqrt(np.vdot(leaf, leaf).real))

    def to_statevector(self):
        """
        Dense amplitudes with qubit 0 as the most significant bit.

        Only meant for small trees; memory grows as 2**leaf_count.
        """
        full = self._contract(1)[:, 0]
        full = full.reshape((2,) * self.leaf_count)
        used = set(self.qubit_to_leaf)
        index = tuple(slice(None) if leaf in used else 0 for leaf in range(self.leaf_count))
        reduced = full[index]
        # remaining axes follow leaf order
        leaf_order = sorted(self.qubit_to_leaf)
        axes = [leaf_order.index(self.qubit_to_leaf[q]) for q in range(self.num_qubits)]
        return reduced.transpose(axes).reshape(-1)

    def _contract(self, node):
        if self.is_leaf(node):
            return self.tensors[node]
        left = self._contract(2 * node)
        right = self._contract(2 * node + 1)
        merged = np.einsum("al,br,lru->abu", left, right, self.tensors[node])
        return merged.reshape(left.shape[0] * right.shape[0], -1)
