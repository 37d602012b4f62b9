"""Dense statevector simulator with the same operation surface as TTNState."""

import numpy as np

from exceptions import InputError, NumericalError
from gate_ops import GateLibrary, basis_state
from utils import ensure_finite


class StateVector:
    # tensor with one axis per qubit, qubit 0 first
    def __init__(self, amplitudes):
        self.amplitudes = amplitudes
        self.max_bond_seen = 1
        self.cumulative_discarded_weight = 0.0

    @classmethod
    def init_product_state(cls, num_qubits, initial_states=None):
        if num_qubits > 24:
            raise InputError(f"{num_qubits} qubits is too many for a dense statevector")
        initial_states = initial_states or {}
        if not isinstance(initial_states, dict):
            initial_states = dict(enumerate(initial_states))
        vec = np.ones(1, dtype=np.complex128)
        for q in range(num_qubits):
            vec = np.kron(vec, basis_state(initial_states.get(q, "0")))
        return cls(vec.reshape((2,) * num_qubits))

    @property
    def num_qubits(self):
        return self.amplitudes.ndim

    def _check(self, q):
        if not 0 <= q < self.num_qubits:
            raise InputError(f"qubit {q} out of range")

    def apply_one_qubit(self, q, mat, renormalize=False):
        mat = ensure_finite(mat)
        self._check(q)
        psi = np.tensordot(mat, self.amplitudes, axes=([1], [q]))
        psi = np.moveaxis(psi, 0, q)
        norm_sq = float(np.vdot(psi, psi).real)
        if renormalize:
            if norm_sq <= 0:
                raise NumericalError("zero-weight branch", {"qubit": q})
            psi = psi / np.sqrt(norm_sq)
        self.amplitudes = psi
        return norm_sq

    def apply_two_qubit(self, q1, q2, mat):
        mat = ensure_finite(mat).reshape(2, 2, 2, 2)
        self._check(q1)
        self._check(q2)
        if q1 == q2:
            raise InputError("two-qubit operator needs distinct qubits")
        psi = np.tensordot(mat, self.amplitudes, axes=([2, 3], [q1, q2]))
        self.amplitudes = np.moveaxis(psi, [0, 1], [q1, q2])
        return 0.0

    def reduced_density_matrix(self, q):
        self._check(q)
        flat = np.moveaxis(self.amplitudes, q, 0).reshape(2, -1)
        rho = flat @ flat.conj().T
        return rho / np.trace(rho).real

    def measure_qubit(self, q, rng):
        self._check(q)
        flat = np.moveaxis(self.amplitudes, q, 0)
        weights = np.array([np.vdot(flat[0], flat[0]).real, np.vdot(flat[1], flat[1]).real])
        total = weights.sum()
        if total <= 0:
            raise NumericalError("degenerate state at measurement", {"qubit": q})
        outcome = int(rng.random() >= weights[0] / total)
        projected = np.zeros_like(flat)
        projected[outcome] = flat[outcome] / np.sqrt(weights[outcome])
        self.amplitudes = np.moveaxis(projected, 0, q)
        return outcome

    def reset_qubit(self, q, rng):
        outcome = self.measure_qubit(q, rng)
        if outcome:
            self.apply_one_qubit(q, GateLibrary.pauli_x())
        return outcome

    def norm(self):
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def to_statevector(self):
        return self.amplitudes.reshape(-1).copy()
