from dataclasses import dataclass

import numpy as np

from exceptions import InputError

CLIFFORD_GATES = ("I", "H", "S", "X", "Y", "Z", "CNOT")


class GateLibrary:
    @staticmethod
    def identity():
        return np.eye(2, dtype=np.complex128)

    @staticmethod
    def pauli_x():
        return np.array([[0, 1], [1, 0]], dtype=np.complex128)

    @staticmethod
    def pauli_y():
        return np.array([[0, -1j], [1j, 0]], dtype=np.complex128)

    @staticmethod
    def pauli_z():
        return np.array([[1, 0], [0, -1]], dtype=np.complex128)

    @staticmethod
    def hadamard():
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)

    @staticmethod
    def phase():
        return np.array([[1, 0], [0, 1j]], dtype=np.complex128)

    @staticmethod
    def cnot():
        # basis |control target>, control is the first qubit
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
        )

    @staticmethod
    def x_rotation(theta):
        # e^{-i theta X}
        return np.cos(theta) * GateLibrary.identity() - 1j * np.sin(theta) * GateLibrary.pauli_x()

    @staticmethod
    def pauli(letter):
        table = {
            "I": GateLibrary.identity,
            "X": GateLibrary.pauli_x,
            "Y": GateLibrary.pauli_y,
            "Z": GateLibrary.pauli_z,
        }
        if letter not in table:
            raise InputError(f"unknown Pauli letter {letter!r}")
        return table[letter]()

    @staticmethod
    def by_name(name):
        table = {
            "I": GateLibrary.identity,
            "H": GateLibrary.hadamard,
            "S": GateLibrary.phase,
            "X": GateLibrary.pauli_x,
            "Y": GateLibrary.pauli_y,
            "Z": GateLibrary.pauli_z,
            "CNOT": GateLibrary.cnot,
        }
        if name not in table:
            raise InputError(f"unknown gate {name!r}")
        return table[name]()

    @staticmethod
    def pauli_basis():
        """The four single-qubit Paulis in I, X, Y, Z order."""
        return [GateLibrary.pauli(p) for p in "IXYZ"]


BASIS_STATES = {
    "0": np.array([1, 0], dtype=np.complex128),
    "1": np.array([0, 1], dtype=np.complex128),
    "+": np.array([1, 1], dtype=np.complex128) / np.sqrt(2),
    "-": np.array([1, -1], dtype=np.complex128) / np.sqrt(2),
}


def basis_state(label):
    if label not in BASIS_STATES:
        raise InputError(f"unknown initial state {label!r}")
    return BASIS_STATES[label].copy()


def operator_schmidt(mat, cutoff=1e-14):
    """
    Split a two-qubit operator into sum_k A_k (x) B_k.

    Returns two stacks shaped (r, 2, 2); r <= 4 is the operator-Schmidt rank.
    """
    mat = np.asarray(mat, dtype=np.complex128).reshape(2, 2, 2, 2)
    # (o1, o2, i1, i2) -> (o1, i1), (o2, i2)
    regrouped = mat.transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(regrouped)
    keep = s > cutoff * max(s[0], 1.0)
    root = np.sqrt(s[keep])
    left = (u[:, keep] * root).T.reshape(-1, 2, 2)
    right = (root[:, None] * vh[keep, :]).reshape(-1, 2, 2)
    return left, right


@dataclass(frozen=True)
class PauliString:
    """Sparse Pauli string: sorted (qubit, letter) pairs, identity elsewhere."""

    terms: tuple = ()

    def __post_init__(self):
        for _, letter in self.terms:
            if letter not in "XYZ":
                raise InputError(f"invalid Pauli letter {letter!r}")

    @classmethod
    def from_dict(cls, mapping):
        return cls(tuple(sorted((int(q), p) for q, p in mapping.items() if p != "I")))

    @classmethod
    def from_letters(cls, qubits, letters):
        return cls.from_dict(dict(zip(qubits, letters)))

    def as_dict(self):
        return dict(self.terms)

    @property
    def support(self):
        return tuple(q for q, _ in self.terms)

    @property
    def x_support(self):
        return frozenset(q for q, p in self.terms if p in "XY")

    @property
    def z_support(self):
        return frozenset(q for q, p in self.terms if p in "ZY")

    @property
    def weight(self):
        return len(self.terms)

    def commutes_with(self, other):
        overlap = len(self.x_support & other.z_support) + len(self.z_support & other.x_support)
        return overlap % 2 == 0

    def __mul__(self, other):
        # phases are dropped
        x = self.x_support ^ other.x_support
        z = self.z_support ^ other.z_support
        letters = {}
        for q in x | z:
            letters[q] = "Y" if q in x and q in z else ("X" if q in x else "Z")
        return PauliString.from_dict(letters)

    def __str__(self):
        return " ".join(f"{p}{q}" for q, p in self.terms) or "I"
