"""
Clifford simulator on an Aaronson-Gottesman stabilizer tableau.

Rows 0..n-1 hold destabilizers and rows n..2n-1 stabilizers, each as X and Z
bit vectors plus a sign bit. Every measurement draws exactly one uniform from
the measurement stream, random or not, so a paired TTN run stays aligned.
"""

import logging

import numpy as np

from exceptions import InputError, NumericalError

logger = logging.getLogger(__name__)


class StabilizerState:
    def __init__(self, num_qubits, debug=False):
        n = num_qubits
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        self.x[np.arange(n), np.arange(n)] = True
        self.z[n + np.arange(n), np.arange(n)] = True
        self.debug = debug
        # interface parity with the tensor-network backends
        self.max_bond_seen = 1
        self.cumulative_discarded_weight = 0.0

    @classmethod
    def init_product_state(cls, num_qubits, initial_states=None, debug=False):
        state = cls(num_qubits, debug=debug)
        initial_states = initial_states or {}
        if not isinstance(initial_states, dict):
            initial_states = dict(enumerate(initial_states))
        for q, label in initial_states.items():
            state.prepare_basis(q, label)
        return state

    def prepare_basis(self, q, label):
        """Map |0> on qubit q to |label>."""
        gates = {"0": (), "1": ("X",), "+": ("H",), "-": ("X", "H")}
        if label not in gates:
            raise InputError(f"unknown initial state {label!r}")
        for name in gates[label]:
            self.apply_clifford(name, (q,))

    # ----- gates -----

    def apply_clifford(self, gate, qubits):
        x, z, r = self.x, self.z, self.r
        if gate == "I":
            pass
        elif gate == "H":
            (a,) = qubits
            r ^= x[:, a] & z[:, a]
            x[:, a], z[:, a] = z[:, a].copy(), x[:, a].copy()
        elif gate == "S":
            (a,) = qubits
            r ^= x[:, a] & z[:, a]
            z[:, a] ^= x[:, a]
        elif gate == "X":
            (a,) = qubits
            r ^= z[:, a]
        elif gate == "Z":
            (a,) = qubits
            r ^= x[:, a]
        elif gate == "Y":
            (a,) = qubits
            r ^= x[:, a] ^ z[:, a]
        elif gate == "CNOT":
            a, b = qubits
            if a == b:
                raise InputError("CNOT needs distinct qubits")
            r ^= x[:, a] & z[:, b] & ~(x[:, b] ^ z[:, a])
            x[:, b] ^= x[:, a]
            z[:, a] ^= z[:, b]
        else:
            raise InputError(f"gate {gate!r} is not supported by the stabilizer backend")
        if self.debug:
            self.check_symplectic()

    # ----- measurement -----

    def _rowsum(self, targets, source):
        """Multiply rows `targets` (index array) by row `source` in place, tracking signs."""
        x1 = self.x[source].astype(np.int8)
        z1 = self.z[source].astype(np.int8)
        x2 = self.x[targets].astype(np.int8)
        z2 = self.z[targets].astype(np.int8)
        g = (
            (x1 & z1) * (z2 - x2)
            + (x1 & (1 - z1)) * z2 * (2 * x2 - 1)
            + ((1 - x1) & z1) * x2 * (1 - 2 * z2)
        )
        total = 2 * self.r[targets].astype(int) + 2 * int(self.r[source]) + g.sum(axis=1)
        total %= 4
        if np.any(total % 2):
            raise NumericalError("tableau rowsum produced an imaginary phase")
        self.r[targets] = total == 2
        self.x[targets] ^= self.x[source]
        self.z[targets] ^= self.z[source]

    def measure_qubit(self, q, rng):
        n = self.n
        u = rng.random()
        hits = np.flatnonzero(self.x[n:, q])
        if hits.size:
            p = n + hits[0]
            others = np.flatnonzero(self.x[:, q])
            # the paired destabilizer is overwritten below
            others = others[(others != p) & (others != p - n)]
            if others.size:
                self._rowsum(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, q] = True
            outcome = int(u >= 0.5)
            self.r[p] = bool(outcome)
        else:
            outcome = self._deterministic_outcome(q)
        if self.debug:
            self.check_symplectic()
        return outcome

    def _deterministic_outcome(self, q):
        n = self.n
        sign, xs, zs = 0, np.zeros(n, dtype=np.int8), np.zeros(n, dtype=np.int8)
        for i in np.flatnonzero(self.x[:n, q]):
            row = n + i
            x1 = self.x[row].astype(np.int8)
            z1 = self.z[row].astype(np.int8)
            g = (
                (x1 & z1) * (zs - xs)
                + (x1 & (1 - z1)) * zs * (2 * xs - 1)
                + ((1 - x1) & z1) * xs * (1 - 2 * zs)
            )
            sign = (2 * sign + 2 * int(self.r[row]) + int(g.sum())) % 4 // 2
            xs ^= x1
            zs ^= z1
        return int(sign)

    def reset_qubit(self, q, rng):
        outcome = self.measure_qubit(q, rng)
        if outcome:
            self.apply_clifford("X", (q,))
        return outcome

    def entanglement_entropy(self, qubits):
        """
        Entropy in bits of the reduced state on `qubits`.

        Equals rank(stabilizer rows restricted to the subset) - |subset|; the
        Schmidt rank across the cut is 2 to this power.
        """
        cols = np.asarray(sorted(set(qubits)), dtype=int)
        if cols.size == 0 or cols.size == self.n:
            return 0
        n = self.n
        restricted = np.hstack([self.x[n:][:, cols], self.z[n:][:, cols]])
        return gf2_rank(restricted) - cols.size

    def check_symplectic(self):
        """Destabilizer/stabilizer rows must pair up symplectically."""
        x = self.x.astype(np.int64)
        z = self.z.astype(np.int64)
        product = (x @ z.T + z @ x.T) % 2
        n = self.n
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[np.arange(n), n + np.arange(n)] = 1
        expected[n + np.arange(n), np.arange(n)] = 1
        if not np.array_equal(product, expected):
            raise NumericalError("tableau lost its symplectic structure")


def gf2_rank(matrix):
    """Rank over GF(2) of a boolean matrix, by row elimination."""
    m = np.array(matrix, dtype=bool)
    rank = 0
    for col in range(m.shape[1]):
        if rank == m.shape[0]:
            break
        hits = np.flatnonzero(m[rank:, col])
        if not hits.size:
            continue
        pivot = rank + hits[0]
        m[[rank, pivot]] = m[[pivot, rank]]
        rows = np.flatnonzero(m[:, col])
        rows = rows[rows != rank]
        m[rows] ^= m[rank]
        rank += 1
    return rank


def run_twirled_experiment(d, cycles, model, trials, master_seed=0, workers=None):
    """
    Logical failure rate of the memory experiment on the Clifford backend.

    `model` must be depolarizing or twirled; circuit, noise placement and
    decoder are the ones the tensor-network path uses.
    """
    from analysis.threshold import estimate_pfail

    return estimate_pfail(
        d, cycles, model, model.strength, trials,
        chi_cap=None, backend="stabilizer", master_seed=master_seed, workers=workers,
    )
