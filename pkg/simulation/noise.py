"""
Circuit-level noise models and their placement.

Three physical models are supported:
    depolarizing  strength p_err: uniformly random non-trivial Pauli with probability p_err
    srx           strength theta/pi: systematic over-rotation exp(-i theta X)
    ad            strength gamma: amplitude damping, unraveled into quantum trajectories

SRX and AD can be replaced by their Pauli-twirled channel. Errors follow every
gate on each qubit it touches, every idle location of the ideal schedule, and
every initialization or reset. Readout is noiseless.
"""

import itertools
import logging
from dataclasses import asdict, dataclass, fields

import numpy as np

from exceptions import ConfigError, InputError
from gate_ops import GateLibrary, PauliString
from simulation.circuit import Circuit, OpKind, Operation, idle_locations

logger = logging.getLogger(__name__)

MODELS = ("depolarizing", "srx", "ad")
TRAJECTORY_MODES = ("kraus", "eff-ham")

ONE_QUBIT_PAULIS = ("X", "Y", "Z")
TWO_QUBIT_PAULIS = tuple("".join(p) for p in itertools.product("IXYZ", repeat=2))[1:]


@dataclass(frozen=True)
class NoiseModel:
    model: str = "depolarizing"
    strength: float = 0.0
    twirled: bool = False
    idle_noise: bool = True
    init_reset_noise: bool = True
    trajectory_mode: str = "kraus"

    def __post_init__(self):
        if self.model not in MODELS:
            raise InputError(f"unknown noise model {self.model!r}, expected one of {MODELS}")
        if self.trajectory_mode not in TRAJECTORY_MODES:
            raise InputError(f"unknown trajectory mode {self.trajectory_mode!r}")
        if not np.isfinite(self.strength):
            raise InputError("noise strength must be finite")
        upper_open = self.model == "srx"
        if self.strength < 0 or self.strength > 1 or (upper_open and self.strength >= 1):
            raise InputError(f"{self.model} strength {self.strength} outside its range")
        if self.twirled and self.model == "depolarizing":
            raise InputError("depolarizing noise is already a Pauli channel; twirling it is not supported")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown noise keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except InputError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        return asdict(self)

    def with_strength(self, strength):
        return NoiseModel(**{**self.to_dict(), "strength": strength})

    @property
    def angle(self):
        """SRX rotation angle in radians (strength is stored as theta/pi)."""
        return np.pi * self.strength

    @property
    def is_pauli(self):
        """True when the model can run on the Clifford backend."""
        return self.model == "depolarizing" or self.twirled

    @property
    def label(self):
        return f"{self.model}-twirled" if self.twirled else self.model

    def kraus_operators(self):
        if self.model == "srx":
            return [srx_operator(self.angle)]
        if self.model == "ad":
            return list(ad_kraus(self.strength))
        p = self.strength
        ops = [np.sqrt(1 - p) * GateLibrary.identity()]
        ops += [np.sqrt(p / 3) * GateLibrary.pauli(letter) for letter in ONE_QUBIT_PAULIS]
        return ops

    def pauli_channel(self):
        if self.model == "depolarizing":
            p = self.strength
            return PauliChannel((1 - p, p / 3, p / 3, p / 3))
        return pauli_twirl(self.kraus_operators())


@dataclass(frozen=True)
class PauliChannel:
    probabilities: tuple

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.shape != (4,) or np.any(probs < -1e-15):
            raise InputError(f"invalid Pauli channel {self.probabilities}")
        if abs(probs.sum() - 1) > 1e-12:
            raise InputError(f"Pauli channel weights sum to {probs.sum()}, not 1")

    def sample(self, rng):
        """Draw one Pauli letter, or None for the identity."""
        u = rng.random()
        cumulative = np.cumsum(self.probabilities)
        index = min(int(np.searchsorted(cumulative, u, side="right")), 3)
        return None if index == 0 else "IXYZ"[index]


def sample_depolarizing(n, p_err, rng):
    if n not in (1, 2):
        raise InputError(f"depolarizing noise is defined on 1 or 2 qubits, not {n}")
    if not 0 <= p_err <= 1:
        raise InputError(f"p_err {p_err} outside [0, 1]")
    if rng.random() >= p_err:
        return None
    options = ONE_QUBIT_PAULIS if n == 1 else TWO_QUBIT_PAULIS
    letters = options[int(rng.integers(len(options)))]
    return PauliString.from_letters(range(n), letters)


def srx_operator(theta):
    return GateLibrary.x_rotation(theta)


def ad_kraus(gamma):
    if not 0 <= gamma <= 1:
        raise InputError(f"damping probability {gamma} outside [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=np.complex128)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=np.complex128)
    return k0, k1


def no_jump_operator(gamma):
    # exp(-K1^dag K1 / 2) with the time step absorbed into gamma
    return np.array([[1, 0], [0, np.exp(-gamma / 2)]], dtype=np.complex128)


def apply_trajectory_channel(state, q, gamma, rng, mode="kraus"):
    """
    Apply one sampled branch of the amplitude-damping channel to qubit q.

    Works on any simulator exposing reduced_density_matrix and apply_one_qubit.
    Returns the index of the branch taken: 0 for no jump, 1 for decay.
    """
    k0, k1 = ad_kraus(gamma)
    if mode == "eff-ham":
        k0 = no_jump_operator(gamma)
    elif mode != "kraus":
        raise InputError(f"unknown trajectory mode {mode!r}")
    rho = state.reduced_density_matrix(q)
    p_stay = float(np.real(np.trace(k0 @ rho @ k0.conj().T)))
    u = rng.random()
    if u < 1 - p_stay:
        state.apply_one_qubit(q, k1, renormalize=True)
        return 1
    state.apply_one_qubit(q, k0, renormalize=True)
    return 0


def pauli_twirl(kraus_list):
    kraus_list = [np.asarray(k, dtype=np.complex128) for k in kraus_list]
    completeness = sum(k.conj().T @ k for k in kraus_list)
    if not np.allclose(completeness, np.eye(2), atol=1e-10):
        raise InputError("Kraus operators are not complete")
    weights = np.zeros(4)
    for k in kraus_list:
        coeffs = np.array([np.trace(p @ k) / 2 for p in GateLibrary.pauli_basis()])
        weights += np.abs(coeffs) ** 2
    return PauliChannel(tuple(float(w) for w in weights))


# ---------- placement ----------

def _pauli_ops(pauli, qubits):
    """Gate operations realizing a PauliString over local indices into `qubits`."""
    return [Operation.gate(letter, qubits[local], tag="error") for local, letter in pauli.terms]


class _ErrorFactory:
    def __init__(self, model, rng):
        self.model = model
        self.rng = rng
        self.channel = model.pauli_channel() if model.twirled else None
        if model.model == "srx" and not model.twirled:
            self.rotation = srx_operator(model.angle)

    def single(self, q):
        model = self.model
        if self.channel is not None:
            letter = self.channel.sample(self.rng)
            return [] if letter is None else [Operation.gate(letter, q, tag="error")]
        if model.model == "srx":
            return [Operation.unitary(self.rotation, (q,), name="SRX", tag="error")]
        if model.model == "ad":
            return [Operation.kraus(q, "ad", model.strength, model.trajectory_mode)]
        pauli = sample_depolarizing(1, model.strength, self.rng)
        return [] if pauli is None else _pauli_ops(pauli, (q,))

    def after_gate(self, op):
        if self.model.model == "depolarizing" and len(op.qubits) == 2:
            pauli = sample_depolarizing(2, self.model.strength, self.rng)
            return [] if pauli is None else _pauli_ops(pauli, op.qubits)
        return [e for q in op.qubits for e in self.single(q)]

    def after_preparation(self, op):
        q = op.qubits[0]
        if self.model.model == "depolarizing":
            if self.rng.random() >= self.model.strength:
                return []
            flip = "Z" if op.kind is OpKind.INIT and op.basis in ("+", "-") else "X"
            return [Operation.gate(flip, q, tag="error")]
        return self.single(q)


def inject_noise(circuit, model, rng=None):
    """
    Return a noisy copy of `circuit`.

    Error operations go into a dedicated moment right after each ideal moment,
    so idle locations are those of the ideal schedule. Depolarizing and twirled
    errors are sampled here from `rng`; amplitude damping is left as branch
    points resolved by the simulator.
    """
    if rng is None and (model.model == "depolarizing" or model.twirled):
        raise InputError("sampled noise models need a random stream")
    factory = _ErrorFactory(model, rng)
    idle = {}
    if model.idle_noise:
        for moment, q in idle_locations(circuit):
            idle.setdefault(moment, []).append(q)

    moments = []
    for index, moment in enumerate(circuit.moments):
        moments.append(moment)
        errors = []
        for op in moment:
            if op.is_unitary:
                errors += factory.after_gate(op)
            elif op.kind in (OpKind.INIT, OpKind.RESET) and model.init_reset_noise:
                errors += factory.after_preparation(op)
        for q in idle.get(index, []):
            errors += factory.single(q)
        if errors:
            moments.append(tuple(errors))
    return Circuit(circuit.num_qubits, tuple(moments), circuit.metadata)
