"""
Hardware-agnostic circuit representation.

A circuit is an ordered list of moments; each moment holds operations acting on
disjoint qubits. Barrier operations occupy a moment of their own and separate
syndrome-extraction cycles.

Text format (one operation per line, stable across versions)::

    # ttnqec-circuit v1
    # num_qubits <N>
    # moments <M>
    # data <q> <q> ...
    # ancilla <q> <q> ...
    <moment> <kind> <qubits...> <payload key=value...> <tag>

Kinds are U1, U2, M, R, INIT, KRAUS and BARRIER. Payload keys: ``name`` (gate
name), ``matrix`` (row-major ``re,im`` pairs joined by ``;``), ``basis`` (one of
0, 1, +, -) and ``channel`` (``<model>:<strength>:<mode>``). The tag is always
the last token.
"""

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from exceptions import InputError
from gate_ops import GateLibrary
from utils import ensure_finite, is_unitary

logger = logging.getLogger(__name__)

FORMAT_HEADER = "# ttnqec-circuit v1"
INIT_BASES = ("0", "1", "+", "-")


class OpKind(enum.Enum):
    ONE_QUBIT_UNITARY = "U1"
    TWO_QUBIT_UNITARY = "U2"
    MEASURE = "M"
    RESET = "R"
    INIT = "INIT"
    KRAUS_BRANCH_POINT = "KRAUS"
    BARRIER = "BARRIER"


@dataclass(frozen=True)
class Operation:
    kind: OpKind
    qubits: tuple
    name: str = None
    matrix: tuple = None
    basis: str = None
    channel: tuple = None
    tag: str = "-"

    def __post_init__(self):
        if len(set(self.qubits)) != len(self.qubits):
            raise InputError(f"repeated qubit in {self.kind.value} on {self.qubits}")
        expected = {
            OpKind.ONE_QUBIT_UNITARY: 1,
            OpKind.TWO_QUBIT_UNITARY: 2,
            OpKind.MEASURE: 1,
            OpKind.RESET: 1,
            OpKind.INIT: 1,
            OpKind.KRAUS_BRANCH_POINT: 1,
            OpKind.BARRIER: 0,
        }[self.kind]
        if len(self.qubits) != expected:
            raise InputError(f"{self.kind.value} expects {expected} qubits, got {self.qubits}")
        if self.is_unitary:
            if self.matrix is None:
                raise InputError("unitary operation without a matrix")
            if not is_unitary(self.operator):
                raise InputError(f"operator {self.name!r} is not unitary")
        if self.kind is OpKind.INIT and self.basis not in INIT_BASES:
            raise InputError(f"unknown init basis {self.basis!r}")
        if " " in self.tag or not self.tag:
            raise InputError("tags must be non-empty and contain no spaces")

    # ----- constructors -----

    @classmethod
    def gate(cls, name, *qubits, tag="-"):
        mat = GateLibrary.by_name(name)
        kind = OpKind.TWO_QUBIT_UNITARY if len(qubits) == 2 else OpKind.ONE_QUBIT_UNITARY
        return cls(kind, tuple(qubits), name=name, matrix=_flatten(mat), tag=tag)

    @classmethod
    def unitary(cls, matrix, qubits, name="U", tag="-"):
        mat = ensure_finite(matrix)
        qubits = tuple(qubits)
        kind = OpKind.TWO_QUBIT_UNITARY if len(qubits) == 2 else OpKind.ONE_QUBIT_UNITARY
        return cls(kind, qubits, name=name, matrix=_flatten(mat), tag=tag)

    @classmethod
    def measure(cls, qubit, tag="-"):
        return cls(OpKind.MEASURE, (qubit,), tag=tag)

    @classmethod
    def reset(cls, qubit, tag="-"):
        return cls(OpKind.RESET, (qubit,), tag=tag)

    @classmethod
    def init(cls, qubit, basis="0", tag="-"):
        return cls(OpKind.INIT, (qubit,), basis=basis, tag=tag)

    @classmethod
    def kraus(cls, qubit, model, strength, mode="kraus", tag="error"):
        return cls(OpKind.KRAUS_BRANCH_POINT, (qubit,), channel=(model, float(strength), mode), tag=tag)

    @classmethod
    def barrier(cls, tag="cycle"):
        return cls(OpKind.BARRIER, (), tag=tag)

    # ----- accessors -----

    @property
    def is_unitary(self):
        return self.kind in (OpKind.ONE_QUBIT_UNITARY, OpKind.TWO_QUBIT_UNITARY)

    @property
    def operator(self):
        if self.matrix is None:
            return None
        dim = 2 ** len(self.qubits)
        return np.array(self.matrix, dtype=np.complex128).reshape(dim, dim)

    def to_line(self, moment):
        parts = [str(moment), self.kind.value]
        parts += [str(q) for q in self.qubits]
        if self.name is not None:
            parts.append(f"name={self.name}")
        if self.matrix is not None:
            parts.append("matrix=" + ";".join(f"{z.real!r},{z.imag!r}" for z in self.matrix))
        if self.basis is not None:
            parts.append(f"basis={self.basis}")
        if self.channel is not None:
            model, strength, mode = self.channel
            parts.append(f"channel={model}:{strength!r}:{mode}")
        parts.append(self.tag)
        return " ".join(parts)

    @classmethod
    def from_line(cls, line):
        tokens = line.split()
        if len(tokens) < 3:
            raise InputError(f"malformed circuit line: {line!r}")
        moment = int(tokens[0])
        kind = OpKind(tokens[1])
        qubits, payload = [], {}
        for token in tokens[2:-1]:
            if "=" in token:
                key, value = token.split("=", 1)
                payload[key] = value
            else:
                qubits.append(int(token))
        kwargs = {"tag": tokens[-1]}
        if "name" in payload:
            kwargs["name"] = payload["name"]
        if "matrix" in payload:
            kwargs["matrix"] = tuple(
                complex(float(re), float(im))
                for re, im in (pair.split(",") for pair in payload["matrix"].split(";"))
            )
        if "basis" in payload:
            kwargs["basis"] = payload["basis"]
        if "channel" in payload:
            model, strength, mode = payload["channel"].split(":")
            kwargs["channel"] = (model, float(strength), mode)
        return moment, cls(kind, tuple(qubits), **kwargs)


def _flatten(mat):
    return tuple(complex(z) for z in np.asarray(mat).ravel())


@dataclass(frozen=True)
class CircuitMetadata:
    data_qubits: tuple = ()
    ancilla_qubits: tuple = ()


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    moments: tuple
    metadata: CircuitMetadata = field(default_factory=CircuitMetadata)

    def __post_init__(self):
        for index, moment in enumerate(self.moments):
            seen = set()
            for op in moment:
                for q in op.qubits:
                    if q in seen:
                        raise InputError(f"qubit {q} appears twice in moment {index}")
                    if not 0 <= q < self.num_qubits:
                        raise InputError(f"qubit {q} out of range in moment {index}")
                    seen.add(q)

    def operations(self):
        """Yield (moment index, operation) in execution order."""
        for index, moment in enumerate(self.moments):
            for op in moment:
                yield index, op

    @property
    def cycle_boundaries(self):
        return [i for i, moment in enumerate(self.moments) if any(op.kind is OpKind.BARRIER for op in moment)]

    def cycle_blocks(self):
        """
        Partition moments by barriers: [initialization, cycle 1, ..., cycle C, readout].
        Each block is a range of moment indices; barrier moments belong to no block.
        """
        bounds = self.cycle_boundaries
        blocks, start = [], 0
        for b in bounds:
            blocks.append(range(start, b))
            start = b + 1
        blocks.append(range(start, len(self.moments)))
        return blocks

    def multi_qubit_gates(self):
        return [op for _, op in self.operations() if len(op.qubits) >= 2]

    # ----- serialization -----

    def to_text(self):
        lines = [
            FORMAT_HEADER,
            f"# num_qubits {self.num_qubits}",
            f"# moments {len(self.moments)}",
            "# data " + " ".join(str(q) for q in self.metadata.data_qubits),
            "# ancilla " + " ".join(str(q) for q in self.metadata.ancilla_qubits),
        ]
        lines += [op.to_line(moment) for moment, op in self.operations()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        header, body = {}, []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                fields = line[1:].split()
                if fields and fields[0] in ("num_qubits", "moments", "data", "ancilla"):
                    header[fields[0]] = fields[1:]
                continue
            body.append(Operation.from_line(line))
        if "num_qubits" not in header:
            raise InputError("circuit text lacks a num_qubits header")
        count = int(header.get("moments", ["0"])[0])
        if body:
            count = max(count, max(m for m, _ in body) + 1)
        moments = [[] for _ in range(count)]
        for moment, op in body:
            moments[moment].append(op)
        metadata = CircuitMetadata(
            data_qubits=tuple(int(q) for q in header.get("data", [])),
            ancilla_qubits=tuple(int(q) for q in header.get("ancilla", [])),
        )
        return cls(int(header["num_qubits"][0]), tuple(tuple(m) for m in moments), metadata)


def schedule_moments(ops, num_qubits=None, metadata=None):
    """
    Pack operations greedily as soon as possible.

    Each operation lands in the earliest moment after the last use of all its
    qubits; barriers fence everything that follows them.
    """
    ops = list(ops)
    if num_qubits is None:
        num_qubits = max((max(op.qubits) + 1 for op in ops if op.qubits), default=0)
    free = [0] * num_qubits
    fence = 0
    moments = []
    for op in ops:
        if op.kind is OpKind.BARRIER:
            slot = max([fence] + free)
            moments.extend([] for _ in range(slot + 1 - len(moments)))
            moments[slot].append(op)
            fence = slot + 1
            continue
        slot = max([fence] + [free[q] for q in op.qubits])
        if slot >= len(moments):
            moments.extend([] for _ in range(slot + 1 - len(moments)))
        moments[slot].append(op)
        for q in op.qubits:
            free[q] = slot + 1
    return Circuit(num_qubits, tuple(tuple(m) for m in moments), metadata or CircuitMetadata())


def idle_locations(circuit):
    """
    (moment, qubit) pairs where a live qubit is not acted upon.

    A qubit is live from its first INIT or RESET until its final measurement;
    a qubit that is never prepared has no idle locations.
    """
    first_init, last_measure, last_touch = {}, {}, {}
    for moment, op in circuit.operations():
        for q in op.qubits:
            if op.kind in (OpKind.INIT, OpKind.RESET) and q not in first_init:
                first_init[q] = moment
            if op.kind is OpKind.MEASURE:
                last_measure[q] = moment
            last_touch[q] = moment

    barrier_moments = set(circuit.cycle_boundaries)
    busy = [set(q for op in moment for q in op.qubits) for moment in circuit.moments]
    locations = []
    for q in range(circuit.num_qubits):
        if q not in first_init:
            continue
        start = first_init[q]
        end = len(circuit.moments) - 1
        # a final measurement is one that nothing acts after
        if q in last_measure and last_measure[q] == last_touch[q]:
            end = last_measure[q]
        for moment in range(start, end + 1):
            if moment in barrier_moments or q in busy[moment]:
                continue
            locations.append((moment, q))
    locations.sort()
    return locations
