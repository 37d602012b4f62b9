"""
Triangular color code on the 6.6.6 honeycomb lattice.

Sites sit on a triangular patch of rows y = 0..L, L = 3(d-1)/2, with
x = y, y+2, ..., 2L-y. In every row one site out of three is a plaquette
center; the others are data qubits. Each plaquette center carries a Z ancilla
and an X ancilla, numbered in that order as the patch is scanned row by row.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

from exceptions import InputError
from gate_ops import PauliString
from simulation.circuit import CircuitMetadata, Operation, schedule_moments

logger = logging.getLogger(__name__)

COLORS = ("red", "green", "blue")

# neighbours of a plaquette center, in rotational order
PLAQUETTE_OFFSETS = ((-1, 1), (1, 1), (2, 0), (1, -1), (-1, -1), (-2, 0))

# row class -> (color, position of the plaquette center among every three sites)
ROW_PATTERN = {0: ("green", 2), 1: ("blue", 0), 2: ("red", 1)}


@dataclass(frozen=True)
class Plaquette:
    index: int
    color: str
    support: tuple
    z_ancilla: int
    x_ancilla: int
    position: tuple


@dataclass(frozen=True)
class ColorCodeLayout:
    distance: int
    num_qubits: int
    data_qubits: tuple
    plaquettes: tuple
    coordinates: tuple
    logical_x_support: tuple
    logical_z_support: tuple

    @property
    def num_data(self):
        return len(self.data_qubits)

    @property
    def num_plaquettes(self):
        return len(self.plaquettes)

    @property
    def ancilla_qubits(self):
        return tuple(sorted(a for p in self.plaquettes for a in (p.z_ancilla, p.x_ancilla)))

    @cached_property
    def faces_of(self):
        """data qubit -> indices of the plaquettes containing it"""
        faces = {q: [] for q in self.data_qubits}
        for p in self.plaquettes:
            for q in p.support:
                faces[q].append(p.index)
        return {q: tuple(f) for q, f in faces.items()}

    def to_text(self):
        """Structured text: one `qubit` line per qubit, one `plaquette` line per face."""
        lines = [f"# color code d={self.distance} qubits={self.num_qubits}"]
        roles = {q: "data" for q in self.data_qubits}
        for p in self.plaquettes:
            roles[p.z_ancilla] = "anc-Z"
            roles[p.x_ancilla] = "anc-X"
        for q, x, y in self.coordinates:
            lines.append(f"qubit {q} {x} {y} {roles[q]}")
        for p in self.plaquettes:
            support = ",".join(str(q) for q in p.support)
            lines.append(f"plaquette {p.index} {p.color} {support} z={p.z_ancilla} x={p.x_ancilla}")
        lines.append("logical_x " + ",".join(str(q) for q in self.logical_x_support))
        lines.append("logical_z " + ",".join(str(q) for q in self.logical_z_support))
        return "\n".join(lines) + "\n"


def build_layout(d):
    if not isinstance(d, int) or d < 3 or d % 2 == 0:
        raise InputError(f"distance must be an odd integer >= 3, got {d!r}")
    L = 3 * (d - 1) // 2

    sites = {}
    centers = []
    coordinates = []
    data_qubits = []
    next_id = 0
    for y in range(L + 1):
        color, center_pos = ROW_PATTERN[y % 3]
        for x in range(y, 2 * L - y + 1, 2):
            if ((x - y) // 2) % 3 == center_pos:
                # Z ancilla first, then X ancilla
                centers.append((x, y, color, next_id, next_id + 1))
                coordinates += [(next_id, x, y), (next_id + 1, x, y)]
                next_id += 2
            else:
                sites[(x, y)] = next_id
                data_qubits.append(next_id)
                coordinates.append((next_id, x, y))
                next_id += 1

    plaquettes = []
    for index, (x, y, color, z_anc, x_anc) in enumerate(centers):
        support = tuple(
            sites[(x + dx, y + dy)] for dx, dy in PLAQUETTE_OFFSETS if (x + dx, y + dy) in sites
        )
        plaquettes.append(Plaquette(index, color, support, z_anc, x_anc, (x, y)))

    boundary = tuple(q for (x, y), q in sorted(sites.items(), key=lambda kv: kv[1]) if y == 0)
    layout = ColorCodeLayout(
        distance=d,
        num_qubits=next_id,
        data_qubits=tuple(data_qubits),
        plaquettes=tuple(plaquettes),
        coordinates=tuple(coordinates),
        logical_x_support=boundary,
        logical_z_support=boundary,
    )
    logger.debug("built d=%d layout: %d data, %d plaquettes", d, layout.num_data, layout.num_plaquettes)
    return layout


def stabilizers(layout):
    """All 2P stabilizers as (PauliString, plaquette index, type), X-type first per plaquette."""
    result = []
    for p in layout.plaquettes:
        for kind in ("X", "Z"):
            result.append((PauliString.from_dict({q: kind for q in p.support}), p.index, kind))
    return result


def logical_operators(layout):
    x_bar = PauliString.from_dict({q: "X" for q in layout.logical_x_support})
    z_bar = PauliString.from_dict({q: "Z" for q in layout.logical_z_support})
    return x_bar, z_bar


def _syndrome_round(layout, ops):
    by_site = {}
    for p in layout.plaquettes:
        px, py = p.position
        for step, (dx, dy) in enumerate(PLAQUETTE_OFFSETS):
            by_site[(p.index, step)] = (px + dx, py + dy)
    data = set(layout.data_qubits)
    site_to_qubit = {(x, y): q for q, x, y in layout.coordinates if q in data}

    for step in range(len(PLAQUETTE_OFFSETS)):
        for p in layout.plaquettes:
            q = site_to_qubit.get(by_site[(p.index, step)])
            if q is not None:
                ops.append(Operation.gate("CNOT", p.x_ancilla, q, tag="syndrome-CNOT"))
    for p in layout.plaquettes:
        ops.append(Operation.gate("H", p.x_ancilla, tag="syndrome-H"))
        ops.append(Operation.measure(p.x_ancilla, tag="syndrome-X"))

    for step in range(len(PLAQUETTE_OFFSETS)):
        for p in layout.plaquettes:
            q = site_to_qubit.get(by_site[(p.index, step)])
            if q is not None:
                ops.append(Operation.gate("CNOT", q, p.z_ancilla, tag="syndrome-CNOT"))
    for p in layout.plaquettes:
        ops.append(Operation.measure(p.z_ancilla, tag="syndrome-Z"))


def memory_operations(layout, cycles, extra_before_extraction=()):
    """
    Ordered operation list of the memory experiment.

    `extra_before_extraction` is inserted after initialization, before the
    first cycle (used to place deliberate faults).
    """
    if cycles < 1:
        raise InputError(f"need at least one cycle, got {cycles}")
    ops = []
    for q in layout.data_qubits:
        ops.append(Operation.init(q, "0", tag="init"))
    for p in layout.plaquettes:
        ops.append(Operation.init(p.z_ancilla, "0", tag="init"))
        ops.append(Operation.init(p.x_ancilla, "+", tag="init"))
    ops.extend(extra_before_extraction)
    ops.append(Operation.barrier("init"))

    for cycle in range(1, cycles + 1):
        _syndrome_round(layout, ops)
        if cycle < cycles:
            for p in layout.plaquettes:
                ops.append(Operation.reset(p.z_ancilla, tag="reset"))
                ops.append(Operation.reset(p.x_ancilla, tag="reset"))
                ops.append(Operation.gate("H", p.x_ancilla, tag="reset"))
        ops.append(Operation.barrier("cycle"))

    for q in layout.data_qubits:
        ops.append(Operation.measure(q, tag="readout"))
    return ops


def build_memory_circuit(layout, cycles, extra_before_extraction=()):
    ops = memory_operations(layout, cycles, extra_before_extraction)
    metadata = CircuitMetadata(data_qubits=layout.data_qubits, ancilla_qubits=layout.ancilla_qubits)
    return schedule_moments(ops, layout.num_qubits, metadata)


@dataclass(frozen=True)
class MemoryRecord:
    """Syndrome bits (cycle, plaquette) for both types, plus the final data readout."""

    x_syndromes: tuple
    z_syndromes: tuple
    readout: dict


def extract_records(layout, cycles, measurements):
    """
    Sort (qubit, bit) measurement results into per-cycle syndromes.

    The k-th measurement of an ancilla belongs to cycle k; each data qubit is
    measured once, at the end.
    """
    per_qubit = {}
    for q, bit in measurements:
        per_qubit.setdefault(q, []).append(int(bit))
    x_rows = [[0] * layout.num_plaquettes for _ in range(cycles)]
    z_rows = [[0] * layout.num_plaquettes for _ in range(cycles)]
    for p in layout.plaquettes:
        for anc, rows in ((p.x_ancilla, x_rows), (p.z_ancilla, z_rows)):
            bits = per_qubit.get(anc, [])
            if len(bits) != cycles:
                raise InputError(f"ancilla {anc} has {len(bits)} records, expected {cycles}")
            for k, bit in enumerate(bits):
                rows[k][p.index] = bit
    readout = {}
    for q in layout.data_qubits:
        bits = per_qubit.get(q, [])
        if len(bits) != 1:
            raise InputError(f"data qubit {q} measured {len(bits)} times, expected once")
        readout[q] = bits[0]
    return MemoryRecord(
        x_syndromes=tuple(tuple(r) for r in x_rows),
        z_syndromes=tuple(tuple(r) for r in z_rows),
        readout=readout,
    )
