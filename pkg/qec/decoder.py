"""
Concatenated matching decoder for the triangular color code.

Detectors live at (plaquette, round). For each omitted color c the decoder
(1) matches the defects of the two retained colors on their restricted
space-time lattice and (2) resolves which elementary faults realize the
matched edges by a second matching on the c-colored detectors. The lightest
of the three candidate fault sets is lifted to a data-qubit correction.

Unit weights are used for every elementary fault (one data-qubit flip at one
round, or one flipped ancilla measurement).
"""

import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache

import networkx as nx
import numpy as np

from exceptions import DecodingError, InputError
from gate_ops import PauliString
from qec.color_code import COLORS
from qec.matching import match_defects

logger = logging.getLogger(__name__)

BOUNDARY = (-1, 0)
X_REFERENCES = ("ideal", "first-round")

# fault kinds sort data flips ahead of measurement flips
DATA_FAULT = 0
MEASUREMENT_FAULT = 1


@dataclass(frozen=True)
class DetectorBlock:
    """
    Detector bits of one stabilizer type.

    pauli is the stabilizer type ("Z" detects X errors); rounds lists the
    round numbers present, bits has shape (len(rounds), plaquettes).
    """

    pauli: str
    cycles: int
    rounds: tuple
    bits: tuple

    def defects(self):
        return {
            (f, t)
            for row, t in zip(self.bits, self.rounds)
            for f, bit in enumerate(row)
            if bit
        }


@dataclass(frozen=True)
class DetectorHistory:
    z_block: DetectorBlock
    x_block: DetectorBlock

    @property
    def cycles(self):
        return self.z_block.cycles

    @property
    def detector_count(self):
        return sum(len(row) for row in self.z_block.bits) + sum(len(row) for row in self.x_block.bits)

    def is_trivial(self):
        return not (self.z_block.defects() or self.x_block.defects())

    def to_text(self):
        lines = [f"# detectors cycles={self.cycles}"]
        for block in (self.z_block, self.x_block):
            for t, row in zip(block.rounds, block.bits):
                lines.append(f"{block.pauli} {t} " + "".join(str(b) for b in row))
        return "\n".join(lines) + "\n"


def build_detectors(record, layout, x_reference="first-round"):
    """
    Turn per-cycle syndromes and the final readout into detector bits.

    Z-type: rounds 1..C compare each cycle with the previous one (round 0 is all
    +1), and round C+1 compares the readout parity of each plaquette with cycle C.
    X-type: rounds compare consecutive cycles; with x_reference="ideal" round 1
    compares against +1, with "first-round" the first cycle is the reference and
    detectors start at round 2.
    """
    if x_reference not in X_REFERENCES:
        raise InputError(f"unknown X reference {x_reference!r}")
    z = np.asarray(record.z_syndromes, dtype=np.uint8)
    x = np.asarray(record.x_syndromes, dtype=np.uint8)
    if z.ndim != 2 or z.shape[1] != layout.num_plaquettes or x.shape != z.shape:
        raise InputError(f"syndrome arrays of shape {z.shape}/{x.shape} do not fit the layout")
    if set(record.readout) != set(layout.data_qubits):
        raise InputError("readout does not cover the data qubits")
    cycles = z.shape[0]
    if cycles < 1:
        raise InputError("need at least one cycle of records")

    final = np.array(
        [sum(record.readout[q] for q in p.support) % 2 for p in layout.plaquettes], dtype=np.uint8
    )
    z_rounds = np.vstack([z, final[None, :]])
    z_bits = z_rounds ^ np.vstack([np.zeros((1, z.shape[1]), dtype=np.uint8), z_rounds[:-1]])

    if x_reference == "ideal":
        x_bits = x ^ np.vstack([np.zeros((1, x.shape[1]), dtype=np.uint8), x[:-1]])
        x_round_ids = tuple(range(1, cycles + 1))
    else:
        x_bits = x[1:] ^ x[:-1]
        x_round_ids = tuple(range(2, cycles + 1))

    return DetectorHistory(
        z_block=DetectorBlock("Z", cycles, tuple(range(1, cycles + 2)), _as_tuples(z_bits)),
        x_block=DetectorBlock("X", cycles, x_round_ids, _as_tuples(x_bits)),
    )


def _as_tuples(arr):
    return tuple(tuple(int(b) for b in row) for row in arr)


def code_capacity_history(layout, error):
    """
    Detector history of a single error layer before one noiseless cycle.

    Both blocks close with a perfect round, so a lone measurement flip costs two
    detectors and never undercuts a data-qubit explanation.
    """
    z_bits = tuple(
        int(len(set(p.support) & error.x_support) % 2) for p in layout.plaquettes
    )
    x_bits = tuple(
        int(len(set(p.support) & error.z_support) % 2) for p in layout.plaquettes
    )
    zeros = tuple(0 for _ in layout.plaquettes)
    return DetectorHistory(
        z_block=DetectorBlock("Z", 1, (1, 2), (z_bits, zeros)),
        x_block=DetectorBlock("X", 1, (1, 2), (x_bits, zeros)),
    )


# ---------- fault model ----------


class _FaultGraph:
    """Elementary faults of one detector block and their restricted lattices."""

    def __init__(self, layout, pauli, cycles, rounds):
        self.layout = layout
        self.pauli = pauli
        present = set(rounds)
        last_round = cycles + 1 if pauli == "Z" else cycles
        self.color_of = {p.index: p.color for p in layout.plaquettes}

        faults = {}
        for t in range(1, last_round + 1):
            for q in layout.data_qubits:
                flips = frozenset((f, t) for f in layout.faces_of[q] if t in present)
                if flips:
                    faults[(DATA_FAULT, q, t)] = flips
        for t in range(1, cycles + 1):
            for p in layout.plaquettes:
                flips = frozenset((p.index, s) for s in (t, t + 1) if s in present)
                if flips:
                    faults[(MEASUREMENT_FAULT, p.index, t)] = flips
        self.faults = faults
        self.detectors = sorted((p.index, t) for p in layout.plaquettes for t in rounds)

    def split(self, flips, color):
        """(retained, omitted) parts of a detector set for omitted `color`."""
        retained = frozenset(d for d in flips if self.color_of[d[0]] != color)
        return retained, flips - retained

    @lru_cache(maxsize=None)
    def restricted(self, color):
        """
        Restricted lattice for omitted `color`.

        Returns the networkx graph over retained detectors plus BOUNDARY, the
        faults parallel to each of its edges, and the static moves of the
        second matching stage.
        """
        graph = nx.Graph()
        graph.add_node(BOUNDARY)
        graph.add_nodes_from(d for d in self.detectors if self.color_of[d[0]] != color)
        parallel = {}
        zero_retained = []
        for fault in sorted(self.faults):
            retained, _ = self.split(self.faults[fault], color)
            if not retained:
                zero_retained.append(fault)
                continue
            nodes = sorted(retained)
            key = (nodes[0], nodes[1]) if len(nodes) == 2 else (BOUNDARY, nodes[0])
            key = tuple(sorted(key))
            parallel.setdefault(key, []).append(fault)
        for u, v in parallel:
            graph.add_edge(u, v, weight=1)

        moves = []
        for fault in zero_retained:
            moves.append((1, (fault,)))
        for key, group in sorted(parallel.items()):
            for a, b in itertools.combinations(group, 2):
                moves.append((2, (a, b)))
        return graph, parallel, moves

    def omitted_effect(self, faults, color):
        effect = set()
        for fault in faults:
            effect ^= set(self.split(self.faults[fault], color)[1])
        return frozenset(effect)


@lru_cache(maxsize=64)
def _fault_graph(layout, pauli, cycles, rounds):
    return _FaultGraph(layout, pauli, cycles, rounds)


def _graph_for(block, layout):
    return _fault_graph(layout, block.pauli, block.cycles, tuple(block.rounds))


# ---------- decoding ----------


def restricted_decode(history, layout, color, pauli="Z"):
    """
    Step one: match the retained-color defects of one detector block.

    Returns the matched edge set (XOR of all shortest-path edges) as sorted
    node pairs of the restricted lattice.
    """
    if color not in COLORS:
        raise InputError(f"unknown color {color!r}")
    block = history.z_block if pauli == "Z" else history.x_block
    faults = _graph_for(block, layout)
    graph, _, _ = faults.restricted(color)
    retained, _ = faults.split(frozenset(block.defects()), color)
    paths, _ = match_defects(graph, retained, BOUNDARY)
    edges = set()
    for path in paths:
        for u, v in zip(path, path[1:]):
            edges ^= {tuple(sorted((u, v)))}
    return sorted(edges)


def _lift(history, layout, color, pauli):
    """Steps one and two for one block; returns the sorted fault set."""
    block = history.z_block if pauli == "Z" else history.x_block
    faults = _graph_for(block, layout)
    _, parallel, static_moves = faults.restricted(color)
    step_one = restricted_decode(history, layout, color, pauli)

    chosen = set()
    moves = list(static_moves)
    for edge in step_one:
        group = parallel[edge]
        chosen ^= {group[0]}
        for alternative in group[1:]:
            moves.append((0, (group[0], alternative)))

    _, omitted_defects = faults.split(frozenset(block.defects()), color)
    residual = set(omitted_defects) ^ set(faults.omitted_effect(chosen, color))
    if not residual:
        return sorted(chosen)

    graph = nx.Graph()
    graph.add_node(BOUNDARY)
    graph.add_nodes_from(d for d in faults.detectors if faults.color_of[d[0]] == color)
    for cost, move in moves:
        effect = sorted(faults.omitted_effect(move, color))
        if not effect or len(effect) > 2:
            continue
        u, v = (effect[0], effect[1]) if len(effect) == 2 else (BOUNDARY, effect[0])
        if graph.has_edge(u, v) and graph[u][v]["weight"] <= cost:
            continue
        graph.add_edge(u, v, weight=cost, move=move)

    paths, _ = match_defects(graph, residual, BOUNDARY)
    for path in paths:
        for u, v in zip(path, path[1:]):
            chosen ^= set(graph[u][v]["move"])
    return sorted(chosen)


@dataclass(frozen=True)
class Correction:
    pauli: PauliString
    color: str
    weight: int


def concatenated_decode(history, layout):
    """
    Decode both stabilizer types with each omitted color and keep the lightest.

    Ties go to the first color in red, green, blue order, then to the
    lexicographically smaller correction support.
    """
    candidates = []
    for rank, color in enumerate(COLORS):
        try:
            x_faults = _lift(history, layout, color, "Z")
            z_faults = _lift(history, layout, color, "X")
        except DecodingError as exc:
            logger.debug("decoding with %s omitted failed: %s", color, exc)
            continue
        letters = {}
        for fault_set, letter in ((x_faults, "X"), (z_faults, "Z")):
            for kind, q, _ in fault_set:
                if kind == DATA_FAULT:
                    letters.setdefault(q, set()).symmetric_difference_update({letter})
        mapping = {}
        for q, parts in letters.items():
            if parts == {"X", "Z"}:
                mapping[q] = "Y"
            elif parts:
                mapping[q] = parts.pop()
        correction = PauliString.from_dict(mapping)
        weight = len(x_faults) + len(z_faults)
        candidates.append((weight, rank, correction.support, Correction(correction, color, weight)))
    if not candidates:
        raise DecodingError("decoding failed for every omitted color")
    return min(candidates, key=lambda c: c[:3])[3]


def adjudicate(correction, readout, layout):
    """True when the corrected readout has odd logical-Z parity."""
    flips = correction.x_support
    parity = sum(readout[q] ^ (1 if q in flips else 0) for q in layout.logical_z_support)
    return parity % 2 == 1


def decode_and_adjudicate(record, layout, x_reference="first-round"):
    """Full pipeline for one trial; a decoding failure counts as a logical failure."""
    history = build_detectors(record, layout, x_reference)
    try:
        correction = concatenated_decode(history, layout)
    except DecodingError:
        logger.warning("every color failed to decode; counting a logical failure")
        return True, None
    return adjudicate(correction.pauli, record.readout, layout), correction
