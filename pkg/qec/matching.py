"""Minimum-weight perfect matching on weighted defect graphs (networkx blossom)."""

import logging
import math
import numbers
from fractions import Fraction

import networkx as nx

from exceptions import DecodingError

logger = logging.getLogger(__name__)


def mwpm(graph, boundary=None):
    """
    Minimum-weight perfect matching of every non-boundary node of `graph`.

    The boundary node, when given, may absorb any number of nodes: it is
    replaced by one copy per node, copies joined to each other at zero cost.
    Returns the matched pairs (u, v) sorted; v is `boundary` for boundary matches.

    Among minimum-weight matchings the lexicographically smallest is returned:
    nodes are visited in sorted order and each takes the earliest partner it
    can, the boundary ranking before every node. Weights are made exact
    integers and perturbed by a tie-break term too small to change the weight.
    """
    nodes = sorted(n for n in graph.nodes if n != boundary)
    if not nodes:
        return []
    index = {n: i for i, n in enumerate(nodes)}
    k = len(nodes)

    edges = []
    for u, v, w in graph.edges(data="weight", default=1):
        if boundary is not None and boundary in (u, v):
            node = v if u == boundary else u
            edges.append((index[node], k + index[node], w))
        else:
            i, j = sorted((index[u], index[v]))
            edges.append((i, j, w))
    if boundary is not None and boundary in graph:
        edges += [(k + i, k + j, 0) for i in range(k) for j in range(i + 1, k)]

    if not edges:
        raise DecodingError(f"no edges to match {k} nodes")
    edges = _tie_broken(edges, k)
    ceiling = max(w for _, _, w in edges) + 1
    aux = nx.Graph()
    aux.add_nodes_from(range(2 * k if boundary is not None else k))
    for i, j, w in sorted(edges):
        if aux.has_edge(i, j) and aux[i][j]["weight"] >= ceiling - w:
            continue
        aux.add_edge(i, j, weight=ceiling - w)

    matching = nx.max_weight_matching(aux, maxcardinality=True)
    pairs = []
    covered = set()
    for i, j in matching:
        i, j = sorted((i, j))
        if i >= k:
            continue
        covered.add(i)
        if j >= k:
            pairs.append((nodes[i], boundary))
        else:
            covered.add(j)
            pairs.append((nodes[i], nodes[j]))
    if len(covered) != k:
        raise DecodingError(f"no perfect matching for {k} nodes")
    return sorted(pairs)


def _exact(weight):
    try:
        if isinstance(weight, numbers.Integral):
            return Fraction(int(weight))
        return Fraction(float(weight))
    except (OverflowError, ValueError) as exc:
        raise DecodingError(f"edge weight {weight!r} is not finite") from exc


def _tie_broken(edges, k):
    """
    Integer weights whose minimum perfect matchings are the lexicographically
    smallest minimum-weight matchings of `edges`.

    Node i matched to node j adds digit j + 1 at place i of a base-(k + 2)
    number; a boundary match adds 0. The digits stay below one unit of the
    scaled weight.
    """
    exact = [(i, j, _exact(w)) for i, j, w in edges]
    scale = math.lcm(*(w.denominator for _, _, w in exact))
    width = k + 2
    unit = width ** k

    def digits(i, j):
        if j >= k:
            return 0
        return (j + 1) * width ** (k - 1 - i) + (i + 1) * width ** (k - 1 - j)

    return [(i, j, int(w * scale) * unit + digits(i, j)) for i, j, w in exact]


def match_defects(graph, defects, boundary):
    """
    Pair defects through shortest paths of `graph`.

    Returns a list of node paths, one per matched pair (ending at the boundary
    for boundary matches), and the total matched weight.
    """
    defects = sorted(defects)
    if not defects:
        return [], 0
    reach = {}
    for node in defects:
        if node not in graph:
            raise DecodingError(f"defect {node} is not in the matching graph")
        reach[node] = nx.single_source_dijkstra(graph, node, weight="weight")

    complete = nx.Graph()
    complete.add_nodes_from(defects)
    has_boundary = boundary in graph
    if has_boundary:
        complete.add_node(boundary)
    for i, u in enumerate(defects):
        dist, _ = reach[u]
        for v in defects[i + 1:]:
            if v in dist:
                complete.add_edge(u, v, weight=dist[v])
        if has_boundary and boundary in dist:
            complete.add_edge(u, boundary, weight=dist[boundary])

    pairs = mwpm(complete, boundary=boundary if has_boundary else None)
    paths, total = [], 0
    for u, v in pairs:
        dist, routes = reach[u]
        paths.append(routes[v])
        total += dist[v]
    return paths, total
