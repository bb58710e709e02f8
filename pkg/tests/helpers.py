"""Shared fixtures and independent oracles for the test suite."""

import itertools
import xml.etree.ElementTree as ET

import numpy as np

from echomap.gexf import GEXF_NS
from echomap.graph import UndirectedGraph

NS = {"g": GEXF_NS}


def two_clique_bridge() -> UndirectedGraph:
    """Two 5-cliques joined by a single bridge edge."""
    edges = list(itertools.combinations(range(5), 2))
    edges += [(a + 5, b + 5) for a, b in itertools.combinations(range(5), 2)]
    edges += [(0, 5)]
    a = np.array([e[0] for e in edges])
    b = np.array([e[1] for e in edges])
    return UndirectedGraph.from_edges(np.arange(10), a, b)


def random_graph(rng, n, p) -> UndirectedGraph:
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    return UndirectedGraph.from_edges(np.arange(n), iu[mask], ju[mask])


def set_partitions(n):
    """All partitions of range(n) as restricted-growth label arrays."""
    labels = np.zeros(n, dtype=np.int64)
    maxes = np.zeros(n, dtype=np.int64)
    yield labels.copy()
    while True:
        i = n - 1
        while i > 0 and labels[i] == maxes[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        labels[i] += 1
        maxes[i] = max(maxes[i - 1], labels[i])
        for j in range(i + 1, n):
            labels[j] = 0
            maxes[j] = maxes[i]
        yield labels.copy()


class DirectQ:
    """Independent modularity evaluator: sum_c [l_c/m - gamma*(d_c/2m)^2].

    Works straight off edge index arrays so oracle sweeps stay cheap.
    """

    def __init__(self, g: UndirectedGraph, gamma: float = 1.0):
        self.a = g.edge_a
        self.b = g.edge_b
        self.w = g.weights
        self.self_loops = g.self_loops
        self.deg = g.degrees
        self.m = g.total_weight
        self.gamma = gamma
        self.n = g.n_nodes

    def __call__(self, labels: np.ndarray) -> float:
        n_comm = int(labels.max()) + 1
        same = labels[self.a] == labels[self.b]
        l_c = np.bincount(labels[self.a[same]], weights=self.w[same],
                          minlength=n_comm).astype(np.float64)
        l_c += np.bincount(labels, weights=self.self_loops, minlength=n_comm)
        d_c = np.bincount(labels, weights=self.deg, minlength=n_comm)
        return float(np.sum(l_c / self.m) - self.gamma * np.sum((d_c / (2 * self.m)) ** 2))


def replay_level_moves(level, gamma: float, tol: float = 1e-10) -> int:
    """Replay a level's accepted moves, checking each recorded gain against a
    full recompute by the independent evaluator. Returns the move count."""
    q_of = DirectQ(level.graph, gamma)
    labels = np.arange(level.graph.n_nodes, dtype=np.int64)
    q = q_of(labels)
    for mv in level.moves:
        assert labels[mv.node] == mv.src
        labels[mv.node] = mv.dst
        q_after = q_of(labels)
        assert abs((q_after - q) - mv.gain) <= tol, \
            f"gain {mv.gain} vs recompute {q_after - q}"
        q = q_after
    return len(level.moves)


def validate_gexf_structure(document: str) -> dict:
    """Re-parse oracle for GEXF 1.2 structural rules; returns element counts."""
    root = ET.fromstring(document)
    assert root.tag == f"{{{GEXF_NS}}}gexf"
    assert root.attrib["version"] == "1.2"
    graph = root.find("g:graph", NS)
    assert graph is not None
    assert graph.attrib["defaultedgetype"] == "undirected"
    attr_ids = set()
    for attrs in graph.findall("g:attributes", NS):
        assert attrs.attrib["class"] in ("node", "edge")
        for attr in attrs.findall("g:attribute", NS):
            assert attr.attrib["id"] not in attr_ids
            attr_ids.add(attr.attrib["id"])
            assert attr.attrib["type"] in ("integer", "long", "double", "float",
                                           "boolean", "string", "liststring")
    nodes_el = graph.find("g:nodes", NS)
    node_ids = set()
    attvalue_count = 0
    for node in nodes_el.findall("g:node", NS):
        nid = node.attrib["id"]
        assert nid not in node_ids
        node_ids.add(nid)
        for values in node.findall("g:attvalues", NS):
            for av in values.findall("g:attvalue", NS):
                assert av.attrib["for"] in attr_ids
                attvalue_count += 1
    assert int(nodes_el.attrib["count"]) == len(node_ids)
    edges_el = graph.find("g:edges", NS)
    edge_ids = set()
    n_edges = 0
    for edge in edges_el.findall("g:edge", NS):
        assert edge.attrib["source"] in node_ids
        assert edge.attrib["target"] in node_ids
        eid = edge.attrib.get("id")
        if eid is not None:
            assert eid not in edge_ids
            edge_ids.add(eid)
        n_edges += 1
    assert int(edges_el.attrib["count"]) == n_edges
    return {"nodes": len(node_ids), "edges": n_edges,
            "attributes": len(attr_ids), "attvalues": attvalue_count}
