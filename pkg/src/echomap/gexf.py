"""GEXF 1.2 export of the partitioned reciprocal network for external viewers."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .community import Partition, _align_labels
from .graph import UndirectedGraph

GEXF_NS = "http://www.gexf.net/1.2draft"


def export_gexf(g: UndirectedGraph, p: Partition, min_degree: int = 0,
                labels: dict[int, str] | None = None) -> str:
    """Serialize the graph with a per-node ``community`` attribute.

    Nodes whose edge count is below ``min_degree`` are omitted together with
    their incident edges. Optional ``labels`` map user ids to display names;
    the id string is used otherwise.
    """
    node_labels = labels or {}
    comm = _align_labels(g, p)
    keep = g.degree_counts >= min_degree
    root = ET.Element("gexf", {"xmlns": GEXF_NS, "version": "1.2"})
    meta = ET.SubElement(root, "meta")
    ET.SubElement(meta, "creator").text = "echomap"
    graph_el = ET.SubElement(root, "graph", {"defaultedgetype": "undirected", "mode": "static"})
    attrs = ET.SubElement(graph_el, "attributes", {"class": "node"})
    ET.SubElement(attrs, "attribute", {"id": "0", "title": "community", "type": "long"})
    kept_idx = np.flatnonzero(keep)
    nodes_el = ET.SubElement(graph_el, "nodes", {"count": str(kept_idx.size)})
    for i in kept_idx:
        uid = int(g.nodes[i])
        node = ET.SubElement(nodes_el, "node",
                             {"id": str(uid), "label": node_labels.get(uid, str(uid))})
        values = ET.SubElement(node, "attvalues")
        ET.SubElement(values, "attvalue", {"for": "0", "value": str(int(comm[i]))})
    edge_keep = keep[g.edge_a] & keep[g.edge_b]
    ea = g.edge_a[edge_keep]
    eb = g.edge_b[edge_keep]
    edges_el = ET.SubElement(graph_el, "edges", {"count": str(ea.size)})
    for e, (a, b) in enumerate(zip(ea, eb)):
        ET.SubElement(edges_el, "edge", {"id": str(e), "source": str(int(g.nodes[a])),
                                         "target": str(int(g.nodes[b]))})
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def write_gexf(g: UndirectedGraph, p: Partition, path: str | Path,
               min_degree: int = 0, labels: dict[int, str] | None = None) -> None:
    Path(path).write_text(export_gexf(g, p, min_degree=min_degree, labels=labels),
                          encoding="utf-8")
