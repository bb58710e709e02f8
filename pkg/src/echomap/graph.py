"""Follow-network containers: directed follow edges and the reciprocal undirected graph.

Node ids are opaque 64-bit integers. Internally every graph maps its ids to
dense indices ``0..n-1`` (``nodes[idx]`` recovers the original id) so that
adjacency can live in flat numpy arrays. Graphs are immutable once built and
safe to share across threads.
"""

from __future__ import annotations

import functools
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import EdgeFormatError

logger = logging.getLogger(__name__)


@dataclass
class EdgeLoadStats:
    """Bookkeeping from parsing an edge stream."""

    lines: int = 0
    records: int = 0
    comments: int = 0
    blank: int = 0
    self_loops_skipped: int = 0
    duplicates_collapsed: int = 0

    def as_dict(self) -> dict:
        return {
            "lines": self.lines,
            "records": self.records,
            "comments": self.comments,
            "blank": self.blank,
            "self_loops_skipped": self.self_loops_skipped,
            "duplicates_collapsed": self.duplicates_collapsed,
        }


def _csr_from_pairs(n: int, src: np.ndarray, dst: np.ndarray, weights: np.ndarray | None = None):
    """Build (indptr, neighbors[, weights]) grouping ``dst`` entries by ``src``."""
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    order = np.argsort(src, kind="stable")
    neighbors = dst[order]
    if weights is None:
        return indptr, neighbors
    return indptr, neighbors, weights[order]


class DirectedFollowGraph:
    """Deduplicated directed follow edges (follower -> followee) over opaque ids."""

    def __init__(self, nodes: np.ndarray, src: np.ndarray, dst: np.ndarray):
        self.nodes = nodes          # sorted original ids, int64
        self.src = src              # dense indices, lexsorted by (src, dst)
        self.dst = dst
        self._out = None
        self._in = None

    @classmethod
    def from_pairs(cls, follower_ids, followee_ids) -> "DirectedFollowGraph":
        """Build from raw id arrays; drops self-loops and collapses duplicates."""
        a = np.asarray(follower_ids, dtype=np.int64)
        b = np.asarray(followee_ids, dtype=np.int64)
        if a.shape != b.shape:
            raise ValueError("follower and followee arrays must have equal length")
        keep = a != b
        a, b = a[keep], b[keep]
        nodes, indexed = np.unique(np.concatenate([a, b]), return_inverse=True)
        m = a.size
        src, dst = indexed[:m], indexed[m:]
        n = nodes.size
        if n:
            keys = np.unique(src * n + dst)
            src, dst = keys // n, keys % n
        return cls(nodes, src.astype(np.int64), dst.astype(np.int64))

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_edges(self) -> int:
        return self.src.size

    def index_of(self, user_ids) -> np.ndarray:
        """Dense indices for original ids; -1 where the id is absent."""
        ids = np.asarray(user_ids, dtype=np.int64)
        pos = np.searchsorted(self.nodes, ids)
        pos = np.clip(pos, 0, max(self.n_nodes - 1, 0))
        ok = self.n_nodes > 0
        found = ok & (self.nodes[pos] == ids) if ids.size else np.zeros(0, dtype=bool)
        return np.where(found, pos, -1)

    def out_adjacency(self):
        if self._out is None:
            self._out = _csr_from_pairs(self.n_nodes, self.src, self.dst)
        return self._out

    def in_adjacency(self):
        if self._in is None:
            self._in = _csr_from_pairs(self.n_nodes, self.dst, self.src)
        return self._in

    def in_neighbors(self, idx: int) -> np.ndarray:
        """Dense indices of nodes with an edge into ``idx``."""
        indptr, nbrs = self.in_adjacency()
        return nbrs[indptr[idx]:indptr[idx + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n_nodes)


class UndirectedGraph:
    """Undirected graph over opaque ids; weighted edges and self-loops are internal-only.

    Proper edges are stored once with ``edge_a[i] < edge_b[i]`` (dense indices,
    lexsorted). ``self_loops[v]`` carries aggregated intra-community weight for
    super-node graphs; it is all-zero for graphs built from input data. A
    self-loop of weight w contributes 2w to its node's degree and w to the
    total weight m, so sum(degrees) == 2m always holds.
    """

    def __init__(self, nodes: np.ndarray, edge_a: np.ndarray, edge_b: np.ndarray,
                 weights: np.ndarray | None = None, self_loops: np.ndarray | None = None):
        self.nodes = nodes
        self.edge_a = edge_a
        self.edge_b = edge_b
        self.weights = np.ones(edge_a.size, dtype=np.float64) if weights is None else weights
        self.self_loops = np.zeros(nodes.size, dtype=np.float64) if self_loops is None else self_loops
        self._csr = None

    @classmethod
    def from_edges(cls, node_ids, a_ids, b_ids) -> "UndirectedGraph":
        """Simple unweighted graph from original-id endpoint arrays.

        ``node_ids`` fixes the node universe (isolates allowed); endpoints must
        be members of it. Duplicate and reversed pairs collapse to one edge.
        """
        nodes = np.unique(np.asarray(node_ids, dtype=np.int64))
        a = np.asarray(a_ids, dtype=np.int64)
        b = np.asarray(b_ids, dtype=np.int64)
        if np.any(a == b):
            raise ValueError("self-loops are not allowed in input graphs")
        ia = np.searchsorted(nodes, a)
        ib = np.searchsorted(nodes, b)
        if a.size and (np.any(ia >= nodes.size) or np.any(ib >= nodes.size)
                       or np.any(nodes[ia] != a) or np.any(nodes[ib] != b)):
            raise ValueError("edge endpoint not present in node universe")
        lo = np.minimum(ia, ib)
        hi = np.maximum(ia, ib)
        n = nodes.size
        keys = np.unique(lo * n + hi) if n else np.zeros(0, dtype=np.int64)
        return cls(nodes, (keys // n).astype(np.int64), (keys % n).astype(np.int64))

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_edges(self) -> int:
        return self.edge_a.size

    @functools.cached_property
    def total_weight(self) -> float:
        """m: sum of proper edge weights plus self-loop weights."""
        return float(self.weights.sum() + self.self_loops.sum())

    @functools.cached_property
    def degrees(self) -> np.ndarray:
        """Weighted degree per node (self-loop counts twice)."""
        d = np.bincount(self.edge_a, weights=self.weights, minlength=self.n_nodes)
        d += np.bincount(self.edge_b, weights=self.weights, minlength=self.n_nodes)
        return d + 2.0 * self.self_loops

    @functools.cached_property
    def degree_counts(self) -> np.ndarray:
        """Number of incident proper edges per node (for degree filtering)."""
        d = np.bincount(self.edge_a, minlength=self.n_nodes)
        return d + np.bincount(self.edge_b, minlength=self.n_nodes)

    def adjacency(self):
        """CSR over proper edges, both directions: (indptr, neighbors, weights)."""
        if self._csr is None:
            src = np.concatenate([self.edge_a, self.edge_b])
            dst = np.concatenate([self.edge_b, self.edge_a])
            w = np.concatenate([self.weights, self.weights])
            self._csr = _csr_from_pairs(self.n_nodes, src, dst, w)
        return self._csr

    def index_of(self, user_ids) -> np.ndarray:
        ids = np.asarray(user_ids, dtype=np.int64)
        pos = np.searchsorted(self.nodes, ids)
        pos = np.clip(pos, 0, max(self.n_nodes - 1, 0))
        found = (self.nodes[pos] == ids) if ids.size and self.n_nodes else np.zeros(ids.shape, dtype=bool)
        return np.where(found, pos, -1)

    def edge_set(self) -> set[tuple[int, int]]:
        """Proper edges as original-id pairs (a < b by id order)."""
        a = self.nodes[self.edge_a]
        b = self.nodes[self.edge_b]
        return {(int(x), int(y)) if x < y else (int(y), int(x)) for x, y in zip(a, b)}


def iter_edge_records(lines: Iterable[str], stats: EdgeLoadStats) -> Iterator[tuple[int, int]]:
    """Parse `follower<TAB>followee` lines; '#' comments and blanks ignored."""
    for line_no, raw in enumerate(lines, start=1):
        stats.lines = line_no
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            stats.blank += 1
            continue
        if line.lstrip().startswith("#"):
            stats.comments += 1
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise EdgeFormatError(line_no, line)
        try:
            follower, followee = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeFormatError(line_no, line) from None
        stats.records += 1
        yield follower, followee


def load_directed_edges(source: str | Path | IO[str] | Iterable[str]) -> tuple[DirectedFollowGraph, EdgeLoadStats]:
    """Load a directed follow graph from a TSV edge stream.

    Accepts a path or any iterable of lines. Malformed records raise
    :class:`EdgeFormatError` with the line number; self-loops are skipped and
    counted; duplicate records collapse to one edge.
    """
    stats = EdgeLoadStats()
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            pairs = list(iter_edge_records(fh, stats))
    else:
        pairs = list(iter_edge_records(source, stats))
    if pairs:
        arr = np.array(pairs, dtype=np.int64)
        a, b = arr[:, 0], arr[:, 1]
    else:
        a = b = np.zeros(0, dtype=np.int64)
    loops = int(np.count_nonzero(a == b))
    stats.self_loops_skipped = loops
    graph = DirectedFollowGraph.from_pairs(a, b)
    stats.duplicates_collapsed = stats.records - loops - graph.n_edges
    if loops:
        logger.warning("skipped %d self-loop record(s)", loops)
    logger.info("loaded %d directed edges over %d nodes (%d duplicate record(s) collapsed)",
                graph.n_edges, graph.n_nodes, stats.duplicates_collapsed)
    return graph, stats


def reciprocalize(g: DirectedFollowGraph) -> UndirectedGraph:
    """Undirected graph keeping one edge {a, b} wherever both a->b and b->a exist.

    The node set is preserved; users with no mutual follow become isolates.
    """
    n = g.n_nodes
    if n == 0:
        return UndirectedGraph(g.nodes.copy(), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    fwd = g.src * n + g.dst
    rev = g.dst * n + g.src
    mutual = np.intersect1d(fwd, rev, assume_unique=True)
    a = mutual // n
    b = mutual % n
    keep = a < b
    return UndirectedGraph(g.nodes.copy(), a[keep], b[keep])


def load_node_metadata(path: str | Path) -> dict[int, str]:
    """Optional JSON-lines sidecar mapping user_id -> screen_name."""
    labels: dict[int, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                uid = int(rec["user_id"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise EdgeFormatError(line_no, line.strip(), reason="expected JSON object with user_id") from None
            name = rec.get("screen_name")
            if name is not None:
                labels[uid] = str(name)
    return labels
