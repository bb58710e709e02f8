"""Community detection on the reciprocal network: modularity, Louvain, filtering.

Louvain runs the classic two-phase loop: seeded-shuffle local moves until no
move improves modularity by more than the configured gain threshold, then
aggregation of communities into super-nodes, repeated until the partition
stops changing. One invocation is strictly sequential so that a fixed seed
reproduces the exact partition.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .errors import ModularityUndefinedError
from .graph import UndirectedGraph

logger = logging.getLogger(__name__)


class Partition:
    """Assignment of every node to exactly one community.

    ``nodes`` are sorted original ids; ``labels`` are dense community ids
    ``0..n_communities-1`` aligned with ``nodes``.
    """

    def __init__(self, nodes: np.ndarray, labels: np.ndarray,
                 modularity: float | None = None, resolution: float | None = None):
        nodes = np.asarray(nodes, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if nodes.shape != labels.shape:
            raise ValueError("nodes and labels must align")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if labels.size:
            n_comm = int(labels.max()) + 1
            if labels.min() < 0 or np.unique(labels).size != n_comm:
                raise ValueError("labels must be dense integers from 0")
        self.nodes = nodes
        self.labels = labels
        self.modularity = modularity
        self.resolution = resolution

    @classmethod
    def from_labels(cls, nodes, raw_labels, **kw) -> "Partition":
        """Build from arbitrary (possibly gappy, unsorted-node) label arrays."""
        nodes = np.asarray(nodes, dtype=np.int64)
        raw = np.asarray(raw_labels)
        order = np.argsort(nodes, kind="stable")
        nodes = nodes[order]
        raw = raw[order]
        return cls(nodes, dense_renumber(raw)[0], **kw)

    @property
    def n_communities(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_communities)

    def members(self, community: int) -> np.ndarray:
        """Original ids belonging to a community, ascending."""
        return self.nodes[self.labels == community]

    def communities(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(np.bincount(self.labels, minlength=self.n_communities))
        sorted_nodes = self.nodes[order]
        out, start = [], 0
        for end in bounds:
            out.append(np.sort(sorted_nodes[start:end]))
            start = end
        return out

    def label_of(self, user_ids) -> np.ndarray:
        """Community label per id; -1 where the id is not in the partition."""
        ids = np.asarray(user_ids, dtype=np.int64)
        if self.nodes.size == 0:
            return np.full(ids.shape, -1, dtype=np.int64)
        pos = np.searchsorted(self.nodes, ids)
        pos = np.clip(pos, 0, self.nodes.size - 1)
        found = self.nodes[pos] == ids
        return np.where(found, self.labels[pos], -1)

    def to_dict(self) -> dict:
        comms = [{"id": i, "size": int(m.size), "members": [int(u) for u in m]}
                 for i, m in enumerate(self.communities())]
        return {
            "resolution": self.resolution,
            "modularity": self.modularity,
            "communities": comms,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Partition":
        nodes, labels = [], []
        for comm in data["communities"]:
            for u in comm["members"]:
                nodes.append(int(u))
                labels.append(int(comm["id"]))
        return cls.from_labels(np.array(nodes, dtype=np.int64), np.array(labels, dtype=np.int64),
                               modularity=data.get("modularity"), resolution=data.get("resolution"))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "Partition":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def dense_renumber(raw_labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel to dense 0..C-1 in order of first appearance."""
    raw = np.asarray(raw_labels, dtype=np.int64)
    if raw.size == 0:
        return raw.copy(), 0
    uniq, inv = np.unique(raw, return_inverse=True)
    first_pos = np.full(uniq.size, raw.size, dtype=np.int64)
    np.minimum.at(first_pos, inv, np.arange(raw.size))
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[np.argsort(first_pos, kind="stable")] = np.arange(uniq.size)
    return rank[inv], uniq.size


@dataclass
class LouvainConfig:
    """Knobs the optimization leaves open: resolution, gain cutoff, passes, seed."""

    resolution: float = 1.0
    min_gain: float = 1e-7
    max_passes: int = 100
    seed: int = 0

    def validate(self) -> None:
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.min_gain < 0:
            raise ValueError("min_gain must be non-negative")
        if self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")


@dataclass
class MoveRecord:
    """One accepted local move, in the index space of its level's graph."""

    node: int
    src: int
    dst: int
    gain: float


@dataclass
class LouvainLevel:
    """One optimization level: the graph moved on, the result, and its super-node graph."""

    partition: Partition                  # expanded to original nodes
    graph: UndirectedGraph                # graph the local moves ran on
    aggregated: UndirectedGraph           # community super-node graph
    moves: list[MoveRecord] = field(default_factory=list)


@dataclass
class Dendrogram:
    """Ordered Louvain levels; the last level's partition is the final result."""

    levels: list[LouvainLevel]

    @property
    def final(self) -> Partition:
        return self.levels[-1].partition

    def modularities(self) -> list[float | None]:
        return [lvl.partition.modularity for lvl in self.levels]


def modularity(g: UndirectedGraph, p: Partition, resolution: float = 1.0) -> float:
    """Newman-Girvan modularity: sum over communities of l_c/m - gamma*(d_c/2m)^2."""
    m = g.total_weight
    if m <= 0:
        raise ModularityUndefinedError("modularity undefined: graph has no edges")
    labels = _align_labels(g, p)
    n_comm = int(labels.max()) + 1 if labels.size else 0
    la = labels[g.edge_a]
    lb = labels[g.edge_b]
    intra = la == lb
    l_c = np.bincount(la[intra], weights=g.weights[intra], minlength=n_comm).astype(np.float64)
    l_c += np.bincount(labels, weights=g.self_loops, minlength=n_comm)
    d_c = np.bincount(labels, weights=g.degrees, minlength=n_comm)
    return float(np.sum(l_c / m) - resolution * np.sum((d_c / (2.0 * m)) ** 2))


def _align_labels(g: UndirectedGraph, p: Partition) -> np.ndarray:
    """Label per graph node; p must cover every node of g."""
    if p.nodes.size == g.n_nodes and np.array_equal(p.nodes, g.nodes):
        return p.labels
    labels = p.label_of(g.nodes)
    if np.any(labels < 0):
        missing = g.nodes[labels < 0][:5]
        raise ValueError(f"partition does not cover graph nodes, e.g. {missing.tolist()}")
    return labels


@njit(cache=True)
def _move_pass(indptr, nbrs, wts, kdeg, comm, tot, order, m, gamma, min_gain,
               nbw, touched, rec_node, rec_src, rec_dst, rec_gain, track):
    """One seeded-order sweep of local moves. Returns (moves, records_written).

    Candidate communities are the node's own plus its neighbors'. The accepted
    gain equals the exact modularity delta of the move:
    (k_in_dst - k_in_src)/m - gamma*k_i*(tot_dst - (tot_src - k_i))/(2 m^2).
    Ties on gain go to the lowest community id.
    """
    moves = 0
    nrec = 0
    two_m = 2.0 * m
    for oi in range(order.size):
        u = order[oi]
        cu = comm[u]
        ntouched = 0
        for e in range(indptr[u], indptr[u + 1]):
            v = nbrs[e]
            if v == u:
                continue
            c = comm[v]
            if nbw[c] == 0.0:
                touched[ntouched] = c
                ntouched += 1
            nbw[c] += wts[e]
        ku = kdeg[u]
        stay_score = nbw[cu] - gamma * ku * (tot[cu] - ku) / two_m
        best_c = cu
        best_score = stay_score
        for t in range(ntouched):
            c = touched[t]
            if c == cu:
                continue
            s = nbw[c] - gamma * ku * tot[c] / two_m
            if s > best_score or (s == best_score and c < best_c):
                best_score = s
                best_c = c
        for t in range(ntouched):
            nbw[touched[t]] = 0.0
        if best_c == cu:
            continue
        gain = (best_score - stay_score) / m
        if gain > min_gain:
            tot[cu] -= ku
            tot[best_c] += ku
            comm[u] = best_c
            if track:
                rec_node[nrec] = u
                rec_src[nrec] = cu
                rec_dst[nrec] = best_c
                rec_gain[nrec] = gain
                nrec += 1
            moves += 1
    return moves, nrec


def _one_level(g: UndirectedGraph, cfg: LouvainConfig, rng: np.random.Generator,
               track_moves: bool) -> tuple[np.ndarray, list[MoveRecord], bool]:
    """Local-move phase on one graph; returns (raw labels, move records, any_moved)."""
    n = g.n_nodes
    indptr, nbrs, wts = g.adjacency()
    nbrs = np.ascontiguousarray(nbrs, dtype=np.int64)
    wts = np.ascontiguousarray(wts, dtype=np.float64)
    kdeg = g.degrees
    m = g.total_weight
    comm = np.arange(n, dtype=np.int64)
    tot = kdeg.copy()
    nbw = np.zeros(n, dtype=np.float64)
    touched = np.zeros(n, dtype=np.int64)
    if track_moves:
        rec_node = np.zeros(n, dtype=np.int64)
        rec_src = np.zeros(n, dtype=np.int64)
        rec_dst = np.zeros(n, dtype=np.int64)
        rec_gain = np.zeros(n, dtype=np.float64)
    else:
        rec_node = rec_src = rec_dst = np.zeros(1, dtype=np.int64)
        rec_gain = np.zeros(1, dtype=np.float64)
    records: list[MoveRecord] = []
    any_moved = False
    for _ in range(cfg.max_passes):
        order = rng.permutation(n).astype(np.int64)
        moves, nrec = _move_pass(indptr, nbrs, wts, kdeg, comm, tot, order,
                                 m, cfg.resolution, cfg.min_gain,
                                 nbw, touched, rec_node, rec_src, rec_dst, rec_gain,
                                 track_moves)
        if track_moves:
            records.extend(MoveRecord(int(rec_node[i]), int(rec_src[i]), int(rec_dst[i]),
                                      float(rec_gain[i])) for i in range(nrec))
        if moves == 0:
            break
        any_moved = True
    return comm, records, any_moved


def aggregate_graph(g: UndirectedGraph, p: Partition) -> UndirectedGraph:
    """Collapse communities to weighted super-nodes; total weight is conserved.

    Inter-community edge weight is the total weight of crossing edges; each
    super-node's self-loop carries the intra-community weight (including the
    members' own self-loops).
    """
    labels = _align_labels(g, p)
    return _aggregate(g, labels)


def _aggregate(g: UndirectedGraph, labels: np.ndarray) -> UndirectedGraph:
    n_comm = int(labels.max()) + 1 if labels.size else 0
    la = labels[g.edge_a]
    lb = labels[g.edge_b]
    intra = la == lb
    self_w = np.bincount(la[intra], weights=g.weights[intra], minlength=n_comm).astype(np.float64)
    self_w += np.bincount(labels, weights=g.self_loops, minlength=n_comm)
    ca, cb = la[~intra], lb[~intra]
    w = g.weights[~intra]
    lo = np.minimum(ca, cb).astype(np.int64)
    hi = np.maximum(ca, cb).astype(np.int64)
    keys = lo * n_comm + hi
    uniq, inv = np.unique(keys, return_inverse=True)
    agg_w = np.bincount(inv, weights=w, minlength=uniq.size)
    return UndirectedGraph(np.arange(n_comm, dtype=np.int64),
                           (uniq // n_comm).astype(np.int64),
                           (uniq % n_comm).astype(np.int64),
                           weights=agg_w, self_loops=self_w)


def louvain(g: UndirectedGraph, cfg: LouvainConfig | None = None, *,
            track_moves: bool = False) -> Dendrogram:
    """Multilevel modularity optimization; deterministic for a fixed seed.

    Isolated nodes never gain from joining a community and end as singletons.
    ``track_moves`` records every accepted move per level for gain auditing.
    """
    if g.n_nodes == 0:
        raise ValueError("louvain requires at least one node")
    cfg = cfg or LouvainConfig()
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    has_edges = g.total_weight > 0
    levels: list[LouvainLevel] = []
    mapping = np.arange(g.n_nodes, dtype=np.int64)
    level_graph = g
    while True:
        if has_edges:
            raw, records, moved = _one_level(level_graph, cfg, rng, track_moves)
        else:
            raw, records, moved = np.arange(level_graph.n_nodes, dtype=np.int64), [], False
        dense, n_comm = dense_renumber(raw)
        if not moved and levels:
            break
        mapping = dense[mapping]
        part = Partition(g.nodes, mapping.copy(), resolution=cfg.resolution)
        part.modularity = modularity(g, part, cfg.resolution) if has_edges else None
        agg = _aggregate(level_graph, dense)
        levels.append(LouvainLevel(part, level_graph, agg, records))
        if not moved or n_comm == level_graph.n_nodes:
            break
        level_graph = agg
    logger.info("louvain: %d level(s), %d communities, modularity %s",
                len(levels), levels[-1].partition.n_communities, levels[-1].partition.modularity)
    return Dendrogram(levels)


@dataclass
class FilterReport:
    """What community filtering removed and why."""

    min_size: int
    dropped_small: list[tuple[int, int]] = field(default_factory=list)      # (old id, size)
    dropped_excluded: list[tuple[int, int]] = field(default_factory=list)   # (old id, size)
    dropped_members: list[int] = field(default_factory=list)
    kept: dict[int, int] = field(default_factory=dict)                       # old id -> new id

    def as_dict(self) -> dict:
        return {
            "min_size": self.min_size,
            "dropped_small": [{"community": c, "size": s} for c, s in self.dropped_small],
            "dropped_excluded": [{"community": c, "size": s} for c, s in self.dropped_excluded],
            "dropped_members": self.dropped_members,
            "kept": {str(k): v for k, v in self.kept.items()},
        }


def filter_communities(p: Partition, min_size: int = 10,
                       excluded_nodes: set[int] | frozenset[int] = frozenset()) -> tuple[Partition, FilterReport]:
    """Drop communities below ``min_size`` and those whose members are all excluded.

    Survivors are re-indexed densely in their original id order; members of
    dropped communities are listed in the report.
    """
    if min_size < 1:
        raise ValueError("min_size must be at least 1")
    report = FilterReport(min_size=min_size)
    sizes = p.sizes()
    excluded = np.isin(p.nodes, np.fromiter(excluded_nodes, dtype=np.int64, count=len(excluded_nodes))) \
        if excluded_nodes else np.zeros(p.nodes.size, dtype=bool)
    n_excl = np.bincount(p.labels[excluded], minlength=p.n_communities) if p.labels.size else np.zeros(0, dtype=np.int64)
    keep_mask = np.ones(p.n_communities, dtype=bool)
    for c in range(p.n_communities):
        size = int(sizes[c])
        if size < min_size:
            keep_mask[c] = False
            report.dropped_small.append((c, size))
        elif size > 0 and n_excl[c] == size:
            keep_mask[c] = False
            report.dropped_excluded.append((c, size))
    node_keep = keep_mask[p.labels] if p.labels.size else np.zeros(0, dtype=bool)
    report.dropped_members = [int(u) for u in p.nodes[~node_keep]]
    new_ids = np.cumsum(keep_mask) - 1
    report.kept = {int(c): int(new_ids[c]) for c in range(p.n_communities) if keep_mask[c]}
    filtered = Partition(p.nodes[node_keep], new_ids[p.labels[node_keep]],
                         resolution=p.resolution)
    logger.info("community filter kept %d of %d communities (%d nodes dropped)",
                filtered.n_communities, p.n_communities, len(report.dropped_members))
    return filtered, report


def load_exclusions(path: str | Path) -> set[int]:
    """Exclusion list: one user id per line; blanks and '#' comments allowed."""
    out: set[int] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                out.add(int(text))
            except ValueError:
                raise ValueError(f"bad exclusion id at line {line_no}: {text!r}") from None
    return out
