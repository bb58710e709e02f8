"""Ground-truth generators and recovery metrics.

Everything here is seed-deterministic and emits its ground truth alongside
the data, so community detection and topic fitting can be scored without any
real follow or tweet data. The dataset writer emits files in the exact
ingestion formats the loaders parse.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .community import Partition
from .graph import UndirectedGraph
from .text import BowCorpus, Vocabulary

logger = logging.getLogger(__name__)


@dataclass
class PlantedPartitionSpec:
    """Block-structured random graph: dense inside blocks, sparse between."""

    block_sizes: tuple[int, ...]
    p_in: float
    p_out: float
    seed: int = 0

    def validate(self) -> None:
        if not self.block_sizes or any(s < 1 for s in self.block_sizes):
            raise ValueError("block sizes must all be at least 1")
        if not (0.0 <= self.p_out <= self.p_in <= 1.0):
            raise ValueError("need 0 <= p_out <= p_in <= 1")


def planted_partition_graph(spec: PlantedPartitionSpec) -> tuple[UndirectedGraph, Partition]:
    """Sample each node pair independently; returns the graph and its true blocks."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    sizes = np.asarray(spec.block_sizes, dtype=np.int64)
    n = int(sizes.sum())
    blocks = np.repeat(np.arange(sizes.size, dtype=np.int64), sizes)
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(blocks[iu] == blocks[ju], spec.p_in, spec.p_out)
    mask = rng.random(iu.size) < p
    nodes = np.arange(n, dtype=np.int64)
    graph = UndirectedGraph(nodes, iu[mask].astype(np.int64), ju[mask].astype(np.int64))
    truth = Partition(nodes, blocks)
    return graph, truth


@dataclass
class SyntheticCorpusSpec:
    """Forward run of the topic-model generative process with stored ground truth."""

    n_topics: int
    vocab_size: int
    n_docs: int
    tokens_per_doc: int
    alpha: float = 0.1
    beta: float = 0.01
    seed: int = 0

    def validate(self) -> None:
        if min(self.n_topics, self.vocab_size, self.n_docs) < 1:
            raise ValueError("dimensions must all be at least 1")
        if self.tokens_per_doc < 1:
            raise ValueError("tokens_per_doc must be at least 1")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")


def synthetic_lda_corpus(spec: SyntheticCorpusSpec
                         ) -> tuple[BowCorpus, Vocabulary, np.ndarray, np.ndarray]:
    """Returns (corpus, vocabulary, theta_true, phi_true).

    phi_true rows ~ Dirichlet(beta), theta_true rows ~ Dirichlet(alpha); each
    token picks a topic from its document's theta and a word from that
    topic's phi.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    K, V, D, L = spec.n_topics, spec.vocab_size, spec.n_docs, spec.tokens_per_doc
    phi = rng.dirichlet(np.full(V, spec.beta), size=K)
    theta = rng.dirichlet(np.full(K, spec.alpha), size=D)
    width = len(str(V - 1))
    terms = [f"w{v:0{width}d}" for v in range(V)]
    doc_users = np.arange(D, dtype=np.int64)
    indptr = [0]
    all_idx: list[np.ndarray] = []
    all_cnt: list[np.ndarray] = []
    freq = np.zeros(V, dtype=np.int64)
    for d in range(D):
        topics = rng.choice(K, size=L, p=theta[d])
        words = np.empty(L, dtype=np.int64)
        for k in range(K):
            sel = topics == k
            if np.any(sel):
                words[sel] = rng.choice(V, size=int(sel.sum()), p=phi[k])
        idx, cnt = np.unique(words, return_counts=True)
        freq[idx] += cnt
        all_idx.append(idx.astype(np.int64))
        all_cnt.append(cnt.astype(np.int64))
        indptr.append(indptr[-1] + idx.size)
    corpus = BowCorpus(doc_users, np.array(indptr, dtype=np.int64),
                       np.concatenate(all_idx), np.concatenate(all_cnt), n_terms=V)
    return corpus, Vocabulary(terms, freq), theta, phi


def nmi(a: Partition, b: Partition) -> float:
    """Normalized mutual information with arithmetic-mean normalization.

    1 iff the partitions agree up to relabeling; two all-in-one partitions
    (zero entropy on both sides) score 1 by convention.
    """
    if a.nodes.size != b.nodes.size or not np.array_equal(a.nodes, b.nodes):
        raise ValueError("partitions must cover the same node set")
    n = a.nodes.size
    if n == 0:
        raise ValueError("empty partitions")
    ca, cb = a.n_communities, b.n_communities
    joint = np.zeros((ca, cb), dtype=np.int64)
    np.add.at(joint, (a.labels, b.labels), 1)
    pa = joint.sum(axis=1) / n
    pb = joint.sum(axis=0) / n
    pj = joint / n
    nz = pj > 0
    terms = pj[nz] * np.log(pj[nz] / np.outer(pa, pb)[nz])
    # summing in sorted order makes the value exactly symmetric in (a, b)
    mi = float(np.sort(terms).sum())
    ha = float(np.sort(-pa[pa > 0] * np.log(pa[pa > 0])).sum())
    hb = float(np.sort(-pb[pb > 0] * np.log(pb[pb > 0])).sum())
    denom = 0.5 * (ha + hb)
    if denom == 0.0:
        return 1.0
    return mi / denom


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def match_topics(phi_est: np.ndarray, phi_true: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Align estimated topics to generators by minimum-total-TV assignment.

    Returns (perm, distances): estimated row i matches true row perm[i] at
    total-variation distance distances[i].
    """
    phi_est = np.asarray(phi_est, dtype=np.float64)
    phi_true = np.asarray(phi_true, dtype=np.float64)
    if phi_est.shape != phi_true.shape:
        raise ValueError(f"shape mismatch: {phi_est.shape} vs {phi_true.shape}")
    cost = 0.5 * np.abs(phi_est[:, None, :] - phi_true[None, :, :]).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(phi_est.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm, cost[rows, perm[rows]]


@dataclass
class SyntheticDatasetSpec:
    """End-to-end fixture: follow network, seed leaders, tweets, noise blocks.

    Main blocks get mutual follows from a planted partition plus one-way
    noise edges that reciprocalization must discard. Each block has a leader
    account its members mostly follow, and tweets drawn from a block-aligned
    topic so the cross-tab shows one dominant topic per block. A dense "bot"
    block (exclusion-list fodder) and a tiny block (below the size filter)
    exercise community filtering.
    """

    block_sizes: tuple[int, ...] = (50, 50, 50, 50)
    p_in: float = 0.3
    p_out: float = 0.02
    oneway_edges: int = 400
    follow_own: float = 0.85
    follow_other: float = 0.05
    bot_block: int = 12
    tiny_block: int = 4
    words_per_topic: int = 25
    tweets_per_user: int = 6
    tokens_per_tweet: int = 30
    own_topic_weight: float = 0.8
    stopword_rate: float = 0.15
    first_user_id: int = 1000
    seed: int = 0

    @property
    def stopwords(self) -> list[str]:
        return ["rt", "via", "filler0", "filler1", "filler2"]


@dataclass
class SyntheticDataset:
    """Paths of the written fixture plus its ground truth."""

    edges: Path
    docs: Path
    seeds: Path
    stopwords: Path
    exclude: Path
    truth_partition: Path
    truth_phi: Path
    user_ids: np.ndarray
    blocks: np.ndarray
    seed_ids: list[int]
    files: dict[str, str] = field(default_factory=dict)


def write_synthetic_dataset(spec: SyntheticDatasetSpec, out_dir: str | Path) -> SyntheticDataset:
    """Write a complete ingestible dataset under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    n_main_blocks = len(spec.block_sizes)
    graph_spec = PlantedPartitionSpec(tuple(spec.block_sizes), spec.p_in, spec.p_out, seed=spec.seed)
    main_graph, main_truth = planted_partition_graph(graph_spec)
    n_main = main_graph.n_nodes
    # bot and tiny blocks are disconnected cliques so they come out as exact
    # communities: one dropped via the exclusion list, one via the size filter
    n = n_main + spec.bot_block + spec.tiny_block
    edge_a = [main_graph.edge_a]
    edge_b = [main_graph.edge_b]
    for start, size in ((n_main, spec.bot_block), (n_main + spec.bot_block, spec.tiny_block)):
        ii, jj = np.triu_indices(size, k=1)
        edge_a.append((start + ii).astype(np.int64))
        edge_b.append((start + jj).astype(np.int64))
    graph = UndirectedGraph(np.arange(n, dtype=np.int64),
                            np.concatenate(edge_a), np.concatenate(edge_b))
    blocks = np.concatenate([main_truth.labels,
                             np.full(spec.bot_block, n_main_blocks, dtype=np.int64),
                             np.full(spec.tiny_block, n_main_blocks + 1, dtype=np.int64)])
    user_ids = spec.first_user_id + np.arange(n, dtype=np.int64)
    seed_ids = [int(spec.first_user_id + n + i) for i in range(n_main_blocks)]

    edges_path = out / "edges.tsv"
    with open(edges_path, "w", encoding="utf-8") as fh:
        fh.write("# follower_id\tfollowee_id\n")
        for a, b in zip(graph.edge_a, graph.edge_b):
            ua, ub = int(user_ids[a]), int(user_ids[b])
            fh.write(f"{ua}\t{ub}\n")
            fh.write(f"{ub}\t{ua}\n")
        src = rng.integers(0, n, size=spec.oneway_edges)
        dst = rng.integers(0, n, size=spec.oneway_edges)
        for a, b in zip(src, dst):
            if a != b:
                fh.write(f"{int(user_ids[a])}\t{int(user_ids[b])}\n")
        for u in range(n):
            if blocks[u] < n_main_blocks:
                for bi, sid in enumerate(seed_ids):
                    p = spec.follow_own if bi == blocks[u] else spec.follow_other
                    if rng.random() < p:
                        fh.write(f"{int(user_ids[u])}\t{sid}\n")
        # parser-hardening: one duplicate record and one self-loop
        if graph.n_edges:
            a, b = int(user_ids[graph.edge_a[0]]), int(user_ids[graph.edge_b[0]])
            fh.write(f"{a}\t{b}\n")
        fh.write(f"{int(user_ids[0])}\t{int(user_ids[0])}\n")

    K = n_main_blocks
    V = K * spec.words_per_topic
    width = len(str(V - 1))
    topic_words = [[f"t{k}_{v:0{width}d}" for v in range(spec.words_per_topic)] for k in range(K)]
    phi_true = np.zeros((K, V), dtype=np.float64)
    for k in range(K):
        phi_true[k, k * spec.words_per_topic:(k + 1) * spec.words_per_topic] = 1.0 / spec.words_per_topic
    stop = spec.stopwords
    docs_path = out / "docs.jsonl"
    with open(docs_path, "w", encoding="utf-8") as fh:
        for u in range(n):
            bu = int(blocks[u])
            if bu < n_main_blocks:
                weights = np.full(K, (1.0 - spec.own_topic_weight) / max(K - 1, 1))
                weights[bu] = spec.own_topic_weight
            else:
                weights = np.full(K, 1.0 / K)
            for _ in range(spec.tweets_per_user):
                topics = rng.choice(K, size=spec.tokens_per_tweet, p=weights)
                tokens = []
                for k in topics:
                    if rng.random() < spec.stopword_rate:
                        tokens.append(stop[int(rng.integers(0, len(stop)))])
                    else:
                        tokens.append(topic_words[k][int(rng.integers(0, spec.words_per_topic))])
                fh.write(json.dumps({"user_id": int(user_ids[u]), "tokens": tokens},
                                    ensure_ascii=False) + "\n")

    seeds_path = out / "seeds.json"
    with open(seeds_path, "w", encoding="utf-8") as fh:
        json.dump([{"user_id": sid, "label": f"leader_{i}"} for i, sid in enumerate(seed_ids)],
                  fh, indent=2)
        fh.write("\n")

    stop_path = out / "stopwords.txt"
    stop_path.write_text("\n".join(stop) + "\n", encoding="utf-8")

    exclude_path = out / "exclude.txt"
    bot_members = user_ids[blocks == n_main_blocks]
    exclude_path.write_text("".join(f"{int(u)}\n" for u in bot_members), encoding="utf-8")

    truth_part_path = out / "truth_partition.json"
    Partition(user_ids, blocks).save(truth_part_path)
    truth_phi_path = out / "truth_phi.csv"
    with open(truth_phi_path, "w", encoding="utf-8") as fh:
        for row in phi_true:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")

    logger.info("synthetic dataset: %d users, %d mutual edges, %d seeds -> %s",
                n, graph.n_edges, len(seed_ids), out)
    return SyntheticDataset(
        edges=edges_path, docs=docs_path, seeds=seeds_path, stopwords=stop_path,
        exclude=exclude_path, truth_partition=truth_part_path, truth_phi=truth_phi_path,
        user_ids=user_ids, blocks=blocks, seed_ids=seed_ids,
        files={p.name: str(p) for p in (edges_path, docs_path, seeds_path, stop_path,
                                        exclude_path, truth_part_path, truth_phi_path)},
    )
