"""Batch pipeline: stage functions over persisted plain-text intermediates.

Each stage reads its inputs from disk and writes its artifacts into the run
directory, so expensive stages can be re-run standalone. ``run_pipeline``
chains the stages, times them, and writes a manifest with per-stage counts
and a hash of the resolved configuration. With a fixed global seed a run is
reproducible artifact-for-artifact; only the manifest's timings vary.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import crosstab as ct
from . import gexf as gexf_mod
from . import lda as lda_mod
from . import profiles as prof
from . import text as text_mod
from .community import (LouvainConfig, Partition, filter_communities, load_exclusions, louvain)
from .errors import PipelineStageError
from .graph import UndirectedGraph, load_directed_edges, load_node_metadata, reciprocalize

logger = logging.getLogger(__name__)

ARTIFACTS = {
    "ingest": ["graph_nodes.txt", "reciprocal_edges.tsv", "ingest_stats.json"],
    "detect": ["partition_full.json", "partition.json", "exclusion_report.json"],
    "profile": ["profile.csv"],
    "corpus": ["vocabulary.txt", "corpus.csv", "doc_users.csv", "corpus_stats.json"],
    "lda": ["phi.csv", "theta.csv", "lda.json"],
    "crosstab": ["community_topics.csv", "community_topics_raw.csv"],
    "report": ["echo_report.json"],
    "export-gexf": ["graph.gexf"],
}

STAGE_ORDER = ["ingest", "detect", "profile", "corpus", "lda", "crosstab", "report", "export-gexf"]


@dataclass
class PipelineConfig:
    edges: str | None = None
    docs: str | None = None
    seeds: str | None = None
    stopwords: str | None = None
    exclude: str | None = None
    metadata: str | None = None
    out: str = "run"
    seed: int = 0
    resolution: float = 1.0
    min_gain: float = 1e-7
    max_passes: int = 100
    min_community_size: int = 10
    topics: int = 50
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    stride: int = 10
    min_count: int = 5
    max_doc_fraction: float = 0.5
    dominance_min: float = 0.3
    ratio_min: float = 3.0
    lift_threshold: float = 2.0
    min_degree: int = 0
    aggregation: str = "mean"

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def louvain_config(self) -> LouvainConfig:
        return LouvainConfig(resolution=self.resolution, min_gain=self.min_gain,
                             max_passes=self.max_passes, seed=self.seed)

    def lda_config(self) -> lda_mod.LdaConfig:
        return lda_mod.LdaConfig(n_topics=self.topics, alpha=self.alpha, beta=self.beta,
                                 iterations=self.iterations, burn_in=self.burn_in,
                                 stride=self.stride, seed=self.seed)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def config_hash(self) -> str:
        """Identity of inputs and parameters; the output directory is excluded."""
        payload = {k: v for k, v in self.as_dict().items() if k != "out"}
        canonical = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


_CONVERTERS = {
    "edges": str, "docs": str, "seeds": str, "stopwords": str, "exclude": str,
    "metadata": str, "out": str, "aggregation": str,
    "seed": int, "max_passes": int, "min_community_size": int, "topics": int,
    "iterations": int, "burn_in": int, "stride": int, "min_count": int, "min_degree": int,
    "resolution": float, "min_gain": float, "alpha": float, "beta": float,
    "max_doc_fraction": float, "dominance_min": float, "ratio_min": float, "lift_threshold": float,
}


def load_config_file(path: str | Path) -> dict:
    """`key = value` lines; '#' comments and blank lines ignored."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{line_no}: expected 'key = value', got {text!r}")
            key, _, raw = text.partition("=")
            key = key.strip()
            if key not in _CONVERTERS:
                raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
            values[key] = _CONVERTERS[key](raw.strip())
    return values


def build_config(file_values: dict | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then config-file values, then explicit (CLI) overrides."""
    cfg = PipelineConfig()
    for source in (file_values or {}), (overrides or {}):
        clean = {k: v for k, v in source.items() if v is not None}
        if clean:
            cfg = replace(cfg, **clean)
    return cfg


def _require(path: str | None, what: str) -> Path:
    if path is None:
        raise FileNotFoundError(f"no {what} file configured")
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} file not found: {p}")
    return p


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_reciprocal_graph(out_dir: Path) -> UndirectedGraph:
    nodes_path = out_dir / "graph_nodes.txt"
    edges_path = out_dir / "reciprocal_edges.tsv"
    if not nodes_path.exists() or not edges_path.exists():
        raise FileNotFoundError(f"run `ingest` first: missing {nodes_path} or {edges_path}")
    nodes = np.loadtxt(nodes_path, dtype=np.int64, ndmin=1)
    pairs = np.loadtxt(edges_path, dtype=np.int64, ndmin=2) if edges_path.stat().st_size else np.zeros((0, 2), np.int64)
    if pairs.size == 0:
        pairs = pairs.reshape(0, 2)
    return UndirectedGraph.from_edges(nodes, pairs[:, 0], pairs[:, 1])


def stage_ingest(cfg: PipelineConfig) -> dict:
    edges_path = _require(cfg.edges, "edges")
    directed, stats = load_directed_edges(edges_path)
    graph = reciprocalize(directed)
    out = cfg.out_dir
    with open(out / "graph_nodes.txt", "w", encoding="utf-8") as fh:
        for u in graph.nodes:
            fh.write(f"{int(u)}\n")
    with open(out / "reciprocal_edges.tsv", "w", encoding="utf-8") as fh:
        for a, b in zip(graph.edge_a, graph.edge_b):
            fh.write(f"{int(graph.nodes[a])}\t{int(graph.nodes[b])}\n")
    isolates = int(np.count_nonzero(graph.degree_counts == 0))
    counts = {
        "ingested_user_universe": directed.n_nodes,
        "directed_edges": directed.n_edges,
        "graph_nodes": graph.n_nodes,
        "reciprocal_edges": graph.n_edges,
        "isolates": isolates,
        **stats.as_dict(),
    }
    _write_json(out / "ingest_stats.json", counts)
    return counts


def stage_detect(cfg: PipelineConfig) -> dict:
    out = cfg.out_dir
    graph = load_reciprocal_graph(out)
    excluded = load_exclusions(_require(cfg.exclude, "exclusion")) if cfg.exclude else set()
    dendro = louvain(graph, cfg.louvain_config())
    full = dendro.final
    full.save(out / "partition_full.json")
    filtered, report = filter_communities(full, cfg.min_community_size, excluded)
    filtered.modularity = full.modularity
    filtered.save(out / "partition.json")
    _write_json(out / "exclusion_report.json", report.as_dict())
    return {
        "levels": len(dendro.levels),
        "communities_full": full.n_communities,
        "communities": filtered.n_communities,
        "nodes_partitioned": int(filtered.nodes.size),
        "nodes_dropped": len(report.dropped_members),
        "modularity": full.modularity,
    }


def stage_profile(cfg: PipelineConfig) -> dict:
    out = cfg.out_dir
    edges_path = _require(cfg.edges, "edges")
    seeds = prof.load_seed_accounts(_require(cfg.seeds, "seeds"))
    partition = Partition.load(out / "partition.json")
    directed, _ = load_directed_edges(edges_path)
    profile = prof.follow_ratio(directed, partition, seeds)
    labels = prof.auto_labels(profile, cfg.lift_threshold)
    prof.save_profile_csv(profile, out / "profile.csv", labels=labels)
    return {"communities": profile.n_communities, "seeds": len(seeds),
            "baseline_size": profile.baseline_size}


def stage_corpus(cfg: PipelineConfig) -> dict:
    out = cfg.out_dir
    docs_path = _require(cfg.docs, "documents")
    stop = text_mod.load_stopwords(_require(cfg.stopwords, "stopwords")) if cfg.stopwords else frozenset()
    pooled, pool_stats = text_mod.pool_by_user(text_mod.read_documents(docs_path))
    vocab, corpus, build_stats = text_mod.build_vocabulary(
        pooled, stop, min_count=cfg.min_count, max_doc_fraction=cfg.max_doc_fraction)
    vocab.save(out / "vocabulary.txt")
    text_mod.save_corpus(corpus, out / "corpus.csv", out / "doc_users.csv")
    counts = {"documents": corpus.n_docs, "vocabulary": len(vocab), "tokens": corpus.n_tokens,
              "triplets": int(corpus.term_indices.size),
              **pool_stats.as_dict(), **build_stats.as_dict()}
    _write_json(out / "corpus_stats.json", counts)
    return counts


def _load_corpus_artifacts(out: Path) -> tuple[text_mod.Vocabulary, text_mod.BowCorpus]:
    vocab_path = out / "vocabulary.txt"
    if not vocab_path.exists():
        raise FileNotFoundError(f"run `corpus` first: missing {vocab_path}")
    vocab = text_mod.Vocabulary.load(vocab_path)
    corpus = text_mod.load_corpus(out / "corpus.csv", out / "doc_users.csv", len(vocab))
    return vocab, corpus


def stage_lda(cfg: PipelineConfig) -> dict:
    out = cfg.out_dir
    vocab, corpus = _load_corpus_artifacts(out)
    model = lda_mod.fit_lda(corpus, cfg.lda_config(), vocabulary=vocab)
    lda_mod.save_matrix_csv(model.phi, out / "phi.csv")
    lda_mod.save_matrix_csv(model.theta, out / "theta.csv")
    # light fixed fold-in settings: the manifest number is a tracking metric
    perplexity = lda_mod.held_out_perplexity(model, corpus, iterations=100, burn_in=50, stride=5)
    words = lda_mod.top_words(model, min(10, model.n_terms), vocabulary=vocab)
    _write_json(out / "lda.json", {
        "config": model.config.as_dict(),
        "training_perplexity": perplexity,
        "top_words": {str(k): w for k, w in enumerate(words)},
    })
    return {"topics": model.n_topics, "documents": corpus.n_docs,
            "vocabulary": model.n_terms, "perplexity": perplexity}


def _read_doc_users(path: Path) -> np.ndarray:
    users = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            users.append(int(row[1]))
    return np.array(users, dtype=np.int64)


def _read_profile_labels(path: Path) -> dict[int, str]:
    labels: dict[int, str] = {}
    if not path.exists():
        return labels
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row and row[0] != "baseline":
                labels[int(row[0])] = row[1]
    return labels


def stage_crosstab(cfg: PipelineConfig) -> dict:
    out = cfg.out_dir
    theta_path = out / "theta.csv"
    if not theta_path.exists():
        raise FileNotFoundError(f"run `lda` first: missing {theta_path}")
    theta = lda_mod.load_matrix_csv(theta_path)
    doc_users = _read_doc_users(out / "doc_users.csv")
    partition = Partition.load(out / "partition.json")
    labels = _read_profile_labels(out / "profile.csv")
    weights = None
    if cfg.aggregation == "token-mass":
        _, corpus = _load_corpus_artifacts(out)
        weights = corpus.doc_lengths().astype(np.float64)
    matrix = ct.community_topic_distribution(theta, doc_users, partition,
                                             mode=cfg.aggregation, doc_weights=weights,
                                             labels=labels)
    ct.save_matrix_table(matrix, out / "community_topics.csv")
    ct.save_matrix_raw(matrix, out / "community_topics_raw.csv")
    return {"communities": int(matrix.community_ids.size), "topics": matrix.n_topics,
            "unassigned_docs": matrix.unassigned_docs}


def stage_report(cfg: PipelineConfig) -> dict:
    out = cfg.out_dir
    raw_path = out / "community_topics_raw.csv"
    if not raw_path.exists():
        raise FileNotFoundError(f"run `crosstab` first: missing {raw_path}")
    matrix = ct.load_matrix_raw(raw_path)
    report = ct.echo_chamber_score(matrix, cfg.dominance_min, cfg.ratio_min)
    ct.save_echo_report(report, out / "echo_report.json")
    flagged = report.flagged_topics()
    for t in flagged:
        rec = report.records[t]
        logger.info("topic %d echo-chambered in community %d (%.2f vs %.2f)",
                    t, rec.dominant_community, rec.dominance, rec.runner_up)
    return {"topics": len(report.records), "flagged": len(flagged)}


def stage_gexf(cfg: PipelineConfig) -> dict:
    out = cfg.out_dir
    graph = load_reciprocal_graph(out)
    partition = Partition.load(out / "partition.json")
    labels = load_node_metadata(_require(cfg.metadata, "metadata")) if cfg.metadata else None
    # restrict to partitioned nodes so every exported node carries its community
    mask = np.isin(graph.nodes, partition.nodes)
    if not mask.all():
        idx_map = -np.ones(graph.n_nodes, dtype=np.int64)
        idx_map[np.flatnonzero(mask)] = np.arange(int(mask.sum()))
        e_keep = mask[graph.edge_a] & mask[graph.edge_b]
        graph = UndirectedGraph(graph.nodes[mask],
                                idx_map[graph.edge_a[e_keep]], idx_map[graph.edge_b[e_keep]])
    gexf_mod.write_gexf(graph, partition, out / "graph.gexf",
                        min_degree=cfg.min_degree, labels=labels)
    kept_nodes = int(np.count_nonzero(graph.degree_counts >= cfg.min_degree))
    return {"nodes": kept_nodes, "min_degree": cfg.min_degree}


STAGES = {
    "ingest": stage_ingest,
    "detect": stage_detect,
    "profile": stage_profile,
    "corpus": stage_corpus,
    "lda": stage_lda,
    "crosstab": stage_crosstab,
    "report": stage_report,
    "export-gexf": stage_gexf,
}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_stage(name: str, cfg: PipelineConfig) -> dict:
    """Run one stage, wrapping any failure with the stage name."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return STAGES[name](cfg)
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage in order and write the manifest. Returns the manifest."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "config": cfg.as_dict(),
        "config_hash": cfg.config_hash(),
        "stages": [],
        "artifacts": {},
    }
    for name in STAGE_ORDER:
        start = time.perf_counter()
        logger.info("stage %s ...", name)
        counts = run_stage(name, cfg)
        elapsed = time.perf_counter() - start
        manifest["stages"].append({
            "name": name,
            "seconds": round(elapsed, 3),
            "counts": counts,
            "artifacts": ARTIFACTS[name],
        })
    for names in ARTIFACTS.values():
        for fname in names:
            path = out / fname
            if path.exists():
                manifest["artifacts"][fname] = {"sha256": _sha256(path),
                                                "bytes": path.stat().st_size}
    _write_json(out / "manifest.json", manifest)
    logger.info("pipeline complete: %d artifacts in %s", len(manifest["artifacts"]), out)
    return manifest
