"""Topic modeling over the pooled corpus via collapsed Gibbs sampling.

One chain is strictly sequential and consumes pre-generated uniforms from a
seeded generator, so a fixed (corpus, config) pair reproduces the exact
token-topic assignment trajectory. Topic-word rows (phi) and document-topic
rows (theta) come from count states averaged every ``stride`` iterations
after burn-in, smoothed by the beta/alpha priors.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numba import njit

from .errors import EmptyDocumentError, OverParameterizedError
from .text import BowCorpus, Vocabulary

logger = logging.getLogger(__name__)


@dataclass
class LdaConfig:
    n_topics: int = 50
    alpha: float | None = None      # None -> symmetric 50 / n_topics
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    stride: int = 10
    seed: int = 0

    @property
    def resolved_alpha(self) -> float:
        return 50.0 / self.n_topics if self.alpha is None else self.alpha

    def validate(self) -> None:
        if self.n_topics < 1:
            raise ValueError("n_topics must be at least 1")
        if self.resolved_alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if not (0 <= self.burn_in < self.iterations):
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")

    def as_dict(self) -> dict:
        return {"n_topics": self.n_topics, "alpha": self.resolved_alpha, "beta": self.beta,
                "iterations": self.iterations, "burn_in": self.burn_in,
                "stride": self.stride, "seed": self.seed}


@dataclass
class TopicModel:
    phi: np.ndarray                 # K x V topic-word rows, each summing to 1
    theta: np.ndarray               # D x K document-topic rows, each summing to 1
    config: LdaConfig
    assignments: np.ndarray         # final topic per token, in corpus token-stream order
    vocabulary: Vocabulary | None = None

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    @property
    def n_terms(self) -> int:
        return self.phi.shape[1]


@njit(cache=True)
def _gibbs_sweep(doc_of, word_of, z, n_kv, n_k, n_dk, alpha, beta, vbeta, u, probs):
    """Resample every token's topic once; u holds one uniform per token."""
    for t in range(z.size):
        d = doc_of[t]
        w = word_of[t]
        old = z[t]
        n_kv[old, w] -= 1
        n_k[old] -= 1
        n_dk[d, old] -= 1
        total = 0.0
        for k in range(probs.size):
            p = (n_kv[k, w] + beta) * (n_dk[d, k] + alpha) / (n_k[k] + vbeta)
            total += p
            probs[k] = total
        r = u[t] * total
        new = 0
        while probs[new] < r and new < probs.size - 1:
            new += 1
        z[t] = new
        n_kv[new, w] += 1
        n_k[new] += 1
        n_dk[d, new] += 1


@njit(cache=True)
def _foldin_sweep(word_of, z, phi, n_k, alpha, u, probs):
    """Resample one held-out document's topics with topic-word rows frozen."""
    for t in range(z.size):
        w = word_of[t]
        old = z[t]
        n_k[old] -= 1
        total = 0.0
        for k in range(probs.size):
            p = phi[k, w] * (n_k[k] + alpha)
            total += p
            probs[k] = total
        r = u[t] * total
        new = 0
        while probs[new] < r and new < probs.size - 1:
            new += 1
        z[t] = new
        n_k[new] += 1


def _snapshot_iterations(cfg: LdaConfig) -> set[int]:
    """1-based iterations whose count state enters the averaged estimate."""
    return {i for i in range(cfg.burn_in + 1, cfg.iterations + 1)
            if (i - cfg.burn_in - 1) % cfg.stride == 0}


def fit_lda(corpus: BowCorpus, cfg: LdaConfig | None = None, *,
            vocabulary: Vocabulary | None = None, validate_counts: bool = False) -> TopicModel:
    """Fit topic-word and document-topic distributions by collapsed Gibbs.

    ``validate_counts`` re-checks the count-table totals against the corpus
    token total after every sweep (debugging aid for the bookkeeping).
    """
    cfg = cfg or LdaConfig()
    cfg.validate()
    if corpus.n_docs == 0:
        raise ValueError("corpus is empty")
    lengths = corpus.doc_lengths()
    if np.any(lengths < 1):
        raise EmptyDocumentError("every document must have at least one token")
    n_tokens = corpus.n_tokens
    if cfg.n_topics > n_tokens:
        raise OverParameterizedError(
            f"over-parameterized: {cfg.n_topics} topics > {n_tokens} tokens")
    K, V, D = cfg.n_topics, corpus.n_terms, corpus.n_docs
    alpha, beta = cfg.resolved_alpha, cfg.beta
    doc_of, word_of = corpus.token_stream()
    rng = np.random.default_rng(cfg.seed)
    z = rng.integers(0, K, size=n_tokens, dtype=np.int64)
    n_kv = np.zeros((K, V), dtype=np.int64)
    np.add.at(n_kv, (z, word_of), 1)
    n_dk = np.zeros((D, K), dtype=np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    n_k = np.bincount(z, minlength=K).astype(np.int64)
    probs = np.zeros(K, dtype=np.float64)
    snapshots = _snapshot_iterations(cfg)
    phi_acc = np.zeros((K, V), dtype=np.float64)
    theta_acc = np.zeros((D, K), dtype=np.float64)
    n_snap = 0
    for it in range(1, cfg.iterations + 1):
        u = rng.random(n_tokens)
        _gibbs_sweep(doc_of, word_of, z, n_kv, n_k, n_dk, alpha, beta, V * beta, u, probs)
        if validate_counts:
            assert n_k.sum() == n_tokens and n_dk.sum() == n_tokens and n_kv.sum() == n_tokens
        if it in snapshots:
            phi_acc += n_kv
            theta_acc += n_dk
            n_snap += 1
    phi_avg = phi_acc / n_snap
    theta_avg = theta_acc / n_snap
    phi = (phi_avg + beta) / (phi_avg.sum(axis=1, keepdims=True) + V * beta)
    theta = (theta_avg + alpha) / (lengths[:, None] + K * alpha)
    logger.info("lda fit: K=%d V=%d D=%d tokens=%d snapshots=%d", K, V, D, n_tokens, n_snap)
    return TopicModel(phi=phi, theta=theta, config=cfg, assignments=z, vocabulary=vocabulary)


def top_words(model: TopicModel, k: int, vocabulary: Vocabulary | None = None
              ) -> list[list[str]] | list[list[int]]:
    """Top-k terms per topic by probability, ties broken by ascending index.

    Returns term strings when a vocabulary is attached or passed, term
    indices otherwise.
    """
    if not (1 <= k <= model.n_terms):
        raise ValueError("k must lie in [1, vocabulary size]")
    vocab = vocabulary or model.vocabulary
    out = []
    for row in model.phi:
        ranked = np.argsort(-row, kind="stable")[:k]
        if vocab is not None:
            out.append([vocab.terms[i] for i in ranked])
        else:
            out.append([int(i) for i in ranked])
    return out


def infer_theta(model: TopicModel, doc: tuple[np.ndarray, np.ndarray], *,
                iterations: int | None = None, burn_in: int | None = None,
                stride: int | None = None, seed: int | None = None) -> np.ndarray:
    """Fold in one held-out document (sparse (indices, counts)) with phi frozen."""
    idx = np.asarray(doc[0], dtype=np.int64)
    cnt = np.asarray(doc[1], dtype=np.int64)
    if idx.size == 0 or cnt.sum() == 0:
        raise EmptyDocumentError("cannot infer proportions for an empty document")
    if idx.size and idx.max() >= model.n_terms:
        raise ValueError("document term index out of vocabulary range")
    cfg = model.config
    it = cfg.iterations if iterations is None else iterations
    bi = cfg.burn_in if burn_in is None else burn_in
    if burn_in is None and bi >= it:
        bi = it // 2
    spec = replace(cfg, iterations=it, burn_in=bi,
                   stride=cfg.stride if stride is None else stride)
    spec.validate()
    K = model.n_topics
    alpha = cfg.resolved_alpha
    word_of = np.repeat(idx, cnt)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    z = rng.integers(0, K, size=word_of.size, dtype=np.int64)
    n_k = np.bincount(z, minlength=K).astype(np.int64)
    probs = np.zeros(K, dtype=np.float64)
    acc = np.zeros(K, dtype=np.float64)
    n_snap = 0
    snapshots = _snapshot_iterations(spec)
    for it in range(1, spec.iterations + 1):
        u = rng.random(word_of.size)
        _foldin_sweep(word_of, z, model.phi, n_k, alpha, u, probs)
        if it in snapshots:
            acc += n_k
            n_snap += 1
    avg = acc / n_snap
    return (avg + alpha) / (word_of.size + K * alpha)


def held_out_perplexity(model: TopicModel, held_out: BowCorpus, *,
                        seed: int | None = None, iterations: int | None = None,
                        burn_in: int | None = None, stride: int | None = None) -> float:
    """exp(-mean log-likelihood per token) under fold-in document proportions.

    Terms outside the model vocabulary are skipped and counted; documents
    with no in-vocabulary tokens are skipped entirely.
    """
    if held_out.n_docs == 0:
        raise ValueError("held-out corpus is empty")
    base_seed = model.config.seed if seed is None else seed
    total_log = 0.0
    total_tokens = 0
    skipped = 0
    for d in range(held_out.n_docs):
        idx, cnt = held_out.doc(d)
        keep = idx < model.n_terms
        skipped += int(cnt[~keep].sum())
        idx, cnt = idx[keep], cnt[keep]
        if idx.size == 0:
            continue
        theta = infer_theta(model, (idx, cnt), seed=np.random.SeedSequence(
            entropy=base_seed, spawn_key=(d,)).generate_state(1)[0],
            iterations=iterations, burn_in=burn_in, stride=stride)
        p_w = theta @ model.phi[:, idx]
        total_log += float(np.sum(cnt * np.log(p_w)))
        total_tokens += int(cnt.sum())
    if skipped:
        logger.warning("perplexity: skipped %d out-of-vocabulary token(s)", skipped)
    if total_tokens == 0:
        raise EmptyDocumentError("no in-vocabulary tokens in held-out corpus")
    return float(np.exp(-total_log / total_tokens))


@dataclass
class SweepResult:
    n_topics: int
    seed: int
    perplexity: float
    top_words: list[list[str]] | list[list[int]]


def topic_sweep(corpus: BowCorpus, k_values: list[int], base_cfg: LdaConfig | None = None, *,
                top_n: int = 10, vocabulary: Vocabulary | None = None,
                perplexity_iterations: int | None = None) -> list[SweepResult]:
    """Fit one model per topic count, each independently but reproducibly seeded."""
    base_cfg = base_cfg or LdaConfig()
    results: list[SweepResult] = []
    if not k_values:
        return results
    children = np.random.SeedSequence(base_cfg.seed).spawn(len(k_values))
    for k, child in zip(k_values, children):
        seed = int(child.generate_state(1)[0])
        cfg = replace(base_cfg, n_topics=k, seed=seed)
        model = fit_lda(corpus, cfg, vocabulary=vocabulary)
        perp = held_out_perplexity(model, corpus, iterations=perplexity_iterations)
        results.append(SweepResult(k, seed, perp, top_words(model, min(top_n, model.n_terms),
                                                            vocabulary=vocabulary)))
        logger.info("sweep K=%d perplexity=%.3f", k, perp)
    return results


def save_matrix_csv(matrix: np.ndarray, path: str | Path) -> None:
    """Plain numeric CSV, full float precision (round-trips exactly)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for row in matrix:
            writer.writerow([format(x, ".17g") for x in row])


def load_matrix_csv(path: str | Path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([float(x) for x in row])
    return np.array(rows, dtype=np.float64)
