"""Per-user document pooling and bag-of-words corpus construction.

The canonical ingestion path is pre-tokenized JSON-lines (one record per
tweet, ``{"user_id": ..., "tokens": [...]}``); morphological analysis happens
upstream. A whitespace tokenizer handles ``{"user_id": ..., "text": ...}``
records for latin-script and synthetic data.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import DocumentFormatError, EmptyVocabularyError

logger = logging.getLogger(__name__)

_ASCII_LOWER = str.maketrans({chr(c): chr(c + 32) for c in range(ord("A"), ord("Z") + 1)})


def tokenize(value: str | Sequence[str], mode: str = "whitespace") -> list[str]:
    """Split raw text, or pass a pre-tokenized sequence through unchanged.

    Whitespace mode splits on Unicode whitespace, lowercases ASCII letters
    only, and drops URL and @-mention tokens; they are not lexical content.
    """
    if mode == "passthrough":
        return list(value)
    if mode != "whitespace":
        raise ValueError(f"unknown tokenizer mode {mode!r}")
    if not isinstance(value, str):
        raise TypeError("whitespace mode expects a string")
    out = []
    for tok in value.split():
        if tok.startswith("@") or tok.startswith("http://") or tok.startswith("https://"):
            continue
        out.append(tok.translate(_ASCII_LOWER))
    return out


@dataclass
class PoolStats:
    records: int = 0
    skipped_empty: int = 0
    users: int = 0

    def as_dict(self) -> dict:
        return {"records": self.records, "skipped_empty": self.skipped_empty, "users": self.users}


def pool_by_user(records: Iterable[tuple[int, Sequence[str]]]) -> tuple[dict[int, list[str]], PoolStats]:
    """Concatenate each user's token streams into one pooled document.

    Documents keep first-seen user order; tokens keep record arrival order.
    Records with an empty token list are skipped and counted.
    """
    stats = PoolStats()
    pooled: dict[int, list[str]] = {}
    for user_id, tokens in records:
        stats.records += 1
        if not tokens:
            stats.skipped_empty += 1
            continue
        pooled.setdefault(int(user_id), []).extend(tokens)
    stats.users = len(pooled)
    if stats.skipped_empty:
        logger.warning("skipped %d empty document record(s)", stats.skipped_empty)
    return pooled, stats


def read_documents(source: str | Path | IO[str] | Iterable[str]) -> Iterator[tuple[int, list[str]]]:
    """Yield (user_id, tokens) from JSON-lines records.

    Each record carries either a ``tokens`` list (passed through) or a
    ``text`` string (whitespace-tokenized). Strict UTF-8 throughout.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from _iter_documents(fh)
    else:
        yield from _iter_documents(source)


def _iter_documents(lines: Iterable[str]) -> Iterator[tuple[int, list[str]]]:
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DocumentFormatError(line_no, f"invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict) or "user_id" not in rec:
            raise DocumentFormatError(line_no, "expected an object with user_id")
        try:
            uid = int(rec["user_id"])
        except (TypeError, ValueError):
            raise DocumentFormatError(line_no, "user_id must be an integer") from None
        if "tokens" in rec:
            tokens = rec["tokens"]
            if not isinstance(tokens, list) or any(not isinstance(t, str) for t in tokens):
                raise DocumentFormatError(line_no, "tokens must be a list of strings")
            yield uid, tokenize(tokens, mode="passthrough")
        elif "text" in rec:
            if not isinstance(rec["text"], str):
                raise DocumentFormatError(line_no, "text must be a string")
            yield uid, tokenize(rec["text"], mode="whitespace")
        else:
            raise DocumentFormatError(line_no, "record needs either tokens or text")


class Vocabulary:
    """Indexed term list; index order is first appearance in the corpus."""

    def __init__(self, terms: list[str], frequencies: np.ndarray):
        self.terms = terms
        self.frequencies = np.asarray(frequencies, dtype=np.int64)
        self._index = {t: i for i, t in enumerate(terms)}
        if len(self._index) != len(terms):
            raise ValueError("duplicate terms in vocabulary")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index_of(self, term: str) -> int:
        return self._index[term]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for term in self.terms:
                fh.write(term + "\n")

    @classmethod
    def load(cls, path: str | Path, frequencies: np.ndarray | None = None) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fh:
            terms = [line.rstrip("\n") for line in fh]
        while terms and terms[-1] == "":
            terms.pop()
        freqs = np.zeros(len(terms), dtype=np.int64) if frequencies is None else frequencies
        return cls(terms, freqs)


class BowCorpus:
    """Pooled documents as sparse term counts, CSR over (term index, count) pairs."""

    def __init__(self, doc_users: np.ndarray, indptr: np.ndarray,
                 term_indices: np.ndarray, counts: np.ndarray, n_terms: int):
        self.doc_users = np.asarray(doc_users, dtype=np.int64)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.term_indices = np.asarray(term_indices, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.n_terms = int(n_terms)
        if self.counts.size and self.counts.min() < 1:
            raise ValueError("counts must be >= 1")
        if self.term_indices.size and self.term_indices.max() >= self.n_terms:
            raise ValueError("term index out of range")

    @property
    def n_docs(self) -> int:
        return self.doc_users.size

    @property
    def n_tokens(self) -> int:
        return int(self.counts.sum())

    def doc(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self.indptr[i], self.indptr[i + 1]
        return self.term_indices[s:e], self.counts[s:e]

    def doc_lengths(self) -> np.ndarray:
        return np.add.reduceat(self.counts, self.indptr[:-1]) if self.counts.size else np.zeros(self.n_docs, dtype=np.int64)

    def token_stream(self) -> tuple[np.ndarray, np.ndarray]:
        """Expand to per-token (doc index, term index) arrays in document order."""
        doc_of = np.repeat(np.arange(self.n_docs, dtype=np.int64),
                           np.diff(self.indptr)) if self.n_docs else np.zeros(0, dtype=np.int64)
        doc_of = np.repeat(doc_of, self.counts)
        word_of = np.repeat(self.term_indices, self.counts)
        return doc_of, word_of


@dataclass
class CorpusBuildStats:
    docs_in: int = 0
    docs_kept: int = 0
    docs_dropped_empty: int = 0
    tokens_in: int = 0
    tokens_kept: int = 0
    stopword_tokens: int = 0
    terms_seen: int = 0
    terms_kept: int = 0
    dropped_rare: int = 0
    dropped_common: int = 0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "docs_in", "docs_kept", "docs_dropped_empty", "tokens_in", "tokens_kept",
            "stopword_tokens", "terms_seen", "terms_kept", "dropped_rare", "dropped_common")}


def build_vocabulary(pooled: dict[int, list[str]], stopwords: frozenset[str] | set[str] = frozenset(),
                     min_count: int = 5, max_doc_fraction: float = 0.5,
                     ) -> tuple[Vocabulary, BowCorpus, CorpusBuildStats]:
    """Index surviving 1-grams and convert pooled documents to sparse counts.

    Stopwords go first; then terms with corpus frequency below ``min_count``
    or document frequency above ``max_doc_fraction * n_docs`` are dropped.
    Surviving terms are indexed in first-appearance order. Documents left
    empty by filtering are dropped and counted.
    """
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    if not (0.0 < max_doc_fraction <= 1.0):
        raise ValueError("max_doc_fraction must lie in (0, 1]")
    stats = CorpusBuildStats(docs_in=len(pooled))
    term_counts: Counter[str] = Counter()
    doc_freq: Counter[str] = Counter()
    for tokens in pooled.values():
        stats.tokens_in += len(tokens)
        kept = [t for t in tokens if t not in stopwords]
        stats.stopword_tokens += len(tokens) - len(kept)
        term_counts.update(kept)
        doc_freq.update(set(kept))
    stats.terms_seen = len(term_counts)
    max_df = max_doc_fraction * len(pooled)
    terms: list[str] = []
    for term, count in term_counts.items():   # Counter preserves first-appearance order
        if count < min_count:
            stats.dropped_rare += 1
        elif doc_freq[term] > max_df:
            stats.dropped_common += 1
        else:
            terms.append(term)
    if not terms:
        raise EmptyVocabularyError(
            f"no terms survive filtering ({stats.terms_seen} seen, min_count={min_count}, "
            f"max_doc_fraction={max_doc_fraction})")
    vocab_index = {t: i for i, t in enumerate(terms)}
    doc_users: list[int] = []
    indptr = [0]
    term_idx: list[np.ndarray] = []
    cnts: list[np.ndarray] = []
    for user, tokens in pooled.items():
        doc_counter = Counter(vocab_index[t] for t in tokens if t in vocab_index)
        if not doc_counter:
            stats.docs_dropped_empty += 1
            continue
        idx = np.fromiter(sorted(doc_counter), dtype=np.int64, count=len(doc_counter))
        term_idx.append(idx)
        cnts.append(np.array([doc_counter[i] for i in idx], dtype=np.int64))
        doc_users.append(user)
        indptr.append(indptr[-1] + idx.size)
    stats.docs_kept = len(doc_users)
    frequencies = np.array([term_counts[t] for t in terms], dtype=np.int64)
    corpus = BowCorpus(
        np.array(doc_users, dtype=np.int64),
        np.array(indptr, dtype=np.int64),
        np.concatenate(term_idx) if term_idx else np.zeros(0, dtype=np.int64),
        np.concatenate(cnts) if cnts else np.zeros(0, dtype=np.int64),
        n_terms=len(terms),
    )
    stats.tokens_kept = corpus.n_tokens
    stats.terms_kept = len(terms)
    if stats.docs_dropped_empty:
        logger.warning("dropped %d document(s) emptied by vocabulary filtering", stats.docs_dropped_empty)
    return Vocabulary(terms, frequencies), corpus, stats


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Plain-text stopword list, one term per line; blanks and '#' comments allowed."""
    out = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            term = line.strip()
            if term and not term.startswith("#"):
                out.add(term)
    return frozenset(out)


def save_corpus(corpus: BowCorpus, corpus_path: str | Path, manifest_path: str | Path) -> None:
    """Sparse triplets CSV (doc_id,term_index,count) plus a doc->user manifest."""
    with open(corpus_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "term_index", "count"])
        for d in range(corpus.n_docs):
            idx, cnt = corpus.doc(d)
            for i, c in zip(idx, cnt):
                writer.writerow([d, int(i), int(c)])
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "user_id"])
        for d, u in enumerate(corpus.doc_users):
            writer.writerow([d, int(u)])


def load_corpus(corpus_path: str | Path, manifest_path: str | Path, n_terms: int) -> BowCorpus:
    doc_users = []
    with open(manifest_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            doc_users.append(int(row[1]))
    n_docs = len(doc_users)
    rows: list[tuple[int, int, int]] = []
    with open(corpus_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            rows.append((int(row[0]), int(row[1]), int(row[2])))
    rows.sort(key=lambda r: (r[0], r[1]))
    indptr = np.zeros(n_docs + 1, dtype=np.int64)
    for d, _, _ in rows:
        indptr[d + 1] += 1
    np.cumsum(indptr, out=indptr)
    term_idx = np.array([r[1] for r in rows], dtype=np.int64)
    counts = np.array([r[2] for r in rows], dtype=np.int64)
    return BowCorpus(np.array(doc_users, dtype=np.int64), indptr, term_idx, counts, n_terms)
