"""Tokenizing, per-user pooling, and vocabulary/bag-of-words construction."""

from collections import Counter, defaultdict

import numpy as np
import pytest

from echomap.errors import DocumentFormatError, EmptyVocabularyError
from echomap.text import (BowCorpus, Vocabulary, build_vocabulary, load_corpus,
                          pool_by_user, read_documents, save_corpus, tokenize)


class TestTokenize:
    def test_whitespace_split_and_ascii_lowercase(self):
        assert tokenize("Hello  World") == ["hello", "world"]

    def test_urls_and_mentions_stripped(self):
        assert tokenize("see https://x.y @bob now") == ["see", "now"]

    def test_http_url_stripped(self):
        assert tokenize("a http://b.c d") == ["a", "d"]

    def test_passthrough_identity(self):
        assert tokenize(["国会", "安倍"], mode="passthrough") == ["国会", "安倍"]

    def test_non_ascii_untouched(self):
        # only A-Z is lowercased; other scripts keep their form
        assert tokenize("ОБЪЕКТ Tokyo") == ["ОБЪЕКТ", "tokyo"]

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            tokenize("x", mode="bigram")


class TestPoolByUser:
    def test_concatenates_in_arrival_order(self):
        pooled, stats = pool_by_user([(1, ["a", "b"]), (1, ["c"])])
        assert pooled == {1: ["a", "b", "c"]}
        assert stats.users == 1

    def test_one_doc_per_user(self):
        pooled, _ = pool_by_user([(1, ["a"]), (2, ["b"])])
        assert list(pooled) == [1, 2]

    def test_empty_records_skipped_with_counter(self):
        pooled, stats = pool_by_user([(1, []), (1, ["a"])])
        assert stats.skipped_empty == 1
        assert pooled == {1: ["a"]}

    def test_shuffled_records_match_grouping_oracle(self):
        rng = np.random.default_rng(17)
        records = []
        for _ in range(1000):
            user = int(rng.integers(0, 10))
            tokens = [f"w{rng.integers(0, 40)}" for _ in range(int(rng.integers(1, 6)))]
            records.append((user, tokens))
        # independent pass: group then concatenate
        expected = defaultdict(list)
        for user, tokens in records:
            expected[user].extend(tokens)
        pooled, _ = pool_by_user(records)
        assert {u: Counter(t) for u, t in pooled.items()} == \
               {u: Counter(t) for u, t in expected.items()}
        for u in pooled:
            assert pooled[u] == expected[u]


class TestBuildVocabulary:
    def test_min_count_threshold(self):
        pooled = {1: ["a", "a", "b"], 2: ["a"]}
        vocab, corpus, _ = build_vocabulary(pooled, min_count=2, max_doc_fraction=1.0)
        assert vocab.terms == ["a"]

    def test_stopwords_removed(self):
        vocab, corpus, _ = build_vocabulary({1: ["the", "cat"]}, stopwords={"the"},
                                            min_count=1, max_doc_fraction=1.0)
        assert vocab.terms == ["cat"]

    def test_document_frequency_cap(self):
        pooled = {i: ["common", f"rare{i}"] for i in range(4)}
        vocab, _, stats = build_vocabulary(pooled, min_count=1, max_doc_fraction=0.5)
        assert "common" not in vocab
        assert stats.dropped_common == 1

    def test_frequencies_match_hash_count_oracle(self):
        rng = np.random.default_rng(23)
        pooled = {}
        for u in range(20):
            pooled[u] = [f"t{rng.integers(0, 50)}" for _ in range(int(rng.integers(5, 40)))]
        counts = Counter(t for tokens in pooled.values() for t in tokens)
        vocab, corpus, _ = build_vocabulary(pooled, min_count=1, max_doc_fraction=1.0)
        assert len(vocab) == len(counts)
        for term, c in counts.items():
            assert vocab.frequencies[vocab.index_of(term)] == c
        # token conservation, exact
        assert corpus.n_tokens == sum(counts.values())

    def test_vocabulary_bijection(self):
        pooled = {1: ["x", "y", "z", "y"]}
        vocab, _, _ = build_vocabulary(pooled, min_count=1, max_doc_fraction=1.0)
        for i, term in enumerate(vocab.terms):
            assert vocab.index_of(term) == i

    def test_record_order_does_not_change_bags(self):
        rng = np.random.default_rng(29)
        records = [(int(rng.integers(0, 5)), [f"w{rng.integers(0, 30)}"]) for _ in range(300)]
        pooled_a, _ = pool_by_user(records)
        shuffled = records.copy()
        rng.shuffle(shuffled)
        pooled_b, _ = pool_by_user(shuffled)
        va, ca, _ = build_vocabulary(pooled_a, min_count=1, max_doc_fraction=1.0)
        vb, cb, _ = build_vocabulary(pooled_b, min_count=1, max_doc_fraction=1.0)
        bags_a = {int(u): Counter({va.terms[i]: int(c) for i, c in zip(*ca.doc(d))})
                  for d, u in enumerate(ca.doc_users)}
        bags_b = {int(u): Counter({vb.terms[i]: int(c) for i, c in zip(*cb.doc(d))})
                  for d, u in enumerate(cb.doc_users)}
        assert bags_a == bags_b

    def test_rebuild_is_deterministic(self, tmp_path):
        pooled = {1: ["b", "a", "b"], 2: ["c", "a"]}
        out1, out2 = tmp_path / "v1.txt", tmp_path / "v2.txt"
        for out in (out1, out2):
            vocab, corpus, _ = build_vocabulary(pooled, min_count=1, max_doc_fraction=1.0)
            vocab.save(out)
        assert out1.read_bytes() == out2.read_bytes()

    def test_empty_vocabulary_is_an_error(self):
        with pytest.raises(EmptyVocabularyError):
            build_vocabulary({1: ["a"]}, min_count=5, max_doc_fraction=1.0)

    def test_docs_emptied_by_filtering_are_dropped(self):
        pooled = {1: ["a", "a"], 2: ["b"]}
        vocab, corpus, stats = build_vocabulary(pooled, min_count=2, max_doc_fraction=1.0)
        assert corpus.n_docs == 1
        assert stats.docs_dropped_empty == 1

    def test_first_appearance_indexing(self):
        pooled = {1: ["beta", "alpha"], 2: ["alpha", "gamma"]}
        vocab, _, _ = build_vocabulary(pooled, min_count=1, max_doc_fraction=1.0)
        assert vocab.terms == ["beta", "alpha", "gamma"]


class TestReadDocuments:
    def test_tokens_and_text_records(self):
        lines = ['{"user_id": 1, "tokens": ["国会"]}', '{"user_id": 2, "text": "A b"}']
        assert list(read_documents(lines)) == [(1, ["国会"]), (2, ["a", "b"])]

    def test_bad_json_reports_line(self):
        with pytest.raises(DocumentFormatError) as exc:
            list(read_documents(['{"user_id": 1, "tokens": []}', "{nope"]))
        assert exc.value.line_number == 2

    def test_missing_fields_rejected(self):
        with pytest.raises(DocumentFormatError):
            list(read_documents(['{"user_id": 3}']))


def test_corpus_csv_roundtrip(tmp_path):
    pooled = {7: ["a", "b", "a"], 9: ["c", "b"]}
    vocab, corpus, _ = build_vocabulary(pooled, min_count=1, max_doc_fraction=1.0)
    save_corpus(corpus, tmp_path / "c.csv", tmp_path / "d.csv")
    again = load_corpus(tmp_path / "c.csv", tmp_path / "d.csv", len(vocab))
    assert again.n_docs == corpus.n_docs
    assert np.array_equal(again.doc_users, corpus.doc_users)
    assert np.array_equal(again.term_indices, corpus.term_indices)
    assert np.array_equal(again.counts, corpus.counts)


def test_bow_corpus_validates_counts():
    with pytest.raises(ValueError):
        BowCorpus(np.array([1]), np.array([0, 1]), np.array([0]), np.array([0]), 2)
