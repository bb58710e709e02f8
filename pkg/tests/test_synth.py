"""Ground-truth generators, NMI, and topic matching."""

import itertools

import numpy as np
import pytest
from sklearn.metrics import normalized_mutual_info_score

from echomap.community import Partition
from echomap.graph import load_directed_edges, reciprocalize
from echomap.synth import (PlantedPartitionSpec, SyntheticCorpusSpec, SyntheticDatasetSpec,
                           match_topics, nmi, planted_partition_graph, synthetic_lda_corpus,
                           total_variation, write_synthetic_dataset)
from echomap.text import pool_by_user, read_documents


class TestPlantedPartition:
    def test_full_in_zero_out_gives_disjoint_cliques(self):
        spec = PlantedPartitionSpec((4, 3), p_in=1.0, p_out=0.0, seed=1)
        g, truth = planted_partition_graph(spec)
        assert g.n_edges == 6 + 3
        assert truth.sizes().tolist() == [4, 3]
        for a, b in zip(g.edge_a, g.edge_b):
            assert truth.labels[a] == truth.labels[b]

    def test_edge_count_within_four_sigma(self):
        spec = PlantedPartitionSpec((50, 50, 50, 50), p_in=0.3, p_out=0.02, seed=5)
        g, _ = planted_partition_graph(spec)
        pairs_in = 4 * (50 * 49 // 2)
        pairs_out = (200 * 199 // 2) - pairs_in
        mean = pairs_in * 0.3 + pairs_out * 0.02
        sigma = np.sqrt(pairs_in * 0.3 * 0.7 + pairs_out * 0.02 * 0.98)
        assert abs(g.n_edges - mean) < 4 * sigma

    def test_seed_determinism(self):
        spec = PlantedPartitionSpec((10, 10), 0.5, 0.1, seed=9)
        a, _ = planted_partition_graph(spec)
        b, _ = planted_partition_graph(spec)
        assert np.array_equal(a.edge_a, b.edge_a)
        assert np.array_equal(a.edge_b, b.edge_b)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            planted_partition_graph(PlantedPartitionSpec((5,), 0.1, 0.5, seed=0))
        with pytest.raises(ValueError):
            planted_partition_graph(PlantedPartitionSpec((), 0.5, 0.1, seed=0))


class TestSyntheticCorpus:
    def test_k1_word_frequencies_approach_phi(self):
        spec = SyntheticCorpusSpec(n_topics=1, vocab_size=20, n_docs=100,
                                   tokens_per_doc=1000, beta=1.0, seed=3)
        corpus, vocab, theta, phi = synthetic_lda_corpus(spec)
        freq = np.zeros(20)
        for d in range(corpus.n_docs):
            i, c = corpus.doc(d)
            np.add.at(freq, i, c)
        assert total_variation(freq / freq.sum(), phi[0]) <= 0.05

    def test_document_totals_match_spec(self):
        spec = SyntheticCorpusSpec(n_topics=3, vocab_size=10, n_docs=12, tokens_per_doc=17, seed=1)
        corpus, _, _, _ = synthetic_lda_corpus(spec)
        assert np.all(corpus.doc_lengths() == 17)

    def test_zero_tokens_rejected(self):
        spec = SyntheticCorpusSpec(n_topics=1, vocab_size=5, n_docs=2, tokens_per_doc=0, seed=0)
        with pytest.raises(ValueError):
            synthetic_lda_corpus(spec)

    def test_ground_truth_row_stochastic(self):
        spec = SyntheticCorpusSpec(n_topics=4, vocab_size=25, n_docs=30, tokens_per_doc=40, seed=7)
        _, _, theta, phi = synthetic_lda_corpus(spec)
        np.testing.assert_allclose(theta.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(phi.sum(axis=1), 1.0, atol=1e-9)


class TestNmi:
    def test_relabeling_invariance(self):
        nodes = np.arange(6)
        a = Partition(nodes, np.array([0, 0, 1, 1, 2, 2]))
        b = Partition(nodes, np.array([2, 2, 0, 0, 1, 1]))
        assert nmi(a, b) == pytest.approx(1.0)

    def test_crossed_pairs_share_no_information(self):
        nodes = np.arange(4)
        a = Partition(nodes, np.array([0, 0, 1, 1]))
        b = Partition(nodes, np.array([0, 1, 0, 1]))
        assert nmi(a, b) == pytest.approx(0.0, abs=1e-15)

    def test_matches_contingency_oracle(self):
        rng = np.random.default_rng(73)
        nodes = np.arange(1000)
        la = rng.integers(0, 10, size=1000)
        lb = rng.integers(0, 10, size=1000)
        a = Partition.from_labels(nodes, la)
        b = Partition.from_labels(nodes, lb)
        expected = normalized_mutual_info_score(a.labels, b.labels, average_method="arithmetic")
        assert nmi(a, b) == pytest.approx(expected, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(79)
        nodes = np.arange(200)
        a = Partition.from_labels(nodes, rng.integers(0, 5, size=200))
        b = Partition.from_labels(nodes, rng.integers(0, 7, size=200))
        assert nmi(a, b) == nmi(b, a)

    def test_degenerate_single_communities(self):
        nodes = np.arange(5)
        a = Partition(nodes, np.zeros(5, dtype=np.int64))
        b = Partition(nodes, np.zeros(5, dtype=np.int64))
        assert nmi(a, b) == 1.0

    def test_node_set_must_match(self):
        a = Partition(np.arange(3), np.zeros(3, dtype=np.int64))
        b = Partition(np.arange(4), np.zeros(4, dtype=np.int64))
        with pytest.raises(ValueError):
            nmi(a, b)


class TestMatchTopics:
    def test_recovers_permutation_exactly(self):
        rng = np.random.default_rng(83)
        phi = rng.dirichlet(np.ones(12), size=4)
        perm = np.array([2, 3, 1, 0])
        est = phi[perm]
        found, dist = match_topics(est, phi)
        assert found.tolist() == perm.tolist()
        np.testing.assert_allclose(dist, 0.0, atol=1e-15)

    def test_k2_hand_check(self):
        phi_true = np.array([[0.9, 0.1, 0.0], [0.0, 0.2, 0.8]])
        phi_est = np.array([[0.1, 0.3, 0.6], [0.7, 0.3, 0.0]])
        perm, dist = match_topics(phi_est, phi_true)
        # both assignments evaluated by hand: identity costs 0.8+0.8,
        # the swap costs 0.2+0.2
        assert perm.tolist() == [1, 0]
        np.testing.assert_allclose(np.sort(dist), [0.2, 0.2])

    def test_never_worse_than_any_permutation(self):
        rng = np.random.default_rng(89)
        for k in (3, 4, 5, 6):
            a = rng.dirichlet(np.ones(8), size=k)
            b = rng.dirichlet(np.ones(8), size=k)
            perm, dist = match_topics(a, b)
            best = min(sum(total_variation(a[i], b[p[i]]) for i in range(k))
                       for p in itertools.permutations(range(k)))
            assert dist.sum() == pytest.approx(best, abs=1e-12)

    def test_dimension_mismatch_is_hard_error(self):
        with pytest.raises(ValueError):
            match_topics(np.ones((2, 3)) / 3, np.ones((3, 3)) / 3)


class TestDatasetWriter:
    def test_fixture_parses_through_real_loaders(self, tmp_path):
        spec = SyntheticDatasetSpec(block_sizes=(12, 12), bot_block=5, tiny_block=3,
                                    tweets_per_user=2, tokens_per_tweet=8,
                                    oneway_edges=40, seed=4)
        ds = write_synthetic_dataset(spec, tmp_path)
        directed, stats = load_directed_edges(ds.edges)
        assert stats.self_loops_skipped >= 1       # parser-hardening record
        assert stats.duplicates_collapsed >= 1
        graph = reciprocalize(directed)
        assert graph.n_edges > 0
        pooled, _ = pool_by_user(read_documents(ds.docs))
        assert len(pooled) == ds.user_ids.size
        truth = Partition.load(ds.truth_partition)
        assert truth.nodes.size == ds.user_ids.size

    def test_writer_deterministic(self, tmp_path):
        spec = SyntheticDatasetSpec(block_sizes=(8, 8), bot_block=4, tiny_block=2,
                                    tweets_per_user=2, tokens_per_tweet=5,
                                    oneway_edges=10, seed=6)
        a = write_synthetic_dataset(spec, tmp_path / "a")
        b = write_synthetic_dataset(spec, tmp_path / "b")
        assert a.edges.read_bytes() == b.edges.read_bytes()
        assert a.docs.read_bytes() == b.docs.read_bytes()
