"""Community-topic cross-tabulation and echo-chamber scoring."""

import numpy as np
import pytest

from echomap.community import Partition
from echomap.crosstab import (CommunityTopicMatrix, community_topic_distribution,
                              echo_chamber_score, load_matrix_raw, save_matrix_raw)


def matrix_from_columns(*columns):
    """Build a C-community matrix whose first columns are the given vectors."""
    cols = [np.asarray(c, dtype=np.float64) for c in columns]
    values = np.column_stack(cols + [1.0 - np.sum(cols, axis=0)])
    c = values.shape[0]
    return CommunityTopicMatrix(np.arange(c), np.full(c, 10), np.full(c, 10), values)


class TestCommunityTopicDistribution:
    def test_two_document_mean(self):
        theta = np.array([[0.2, 0.8], [0.4, 0.6]])
        p = Partition(np.array([1, 2]), np.array([0, 0]))
        m = community_topic_distribution(theta, np.array([1, 2]), p)
        np.testing.assert_allclose(m.values, [[0.3, 0.7]])

    def test_single_user_community_returns_theta(self):
        theta = np.array([[0.9, 0.1], [0.5, 0.5]])
        p = Partition(np.array([1, 2]), np.array([0, 1]))
        m = community_topic_distribution(theta, np.array([1, 2]), p)
        np.testing.assert_allclose(m.values, theta)

    def test_matches_brute_force_average(self):
        rng = np.random.default_rng(53)
        users = np.arange(50)
        theta = rng.dirichlet(np.ones(6), size=50)
        p = Partition.from_labels(users, rng.integers(0, 4, size=50))
        m = community_topic_distribution(theta, users, p)
        for i, comm in enumerate(m.community_ids):
            members = set(p.members(int(comm)).tolist())
            rows = [theta[d] for d in range(50) if users[d] in members]
            np.testing.assert_allclose(m.values[i], np.mean(rows, axis=0), atol=1e-12)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(59)
        users = np.arange(80)
        theta = rng.dirichlet(np.ones(5), size=80)
        p = Partition.from_labels(users, rng.integers(0, 6, size=80))
        m = community_topic_distribution(theta, users, p)
        np.testing.assert_allclose(m.values.sum(axis=1), 1.0, atol=1e-6)

    def test_unassigned_documents_counted(self):
        theta = np.array([[1.0], [1.0], [1.0]])
        p = Partition(np.array([1, 2]), np.array([0, 0]))
        m = community_topic_distribution(theta, np.array([1, 2, 99]), p)
        assert m.unassigned_docs == 1

    def test_community_without_documents_omitted(self):
        theta = np.array([[0.5, 0.5]])
        p = Partition(np.array([1, 2]), np.array([0, 1]))
        m = community_topic_distribution(theta, np.array([1]), p)
        assert m.community_ids.tolist() == [0]

    def test_token_mass_weighting(self):
        theta = np.array([[1.0, 0.0], [0.0, 1.0]])
        p = Partition(np.array([1, 2]), np.array([0, 0]))
        m = community_topic_distribution(theta, np.array([1, 2]), p,
                                         mode="token-mass", doc_weights=np.array([3.0, 1.0]))
        np.testing.assert_allclose(m.values, [[0.75, 0.25]])

    def test_alignment_required(self):
        with pytest.raises(ValueError):
            community_topic_distribution(np.ones((2, 2)), np.array([1]),
                                         Partition(np.array([1]), np.array([0])))


class TestEchoChamberScore:
    def test_dominant_column_flagged_at_defaults(self):
        m = matrix_from_columns([0.01, 0.57, 0.01, 0.01, 0.00, 0.06])
        report = echo_chamber_score(m)
        rec = report.records[0]
        assert rec.flagged
        assert rec.dominant_community == 1
        assert rec.dominance == pytest.approx(0.57)
        assert rec.runner_up == pytest.approx(0.06)
        assert rec.ratio == pytest.approx(0.57 / 0.06)

    def test_uniform_column_not_flagged(self):
        m = matrix_from_columns([0.2, 0.2, 0.2, 0.2])
        assert not echo_chamber_score(m).records[0].flagged

    def test_tied_maxima_not_flagged(self):
        m = matrix_from_columns([0.5, 0.5, 0.1])
        rec = echo_chamber_score(m).records[0]
        assert rec.ratio == pytest.approx(1.0)
        assert not rec.flagged

    def test_zero_runner_up_is_infinite(self):
        m = matrix_from_columns([0.6, 0.0, 0.0])
        rec = echo_chamber_score(m).records[0]
        assert rec.ratio == float("inf")
        assert rec.flagged

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(61)
        values = rng.dirichlet(np.full(8, 0.3), size=5)   # 5 communities, 8 topics
        m = CommunityTopicMatrix(np.arange(values.shape[0]),
                                 np.full(values.shape[0], 10),
                                 np.full(values.shape[0], 10), values)
        doms = np.linspace(0.05, 0.9, 10)
        ratios = np.linspace(1.1, 8.0, 10)
        flags = {}
        for dm in doms:
            for rm in ratios:
                flags[(dm, rm)] = set(echo_chamber_score(m, dm, rm).flagged_topics())
        for i, dm in enumerate(doms):
            for j, rm in enumerate(ratios):
                if i + 1 < len(doms):
                    assert flags[(doms[i + 1], rm)] <= flags[(dm, rm)]
                if j + 1 < len(ratios):
                    assert flags[(dm, ratios[j + 1])] <= flags[(dm, rm)]

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(67)
        values = rng.dirichlet(np.ones(6), size=4)
        ids = np.arange(4)
        m = CommunityTopicMatrix(ids, np.full(4, 10), np.full(4, 10), values)
        perm = np.array([2, 0, 3, 1])
        mp = CommunityTopicMatrix(ids[perm], np.full(4, 10), np.full(4, 10), values[perm])
        a = echo_chamber_score(m)
        b = echo_chamber_score(mp)
        for ra, rb in zip(a.records, b.records):
            assert ra.flagged == rb.flagged
            assert ra.dominant_community == rb.dominant_community
            assert ra.dominance == pytest.approx(rb.dominance)

    def test_threshold_validation(self):
        m = matrix_from_columns([0.5, 0.2])
        with pytest.raises(ValueError):
            echo_chamber_score(m, dominance_min=0.0)
        with pytest.raises(ValueError):
            echo_chamber_score(m, ratio_min=1.0)


def test_raw_table_roundtrip(tmp_path):
    rng = np.random.default_rng(71)
    values = rng.dirichlet(np.ones(4), size=3)
    m = CommunityTopicMatrix(np.array([0, 1, 3]), np.array([5, 6, 7]),
                             np.array([5, 6, 7]), values, labels=["a", "b", "c"])
    save_matrix_raw(m, tmp_path / "raw.csv")
    again = load_matrix_raw(tmp_path / "raw.csv")
    assert again.community_ids.tolist() == [0, 1, 3]
    assert again.labels == ["a", "b", "c"]
    np.testing.assert_array_equal(again.values, values)
