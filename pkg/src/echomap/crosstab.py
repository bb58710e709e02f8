"""Cross-tabulation of topic proportions against communities and echo scoring.

A topic counts as echo-chambered when one community holds most of its mass
(dominance threshold) and no other community comes close (dominance over
runner-up ratio threshold).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .community import Partition
from .profiles import round_half_up

logger = logging.getLogger(__name__)


@dataclass
class CommunityTopicMatrix:
    """Rows are communities, columns topics; each row is a mean theta (sums to 1)."""

    community_ids: np.ndarray
    sizes: np.ndarray          # member counts from the partition
    doc_counts: np.ndarray     # documents contributing to each row
    values: np.ndarray         # C x K
    labels: list[str] = field(default_factory=list)
    unassigned_docs: int = 0

    @property
    def n_topics(self) -> int:
        return self.values.shape[1]


def community_topic_distribution(theta: np.ndarray, doc_users: np.ndarray, p: Partition, *,
                                 mode: str = "mean", doc_weights: np.ndarray | None = None,
                                 labels: dict[int, str] | None = None) -> CommunityTopicMatrix:
    """Average document-topic proportions over each community's members.

    ``mode="mean"`` gives each document equal weight; ``mode="token-mass"``
    weights documents by ``doc_weights`` (token counts). Documents whose
    user is outside the partition are excluded and counted; communities with
    no documents are omitted with a warning.
    """
    theta = np.asarray(theta, dtype=np.float64)
    doc_users = np.asarray(doc_users, dtype=np.int64)
    if theta.shape[0] != doc_users.size:
        raise ValueError("theta rows must align with doc_users")
    if mode not in ("mean", "token-mass"):
        raise ValueError(f"unknown aggregation mode {mode!r}")
    if mode == "token-mass":
        if doc_weights is None:
            raise ValueError("token-mass aggregation needs doc_weights")
        weights = np.asarray(doc_weights, dtype=np.float64)
    else:
        weights = np.ones(doc_users.size, dtype=np.float64)
    doc_comm = p.label_of(doc_users)
    assigned = doc_comm >= 0
    unassigned = int(np.count_nonzero(~assigned))
    if unassigned:
        logger.warning("crosstab: %d document(s) owned by users outside the partition", unassigned)
    n_comm = p.n_communities
    wsum = np.bincount(doc_comm[assigned], weights=weights[assigned], minlength=n_comm)
    doc_counts = np.bincount(doc_comm[assigned], minlength=n_comm)
    acc = np.zeros((n_comm, theta.shape[1]), dtype=np.float64)
    np.add.at(acc, doc_comm[assigned], theta[assigned] * weights[assigned, None])
    have_docs = doc_counts > 0
    missing = np.flatnonzero(~have_docs)
    if missing.size:
        logger.warning("crosstab: community row(s) omitted for lack of documents: %s",
                       missing.tolist())
    values = acc[have_docs] / wsum[have_docs, None]
    ids = np.flatnonzero(have_docs)
    sizes = p.sizes()[have_docs]
    labels = labels or {}
    row_labels = [labels.get(int(c), str(int(c))) for c in ids]
    return CommunityTopicMatrix(ids.astype(np.int64), sizes.astype(np.int64),
                                doc_counts[have_docs].astype(np.int64), values,
                                labels=row_labels, unassigned_docs=unassigned)


@dataclass
class TopicEchoRecord:
    topic: int
    dominant_community: int
    dominance: float
    runner_up: float
    ratio: float               # inf when the runner-up is zero
    flagged: bool

    def as_dict(self) -> dict:
        return {
            "topic": self.topic,
            "dominant_community": self.dominant_community,
            "dominance": self.dominance,
            "runner_up": self.runner_up,
            "ratio": "inf" if math.isinf(self.ratio) else self.ratio,
            "flagged": self.flagged,
        }


@dataclass
class EchoChamberReport:
    dominance_min: float
    ratio_min: float
    records: list[TopicEchoRecord]

    def flagged_topics(self) -> list[int]:
        return [r.topic for r in self.records if r.flagged]

    def as_dict(self) -> dict:
        return {
            "dominance_min": self.dominance_min,
            "ratio_min": self.ratio_min,
            "topics": [r.as_dict() for r in self.records],
        }


def echo_chamber_score(m: CommunityTopicMatrix, dominance_min: float = 0.3,
                       ratio_min: float = 3.0) -> EchoChamberReport:
    """Flag topics concentrated in a single community.

    A topic is flagged iff its largest community share is at least
    ``dominance_min`` and exceeds the runner-up by a factor of ``ratio_min``.
    Equal maxima give ratio 1 and never flag.
    """
    if m.values.size == 0:
        raise ValueError("empty community-topic matrix")
    if not (0.0 < dominance_min < 1.0):
        raise ValueError("dominance_min must lie in (0, 1)")
    if ratio_min <= 1.0:
        raise ValueError("ratio_min must exceed 1")
    records = []
    for k in range(m.n_topics):
        col = m.values[:, k]
        order = np.argsort(-col, kind="stable")
        top = int(order[0])
        dominance = float(col[top])
        runner_up = float(col[order[1]]) if col.size > 1 else 0.0
        if runner_up > 0:
            ratio = dominance / runner_up
        elif dominance > 0:
            ratio = float("inf")
        else:
            ratio = 1.0
        flagged = dominance >= dominance_min and ratio >= ratio_min
        records.append(TopicEchoRecord(k, int(m.community_ids[top]), dominance,
                                       runner_up, ratio, flagged))
    report = EchoChamberReport(dominance_min, ratio_min, records)
    logger.info("echo scoring: %d/%d topics flagged", len(report.flagged_topics()), m.n_topics)
    return report


def save_matrix_table(m: CommunityTopicMatrix, path: str | Path, *, decimals: int = 2) -> None:
    """Community-by-topic table, ratios rounded half-up for the report."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["community_id", "label", "size", "docs"]
                        + [f"topic_{k}" for k in range(m.n_topics)])
        for i, comm_id in enumerate(m.community_ids):
            row = [int(comm_id), m.labels[i] if m.labels else str(int(comm_id)),
                   int(m.sizes[i]), int(m.doc_counts[i])]
            row += [round_half_up(x, decimals) for x in m.values[i]]
            writer.writerow(row)


def save_matrix_raw(m: CommunityTopicMatrix, path: str | Path) -> None:
    """Full-precision companion table; downstream scoring reads this one."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["community_id", "label", "size", "docs"]
                        + [f"topic_{k}" for k in range(m.n_topics)])
        for i, comm_id in enumerate(m.community_ids):
            row = [int(comm_id), m.labels[i] if m.labels else str(int(comm_id)),
                   int(m.sizes[i]), int(m.doc_counts[i])]
            row += [format(x, ".17g") for x in m.values[i]]
            writer.writerow(row)


def load_matrix_raw(path: str | Path) -> CommunityTopicMatrix:
    ids, labels, sizes, docs, rows = [], [], [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            ids.append(int(row[0]))
            labels.append(row[1])
            sizes.append(int(row[2]))
            docs.append(int(row[3]))
            rows.append([float(x) for x in row[4:]])
    return CommunityTopicMatrix(np.array(ids, dtype=np.int64), np.array(sizes, dtype=np.int64),
                                np.array(docs, dtype=np.int64), np.array(rows, dtype=np.float64),
                                labels=labels)


def save_echo_report(report: EchoChamberReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=2)
        fh.write("\n")
