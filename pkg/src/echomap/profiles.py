"""Community profiling by seed-account follow ratios.

Ratios are held as exact integer counts and only rounded (half-up, two
decimals) when a report is written.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np

from .community import Partition
from .graph import DirectedFollowGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeedAccount:
    user_id: int
    label: str


def load_seed_accounts(path: str | Path) -> list[SeedAccount]:
    """Seed list: JSON array of {"user_id": ..., "label": ...} objects."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    seeds = [SeedAccount(int(rec["user_id"]), str(rec["label"])) for rec in data]
    ids = [s.user_id for s in seeds]
    if len(set(ids)) != len(ids):
        raise ValueError("seed account user ids must be distinct")
    return seeds


def round_half_up(value: Fraction | float, ndigits: int = 2) -> str:
    """Decimal string rounded half-up; exact for Fractions."""
    frac = value if isinstance(value, Fraction) else Fraction(Decimal(repr(float(value))))
    sign = "-" if frac < 0 else ""
    frac = abs(frac)
    scale = 10 ** ndigits
    q, r = divmod(frac.numerator * scale, frac.denominator)
    if 2 * r >= frac.denominator:
        q += 1
    whole, part = divmod(q, scale)
    return f"{sign}{whole}.{part:0{ndigits}d}" if ndigits else f"{sign}{whole}"


class CommunityProfile:
    """Per-community follow counts for each seed, plus a baseline over all members.

    The baseline denominator is the set of nodes surviving community
    filtering, keeping numerators and denominators in one universe.
    """

    def __init__(self, community_ids: np.ndarray, sizes: np.ndarray,
                 seeds: list[SeedAccount], follow_counts: np.ndarray):
        self.community_ids = np.asarray(community_ids, dtype=np.int64)
        self.sizes = np.asarray(sizes, dtype=np.int64)
        self.seeds = seeds
        self.follow_counts = np.asarray(follow_counts, dtype=np.int64)   # C x S
        self.baseline_counts = self.follow_counts.sum(axis=0)
        self.baseline_size = int(self.sizes.sum())

    @property
    def n_communities(self) -> int:
        return self.community_ids.size

    def ratio(self, community_index: int, seed_index: int) -> Fraction:
        return Fraction(int(self.follow_counts[community_index, seed_index]),
                        int(self.sizes[community_index]))

    def baseline_ratio(self, seed_index: int) -> Fraction:
        if self.baseline_size == 0:
            return Fraction(0)
        return Fraction(int(self.baseline_counts[seed_index]), self.baseline_size)

    def ratio_matrix(self) -> np.ndarray:
        return self.follow_counts / self.sizes[:, None]


def follow_ratio(g: DirectedFollowGraph, p: Partition, seeds: list[SeedAccount]) -> CommunityProfile:
    """Fraction of each community following each seed account.

    ratio(c, s) = |{u in c : u -> s}| / |c|, counted exactly. Seeds absent
    from the graph simply have zero followers.
    """
    if not seeds:
        raise ValueError("at least one seed account is required")
    member_idx = g.index_of(p.nodes)
    if np.any(member_idx < 0):
        raise ValueError("partition contains nodes missing from the directed graph")
    n_comm = p.n_communities
    sizes = p.sizes()
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        logger.warning("profile: %d empty community id(s) excluded", empty.size)
    counts = np.zeros((n_comm, len(seeds)), dtype=np.int64)
    # label per directed-graph index, -1 for non-members
    label_by_gidx = np.full(g.n_nodes, -1, dtype=np.int64)
    label_by_gidx[member_idx] = p.labels
    for s_i, seed in enumerate(seeds):
        gi = int(g.index_of([seed.user_id])[0])
        if gi < 0:
            logger.warning("seed %s (%d) not present in the follow graph", seed.label, seed.user_id)
            continue
        followers = g.in_neighbors(gi)
        lbl = label_by_gidx[followers]
        lbl = lbl[lbl >= 0]
        if lbl.size:
            counts[:, s_i] += np.bincount(lbl, minlength=n_comm)
    keep = sizes > 0
    return CommunityProfile(np.flatnonzero(keep), sizes[keep], seeds, counts[keep])


def dominant_seed(profile: CommunityProfile, lift_threshold: float = 2.0
                  ) -> dict[int, list[tuple[str, float]]]:
    """Seeds whose community ratio exceeds the baseline by the given lift.

    Per community, returns (label, lift) pairs with ratio/baseline >=
    lift_threshold, sorted by lift descending; a positive ratio over a zero
    baseline reports infinite lift.
    """
    if lift_threshold <= 1:
        raise ValueError("lift_threshold must exceed 1")
    out: dict[int, list[tuple[str, float]]] = {}
    for ci, comm_id in enumerate(profile.community_ids):
        picks: list[tuple[float, int, str]] = []
        for si, seed in enumerate(profile.seeds):
            r = profile.ratio(ci, si)
            base = profile.baseline_ratio(si)
            if base == 0:
                if r > 0:
                    picks.append((float("inf"), si, seed.label))
                continue
            lift = r / base
            if lift >= lift_threshold:
                picks.append((float(lift), si, seed.label))
        picks.sort(key=lambda t: (-t[0], t[1]))
        out[int(comm_id)] = [(label, lift) for lift, _, label in picks]
    return out


def auto_labels(profile: CommunityProfile, lift_threshold: float = 2.0) -> dict[int, str]:
    """Human-readable community names from their most distinctive seed."""
    dom = dominant_seed(profile, lift_threshold)
    labels = {}
    for comm_id, picks in dom.items():
        labels[int(comm_id)] = f"{picks[0][0]} follower" if picks else f"community {comm_id}"
    return labels


def save_profile_csv(profile: CommunityProfile, path: str | Path,
                     labels: dict[int, str] | None = None) -> None:
    """One row per community (id, label, size, per-seed ratios) plus a baseline row."""
    labels = labels or {}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["community_id", "label", "size"] + [s.label for s in profile.seeds])
        for ci, comm_id in enumerate(profile.community_ids):
            row = [int(comm_id), labels.get(int(comm_id), ""), int(profile.sizes[ci])]
            row += [round_half_up(profile.ratio(ci, si)) for si in range(len(profile.seeds))]
            writer.writerow(row)
        base = ["baseline", "baseline", profile.baseline_size]
        base += [round_half_up(profile.baseline_ratio(si)) for si in range(len(profile.seeds))]
        writer.writerow(base)
