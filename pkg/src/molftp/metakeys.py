"""2D contrastive-pair and 3D anchor-triplet statistics per fragment key.

Pairs are similar molecules with opposite labels; a key present in exactly
one member counts toward ``n10`` (present in the positive) or ``n01`` (present
in the negative) and is scored with continuity-corrected McNemar.

Triplets are (anchor, same-label neighbor, opposite-label neighbor). A key
present as (1, 1, 0) over (anchor, pos, neg) is aligned, (1, 0, 1) is
anti-aligned. For a negative anchor the two partners trade columns before
counting, so "aligned" always means the key travels with label 1 and
inverting every label swaps the two counts. Scored with a one-sided binomial test or a Friedman test over
the three within-triplet presence ranks.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import special, stats

from molftp.chem import FragmentIndex
from molftp.keyspace import KeySpace
from molftp.prevalence import P_FLOOR, ScoreMap, key_depths
from molftp.similarity import SimilarPair

STAT_3D = ("binomial", "friedman")


@dataclass(frozen=True)
class ContrastPair:
    pair: SimilarPair
    pos: int  # member with label 1
    neg: int  # member with label 0

    @property
    def label_discordant(self) -> bool:
        return True


@dataclass(frozen=True)
class AnchorTriplet:
    anchor: int
    pos: int  # shares the anchor's label
    neg: int  # opposite label
    sims: tuple[float, float]
    anchor_label: int = 1


def build_contrast_pairs(pairs: Sequence[SimilarPair], labels: Sequence[int]) -> list[ContrastPair]:
    out = []
    for p in pairs:
        yi, yj = labels[p.i], labels[p.j]
        if yi != yj:
            pos, neg = (p.i, p.j) if yi == 1 else (p.j, p.i)
            out.append(ContrastPair(p, pos, neg))
    return out


def build_triplets(
    pairs: Sequence[SimilarPair], labels: Sequence[int], cap_per_anchor: int = 10
) -> list[AnchorTriplet]:
    """Cross each anchor's same-label and opposite-label neighbors.

    Per anchor, keep the ``cap_per_anchor`` triplets with the largest
    ``min(sims)``, ties broken by ``(pos, neg)``.
    """
    if cap_per_anchor < 1:
        raise ValueError("cap_per_anchor must be >= 1")
    neighbors: dict[int, list[tuple[int, float]]] = {}
    for p in pairs:
        neighbors.setdefault(p.i, []).append((p.j, p.similarity))
        neighbors.setdefault(p.j, []).append((p.i, p.similarity))

    out: list[AnchorTriplet] = []
    for anchor in sorted(neighbors):
        same = [(m, s) for m, s in neighbors[anchor] if labels[m] == labels[anchor]]
        opp = [(m, s) for m, s in neighbors[anchor] if labels[m] != labels[anchor]]
        if not same or not opp:
            continue
        cands = [(-min(sp_, sn), pm, nm, sp_, sn) for pm, sp_ in same for nm, sn in opp]
        cands.sort()
        for _, pm, nm, sp_, sn in cands[:cap_per_anchor]:
            out.append(AnchorTriplet(anchor, pm, nm, (sp_, sn), int(labels[anchor])))
    return out


def _signed(diff: np.ndarray, neg_log10_p: np.ndarray) -> np.ndarray:
    return np.sign(diff) * neg_log10_p + 0.0


def _meta_map(order, variant, space, indexes, mask, scores, columns, support_of) -> ScoreMap:
    keys = space.keys[mask]
    depths = key_depths(indexes)
    return ScoreMap(
        order=order,
        stat_variant=variant,
        keys=keys,
        scores=scores[mask],
        support=np.array([support_of[int(k)] for k in keys], dtype=np.int64),
        depth_min=np.array([depths[int(k)][0] for k in keys], dtype=np.int64),
        depth_max=np.array([depths[int(k)][1] for k in keys], dtype=np.int64),
        columns={name: col[mask] for name, col in columns.items()},
    )


def _support(indexes: Sequence[FragmentIndex]) -> dict[int, int]:
    out: dict[int, int] = {}
    for ix in indexes:
        for k in ix.key_presence:
            out[k] = out.get(k, 0) + 1
    return out


def _empty_map(order: str, variant: str, columns: Sequence[str]) -> ScoreMap:
    z = np.zeros(0, dtype=np.int64)
    return ScoreMap(
        order=order,
        stat_variant=variant,
        keys=np.zeros(0, dtype=np.uint64),
        scores=np.zeros(0),
        support=z,
        depth_min=z,
        depth_max=z,
        columns={c: z for c in columns},
    )


def pair_counts(cpairs: Sequence[ContrastPair], indexes: Sequence[FragmentIndex]):
    """``(space, n10, n01)`` over the keys of molecules taking part in pairs."""
    members = sorted({m for cp in cpairs for m in (cp.pos, cp.neg)})
    space = KeySpace.from_indexes([indexes[m] for m in members])
    x = space.matrix(indexes).tocsr()
    p = x[[cp.pos for cp in cpairs]]
    q = x[[cp.neg for cp in cpairs]]
    both = p.multiply(q)
    n10 = np.asarray((p - both).sum(axis=0)).ravel()
    n01 = np.asarray((q - both).sum(axis=0)).ravel()
    return space, n10, n01


def mcnemar_scores(cpairs: Sequence[ContrastPair], indexes: Sequence[FragmentIndex]) -> ScoreMap:
    if not cpairs:
        return _empty_map("2D", "mcnemar", ("n10", "n01"))
    space, n10, n01 = pair_counts(cpairs, indexes)
    total = n10 + n01
    mask = total > 0
    stat = np.zeros(len(space))
    stat[mask] = (np.abs(n10[mask] - n01[mask]) - 1.0) ** 2 / total[mask]
    # chi-square(1) survival
    p = special.erfc(np.sqrt(stat / 2.0))
    scores = _signed(n10 - n01, -np.log10(np.maximum(p, P_FLOOR)))
    return _meta_map(
        "2D", "mcnemar", space, indexes, mask, scores, {"n10": n10, "n01": n01}, _support(indexes)
    )


def mcnemar_score(n10: int, n01: int) -> float:
    """Scalar continuity-corrected McNemar score."""
    total = n10 + n01
    if total == 0:
        raise ValueError("no discordant pairs")
    stat = (abs(n10 - n01) - 1.0) ** 2 / total
    p = math.erfc(math.sqrt(stat / 2.0))
    return float(np.sign(n10 - n01)) * -math.log10(max(p, P_FLOOR)) + 0.0


def binomial_score(m_align: int, m_anti: int) -> float:
    total = m_align + m_anti
    if total == 0:
        raise ValueError("no informative triplets")
    p = float(stats.binom.sf(max(m_align, m_anti) - 1, total, 0.5))
    return float(np.sign(m_align - m_anti)) * -math.log10(max(p, P_FLOOR)) + 0.0


# patterns over (anchor, pos, neg) presence, excluding (0, 0, 0)
_PATTERNS = [(a, p, n) for a in (0, 1) for p in (0, 1) for n in (0, 1) if a or p or n]


def _ranks(pattern: tuple[int, int, int]) -> tuple[list[float], float]:
    """Average ranks of a presence pattern and its tie term sum(t^3 - t)."""
    r = stats.rankdata(pattern)
    _, counts = np.unique(pattern, return_counts=True)
    return list(r), float(np.sum(counts**3 - counts))


_PATTERN_RANKS = {pat: _ranks(pat) for pat in _PATTERNS}


def friedman_from_patterns(counts: dict[tuple[int, int, int], np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Tie-corrected Friedman statistic (k = 3) and chi-square(2) p-value per key."""
    first = next(iter(counts.values()))
    n = np.zeros_like(first, dtype=float)
    rank_sums = np.zeros((3, len(first)))
    ties = np.zeros(len(first))
    for pat, cnt in counts.items():
        ranks, tie = _PATTERN_RANKS[pat]
        cnt = cnt.astype(float)
        n += cnt
        for j in range(3):
            rank_sums[j] += ranks[j] * cnt
        ties += tie * cnt
    k = 3
    num = 12.0 * (rank_sums**2).sum(axis=0) - 3.0 * n**2 * k * (k + 1) ** 2
    den = n * k * (k + 1) - ties / (k - 1)
    stat = np.divide(num, den, out=np.zeros_like(num), where=den > 1e-12)
    stat = np.maximum(stat, 0.0)
    return stat, np.exp(-stat / 2.0)


def triplet_counts(triplets: Sequence[AnchorTriplet], indexes: Sequence[FragmentIndex]):
    """Key space plus per-key counts of every non-empty (anchor, pos, neg) pattern."""
    members = sorted({m for t in triplets for m in (t.anchor, t.pos, t.neg)})
    space = KeySpace.from_indexes([indexes[m] for m in members])
    x = space.matrix(indexes).tocsr().astype(np.int8)
    # partners ordered (label 1, label 0) so the counts swap when labels invert
    p_ids = [t.pos if t.anchor_label == 1 else t.neg for t in triplets]
    n_ids = [t.neg if t.anchor_label == 1 else t.pos for t in triplets]
    xa = x[[t.anchor for t in triplets]].astype(np.int64)
    xp = x[p_ids].astype(np.int64)
    xn = x[n_ids].astype(np.int64)
    # encode pattern as 4a + 2p + n per (triplet, key) entry
    code = (4 * xa + 2 * xp + xn).tocsr()
    code.eliminate_zeros()
    counts = {}
    cols = code.indices
    vals = code.data
    for pat in _PATTERNS:
        v = 4 * pat[0] + 2 * pat[1] + pat[2]
        counts[pat] = np.bincount(cols[vals == v], minlength=len(space))
    return space, counts


def triplet_scores(
    triplets: Sequence[AnchorTriplet],
    indexes: Sequence[FragmentIndex],
    variant: str = "binomial",
) -> ScoreMap:
    if variant not in STAT_3D:
        raise ValueError(f"unknown 3D statistic {variant!r}; choose from {STAT_3D}")
    if not triplets:
        return _empty_map("3D", variant, ("m_align", "m_anti"))
    space, counts = triplet_counts(triplets, indexes)
    m_align = counts[(1, 1, 0)]
    m_anti = counts[(1, 0, 1)]
    total = m_align + m_anti
    mask = total > 0
    if variant == "binomial":
        k = np.maximum(m_align, m_anti)
        p = stats.binom.sf(k - 1, total, 0.5)
        p = np.where(mask, p, 1.0)
    else:
        _, p = friedman_from_patterns(counts)
    scores = _signed(m_align - m_anti, -np.log10(np.maximum(p, P_FLOOR)))
    return _meta_map(
        "3D",
        variant,
        space,
        indexes,
        mask,
        scores,
        {"m_align": m_align, "m_anti": m_anti},
        _support(indexes),
    )
