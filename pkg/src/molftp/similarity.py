"""Unhashed key-set fingerprints and Tanimoto similarity.

These gate which molecule pairs and triplets feed the 2D/3D statistics.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from molftp.chem import FragmentIndex
from molftp.keyspace import KeySpace


@dataclass(frozen=True)
class KeySetFingerprint:
    molecule_id: int
    keys: frozenset[int]


@dataclass(frozen=True, order=True)
class SimilarPair:
    i: int
    j: int
    similarity: float


def key_fingerprint(index: FragmentIndex, sim_radius: int = 2) -> KeySetFingerprint:
    if sim_radius > index.radius:
        raise ValueError(f"sim_radius {sim_radius} exceeds enumeration radius {index.radius}")
    return KeySetFingerprint(index.molecule_id, index.keys_up_to(sim_radius))


def tanimoto(a: KeySetFingerprint | frozenset, b: KeySetFingerprint | frozenset) -> float:
    """|a & b| / |a | b|; two empty sets give 0."""
    ka = a.keys if isinstance(a, KeySetFingerprint) else a
    kb = b.keys if isinstance(b, KeySetFingerprint) else b
    union = len(ka | kb)
    if union == 0:
        return 0.0
    return len(ka & kb) / union


def similar_pairs(fingerprints: Sequence[KeySetFingerprint], tau: float) -> list[SimilarPair]:
    """All unordered pairs with Tanimoto >= ``tau``, ordered by ``(i, j)``.

    ``i``/``j`` are positions in ``fingerprints``. Intersections come from a
    sparse product so the scan stays exact without a Python double loop.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    n = len(fingerprints)
    if n < 2:
        return []
    space = KeySpace(k for fp in fingerprints for k in fp.keys)
    rows, cols = [], []
    for r, fp in enumerate(fingerprints):
        for k in fp.keys:
            rows.append(r)
            cols.append(space.column[k])
    x = sp.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n, len(space)))
    sizes = np.asarray(x.sum(axis=1)).ravel()
    inter = (x @ x.T).tocoo()

    out: list[SimilarPair] = []
    if tau == 0.0:
        # every pair qualifies, including disjoint ones absent from the sparse product
        dense: dict[tuple[int, int], int] = {}
        for i, j, v in zip(inter.row, inter.col, inter.data):
            if i < j:
                dense[(i, j)] = int(v)
        for i in range(n):
            for j in range(i + 1, n):
                v = dense.get((i, j), 0)
                union = sizes[i] + sizes[j] - v
                out.append(SimilarPair(i, j, float(v / union) if union else 0.0))
        return out

    mask = inter.row < inter.col
    i_idx = inter.row[mask]
    j_idx = inter.col[mask]
    inter_v = inter.data[mask].astype(np.float64)
    union = sizes[i_idx] + sizes[j_idx] - inter_v
    sim = np.divide(inter_v, union, out=np.zeros_like(inter_v), where=union > 0)
    keep = sim >= tau
    order = np.lexsort((j_idx[keep], i_idx[keep]))
    for i, j, s in zip(i_idx[keep][order], j_idx[keep][order], sim[keep][order]):
        out.append(SimilarPair(int(i), int(j), float(s)))
    return out
