"""Atom-localised scoring and pooling into the fixed-length molFTP vector.

Each scored hit ``(key, depth, atom)`` adds its key score to cell
``s[atom, depth]``; the per-atom score is the row sum. A block is
``[margin, margin_rel, net_0 .. net_R]`` and up to three blocks (1D, 2D, 3D)
are concatenated.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from molftp.chem import FragmentIndex
from molftp.prevalence import ScoreMap

VIEWS = ("1D", "2D", "3D")
POOLING = ("margin_count", "max", "mean", "median", "softmax", "logsumexp")


@dataclass
class AtomScoreTable:
    cells: np.ndarray  # atoms x (R + 1)

    @property
    def per_atom(self) -> np.ndarray:
        return self.cells.sum(axis=1)

    @property
    def radius(self) -> int:
        return self.cells.shape[1] - 1


def atom_score_table(index: FragmentIndex, scores: ScoreMap | Mapping[int, float], radius: int | None = None) -> AtomScoreTable:
    """Place key scores on their hits; unscored keys contribute 0."""
    r = index.radius if radius is None else radius
    lookup = scores.lookup if isinstance(scores, ScoreMap) else scores
    cells = np.zeros((index.n_atoms, r + 1))
    for h in index.hits:
        v = lookup.get(h.key)
        if v:
            cells[h.center, h.depth] += v
    return AtomScoreTable(cells)


def _count_net(values: np.ndarray, gate: float, axis: int = 0) -> np.ndarray:
    return (values >= gate).sum(axis=axis) - (values <= -gate).sum(axis=axis)


def margin_block(t: AtomScoreTable, gate: float = 0.0) -> np.ndarray:
    """Counting margin: atoms clearing ``+gate`` minus atoms at or below ``-gate``.

    With ``gate = 0`` an atom scoring exactly 0 lands on both sides and cancels.
    """
    if gate < 0:
        raise ValueError("gate must be >= 0")
    n_atoms = t.cells.shape[0]
    if n_atoms < 1:
        raise ValueError("molecule has no atoms")
    margin = float(_count_net(t.per_atom, gate))
    net = _count_net(t.cells, gate, axis=0) / n_atoms
    return np.concatenate(([margin, margin / n_atoms], net))


def _pool(values: np.ndarray, op: str) -> float:
    if op == "max":
        return max(values.max(), 0.0) + min(values.min(), 0.0)
    if op == "mean":
        return float(values.mean())
    if op == "median":
        return float(np.median(values))
    if op == "softmax":
        # weights from magnitudes keep the pooling odd in the scores
        return float(np.dot(softmax(np.abs(values)), values))
    if op == "logsumexp":
        pos = values[values > 0]
        neg = -values[values < 0]
        lse_pos = float(logsumexp(pos)) if len(pos) else 0.0
        lse_neg = float(logsumexp(neg)) if len(neg) else 0.0
        return lse_pos - lse_neg
    raise ValueError(f"unknown pooling op {op!r}; choose from {POOLING[1:]}")


def pooled_margin(t: AtomScoreTable, op: str = "max") -> np.ndarray:
    """Pooled variant of the block.

    ``margin`` pools the per-atom scores, ``margin_rel`` divides it by the
    largest per-atom magnitude, and ``net_d`` pools depth column ``d``
    divided by the largest single-cell magnitude (0 when everything is 0).
    """
    s_a = t.per_atom
    if len(s_a) < 1:
        raise ValueError("molecule has no atoms")
    margin = _pool(s_a, op)
    scale = np.abs(s_a).max()
    margin_rel = margin / scale if scale > 0 else 0.0
    cell_scale = np.abs(t.cells).max()
    net = np.zeros(t.cells.shape[1])
    if cell_scale > 0:
        for d in range(t.cells.shape[1]):
            net[d] = _pool(t.cells[:, d], op) / cell_scale
    return np.concatenate(([margin, margin_rel], net))


def block(t: AtomScoreTable, pooling: str = "margin_count", gate: float = 0.0) -> np.ndarray:
    if pooling == "margin_count":
        return margin_block(t, gate)
    return pooled_margin(t, pooling)


@dataclass
class MolFtpVector:
    values: np.ndarray
    views: tuple[str, ...]
    radius: int

    def __len__(self) -> int:
        return len(self.values)


def assemble_molftp(blocks: Mapping[str, np.ndarray]) -> MolFtpVector:
    """Concatenate blocks in the fixed order 1D, 2D, 3D, skipping absent ones."""
    present = [v for v in VIEWS if v in blocks]
    unknown = set(blocks) - set(VIEWS)
    if unknown:
        raise ValueError(f"unknown views {sorted(unknown)}")
    if not present:
        raise ValueError("at least one block is required")
    widths = {len(blocks[v]) for v in present}
    if len(widths) != 1:
        raise ValueError("blocks were built with different radii")
    width = widths.pop()
    return MolFtpVector(np.concatenate([blocks[v] for v in present]), tuple(present), width - 3)


def column_names(views: Sequence[str], radius: int) -> list[str]:
    names = []
    for v in VIEWS:
        if v in views:
            tag = "d" + v[0]
            names += [f"{tag}_margin", f"{tag}_margin_rel"]
            names += [f"{tag}_net_{d}" for d in range(radius + 1)]
    return names


def vectorize(
    indexes: Sequence[FragmentIndex],
    maps: Mapping[str, ScoreMap],
    radius: int,
    pooling: str = "margin_count",
    gate: float = 0.0,
) -> np.ndarray:
    """molFTP matrix (molecules x features) for the views present in ``maps``."""
    views = [v for v in VIEWS if v in maps]
    lookups = {v: maps[v].lookup for v in views}
    out = np.zeros((len(indexes), len(views) * (radius + 3)))
    for row, ix in enumerate(indexes):
        blocks = {v: block(atom_score_table(ix, lookups[v], radius), pooling, gate) for v in views}
        out[row] = assemble_molftp(blocks).values
    return out
