"""Per-key 2x2 contingency tables and 1D fragment-target prevalence scores.

Table layout per key K::

            with K   without K
    pos       a          c
    neg       b          d

``w`` is the Haldane-smoothed log2 odds ratio and the signed score is
``sgn(w) * -log10(max(p, 1e-300))`` with ``p`` the two-sided normal tail of
``|w| / sqrt(var)``.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
from scipy import special

from molftp.chem import FragmentIndex

LN2 = math.log(2.0)
LN10 = math.log(10.0)
P_FLOOR = 1e-300
SCORE_CAP = 300.0

STAT_1D = ("fisher_onetailed", "chi2")


@dataclass(frozen=True)
class ContingencyTable:
    a: float
    b: float
    c: float
    d: float
    alpha: float = 0.5

    @property
    def n(self) -> float:
        return self.a + self.b + self.c + self.d

    def flipped(self) -> ContingencyTable:
        """Table after inverting every label."""
        return ContingencyTable(self.b, self.a, self.d, self.c, self.alpha)

    def decremented(self, cell: str) -> ContingencyTable:
        values = {"a": self.a, "b": self.b, "c": self.c, "d": self.d}
        if cell not in values:
            raise ValueError(f"unknown cell {cell!r}")
        values[cell] -= 1
        return ContingencyTable(alpha=self.alpha, **values)


@dataclass(frozen=True)
class KeyStats:
    w: float
    var: float
    z: float
    p: float
    score: float


def _log2_ratio(num: float, den: float) -> float:
    # log2(num/den) via log1p of an exact difference: exact negation when
    # num and den swap, exact zero when they are equal
    if num >= den:
        return math.log1p((num - den) / den) / LN2
    return -math.log1p((den - num) / num) / LN2


def log_odds(t: ContingencyTable) -> float:
    if t.alpha <= 0:
        raise ValueError("alpha must be > 0")
    al = t.alpha
    return _log2_ratio((t.a + al) * (t.d + al), (t.b + al) * (t.c + al))


def log_odds_variance(t: ContingencyTable) -> float:
    al = t.alpha
    inv = (1.0 / (t.a + al) + 1.0 / (t.d + al)) + (1.0 / (t.b + al) + 1.0 / (t.c + al))
    return inv / (LN2 * LN2)


def _neg_log10_normal_tail(z: float) -> float:
    """-log10(erfc(z / sqrt 2)) with the 1e-300 floor."""
    x = z / math.sqrt(2.0)
    if x < 1.0:
        return -math.log1p(-math.erf(x)) / LN10
    return -math.log10(max(math.erfc(x), P_FLOOR))


def signed_score(w: float, neg_log10_p: float) -> float:
    if w > 0:
        return neg_log10_p
    if w < 0:
        return -neg_log10_p
    return 0.0


def significance(t: ContingencyTable) -> KeyStats:
    w = log_odds(t)
    var = log_odds_variance(t)
    z = abs(w) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))
    return KeyStats(w=w, var=var, z=z, p=p, score=signed_score(w, _neg_log10_normal_tail(z)))


def chi2_score(t: ContingencyTable) -> float:
    """Pearson chi-square on the smoothed table, signed by ``w``."""
    al = t.alpha
    a, b, c, d = t.a + al, t.b + al, t.c + al, t.d + al
    n = a + b + c + d
    stat = n * (a * d - b * c) ** 2 / ((a + b) * (c + d) * (a + c) * (b + d))
    p = math.erfc(math.sqrt(stat / 2.0))
    return signed_score(log_odds(t), -math.log10(max(p, P_FLOOR)))


# ---------------------------------------------------------------------------
# vectorised forms used for whole score maps
# ---------------------------------------------------------------------------


def log_odds_array(a, b, c, d, alpha: float = 0.5) -> np.ndarray:
    num = (np.asarray(a, float) + alpha) * (np.asarray(d, float) + alpha)
    den = (np.asarray(b, float) + alpha) * (np.asarray(c, float) + alpha)
    pos = num >= den
    big = np.where(pos, num, den)
    small = np.where(pos, den, num)
    mag = np.log1p((big - small) / small) / LN2
    return np.where(pos, mag, -mag)


def fisher_scores_array(a, b, c, d, alpha: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(w, score)`` arrays for many tables at once."""
    a, b, c, d = (np.asarray(v, float) for v in (a, b, c, d))
    w = log_odds_array(a, b, c, d, alpha)
    var = ((1.0 / (a + alpha) + 1.0 / (d + alpha)) + (1.0 / (b + alpha) + 1.0 / (c + alpha))) / (
        LN2 * LN2
    )
    z = np.abs(w) / np.sqrt(var)
    return w, np.sign(w) * _neg_log10_tail_array(z)


def _neg_log10_tail_array(z: np.ndarray) -> np.ndarray:
    x = z / math.sqrt(2.0)
    small = x < 1.0
    out = np.empty_like(x)
    out[small] = -np.log1p(-special.erf(x[small])) / LN10
    out[~small] = -np.log10(np.maximum(special.erfc(x[~small]), P_FLOOR))
    return out + 0.0


def chi2_scores_array(a, b, c, d, alpha: float = 0.5) -> np.ndarray:
    a, b, c, d = (np.asarray(v, float) + alpha for v in (a, b, c, d))
    n = a + b + c + d
    stat = n * (a * d - b * c) ** 2 / ((a + b) * (c + d) * (a + c) * (b + d))
    p = special.erfc(np.sqrt(stat / 2.0))
    w = log_odds_array(a - alpha, b - alpha, c - alpha, d - alpha, alpha)
    return np.sign(w) * -np.log10(np.maximum(p, P_FLOOR)) + 0.0


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


@dataclass
class TableSet:
    """Contingency tables for every observed key, stored column-wise."""

    keys: np.ndarray  # uint64, sorted
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    support: np.ndarray  # molecules containing the key
    depth_min: np.ndarray
    depth_max: np.ndarray
    n_molecules: int
    mode: str = "presence"
    alpha: float = 0.5

    def __len__(self) -> int:
        return len(self.keys)

    def table(self, key: int) -> ContingencyTable:
        i = int(np.searchsorted(self.keys, np.uint64(key)))
        if i >= len(self.keys) or int(self.keys[i]) != key:
            raise KeyError(key)
        return ContingencyTable(
            float(self.a[i]), float(self.b[i]), float(self.c[i]), float(self.d[i]), self.alpha
        )

    def as_dict(self) -> dict[int, ContingencyTable]:
        return {int(k): self.table(int(k)) for k in self.keys}

    def __iter__(self):
        for k in self.keys:
            yield int(k)


def key_depths(indexes: Sequence[FragmentIndex]) -> dict[int, tuple[int, int]]:
    out: dict[int, tuple[int, int]] = {}
    for ix in indexes:
        for h in ix.hits:
            lo_hi = out.get(h.key)
            if lo_hi is None:
                out[h.key] = (h.depth, h.depth)
            elif h.depth < lo_hi[0] or h.depth > lo_hi[1]:
                out[h.key] = (min(lo_hi[0], h.depth), max(lo_hi[1], h.depth))
    return out


def accumulate_tables(
    indexes: Sequence[FragmentIndex],
    labels: Sequence[int],
    mode: str = "presence",
    alpha: float = 0.5,
) -> TableSet:
    """Count (a, b, c, d) for every key seen in ``indexes``.

    In count mode a/b sum per-molecule occurrences while c/d still count
    molecules lacking the key, so a+b+c+d no longer equals N.
    """
    if mode not in ("presence", "count"):
        raise ValueError(f"unknown mode {mode!r}")
    if len(indexes) == 0:
        raise ValueError("empty dataset")
    if len(indexes) != len(labels):
        raise ValueError("indexes and labels differ in length")
    y = np.asarray(labels)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        warnings.warn("single-class dataset: every key shares one sign structure", stacklevel=2)

    pos_mol: dict[int, int] = {}
    neg_mol: dict[int, int] = {}
    pos_occ: dict[int, int] = {}
    neg_occ: dict[int, int] = {}
    for ix, label in zip(indexes, y):
        mol, occ = (pos_mol, pos_occ) if label == 1 else (neg_mol, neg_occ)
        for key, cnt in ix.key_counts.items():
            mol[key] = mol.get(key, 0) + 1
            occ[key] = occ.get(key, 0) + cnt

    keys = np.array(sorted(set(pos_mol) | set(neg_mol)), dtype=np.uint64)
    pm = np.array([pos_mol.get(int(k), 0) for k in keys], dtype=np.int64)
    nm = np.array([neg_mol.get(int(k), 0) for k in keys], dtype=np.int64)
    if mode == "presence":
        a, b = pm, nm
    else:
        a = np.array([pos_occ.get(int(k), 0) for k in keys], dtype=np.int64)
        b = np.array([neg_occ.get(int(k), 0) for k in keys], dtype=np.int64)
    depths = key_depths(indexes)
    return TableSet(
        keys=keys,
        a=a,
        b=b,
        c=n_pos - pm,
        d=n_neg - nm,
        support=pm + nm,
        depth_min=np.array([depths[int(k)][0] for k in keys], dtype=np.int64),
        depth_max=np.array([depths[int(k)][1] for k in keys], dtype=np.int64),
        n_molecules=len(indexes),
        mode=mode,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# score maps
# ---------------------------------------------------------------------------


@dataclass
class ScoreMap:
    """Signed per-key scores for one interaction order (1D, 2D or 3D)."""

    order: str
    stat_variant: str
    keys: np.ndarray
    scores: np.ndarray
    support: np.ndarray
    depth_min: np.ndarray
    depth_max: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    _lookup: dict[int, float] | None = field(default=None, init=False, repr=False)

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key: int) -> bool:
        return key in self.lookup

    @property
    def lookup(self) -> dict[int, float]:
        if self._lookup is None:
            self._lookup = dict(zip(self.keys.tolist(), self.scores.tolist()))
        return self._lookup

    def score(self, key: int) -> float:
        return self.lookup.get(key, 0.0)

    def with_scores(self, scores: np.ndarray) -> ScoreMap:
        return ScoreMap(
            order=self.order,
            stat_variant=self.stat_variant,
            keys=self.keys,
            scores=np.asarray(scores, dtype=float),
            support=self.support,
            depth_min=self.depth_min,
            depth_max=self.depth_max,
            columns=self.columns,
        )

    def write(self, fh: TextIO, header: Sequence[str] = ()) -> None:
        """Write one CSV row per key, sorted by key, after ``#`` header lines."""
        for line in header:
            fh.write(f"# {line}\n")
        extra = list(self.columns)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["key", "depth_min", "depth_max", *extra, "score", "support"])
        for i, key in enumerate(self.keys):
            row = [f"{int(key):016x}", int(self.depth_min[i]), int(self.depth_max[i])]
            for name in extra:
                v = self.columns[name][i]
                row.append(repr(float(v)) if isinstance(v, np.floating) else int(v))
            row += [repr(float(self.scores[i])), int(self.support[i])]
            writer.writerow(row)


def build_score_map(tables: TableSet, stat_variant: str = "fisher_onetailed") -> ScoreMap:
    if stat_variant not in STAT_1D:
        raise ValueError(f"unknown 1D statistic {stat_variant!r}; choose from {STAT_1D}")
    if len(tables) == 0:
        raise ValueError("no tables")
    w, score = fisher_scores_array(tables.a, tables.b, tables.c, tables.d, tables.alpha)
    if stat_variant == "chi2":
        score = chi2_scores_array(tables.a, tables.b, tables.c, tables.d, tables.alpha)
    return ScoreMap(
        order="1D",
        stat_variant=stat_variant,
        keys=tables.keys,
        scores=score,
        support=tables.support,
        depth_min=tables.depth_min,
        depth_max=tables.depth_max,
        columns={"a": tables.a, "b": tables.b, "c": tables.c, "d": tables.d, "w": w},
    )
