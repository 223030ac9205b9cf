"""Leakage control for prevalence scores.

Two strategies adjust scores computed once on the full dataset:

* dummy masking, per fold: a key unseen in the training fold is zeroed, every
  other score is multiplied by ``n_train / n_total``;
* key-LOO, fold free: keys carried by fewer than ``k`` molecules are zeroed and
  the rest are multiplied by ``s``.

The exact feature-level leave-one-out weight and the bound audit that
compares key-LOO against it live here as well.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from molftp.chem import FragmentIndex
from molftp.prevalence import ContingencyTable, ScoreMap, TableSet, log_odds, log_odds_array

CELLS = ("a", "b", "c", "d")


class LeakageError(RuntimeError):
    """Internal inconsistency between score maps and support counts."""


@dataclass(frozen=True)
class FoldSpec:
    fold_id: int
    train_ids: frozenset[int]
    test_ids: frozenset[int]

    def __post_init__(self):
        if self.train_ids & self.test_ids:
            raise ValueError("train and test ids overlap")


@dataclass
class KeySupport:
    """Molecule support per key, over the full data and optionally a train fold."""

    keys: np.ndarray  # sorted uint64
    n_total: np.ndarray
    n_train: np.ndarray | None = None
    n_molecules: int = 0

    def positions(self, keys: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self.keys, keys)
        pos_c = np.minimum(pos, max(len(self.keys) - 1, 0))
        if len(keys) and (len(self.keys) == 0 or np.any(self.keys[pos_c] != keys)):
            raise LeakageError("score map holds keys missing from the support table")
        return pos_c


def key_support(indexes: Sequence[FragmentIndex], fold: FoldSpec | None = None) -> KeySupport:
    total: dict[int, int] = {}
    train: dict[int, int] = {}
    n = len(indexes)
    if fold is not None and any(not 0 <= i < n for i in fold.train_ids | fold.test_ids):
        raise ValueError("fold ids out of range")
    for row, ix in enumerate(indexes):
        in_train = fold is not None and row in fold.train_ids
        for k in ix.key_presence:
            total[k] = total.get(k, 0) + 1
            if in_train:
                train[k] = train.get(k, 0) + 1
    keys = np.array(sorted(total), dtype=np.uint64)
    n_total = np.array([total[int(k)] for k in keys], dtype=np.int64)
    n_train = None
    if fold is not None:
        n_train = np.array([train.get(int(k), 0) for k in keys], dtype=np.int64)
    return KeySupport(keys, n_total, n_train, n_molecules=n)


def dummy_mask(scores: ScoreMap, support: KeySupport) -> ScoreMap:
    """Zero keys absent from the train fold, scale the rest by n_train / n_total."""
    if support.n_train is None:
        raise ValueError("support has no train-fold counts")
    pos = support.positions(scores.keys)
    n_train = support.n_train[pos]
    n_total = support.n_total[pos]
    factor = n_train / n_total
    return scores.with_scores(np.where(n_train == 0, 0.0, scores.scores * factor))


@dataclass(frozen=True)
class LooConfig:
    k: int = 2
    s: float | None = None  # None means (N - 1) / N
    c_alpha: float | None = None  # None means 2 log2((1 + alpha) / alpha)
    alpha: float = 0.5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.s is not None and not 0.0 < self.s <= 1.0:
            raise ValueError("s must lie in (0, 1]")

    def scale(self, n: int) -> float:
        return (n - 1) / n if self.s is None else self.s

    def bound_constant(self) -> float:
        if self.c_alpha is not None:
            return self.c_alpha
        return 2.0 * math.log2((1.0 + self.alpha) / self.alpha)


def key_loo_adjust(scores: ScoreMap, support: KeySupport, cfg: LooConfig) -> ScoreMap:
    """Zero keys with full-data support below ``k``; scale the rest by ``s``."""
    pos = support.positions(scores.keys)
    n_total = support.n_total[pos]
    s = cfg.scale(support.n_molecules)
    return scores.with_scores(np.where(n_total < cfg.k, 0.0, s * scores.scores))


def key_loo_weight(t: ContingencyTable, cfg: LooConfig) -> float:
    """Key-LOO simulated log-odds for one presence-mode table."""
    if t.a + t.b < cfg.k:
        return 0.0
    n = int(round(t.n))
    return cfg.scale(n) * log_odds(t)


def true_loo_weight(t: ContingencyTable) -> float:
    """Support-weighted mean of ``w`` over every single-molecule removal."""
    n = t.n
    if n < 2:
        raise ValueError("true LOO needs at least two molecules")
    total = 0.0
    for cell in CELLS:
        weight = getattr(t, cell)
        if weight > 0:
            total += weight / n * log_odds(t.decremented(cell))
    return total


def influence_delta(t: ContingencyTable, cell: str) -> float:
    if cell not in CELLS:
        raise ValueError(f"unknown cell {cell!r}")
    if getattr(t, cell) < 1:
        raise ValueError(f"cell {cell} is empty; nothing to remove")
    return log_odds(t.decremented(cell)) - log_odds(t)


def true_loo_array(a, b, c, d, alpha: float = 0.5) -> np.ndarray:
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    n = a + b + c + d
    out = np.zeros_like(n)
    for cnt, dec in (
        (a, (a - 1, b, c, d)),
        (b, (a, b - 1, c, d)),
        (c, (a, b, c - 1, d)),
        (d, (a, b, c, d - 1)),
    ):
        live = cnt > 0
        if live.any():
            w = log_odds_array(*(v[live] for v in dec), alpha=alpha)
            out[live] += cnt[live] / n[live] * w
    return out


@dataclass
class BoundReport:
    keys: np.ndarray
    deviation: np.ndarray
    bound: np.ndarray
    within: np.ndarray
    k: int
    s: float
    c_alpha: float
    n_molecules: int
    extra: dict = field(default_factory=dict)

    @property
    def fraction_within(self) -> float:
        return float(self.within.mean()) if len(self.within) else 1.0

    def summary(self) -> str:
        return (
            f"fraction_within={self.fraction_within:.6f} k={self.k} s={self.s!r} "
            f"C_alpha={self.c_alpha!r} n_keys={len(self.keys)} n_molecules={self.n_molecules}"
        )

    def write(self, fh: TextIO, header: Iterable[str] = ()) -> None:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(f"# {self.summary()}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["key", "deviation", "bound", "within"])
        for i, key in enumerate(self.keys):
            writer.writerow(
                [f"{int(key):016x}", repr(float(self.deviation[i])), repr(float(self.bound[i])), int(self.within[i])]
            )


def loo_bound_report(tables: TableSet, cfg: LooConfig, scores: ScoreMap | None = None) -> BoundReport:
    """Compare key-LOO weights against exact feature-level LOO for every key.

    ``scores``, when given, must be the 1D map built from ``tables``; it is
    only checked for key agreement since the audit works on ``w``.
    """
    if tables.mode != "presence":
        raise ValueError("the bound audit needs presence-mode tables")
    if scores is not None and not np.array_equal(scores.keys, tables.keys):
        raise LeakageError("score map was not built from these tables")
    n = tables.n_molecules
    s = cfg.scale(n)
    w = log_odds_array(tables.a, tables.b, tables.c, tables.d, tables.alpha)
    w_loo = true_loo_array(tables.a, tables.b, tables.c, tables.d, tables.alpha)
    w_kloo = np.where(tables.support < cfg.k, 0.0, s * w)
    deviation = np.abs(w_kloo - w_loo)
    bound = cfg.bound_constant() / cfg.k + abs(s - (n - 1) / n) * np.abs(w)
    return BoundReport(
        keys=tables.keys,
        deviation=deviation,
        bound=bound,
        within=deviation <= bound,
        k=cfg.k,
        s=s,
        c_alpha=cfg.bound_constant(),
        n_molecules=n,
    )
