"""End-to-end orchestration: ingest, score, mask, vectorise, cross-validate, export.

Every file written here starts with ``#`` lines carrying the package version
and the effective configuration, so an output can be regenerated from its
own header.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from molftp import __version__
from molftp.chem import FragmentIndex, SmilesError, enumerate_fragments, parse_smiles
from molftp.config import PipelineConfig
from molftp.leakage import (
    BoundReport,
    FoldSpec,
    LooConfig,
    dummy_mask,
    key_loo_adjust,
    key_support,
    loo_bound_report,
)
from molftp.metakeys import build_contrast_pairs, build_triplets, mcnemar_scores, triplet_scores
from molftp.modeling import compute_metrics, fit_predict, flip_labels, stratified_folds, summarize
from molftp.prevalence import ScoreMap, accumulate_tables, build_score_map
from molftp.similarity import SimilarPair, key_fingerprint, similar_pairs
from molftp.vectorizer import column_names, vectorize

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Unreadable or invalid dataset."""


@dataclass
class Dataset:
    smiles: list[str]
    labels: np.ndarray
    extras: np.ndarray  # rows x len(extra_names)
    extra_names: list[str]
    rows: list[int]  # data-row number of each kept molecule
    errors: list[tuple[int, str]] = field(default_factory=list)
    fieldnames: list[str] = field(default_factory=list)
    raw_rows: list[list[str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.smiles)


def _data_lines(fh):
    for line in fh:
        if not line.startswith("#"):
            yield line


def read_dataset(path: str | Path, extra_columns: Sequence[str] = ()) -> Dataset:
    """Read a headered CSV with ``smiles`` and ``label`` columns.

    Rows whose SMILES fail to parse or whose label is not 0/1 are reported in
    ``errors`` (data-row number, message) and skipped. Lines starting with
    ``#`` are provenance headers and are ignored.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_dataset(fh, extra_columns)


def parse_dataset(fh, extra_columns: Sequence[str] = ()) -> Dataset:
    reader = csv.reader(_data_lines(fh))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("dataset has no header") from None
    header = [h.strip() for h in header]
    for col in ("smiles", "label", *extra_columns):
        if col not in header:
            raise DataError(f"missing column {col!r}")
    i_smi, i_lab = header.index("smiles"), header.index("label")
    i_extra = [header.index(c) for c in extra_columns]

    smiles, labels, extras, rows, errors, raw = [], [], [], [], [], []
    for row_no, row in enumerate(reader):
        raw.append(row)
        if len(row) != len(header):
            errors.append((row_no, f"expected {len(header)} fields, got {len(row)}"))
            continue
        lab = row[i_lab].strip()
        if lab not in ("0", "1"):
            errors.append((row_no, f"label {lab!r} is not 0/1"))
            continue
        try:
            vals = [float(row[i]) for i in i_extra]
        except ValueError:
            errors.append((row_no, "non-numeric extra column"))
            continue
        smiles.append(row[i_smi].strip())
        labels.append(int(lab))
        extras.append(vals)
        rows.append(row_no)
    return Dataset(
        smiles=smiles,
        labels=np.array(labels, dtype=np.int64),
        extras=np.array(extras, dtype=float).reshape(len(smiles), len(i_extra)),
        extra_names=list(extra_columns),
        rows=rows,
        errors=errors,
        fieldnames=header,
        raw_rows=raw,
    )


@dataclass
class Corpus:
    """Parsed molecules with everything fold-independent precomputed."""

    indexes: list[FragmentIndex]
    labels: np.ndarray
    rows: list[int]
    extras: np.ndarray
    errors: list[tuple[int, str]]
    pairs: list[SimilarPair] | None = None

    def __len__(self) -> int:
        return len(self.indexes)


def build_corpus(data: Dataset, cfg: PipelineConfig) -> Corpus:
    indexes, keep, errors = [], [], list(data.errors)
    for i, smi in enumerate(data.smiles):
        try:
            mol = parse_smiles(smi)
        except SmilesError as exc:
            errors.append((data.rows[i], str(exc)))
            continue
        indexes.append(enumerate_fragments(mol, cfg.radius, molecule_id=data.rows[i]))
        keep.append(i)
    errors.sort()
    return Corpus(
        indexes=indexes,
        labels=data.labels[keep],
        rows=[data.rows[i] for i in keep],
        extras=data.extras[keep],
        errors=errors,
    )


def corpus_from_smiles(smiles: Sequence[str], labels, cfg: PipelineConfig) -> Corpus:
    data = Dataset(
        smiles=list(smiles),
        labels=np.asarray(labels, dtype=np.int64),
        extras=np.zeros((len(smiles), 0)),
        extra_names=[],
        rows=list(range(len(smiles))),
    )
    return build_corpus(data, cfg)


# ---------------------------------------------------------------------------
# score maps
# ---------------------------------------------------------------------------


def find_pairs(indexes: Sequence[FragmentIndex], cfg: PipelineConfig) -> list[SimilarPair]:
    fps = [key_fingerprint(ix, min(cfg.sim_radius, ix.radius)) for ix in indexes]
    return similar_pairs(fps, cfg.sim_threshold)


def build_maps(
    indexes: Sequence[FragmentIndex],
    labels: np.ndarray,
    cfg: PipelineConfig,
    pairs: list[SimilarPair] | None = None,
) -> dict[str, ScoreMap]:
    """Score maps for the configured views, computed from exactly these molecules."""
    maps: dict[str, ScoreMap] = {}
    if "1D" in cfg.views:
        tables = accumulate_tables(indexes, labels, mode=cfg.mode, alpha=cfg.alpha)
        maps["1D"] = build_score_map(tables, cfg.stat_1d)
    if "2D" in cfg.views or "3D" in cfg.views:
        if pairs is None:
            pairs = find_pairs(indexes, cfg)
        if "2D" in cfg.views:
            maps["2D"] = mcnemar_scores(build_contrast_pairs(pairs, labels), indexes)
        if "3D" in cfg.views:
            triplets = build_triplets(pairs, labels, cfg.cap_per_anchor)
            maps["3D"] = triplet_scores(triplets, indexes, cfg.stat_3d)
    return maps


def loo_config(cfg: PipelineConfig) -> LooConfig:
    return LooConfig(k=cfg.k, s=cfg.s, c_alpha=cfg.c_alpha, alpha=cfg.alpha)


def fold_maps(
    corpus: Corpus,
    cfg: PipelineConfig,
    fold: FoldSpec | None,
    full_maps: dict[str, ScoreMap] | None = None,
) -> dict[str, ScoreMap]:
    """Score maps a model in ``fold`` may use under the configured leakage strategy."""
    strategy = cfg.leakage
    if strategy == "train_only":
        if fold is None:
            raise ValueError("train_only needs a fold")
        train = sorted(fold.train_ids)
        return build_maps([corpus.indexes[i] for i in train], corpus.labels[train], cfg)
    if full_maps is None:
        if corpus.pairs is None and ("2D" in cfg.views or "3D" in cfg.views):
            corpus.pairs = find_pairs(corpus.indexes, cfg)
        full_maps = build_maps(corpus.indexes, corpus.labels, cfg, corpus.pairs)
    if strategy == "none":
        return full_maps
    if strategy == "key_loo":
        support = key_support(corpus.indexes)
        lcfg = loo_config(cfg)
        return {v: key_loo_adjust(m, support, lcfg) for v, m in full_maps.items()}
    # dummy_mask
    if fold is None:
        return full_maps
    support = key_support(corpus.indexes, fold)
    return {v: dummy_mask(m, support) for v, m in full_maps.items()}


def features(corpus: Corpus, maps: dict[str, ScoreMap], cfg: PipelineConfig, rows=None) -> np.ndarray:
    idx = range(len(corpus)) if rows is None else rows
    x = vectorize([corpus.indexes[i] for i in idx], maps, cfg.radius, cfg.pooling, cfg.gate)
    if corpus.extras.shape[1]:
        x = np.hstack([x, corpus.extras[list(idx)]])
    return x


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def provenance(cfg: PipelineConfig, **extra) -> list[str]:
    lines = [f"molftp {__version__}", f"config {cfg.to_json()}", f"seed {cfg.seed}"]
    lines += [f"{k} {v}" for k, v in extra.items()]
    return lines


@dataclass
class FeaturizeResult:
    x: np.ndarray
    columns: list[str]
    corpus: Corpus
    seconds: float

    @property
    def throughput(self) -> float:
        return len(self.corpus) / self.seconds if self.seconds > 0 else float("inf")


def cmd_featurize(data: Dataset, cfg: PipelineConfig, fold: FoldSpec | None = None) -> FeaturizeResult:
    """Full-data molFTP vectors for every parseable molecule."""
    if cfg.leakage in ("train_only", "none") and fold is None:
        raise ValueError(f"leakage={cfg.leakage} needs a fold for featurize")
    start = time.perf_counter()
    corpus = build_corpus(data, cfg)
    if len(corpus) == 0:
        raise DataError("no parseable molecules")
    maps = fold_maps(corpus, cfg, fold)
    x = features(corpus, maps, cfg)
    seconds = time.perf_counter() - start
    cols = column_names(cfg.views, cfg.radius) + list(data.extra_names)
    return FeaturizeResult(x, cols, corpus, seconds)


def write_vectors(fh, result: FeaturizeResult, cfg: PipelineConfig) -> None:
    for line in provenance(cfg):
        fh.write(f"# {line}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["molecule_id", "label", *result.columns])
    for i, row in enumerate(result.x):
        writer.writerow(
            [result.corpus.rows[i], int(result.corpus.labels[i]), *(repr(float(v)) for v in row)]
        )


@dataclass
class CvResult:
    folds: list[dict]
    aggregate: dict
    config: PipelineConfig
    leaky: bool

    def to_json(self) -> str:
        payload = {
            "molftp": __version__,
            "config": self.config.to_dict(),
            "leakage": self.config.leakage,
            "leaky_baseline": self.leaky,
            "threshold": self.config.threshold,
            "aggregate": self.aggregate,
            "folds": self.folds,
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    def folds_csv(self) -> str:
        buf = io.StringIO()
        for line in provenance(self.config):
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        names = ["auroc", "auprc", "precision", "recall", "f1", "accuracy"]
        writer.writerow(["fold", "n_train", "n_test", *names])
        for f in self.folds:
            writer.writerow(
                [f["fold"], f["n_train"], f["n_test"], *("" if f[m] is None else repr(f[m]) for m in names)]
            )
        return buf.getvalue()


def cross_validate(corpus: Corpus, cfg: PipelineConfig) -> CvResult:
    """Stratified k-fold CV of logistic regression on molFTP vectors."""
    plan = stratified_folds(corpus.labels, cfg.cv_k, cfg.seed)
    full_maps = None
    if cfg.leakage != "train_only":
        if corpus.pairs is None and ("2D" in cfg.views or "3D" in cfg.views):
            corpus.pairs = find_pairs(corpus.indexes, cfg)
        full_maps = build_maps(corpus.indexes, corpus.labels, cfg, corpus.pairs)
    fixed_x = None
    if cfg.leakage in ("none", "key_loo"):
        fixed_x = features(corpus, fold_maps(corpus, cfg, None, full_maps), cfg)

    fold_rows = []
    for fold in plan.folds:
        train = sorted(fold.train_ids)
        test = sorted(fold.test_ids)
        if fixed_x is not None:
            x = fixed_x
        else:
            x = features(corpus, fold_maps(corpus, cfg, fold, full_maps), cfg)
        y = corpus.labels
        if len(np.unique(y[train])) < 2:
            raise DataError(f"fold {fold.fold_id} has a single-class training set")
        prob = fit_predict(x[train], y[train], x[test], cfg.l2, cfg.tol, cfg.max_iter)
        metrics = compute_metrics(y[test], prob, cfg.threshold)
        fold_rows.append({"fold": fold.fold_id, "n_train": len(train), "n_test": len(test), **metrics})
    return CvResult(fold_rows, summarize(fold_rows), cfg, leaky=cfg.leakage == "none")


def cmd_cv(data: Dataset, cfg: PipelineConfig) -> CvResult:
    corpus = build_corpus(data, cfg)
    if len(corpus) == 0:
        raise DataError("no parseable molecules")
    return cross_validate(corpus, cfg)


def cmd_audit_loo(data: Dataset, cfg: PipelineConfig) -> BoundReport:
    corpus = build_corpus(data, cfg)
    if len(corpus) < 2:
        raise DataError("the LOO audit needs at least two molecules")
    tables = accumulate_tables(corpus.indexes, corpus.labels, mode="presence", alpha=cfg.alpha)
    return loo_bound_report(tables, loo_config(cfg), build_score_map(tables, cfg.stat_1d))


def cmd_flip(src: str | Path, dst: str | Path, fraction: float, seed: int = 0) -> np.ndarray:
    """Copy a dataset with flipped labels; writes ``<dst>.flipmask.csv`` alongside."""
    with open(src, newline="", encoding="utf-8") as fh:
        lines = list(fh)
    header_lines = [ln for ln in lines if ln.startswith("#")]
    data = parse_dataset(io.StringIO("".join(lines)))
    if data.errors:
        bad = ", ".join(str(r) for r, _ in data.errors[:5])
        raise DataError(f"cannot flip labels: invalid rows {bad}")
    flipped, mask = flip_labels(data.labels, fraction, seed)
    i_lab = data.fieldnames.index("label")
    with open(dst, "w", newline="", encoding="utf-8") as fh:
        fh.writelines(header_lines)
        fh.write(f"# flip fraction={fraction!r} seed={seed} n_flipped={int(mask.sum())} source={Path(src).name}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.fieldnames)
        for row, y in zip(data.raw_rows, flipped):
            out = list(row)
            out[i_lab] = str(int(y))
            writer.writerow(out)
    with open(f"{dst}.flipmask.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# flip fraction={fraction!r} seed={seed} source={Path(src).name}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "flipped"])
        for i, m in enumerate(mask):
            writer.writerow([i, int(m)])
    return mask
