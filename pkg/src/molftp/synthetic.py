"""Seeded synthetic datasets for desk-scale experiments.

``planted_corpus`` decorates ring scaffolds with substituents; a few
substituents are planted as label drivers and a tunable fraction of labels is
then flipped. ``leaky_corpus`` draws labels at random and gives every
molecule a private tag atom, so its fragments are either shared by all
molecules or owned by one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

# ring scaffolds; "{0}".."{2}" are attachment points, "{r}" the ring digit
SCAFFOLDS = [
    "c{r}cc({0})cc({1})c{r}",
    "c{r}cc({0})c({1})cc{r}",
    "c{r}cc({0})ncc{r}{1}",
    "c{r}cc({0})sc{r}{1}",
    "c{r}cc({0})oc{r}{1}",
    "C{r}CC({0})CC({1})C{r}",
    "C{r}CN({0})CC({1})C{r}",
    "C{r}CN({0})CCN{r}{1}",
    "c{r}cc({0})c({1})cc{r}{2}",
    "c{r}nc({0})nc({1})c{r}",
]

# (smiles, effect on the label score); "{r}" marks a private ring digit
SUBSTITUENTS = [
    ("C", 0.0),
    ("CC", 0.0),
    ("C(C)C", 0.0),
    ("OC", 0.0),
    ("Cl", 0.0),
    ("F", 0.0),
    ("Br", 0.0),
    ("C#N", 0.0),
    ("CO", 0.0),
    ("CCC", 0.0),
    ("N(C)C", 0.0),
    ("C{r}CC{r}", 0.0),
    ("C(=O)OC", 0.0),
    ("OCC", 0.0),
    ("SC", 0.0),
    ("C(F)(F)F", 1.5),  # planted: lipophilic, drives the positive class
    ("c{r}ccccc{r}", 1.2),
    ("C{r}CCCC{r}", 1.0),
    ("C(=O)O", -1.8),  # planted: acid, drives the negative class
    ("S(=O)(=O)N", -1.5),
    ("C(=O)NC", -1.0),
    ("[N+](=O)[O-]", -0.8),
    ("N{r}CCOCC{r}", -0.6),
]

LINKERS = ["", "", "C", "CC", "O", "N", "C(=O)"]


@dataclass
class SyntheticDataset:
    smiles: list[str]
    labels: np.ndarray
    clean_labels: np.ndarray
    extras: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    extra_names: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.smiles)


def _decorate(template: str, rng: np.random.Generator, n_slots: int):
    """Fill scaffold slots; returns the SMILES and the summed planted effect."""
    effect = 0.0
    fills = []
    digit = 2
    for _ in range(n_slots):
        if rng.random() < 0.25:
            fills.append("[H]")
            continue
        sub, eff = SUBSTITUENTS[rng.integers(len(SUBSTITUENTS))]
        linker = LINKERS[rng.integers(len(LINKERS))]
        if "{r}" in sub:
            sub = sub.replace("{r}", str(digit))
            digit += 1
        fills.append(linker + sub)
        effect += eff
    text = template.replace("{r}", "1").format(*fills)
    # "[H]" placeholders inside branches are dropped so every atom is heavy
    return text.replace("([H])", "").replace("[H]", ""), effect


def planted_corpus(
    n: int = 2000,
    seed: int = 0,
    noise: float = 0.1,
    bias: float = 0.6,
) -> SyntheticDataset:
    """Scaffold/substituent molecules labelled by planted fragments plus label noise.

    ``bias`` shifts the class balance toward positives; ``noise`` is the
    fraction of labels inverted after the planted rule is applied.
    """
    rng = np.random.default_rng(seed)
    smiles, clean = [], []
    seen: set[str] = set()
    while len(smiles) < n:
        template = SCAFFOLDS[rng.integers(len(SCAFFOLDS))]
        n_slots = template.count("{") - template.count("{r}")
        text, effect = _decorate(template, rng, n_slots)
        if text in seen:
            continue
        seen.add(text)
        smiles.append(text)
        clean.append(int(effect + bias + rng.normal(0.0, 0.3) > 0))
    clean_arr = np.array(clean, dtype=np.int64)
    n_flip = int(round(noise * n))
    flip = np.zeros(n, dtype=bool)
    flip[rng.choice(n, size=n_flip, replace=False)] = True
    return SyntheticDataset(smiles, np.where(flip, 1 - clean_arr, clean_arr), clean_arr)


# tag atoms with pairwise distinct seed invariants (element x charge x H count)
_TAG_ELEMENTS = (
    "C", "N", "O", "S", "P", "Si", "B", "Se", "Ge", "As",
    "Sn", "Te", "Al", "Ga", "Sb", "Bi", "Pb", "Tl", "In", "Hg",
)
_TAG_ATOMS = [
    f"[{el}{'H' + str(h) if h else ''}{'' if q == 0 else f'{q:+d}'}]"
    for el in _TAG_ELEMENTS
    for h in range(4)
    for q in range(-3, 4)
]


def leaky_corpus(n: int = 200, seed: int = 0) -> SyntheticDataset:
    """Random labels on ``CCCC[X]`` where each molecule owns a distinct tag atom X.

    Every key either occurs in all molecules (no label information) or in
    exactly one (its label and nothing else), so only features computed with
    the held-out molecule's own label can rank the held-out molecules.
    """
    if n > len(_TAG_ATOMS):
        raise ValueError(f"at most {len(_TAG_ATOMS)} molecules")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=n).astype(np.int64)
    tags = rng.choice(len(_TAG_ATOMS), size=n, replace=False)
    smiles = ["CCCC" + _TAG_ATOMS[t] for t in tags]
    return SyntheticDataset(smiles, labels, labels.copy())


def write_dataset(path, data: SyntheticDataset, header: list[str] | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header or ():
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["smiles", "label", *data.extra_names])
        for i, (s, y) in enumerate(zip(data.smiles, data.labels)):
            extra = [repr(float(v)) for v in data.extras[i]] if data.extra_names else []
            writer.writerow([s, int(y), *extra])
