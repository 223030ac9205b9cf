"""CV AUPRC as a growing fraction of training labels is inverted.

Run: python3 demos/label_flip_sweep.py
"""

from molftp.config import PipelineConfig
from molftp.modeling import flip_labels
from molftp.pipeline import corpus_from_smiles, cross_validate
from molftp.synthetic import planted_corpus

for seed in range(3):
    data = planted_corpus(500, seed=seed)
    cfg = PipelineConfig(seed=seed)
    row = []
    for fraction in (0.0, 0.1, 0.2, 0.3):
        y, _ = flip_labels(data.labels, fraction, seed)
        r = cross_validate(corpus_from_smiles(data.smiles, y, cfg), cfg)
        row.append(f"{fraction:.1f}:{r.aggregate['auprc']['mean']:.3f}")
    print(f"seed {seed}  " + "  ".join(row))
