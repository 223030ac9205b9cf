"""Featurize a planted corpus and cross-validate logistic regression on it.

Run: python3 demos/featurize_and_cv.py
"""

import numpy as np

from molftp.config import PipelineConfig
from molftp.pipeline import cmd_featurize, corpus_from_smiles, cross_validate, Dataset
from molftp.synthetic import planted_corpus
from molftp.vectorizer import column_names

data = planted_corpus(400, seed=0)
n = len(data.smiles)
cfg = PipelineConfig()

# whole-dataset vectors, as written by `molftp featurize`
res = cmd_featurize(Dataset(list(data.smiles), np.asarray(data.labels), np.zeros((n, 0)), [], list(range(n))), cfg)
names = column_names(cfg.views, cfg.radius)
print(f"{res.x.shape[0]} molecules x {res.x.shape[1]} features at {res.throughput:.0f} molecules/s")
for name, value in list(zip(names, res.x[0]))[:6]:
    print(f"  {name:>14s} {value: .4f}")

# fold-internal vectors with the default key-LOO control
corpus = corpus_from_smiles(data.smiles, data.labels, cfg)
cv = cross_validate(corpus, cfg)
for metric in ("auroc", "auprc", "f1"):
    agg = cv.aggregate[metric]
    print(f"{metric:>6s} {agg['mean']:.3f} +/- {agg['std']:.3f} over {agg['n_folds']} folds")
