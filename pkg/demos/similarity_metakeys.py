"""Similar pairs, contrast pairs and anchor triplets on a handful of molecules.

Run: python3 demos/similarity_metakeys.py
"""

from molftp.chem import featurize_smiles
from molftp.metakeys import build_contrast_pairs, build_triplets, mcnemar_scores, triplet_scores
from molftp.similarity import key_fingerprint, similar_pairs

smiles = ["CCOc1ccccc1", "CCOc1ccccc1Cl", "CCNc1ccccc1", "CCNc1ccccc1Cl", "OCCOc1ccccc1", "CC(=O)Nc1ccccc1"]
labels = [1, 1, 0, 0, 1, 0]
indexes = featurize_smiles(smiles, 3)
fps = [key_fingerprint(ix, 2) for ix in indexes]
pairs = similar_pairs(fps, 0.3)
for p in pairs:
    print(f"{smiles[p.i]:>16s} ~ {smiles[p.j]:<16s} {p.similarity:.2f}")

contrast = build_contrast_pairs(pairs, labels)
triplets = build_triplets(pairs, labels)
print(f"{len(contrast)} contrast pairs, {len(triplets)} triplets")
m2 = mcnemar_scores(contrast, indexes)
m3 = triplet_scores(triplets, indexes)
top = sorted(zip(m2.keys.tolist(), m2.scores.tolist()), key=lambda kv: -abs(kv[1]))[:3]
print("strongest 2D keys:", ", ".join(f"{k:#x}:{s:+.2f}" for k, s in top))
print(f"3D map covers {len(m3)} keys")
