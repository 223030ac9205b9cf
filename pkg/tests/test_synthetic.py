import numpy as np
import pytest

from molftp.chem import parse_smiles
from molftp.pipeline import read_dataset
from molftp.synthetic import leaky_corpus, planted_corpus, write_dataset


def test_planted_corpus_shape_and_noise():
    data = planted_corpus(300, seed=4, noise=0.1)
    assert len(data) == 300 == len(set(data.smiles))
    assert int((data.labels != data.clean_labels).sum()) == 30
    assert 0.5 < data.labels.mean() < 0.9
    for smi in data.smiles:
        parse_smiles(smi)


def test_planted_corpus_seeded():
    assert planted_corpus(50, seed=1).smiles == planted_corpus(50, seed=1).smiles
    assert planted_corpus(50, seed=1).smiles != planted_corpus(50, seed=2).smiles


def test_leaky_corpus_tags_are_private():
    data = leaky_corpus(200, seed=0)
    tags = [s[4:] for s in data.smiles]
    assert len(set(tags)) == 200
    assert all(s.startswith("CCCC") for s in data.smiles)
    for smi in data.smiles:
        parse_smiles(smi)
    with pytest.raises(ValueError):
        leaky_corpus(10_000)


def test_write_and_read_back(tmp_path):
    data = planted_corpus(20, seed=0)
    path = tmp_path / "d.csv"
    write_dataset(path, data, ["generated for a test"])
    assert path.read_text().startswith("# generated for a test\nsmiles,label\n")
    back = read_dataset(path)
    assert back.smiles == data.smiles
    assert np.array_equal(back.labels, data.labels)
