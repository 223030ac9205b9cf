import numpy as np
import pytest

from molftp.chem import featurize_smiles
from molftp.synthetic import planted_corpus


@pytest.fixture(scope="session")
def small_set():
    """40 planted molecules enumerated to radius 3: (indexes, labels, smiles)."""
    data = planted_corpus(40, seed=7)
    return featurize_smiles(data.smiles, 3), np.asarray(data.labels), data.smiles


@pytest.fixture(scope="session")
def medium_set():
    data = planted_corpus(150, seed=3)
    return featurize_smiles(data.smiles, 6), np.asarray(data.labels), data.smiles


ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
