import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from molftp.chem import FragmentHit, FragmentIndex, enumerate_fragments, featurize_smiles, parse_smiles
from molftp.prevalence import ScoreMap, accumulate_tables, build_score_map
from molftp.vectorizer import (
    POOLING,
    AtomScoreTable,
    assemble_molftp,
    atom_score_table,
    block,
    column_names,
    margin_block,
    pooled_margin,
    vectorize,
)


def per_atom_table(scores):
    """Depth-0-only table with the given per-atom scores."""
    cells = np.zeros((len(scores), 3))
    cells[:, 0] = scores
    return AtomScoreTable(cells)


def test_atom_table_examples():
    methane = enumerate_fragments(parse_smiles("C"), 6)
    key = methane.hits[0].key
    t = atom_score_table(methane, {key: 2.0})
    assert t.cells.shape == (1, 7)
    assert t.cells[0, 0] == 2.0 and t.cells.sum() == 2.0
    benzene = enumerate_fragments(parse_smiles("c1ccccc1"), 2)
    t = atom_score_table(benzene, {h.key: 1.0 for h in benzene.hits})
    assert np.array_equal(t.cells, np.ones((6, 3)))
    assert not atom_score_table(benzene, {}).cells.any()


def test_margin_examples():
    t = per_atom_table([2.0, -1.0, 0.5])
    v = margin_block(t, 0.0)
    assert v[0] == 1.0
    assert v[1] == pytest.approx(1 / 3, rel=1e-15)
    zero = margin_block(per_atom_table([0.0, 0.0]), 0.0)
    assert not zero.any()
    allpos = margin_block(per_atom_table([1.0, 2.0, 3.0, 4.0]), 0.0)
    # depth 0 unanimous; empty depths cancel to 0 under the gate-0 rule
    assert allpos[2] == 1.0 and not allpos[3:].any()


def test_gate_excludes_small_scores():
    t = per_atom_table([2.0, -1.0, 0.5])
    assert margin_block(t, 0.75)[0] == 0.0
    with pytest.raises(ValueError):
        margin_block(t, -1.0)


def test_pooled_examples():
    t = per_atom_table([2.0, -1.0, 0.5])
    # sign-equivariant extreme margin: strongest positive plus strongest negative
    assert pooled_margin(t, "max")[0] == 1.0
    assert pooled_margin(t, "median")[0] == 0.5
    assert pooled_margin(t, "mean")[0] == pytest.approx(0.5, rel=1e-15)
    single = per_atom_table([-0.7])
    for op in POOLING[1:]:
        assert pooled_margin(single, op)[0] == pytest.approx(-0.7, rel=1e-12)
    with pytest.raises(ValueError):
        pooled_margin(t, "sum")


def test_assemble_lengths():
    b6 = np.zeros(9)
    assert len(assemble_molftp({"1D": b6, "2D": b6, "3D": b6})) == 27
    assert len(assemble_molftp({"1D": b6})) == 9
    b2 = np.zeros(5)
    assert len(assemble_molftp({"1D": b2, "3D": b2})) == 10
    with pytest.raises(ValueError):
        assemble_molftp({})
    with pytest.raises(ValueError):
        assemble_molftp({"1D": b6, "2D": b2})
    with pytest.raises(ValueError):
        assemble_molftp({"4D": b6})


def test_column_names():
    names = column_names(("1D", "2D", "3D"), 6)
    assert len(names) == 27
    assert names[:3] == ["d1_margin", "d1_margin_rel", "d1_net_0"]
    assert names[-1] == "d3_net_6"


def test_vectorize_masked_molecule_is_zero(small_set):
    indexes, labels, _ = small_set
    m = build_score_map(accumulate_tables(indexes, labels))
    masked = m.with_scores(np.zeros(len(m)))
    x = vectorize(indexes[:5], {"1D": masked, "2D": masked, "3D": masked}, 3)
    assert x.shape == (5, 18)
    assert not x.any()


def test_presence_equals_count_without_repeats():
    # no molecule repeats an environment, so both modes give the same tables
    smiles = ["CCO", "CCN", "CS", "CC(O)N", "OCC(N)S", "OC(N)CCl"]
    ixs = featurize_smiles(smiles, 2)
    assert all(max(ix.key_counts.values()) == 1 for ix in ixs)
    y = [1, 0, 1, 0, 1, 0]
    pres = build_score_map(accumulate_tables(ixs, y, mode="presence"))
    count = build_score_map(accumulate_tables(ixs, y, mode="count"))
    assert np.array_equal(vectorize(ixs, {"1D": pres}, 2), vectorize(ixs, {"1D": count}, 2))


# -- properties --------------------------------------------------------------

tables = hnp.arrays(
    float,
    st.tuples(st.integers(1, 8), st.integers(1, 5)),
    elements=st.floats(-50, 50, allow_nan=False).map(lambda v: round(v, 3)),
)


@settings(max_examples=150, deadline=None)
@given(tables, st.sampled_from(POOLING), st.sampled_from([0.0, 0.5, 2.0]))
def test_property_sign_equivariance(cells, pooling, gate):
    v = block(AtomScoreTable(cells), pooling, gate)
    w = block(AtomScoreTable(-cells), pooling, gate)
    assert np.allclose(w, -v, rtol=1e-12, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(tables, st.sampled_from([0.0, 0.5, 2.0]))
def test_property_counting_bounds(cells, gate):
    v = margin_block(AtomScoreTable(cells), gate)
    assert abs(v[0]) <= cells.shape[0]
    assert np.all(np.abs(v[1:]) <= 1.0)


@settings(max_examples=100, deadline=None)
@given(tables, st.sampled_from(["max", "mean", "median", "softmax"]))
def test_property_pooled_normalized(cells, pooling):
    # these ops stay within the extreme magnitude; logsumexp can exceed it
    v = pooled_margin(AtomScoreTable(cells), pooling)
    assert np.all(np.abs(v[1:]) <= 1.0 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.sampled_from(POOLING))
def test_property_zero_propagation(n_atoms, pooling):
    ix = FragmentIndex(0, [FragmentHit(a + 1, 0, a) for a in range(n_atoms)], n_atoms, 2)
    z = np.zeros(0, dtype=np.int64)
    empty = ScoreMap("1D", "fisher_onetailed", np.zeros(0, dtype=np.uint64), np.zeros(0), z, z, z)
    assert not vectorize([ix], {"1D": empty}, 2, pooling).any()
