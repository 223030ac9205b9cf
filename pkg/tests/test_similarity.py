import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molftp.chem import enumerate_fragments, parse_smiles
from molftp.similarity import KeySetFingerprint, key_fingerprint, similar_pairs, tanimoto

from oracles import brute_pairs, jaccard


def fp(i, keys):
    return KeySetFingerprint(i, frozenset(keys))


def test_fingerprint_examples():
    methane = enumerate_fragments(parse_smiles("C"), 6)
    assert len(key_fingerprint(methane, 2).keys) == 1
    ethanol = enumerate_fragments(parse_smiles("CCO"), 2)
    assert len(key_fingerprint(ethanol, 0).keys) == 3
    assert key_fingerprint(ethanol, 2).keys == ethanol.key_presence


def test_sim_radius_above_enumeration_radius():
    with pytest.raises(ValueError):
        key_fingerprint(enumerate_fragments(parse_smiles("CC"), 1), 2)


def test_tanimoto_examples():
    assert tanimoto(fp(0, "abc"), fp(1, "abc")) == 1.0
    assert tanimoto(fp(0, "abc"), fp(1, "xyz")) == 0.0
    assert tanimoto(fp(0, "ABC"), fp(1, "BCD")) == 0.5
    assert tanimoto(frozenset(), frozenset()) == 0.0


def test_three_molecule_threshold_example():
    # pairwise similarities 0.6 (0,1), 0.4 (0,2), 0.55 (1,2)
    a = fp(0, [0, 1, *range(3, 13), *range(20, 26)])
    b = fp(1, range(0, 14))
    c = fp(2, range(3, 20))
    assert (tanimoto(a, b), tanimoto(a, c), tanimoto(b, c)) == (0.6, 0.4, 0.55)
    pairs = similar_pairs([a, b, c], 0.5)
    assert [(p.i, p.j) for p in pairs] == [(0, 1), (1, 2)]


def test_tau_zero_and_one():
    fps = [fp(0, [1, 2]), fp(1, [3, 4]), fp(2, [1, 2]), fp(3, [1])]
    assert len(similar_pairs(fps, 0.0)) == 6
    assert [(p.i, p.j) for p in similar_pairs(fps, 1.0)] == [(0, 2)]


def test_tau_out_of_range():
    with pytest.raises(ValueError):
        similar_pairs([fp(0, [1]), fp(1, [1])], 1.5)


key_sets = st.lists(st.frozensets(st.integers(0, 12), max_size=8), min_size=0, max_size=25)


@settings(max_examples=80, deadline=None)
@given(key_sets, st.sampled_from([0.0, 0.1, 0.25, 1 / 3, 0.5, 0.6, 0.75, 1.0]))
def test_property_pairs_match_brute_force(sets, tau):
    fps = [fp(i, s) for i, s in enumerate(sets)]
    got = similar_pairs(fps, tau)
    assert [(p.i, p.j) for p in got] == brute_pairs(sets, tau)
    for p in got:
        assert p.similarity == pytest.approx(jaccard(sets[p.i], sets[p.j]), abs=1e-15)


@settings(max_examples=80, deadline=None)
@given(st.frozensets(st.integers(0, 20)), st.frozensets(st.integers(0, 20)))
def test_property_tanimoto_symmetric_bounded(x, y):
    s = tanimoto(x, y)
    assert s == tanimoto(y, x)
    assert 0.0 <= s <= 1.0
    if x or y:
        assert (s == 1.0) == (x == y)
