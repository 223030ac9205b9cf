import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molftp.chem import FragmentHit, FragmentIndex
from molftp.prevalence import (
    SCORE_CAP,
    ContingencyTable,
    accumulate_tables,
    build_score_map,
    chi2_score,
    fisher_scores_array,
    log_odds,
    log_odds_array,
    significance,
)

import oracles


def index(mol_id, keys):
    """Hand-built index; each listed key is one depth-0 hit on its own atom."""
    hits = [FragmentHit(k, 0, a) for a, k in enumerate(keys)]
    return FragmentIndex(mol_id, hits, max(len(keys), 1), 0)


# -- log-odds and significance -------------------------------------------------


def test_log_odds_examples():
    assert log_odds(ContingencyTable(1, 1, 1, 1)) == 0.0
    assert log_odds(ContingencyTable(3, 0, 0, 3)) == pytest.approx(math.log2(49), rel=1e-14)
    assert log_odds(ContingencyTable(0, 5, 5, 0)) == pytest.approx(-math.log2(121), rel=1e-14)


def test_significance_null_table():
    st_ = significance(ContingencyTable(1, 1, 1, 1))
    assert (st_.w, st_.z, st_.p, st_.score) == (0.0, 0.0, 1.0, 0.0)


def test_significance_example():
    st_ = significance(ContingencyTable(3, 0, 0, 3))
    assert st_.var == pytest.approx(9.515, abs=5e-4)
    assert st_.z == pytest.approx(1.820, abs=5e-4)
    # printed reference 0.0688 is rounded; the exact tail is 0.068724
    assert st_.p == pytest.approx(0.0688, abs=1e-4)
    assert st_.score == pytest.approx(1.162, abs=1e-3)
    # tighter values from the mpmath oracle
    _, z, p, score = oracles.significance(3, 0, 0, 3)
    assert st_.score == pytest.approx(float(score), rel=1e-12)


def test_score_cap():
    # smoothing keeps z small for tiny off-diagonal cells, so use large ones
    st_ = significance(ContingencyTable(1e6, 1e4, 1e4, 1e6))
    assert st_.p < 1e-300
    assert st_.score == SCORE_CAP
    assert significance(ContingencyTable(1e4, 1e6, 1e6, 1e4)).score == -SCORE_CAP


def test_chi2_variant_shares_sign():
    for t in [(3, 0, 0, 3), (0, 4, 2, 1), (2, 2, 2, 2), (10, 3, 1, 20)]:
        ct = ContingencyTable(*t)
        assert np.sign(chi2_score(ct)) == np.sign(significance(ct).score)


def test_chi2_against_oracle():
    a, b, c, d = (v + 0.5 for v in (7, 2, 3, 9))
    n = a + b + c + d
    stat = n * (a * d - b * c) ** 2 / ((a + b) * (c + d) * (a + c) * (b + d))
    ref = -oracles.mp.log10(oracles.chi2_1_sf(stat))
    assert chi2_score(ContingencyTable(7, 2, 3, 9)) == pytest.approx(float(ref), rel=1e-12)


def test_alpha_must_be_positive():
    with pytest.raises(ValueError):
        log_odds(ContingencyTable(1, 1, 1, 1, alpha=0.0))


# -- accumulation ------------------------------------------------------------


def test_accumulate_presence_example():
    ixs = [index(0, [7, 1]), index(1, [7]), index(2, [1]), index(3, [2])]
    tables = accumulate_tables(ixs, [1, 1, 0, 0])
    t = tables.table(7)
    assert (t.a, t.b, t.c, t.d) == (2, 0, 0, 2)
    with pytest.raises(KeyError):
        tables.table(99)
    assert set(tables) == {1, 2, 7}


def test_accumulate_count_mode_example():
    ixs = [index(0, [5, 5, 5]), index(1, [6])]
    t = accumulate_tables(ixs, [1, 0], mode="count").table(5)
    assert (t.a, t.d) == (3, 1)


def test_accumulate_errors_and_warnings():
    with pytest.raises(ValueError):
        accumulate_tables([], [])
    with pytest.warns(UserWarning):
        accumulate_tables([index(0, [1])], [1])


def test_support_identity(medium_set):
    indexes, labels, _ = medium_set
    tables = accumulate_tables(indexes, labels)
    assert tables.support.sum() == sum(len(ix.key_presence) for ix in indexes)
    assert np.all(tables.a + tables.b + tables.c + tables.d == len(indexes))


def test_score_map_shape_and_serialization(small_set):
    indexes, labels, _ = small_set
    tables = accumulate_tables(indexes, labels)
    fisher = build_score_map(tables)
    chi2 = build_score_map(tables, "chi2")
    assert len(fisher) == len(tables) == len({k for ix in indexes for k in ix.key_presence})
    assert np.array_equal(np.sign(fisher.scores), np.sign(chi2.scores))
    assert np.all(np.abs(fisher.scores) <= SCORE_CAP)
    buf = io.StringIO()
    fisher.write(buf, ["provenance line"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# provenance line"
    assert lines[1] == "key,depth_min,depth_max,a,b,c,d,w,score,support"
    assert len(lines) == 2 + len(fisher)
    hex_keys = [ln.split(",")[0] for ln in lines[2:]]
    assert hex_keys == sorted(hex_keys)


def test_unknown_variant():
    tables = accumulate_tables([index(0, [1]), index(1, [2])], [1, 0])
    with pytest.raises(ValueError):
        build_score_map(tables, "pmi")


# -- properties --------------------------------------------------------------

counts = st.integers(0, 200)


@settings(max_examples=200, deadline=None)
@given(counts, counts, counts, counts)
def test_property_antisymmetry(a, b, c, d):
    t = ContingencyTable(a, b, c, d)
    s, f = significance(t), significance(t.flipped())
    assert f.w == -s.w
    assert f.score == -s.score
    assert f.var == s.var
    assert chi2_score(t.flipped()) == -chi2_score(t)


@settings(max_examples=200, deadline=None)
@given(counts, counts, counts, counts)
def test_property_monotone_in_a(a, b, c, d):
    assert log_odds(ContingencyTable(a + 1, b, c, d)) > log_odds(ContingencyTable(a, b, c, d))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(counts, counts, counts, counts), min_size=1, max_size=30))
def test_property_array_matches_scalar(tables):
    a, b, c, d = (np.array(col) for col in zip(*tables))
    w, score = fisher_scores_array(a, b, c, d)
    for i, t in enumerate(tables):
        s = significance(ContingencyTable(*t))
        assert w[i] == pytest.approx(s.w, rel=1e-14, abs=0)
        assert score[i] == pytest.approx(s.score, rel=1e-12, abs=1e-300)
    assert np.array_equal(log_odds_array(b, a, d, c), -log_odds_array(a, b, c, d))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.frozensets(st.integers(0, 15), min_size=1, max_size=6), st.booleans()), min_size=2, max_size=20))
def test_property_label_inversion_on_tables(rows):
    ixs = [index(i, sorted(k)) for i, (k, _) in enumerate(rows)]
    y = np.array([int(lab) for _, lab in rows])
    if y.min() == y.max():
        return
    m = build_score_map(accumulate_tables(ixs, y))
    mf = build_score_map(accumulate_tables(ixs, 1 - y))
    assert np.array_equal(m.keys, mf.keys)
    assert np.array_equal(mf.scores, -m.scores)
