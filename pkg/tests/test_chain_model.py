import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellchain.chain_model import (
    ChainSpec,
    CouplingSet,
    DisorderSpec,
    Kind,
    disorder_deltas,
    edge_list,
    make_chain,
    sample_disorder,
)


def test_branched_n4_edges():
    spec = make_chain("branched", 4, CouplingSet())
    assert spec.dim == 6
    assert spec.sites == ("A", 1, 2, 3, 4, "B")
    assert edge_list(spec) == [("A", 2, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (3, "B", 1.0)]


def test_standard_n4_edges():
    spec = make_chain(Kind.STANDARD, 4, CouplingSet.standard(j_a=1, j_m=2, j_b=1))
    assert spec.dim == 4
    assert edge_list(spec) == [(1, 2, 1.0), (2, 3, 2.0), (3, 4, 1.0)]


def test_standard_n5_edges():
    spec = make_chain("standard", 5, CouplingSet.standard(j_a=0.7, j_m=2, j_b=1.3))
    assert edge_list(spec) == [(1, 2, 0.7), (2, 3, 2.0), (3, 4, 2.0), (4, 5, 1.3)]


def test_multipliers_scale_strengths():
    clean = make_chain("branched", 6, CouplingSet(j_m=2.0))
    mult = {(a, b): 1.1 for a, b, _ in edge_list(clean)}
    noisy = ChainSpec(clean.kind, clean.n_chain, clean.couplings, mult)
    for (_, _, s0), (_, _, s1) in zip(edge_list(clean), edge_list(noisy)):
        assert s1 == pytest.approx(1.1 * s0, rel=1e-15)


@pytest.mark.parametrize("kind", ["branched", "standard"])
def test_rejects_short_chain(kind):
    couplings = CouplingSet() if kind == "branched" else CouplingSet.standard()
    with pytest.raises(ValueError, match="n_chain"):
        make_chain(kind, 3, couplings)


def test_rejects_tilde_on_standard():
    with pytest.raises(ValueError, match="j_a_tilde"):
        make_chain("standard", 10, CouplingSet(j_a_tilde=0.5, j_b_tilde=0.0))


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_rejects_non_finite(bad):
    with pytest.raises(ValueError, match="finite"):
        CouplingSet(j_m=bad)


def test_rejects_nonpositive_multiplier():
    clean = make_chain("branched", 5, CouplingSet())
    with pytest.raises(ValueError, match="> 0"):
        ChainSpec(clean.kind, 5, clean.couplings, {(1, 2): 0.0})


@pytest.mark.parametrize("n", [4, 5, 17, 100])
def test_edge_counts(n):
    assert len(edge_list(make_chain("branched", n, CouplingSet()))) == n + 1
    assert len(edge_list(make_chain("standard", n, CouplingSet.standard()))) == n - 1


def test_site_indices():
    b = make_chain("branched", 7, CouplingSet())
    assert [b.index(s) for s in b.sites] == list(range(9))
    s = make_chain("standard", 7, CouplingSet.standard())
    assert [s.index(x) for x in s.sites] == list(range(7))
    with pytest.raises(KeyError):
        s.index("A")
    assert b.receiver_pair == (7, "B") and s.receiver_pair == (6, 7)


def test_zero_disorder_returns_clean():
    clean = make_chain("branched", 10, CouplingSet(j_m=2.5))
    d = DisorderSpec(0.0, 123, 5)
    for i in range(5):
        assert sample_disorder(clean, d, i) == clean


def test_disorder_is_deterministic():
    clean = make_chain("branched", 30, CouplingSet(j_m=2.5))
    d = DisorderSpec(0.03, 987654321, 10)
    forward = [sample_disorder(clean, d, i).edge_multipliers for i in range(10)]
    backward = [sample_disorder(clean, d, i).edge_multipliers for i in reversed(range(10))][::-1]
    assert forward == backward
    assert forward[0] != forward[1]


def test_disorder_errors():
    clean = make_chain("branched", 10, CouplingSet())
    d = DisorderSpec(0.01, 1, 3)
    with pytest.raises(IndexError):
        sample_disorder(clean, d, 3)
    with pytest.raises(ValueError):
        DisorderSpec(1.0, 1, 3)
    with pytest.raises(ValueError):
        sample_disorder(sample_disorder(clean, d, 0), d, 1)


def test_disorder_uniform_statistics():
    # one edge over 10^4 realizations: mean of U(-p, p) is 0, variance p^2/3
    p = 0.05
    deltas = np.array([disorder_deltas(42, i, 1, p)[0] for i in range(10_000)])
    assert abs(deltas.mean()) < 0.002
    assert np.all(np.abs(deltas) <= p)
    assert deltas.var() == pytest.approx(p * p / 3, rel=0.05)


@settings(max_examples=40, deadline=None)
@given(
    p=st.floats(0.0, 0.5),
    seed=st.integers(0, 2**64 - 1),
    index=st.integers(0, 999),
    kind=st.sampled_from(["branched", "standard"]),
)
def test_disorder_within_band(p, seed, index, kind):
    couplings = CouplingSet(j_m=3.0) if kind == "branched" else CouplingSet.standard(j_m=3.0)
    clean = make_chain(kind, 12, couplings)
    noisy = sample_disorder(clean, DisorderSpec(p, seed, 1000), index)
    for (_, _, s0), (_, _, s1) in zip(edge_list(clean), edge_list(noisy)):
        assert abs(s1 / s0 - 1.0) <= p + 1e-15
