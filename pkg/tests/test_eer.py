import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from biochain.biometrics import ScoreSet, compute_eer, error_rates
from biochain.errors import EmptyScores

from oracles import eer_enumerate


def test_three_vs_three():
    eer, thr = compute_eer(ScoreSet([1, 2, 3], [2, 3, 4]))
    assert eer == pytest.approx(100 / 3, abs=1e-12)
    assert float(eer_enumerate([1, 2, 3], [2, 3, 4])) == pytest.approx(eer, abs=1e-12)
    assert thr == 2.0


def test_perfect_separation():
    assert compute_eer(ScoreSet([0.1, 0.2, 0.3], [0.9, 1.0]))[0] == 0.0
    assert compute_eer(ScoreSet([0.9, 1.0], [0.1, 0.2], "similarity"))[0] == 0.0


def test_identical_distributions():
    rng = np.random.default_rng(2024)
    eer, _ = compute_eer(ScoreSet(rng.normal(size=2000), rng.normal(size=2000)))
    assert abs(eer - 50) <= 3


def test_fully_inverted():
    assert compute_eer(ScoreSet([5, 6], [1, 2]))[0] == 100.0


def test_similarity_mirrors_distance():
    rng = np.random.default_rng(3)
    g, i = rng.normal(0, 1, 300), rng.normal(1.5, 1, 400)
    d, td = compute_eer(ScoreSet(g, i))
    s, ts = compute_eer(ScoreSet(-g, -i, "similarity"))
    assert d == s and td == -ts


def test_empty_rejected():
    with pytest.raises(EmptyScores):
        compute_eer(ScoreSet([], [1.0]))
    with pytest.raises(ValueError):
        ScoreSet([1], [2], "vibes")


def test_error_rates():
    far, frr = error_rates(ScoreSet([1, 2, 3], [2, 3, 4]), [0, 2, 4])
    assert far.tolist() == [0, 1 / 3, 1] and frr.tolist() == [1, 1 / 3, 0]


small_int_scores = st.lists(st.integers(0, 20), min_size=1, max_size=30)


@settings(max_examples=300)
@given(small_int_scores, small_int_scores)
def test_against_threshold_enumeration(g, i):
    eer, thr = compute_eer(ScoreSet(g, i))
    assert 0 <= eer <= 100
    exact = eer_enumerate(g, i)
    if exact is not None:
        assert eer == pytest.approx(float(exact), abs=1e-9)


@settings(max_examples=200)
@given(small_int_scores, small_int_scores, st.sampled_from([0.5, 2.0, 3.0, 1e3]))
def test_scale_invariance(g, i, factor):
    # an all-zero set is a fixed point of scaling, so its threshold cannot scale
    assume(any(g) or any(i))
    s = ScoreSet(g, i)
    e1, t1 = compute_eer(s)
    e2, t2 = compute_eer(s.scaled(factor))
    assert e1 == pytest.approx(e2, abs=1e-9)
    assert t2 == pytest.approx(t1 * factor, rel=1e-9, abs=1e-9)


@settings(max_examples=200)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=40), st.lists(st.floats(-100, 100), min_size=1, max_size=40))
def test_rates_bracket_at_threshold(g, i):
    s = ScoreSet(g, i)
    eer, thr = compute_eer(s)
    assert 0 <= eer <= 100
    support = np.unique(np.concatenate([s.genuine, s.impostor]))
    below, above = support[support <= thr], support[support > thr]
    lo = below[-1] if below.size else thr
    hi = above[0] if above.size else thr
    far, frr = error_rates(s, [thr, lo, hi])
    # rates at the returned threshold are those at the support point below it,
    # and the gap between them is at most the jump across the bracketing step
    assert far[0] == far[1] and frr[0] == frr[1]
    step = abs((frr[1] - far[1]) - (frr[2] - far[2]))
    assert abs(far[0] - frr[0]) <= step + 1e-12
    assert min(far[1], far[2], frr[1], frr[2]) - 1e-9 <= eer / 100 <= max(far[1], far[2], frr[1], frr[2]) + 1e-9
