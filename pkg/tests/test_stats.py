import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from newsrel.stats import (
    UndefinedCorrelation,
    average_ranks,
    paired_ttest,
    pearson,
    permutation_pvalue,
    spearman,
)

# Anscombe's quartet
ANSCOMBE_X = [10, 8, 13, 9, 11, 14, 6, 4, 12, 7, 5]
ANSCOMBE_Y = {
    "I": [8.04, 6.95, 7.58, 8.81, 8.33, 9.96, 7.24, 4.26, 10.84, 4.82, 5.68],
    "II": [9.14, 8.14, 8.74, 8.77, 9.26, 8.10, 6.13, 3.10, 9.13, 7.26, 4.74],
    "III": [7.46, 6.77, 12.74, 7.11, 7.81, 8.84, 6.08, 5.39, 8.15, 6.42, 5.73],
}


def test_perfect_linear():
    x = np.arange(10.0)
    assert pearson(x, 2 * x + 1)[0] == pytest.approx(1.0)
    assert spearman(x, 2 * x + 1)[0] == 1.0


def test_monotone_nonlinear():
    x = np.linspace(0, 5, 20)
    assert spearman(x, np.exp(x))[0] == 1.0
    assert pearson(x, np.exp(x))[0] < 1.0


@pytest.mark.parametrize("name", sorted(ANSCOMBE_Y))
def test_anscombe_against_scipy(name):
    x, y = ANSCOMBE_X, ANSCOMBE_Y[name]
    r, p = pearson(x, y)
    ref = scipy.stats.pearsonr(x, y)
    assert r == pytest.approx(ref[0], abs=1e-6) and p == pytest.approx(ref[1], abs=1e-6)
    rs, ps = spearman(x, y)
    ref = scipy.stats.spearmanr(x, y)
    assert rs == pytest.approx(ref[0], abs=1e-6) and ps == pytest.approx(ref[1], abs=1e-6)


def test_anscombe_published_r():
    # the quartet is built so every pair has r close to 0.816
    for y in ANSCOMBE_Y.values():
        assert pearson(ANSCOMBE_X, y)[0] == pytest.approx(0.816, abs=1e-3)


@pytest.mark.parametrize("seed", range(10))
def test_random_with_ties_against_scipy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 60))
    x = rng.integers(0, 6, n).astype(float)
    y = x + rng.integers(-3, 4, n)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return
    for ours, ref in ((pearson, scipy.stats.pearsonr), (spearman, scipy.stats.spearmanr)):
        r, p = ours(x, y)
        rr, pr = ref(x, y)
        assert r == pytest.approx(rr, abs=1e-9) and p == pytest.approx(pr, abs=1e-9)


def test_average_ranks_match_scipy():
    v = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5]
    assert np.array_equal(average_ranks(v), scipy.stats.rankdata(v))


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=40, unique=True),
    st.integers(0, 2**32 - 1),
)
def test_spearman_invariant_under_monotone_maps(xs, seed):
    rng = np.random.default_rng(seed)
    x = np.array(xs)
    y = rng.normal(size=x.size)
    base = spearman(x, y)[0]
    for m in (np.exp, np.arctan, lambda v: v ** 3 + 2 * v, lambda v: 5 * v - 7):
        assert spearman(x, m(y))[0] == base
    assert spearman(x, np.arctan(x))[0] == 1.0


def test_constant_input():
    with pytest.raises(UndefinedCorrelation):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(UndefinedCorrelation):
        spearman([1, 2, 3], [4, 4, 4])


def test_too_short_or_mismatched():
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2])
    with pytest.raises(ValueError):
        spearman([1, 2, 3], [1, 2])


def test_permutation_pvalue():
    x = np.arange(12.0)
    assert permutation_pvalue(x, x, permutations=999) == pytest.approx(1 / 1000, abs=3 / 1000)
    rng = np.random.default_rng(0)
    noise = rng.normal(size=12)
    p = permutation_pvalue(x, noise, permutations=2000, seed=1)
    assert p == permutation_pvalue(x, noise, permutations=2000, seed=1)
    assert abs(p - spearman(x, noise)[1]) < 0.1


def test_paired_ttest_identical():
    assert paired_ttest([70, 80, 75], [70, 80, 75]) == 1.0


def test_paired_ttest_constant_shift():
    assert paired_ttest([1, 2, 3], [4, 5, 6]) < 0.01


def test_paired_ttest_mismatch():
    with pytest.raises(ValueError):
        paired_ttest([1, 2, 3], [1, 2])


@pytest.mark.parametrize("seed", range(5))
def test_paired_ttest_against_scipy(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(80, 3, 5)
    b = a + rng.normal(1, 2, 5)
    assert paired_ttest(a, b) == pytest.approx(scipy.stats.ttest_rel(a, b).pvalue, abs=1e-9)
