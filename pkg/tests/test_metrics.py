import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohirf.exceptions import InvalidArgumentError
from cohirf.metrics import adjusted_rand_index, contingency_table, rand_index


def pair_enumeration(a, b):
    """RI and ARI by explicit pair counting, exact arithmetic."""
    n = len(a)
    both = only_a = only_b = 0
    for i, j in itertools.combinations(range(n), 2):
        sa, sb = a[i] == a[j], b[i] == b[j]
        both += sa and sb
        only_a += sa and not sb
        only_b += sb and not sa
    total = n * (n - 1) // 2
    neither = total - both - only_a - only_b
    ri = Fraction(both + neither, total)
    pairs_a, pairs_b = both + only_a, both + only_b
    expected = Fraction(pairs_a * pairs_b, total)
    maximum = Fraction(pairs_a + pairs_b, 2)
    if maximum == expected:
        return ri, Fraction(1 if pairs_a == 0 else 0)
    return ri, (both - expected) / (maximum - expected)


def test_ri_examples():
    assert rand_index([1, 1, 2], [1, 2, 2]) == pytest.approx(1 / 3)
    assert rand_index([1, 1, 2, 2], [2, 2, 1, 1]) == 1.0
    assert rand_index([0, 1, 2, 0], [0, 1, 2, 0]) == 1.0


def test_ari_examples():
    assert adjusted_rand_index([0, 0, 1, 2, 2], [5, 5, 3, 9, 9]) == 1.0
    assert adjusted_rand_index([0] * 10, [0, 1, 2, 0, 1, 2, 0, 1, 2, 3]) == 0.0
    assert adjusted_rand_index([0, 1, 2, 0, 1, 2, 0, 1, 2, 3], [7] * 10) == 0.0


def test_ari_identical_trivial_partitions():
    assert adjusted_rand_index([0, 1, 2, 3], [5, 6, 7, 8]) == 1.0
    assert adjusted_rand_index([0, 0, 0], [0, 0, 0]) == 0.0
    assert adjusted_rand_index([0, 1], [1, 0]) == 1.0


def test_ari_random_near_zero():
    rng = np.random.default_rng(0)
    vals = [adjusted_rand_index(rng.integers(5, size=200), rng.integers(5, size=200)) for _ in range(100)]
    assert abs(np.mean(vals)) < 0.1


def test_oracle_equivalence_200_pairs():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(2, 31))
        a = rng.integers(int(rng.integers(1, 6)), size=n)
        b = rng.integers(int(rng.integers(1, 6)), size=n)
        ri, ari = pair_enumeration(a.tolist(), b.tolist())
        assert abs(rand_index(a, b) - float(ri)) <= 1e-12
        assert abs(adjusted_rand_index(a, b) - float(ari)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=2, max_size=30), st.permutations(range(5)))
def test_symmetry_and_permutation(pairs, perm):
    a = np.array([x for x, _ in pairs])
    b = np.array([y for _, y in pairs])
    assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_index(b, a), abs=1e-12)
    assert rand_index(a, b) == pytest.approx(rand_index(b, a), abs=1e-12)
    pa = np.array(perm)[a]
    assert adjusted_rand_index(pa, b) == pytest.approx(adjusted_rand_index(a, b), abs=1e-12)


def test_contingency_marginals():
    t = contingency_table([0, 0, 1, 2], ["x", "y", "y", "y"])
    assert t.total == 4
    assert sorted(t.row_sums.tolist()) == [1, 1, 2]
    assert sorted(t.col_sums.tolist()) == [1, 3]
    assert (t.counts >= 0).all()


def test_errors():
    with pytest.raises(InvalidArgumentError):
        adjusted_rand_index([0, 1], [0, 1, 2])
    with pytest.raises(InvalidArgumentError):
        rand_index([0], [0])


def test_large_n_exact():
    rng = np.random.default_rng(0)
    a = rng.integers(3, size=200_000)
    assert adjusted_rand_index(a, a) == 1.0
