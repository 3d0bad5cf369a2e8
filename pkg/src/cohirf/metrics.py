"""Pair-counting agreement between two partitions (Rand index and ARI)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exceptions import InvalidArgumentError


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray  # (clusters of a) x (clusters of b)

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _check_pair(a, b):
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"partitions differ in length: {a.size} vs {b.size}")
    if a.size < 2:
        raise InvalidArgumentError("need at least two samples to count pairs")
    return a, b


def contingency_table(a, b) -> ContingencyTable:
    a, b = _check_pair(a, b)
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    ia, ib = ia.reshape(-1), ib.reshape(-1)
    counts = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(counts, (ia, ib), 1)
    return ContingencyTable(counts)


def _pairs(counts) -> int:
    counts = np.asarray(counts, dtype=np.int64)
    # each term is at most C(n, 2), so the int64 sum is exact for n < 4e9
    return int(np.sum(counts * (counts - 1) // 2))


def _pair_sums(a, b):
    a, b = _check_pair(a, b)
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    ia, ib = ia.reshape(-1).astype(np.int64), ib.reshape(-1).astype(np.int64)
    _, cells = np.unique(ia * (ib.max() + 1) + ib, return_counts=True)
    n = a.size
    return (
        _pairs(cells),
        _pairs(np.bincount(ia)),
        _pairs(np.bincount(ib)),
        n * (n - 1) // 2,
    )


def rand_index(a, b) -> float:
    """Fraction of sample pairs on which ``a`` and ``b`` agree."""
    same_both, same_a, same_b, total = _pair_sums(a, b)
    agree = total + 2 * same_both - same_a - same_b
    return float(Fraction(agree, total))


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie adjusted Rand index.

    The index is undefined only when ``a`` and ``b`` are the same trivial
    partition. Two all-singleton partitions score 1.0; a single cluster
    scores 0.0 against anything, itself included.
    """
    same_both, same_a, same_b, total = _pair_sums(a, b)
    expected = Fraction(same_a * same_b, total)
    maximum = Fraction(same_a + same_b, 2)
    if maximum == expected:
        return 1.0 if same_a == 0 else 0.0
    return float((same_both - expected) / (maximum - expected))
