"""Unanimous consensus over repeated random-feature K-Means runs.

One agglomeration step draws ``R`` random feature subsets, clusters the
current samples on each, and stacks the labels into an ``n_curr x R``
assignment matrix. Samples whose rows are identical were clustered together
in every repetition; they form one consensus group.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError
from .kmeans import DEFAULT_MAX_ITER, DEFAULT_TOL, kmeans_fit

# stream tags mixed into the seed sequence so the different random draws
# of one step never share a generator
_TAG_REPETITION = 0
_TAG_MEDOID = 1
_TAG_BATCH = 2


def step_rng(seed: int, step: int, tag: int, index: int = 0) -> np.random.Generator:
    """Generator for one (step, purpose, index) slot, independent of call order."""
    return np.random.default_rng([int(seed), int(step), int(tag), int(index)])


def repetition_rng(seed: int, step: int, rep: int) -> np.random.Generator:
    return step_rng(seed, step, _TAG_REPETITION, rep)


@dataclass(frozen=True)
class ConsensusGrouping:
    """Samples grouped by identical assignment rows.

    ``codes[i]`` is the group of sample ``i``; groups are numbered by order of
    first appearance. ``members[k]`` lists the samples of group ``k`` in
    increasing order.
    """

    codes: np.ndarray
    n_new: int
    members: tuple

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.codes, minlength=self.n_new)


def sample_features(p: int, q: int, rng) -> np.ndarray:
    """Sorted array of ``q`` distinct column indices drawn uniformly from ``[0, p)``."""
    if not 1 <= q <= p:
        raise InvalidArgumentError(f"need 1 <= q <= p, got q={q}, p={p}")
    rng = np.random.default_rng(rng)
    return np.sort(rng.choice(p, size=q, replace=False))


def _first_appearance_ranks(values, axis=None):
    if axis is None:
        _, first, inverse = np.unique(values, return_index=True, return_inverse=True)
    else:
        _, first, inverse = np.unique(
            values, axis=axis, return_index=True, return_inverse=True
        )
    inverse = np.asarray(inverse).reshape(-1)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse], order.size


def canonicalize_labels(column) -> np.ndarray:
    """Relabel a label vector by order of first appearance, starting at 1.

    >>> canonicalize_labels([3, 1, 3, 2]).tolist()
    [1, 2, 1, 3]
    """
    column = np.asarray(column).reshape(-1)
    if column.size == 0:
        return np.zeros(0, dtype=np.int64)
    ranks, _ = _first_appearance_ranks(column)
    return ranks.astype(np.int64) + 1


def encode_rows(P) -> ConsensusGrouping:
    """Group the rows of an assignment matrix; equal rows share a code."""
    P = np.asarray(P)
    if P.ndim != 2:
        raise InvalidArgumentError(f"assignment matrix must be 2-D, got shape {P.shape}")
    n = P.shape[0]
    if n == 0:
        return ConsensusGrouping(np.zeros(0, dtype=np.int64), 0, ())
    if P.shape[1] == 0:
        codes = np.zeros(n, dtype=np.int64)
        return ConsensusGrouping(codes, 1, (np.arange(n),))
    codes, n_new = _first_appearance_ranks(np.ascontiguousarray(P), axis=0)
    codes = codes.astype(np.int64)
    return ConsensusGrouping(codes, int(n_new), group_members(codes, n_new))


def group_members(codes: np.ndarray, n_groups: int) -> tuple:
    order = np.argsort(codes, kind="stable")
    bounds = np.cumsum(np.bincount(codes, minlength=n_groups))[:-1]
    return tuple(np.split(order, bounds))


def assignment_matrix(
    X,
    q: int,
    n_repetitions: int,
    n_clusters: int,
    *,
    seed: int,
    step: int,
    full_features: bool = False,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    n_jobs: int = 1,
) -> np.ndarray:
    """Build the canonicalized ``n x R`` assignment matrix of one step.

    Repetition ``r`` draws its feature subset and K-Means seed from its own
    generator, so the matrix does not depend on ``n_jobs``. ``n_clusters`` is
    lowered to ``n`` when there are fewer samples than clusters.
    """
    n, p = X.shape
    C = min(n_clusters, n)

    def one(r):
        rng = repetition_rng(seed, step, r)
        if full_features:
            sub = X
        else:
            sub = X[:, sample_features(p, q, rng)]
        km = kmeans_fit(sub, C, max_iter=max_iter, tol=tol, seed=rng)
        return canonicalize_labels(km.labels)

    P = np.empty((n, n_repetitions), dtype=np.int64)
    if n_jobs == 1 or n_repetitions == 1:
        for r in range(n_repetitions):
            P[:, r] = one(r)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as ex:
            for r, col in enumerate(ex.map(one, range(n_repetitions))):
                P[:, r] = col
    return P
