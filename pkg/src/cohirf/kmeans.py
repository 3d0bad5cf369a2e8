"""Lloyd's K-Means on dense matrices.

This is the inner clustering engine of CoHiRF. It is called ``R`` times per
agglomeration step on small column subsets, so it is kept allocation-light
and free of any global state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import InvalidArgumentError, InvalidDataError

DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-4


@dataclass(frozen=True)
class KMeansResult:
    """Outcome of one K-Means run.

    Attributes
    ----------
    labels : ndarray of shape (n,)
        Cluster index in ``[0, C)`` for every row.
    centroids : ndarray of shape (C, d)
    inertia : float
        Sum of squared distances of rows to their assigned centroid.
    iterations_run : int
    inertia_trace : tuple of float
        Inertia after every assignment step, starting with the assignment
        to the initial centers.
    degenerate_init : bool
        True when ``X`` had fewer than ``C`` distinct rows and the seeding
        had to reuse duplicate rows.
    """

    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations_run: int
    inertia_trace: tuple = field(default=(), repr=False)
    degenerate_init: bool = False


def _as_float_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise InvalidArgumentError(f"expected a 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidDataError("X contains NaN or infinite entries")
    return X


def _check_counts(X: np.ndarray, n_clusters: int) -> None:
    n, d = X.shape
    if n < 1 or d < 1:
        raise InvalidArgumentError(f"X must be non-empty, got shape {X.shape}")
    if not 1 <= n_clusters <= n:
        raise InvalidArgumentError(
            f"n_clusters must lie in [1, n={n}], got {n_clusters}"
        )


def _sq_dists(X, centers, x_sq=None):
    """Squared Euclidean distances, shape (n, C), clipped at zero."""
    if x_sq is None:
        x_sq = np.einsum("ij,ij->i", X, X)
    c_sq = np.einsum("ij,ij->i", centers, centers)
    d2 = x_sq[:, None] - 2.0 * (X @ centers.T) + c_sq[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def default_local_trials(n_clusters: int) -> int:
    return 2 + int(np.log(n_clusters))


def _plusplus(X, n_clusters, rng, x_sq=None, n_local_trials=None):
    """k-means++ seeding.

    Each new center is drawn with probability proportional to the squared
    distance to the nearest chosen center. With ``n_local_trials > 1`` that
    many candidates are drawn and the one that lowers the total potential
    most is kept (greedy k-means++).
    """
    n = X.shape[0]
    if n_local_trials is None:
        n_local_trials = default_local_trials(n_clusters)
    idx = np.empty(n_clusters, dtype=np.intp)
    idx[0] = rng.integers(n)
    closest = _sq_dists(X, X[idx[:1]], x_sq)[:, 0]
    degenerate = False
    for k in range(1, n_clusters):
        total = closest.sum()
        if not total > 0.0:
            # every row coincides with a chosen center
            degenerate = True
            idx[k] = rng.integers(n)
            continue
        cand = rng.choice(n, size=n_local_trials, p=closest / total)
        d_cand = _sq_dists(X, X[cand], x_sq)
        np.minimum(d_cand, closest[:, None], out=d_cand)
        best = int(np.argmin(d_cand.sum(axis=0)))
        idx[k] = cand[best]
        closest = d_cand[:, best].copy()
    return idx, degenerate


def kmeans_init(X, n_clusters: int, seed=None, n_local_trials: Optional[int] = None) -> np.ndarray:
    """k-means++ seeding; returns a ``(n_clusters, d)`` array of rows of X.

    The first center is uniform over rows, each later one is drawn with
    probability proportional to the squared distance to the nearest center
    already chosen. ``n_local_trials=1`` gives the classic rule.
    """
    X = _as_float_matrix(X)
    _check_counts(X, n_clusters)
    rng = np.random.default_rng(seed)
    idx, _ = _plusplus(X, n_clusters, rng, n_local_trials=n_local_trials)
    return X[idx].copy()


def _reseed_empty(labels, d2_assigned, n_clusters):
    """Give every empty cluster the farthest point of a cluster that can spare one."""
    counts = np.bincount(labels, minlength=n_clusters)
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return labels
    labels = labels.copy()
    order = np.argsort(-d2_assigned, kind="stable")
    pos = 0
    for j in empty:
        while counts[labels[order[pos]]] <= 1:
            pos += 1
        i = order[pos]
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
        pos += 1
    return labels


def _update_centers(X, labels, n_clusters):
    counts = np.bincount(labels, minlength=n_clusters).astype(np.float64)
    sums = np.zeros((n_clusters, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / counts[:, None]


def kmeans_fit(
    X,
    n_clusters: int,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    seed=None,
    n_local_trials: Optional[int] = None,
) -> KMeansResult:
    """Cluster the rows of ``X`` into ``n_clusters`` groups with Lloyd's algorithm.

    Iteration stops once the largest centroid displacement is ``<= tol``,
    once the assignment is a fixed point, or after ``max_iter`` updates.
    Empty clusters are re-seeded at the point farthest from its centroid.
    ``seed`` may be an int, a ``numpy.random.Generator`` or None;
    ``n_local_trials`` is passed to the k-means++ seeding.
    """
    X = _as_float_matrix(X)
    _check_counts(X, n_clusters)
    if tol < 0:
        raise InvalidArgumentError(f"tol must be >= 0, got {tol}")
    if max_iter < 0:
        raise InvalidArgumentError(f"max_iter must be >= 0, got {max_iter}")

    rng = np.random.default_rng(seed)
    x_sq = np.einsum("ij,ij->i", X, X)
    init_idx, degenerate = _plusplus(X, n_clusters, rng, x_sq, n_local_trials)
    centers = X[init_idx].copy()

    d2 = _sq_dists(X, centers, x_sq)
    labels = np.argmin(d2, axis=1)
    d2_assigned = d2[np.arange(X.shape[0]), labels]
    trace = [float(d2_assigned.sum())]

    it = 0
    while it < max_iter:
        it += 1
        labels = _reseed_empty(labels, d2_assigned, n_clusters)
        new_centers = _update_centers(X, labels, n_clusters)
        shift = np.sqrt(np.max(np.sum((new_centers - centers) ** 2, axis=1)))
        centers = new_centers

        d2 = _sq_dists(X, centers, x_sq)
        new_labels = np.argmin(d2, axis=1)
        d2_assigned = d2[np.arange(X.shape[0]), new_labels]
        trace.append(float(d2_assigned.sum()))
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        if stable or shift <= tol:
            break

    return KMeansResult(
        labels=labels.astype(np.int64),
        centroids=centers,
        inertia=trace[-1],
        iterations_run=it,
        inertia_trace=tuple(trace),
        degenerate_init=degenerate,
    )
