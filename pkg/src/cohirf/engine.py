"""The CoHiRF agglomeration loop.

Each step clusters the current representatives ``R`` times on random feature
subsets, groups the representatives that were clustered together every
time, and keeps one medoid per group. The loop ends once a step merges
nothing; the final clusters are the unions of everything that was merged
into each surviving representative.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .consensus import (
    _TAG_BATCH,
    _TAG_MEDOID,
    ConsensusGrouping,
    _first_appearance_ranks,
    assignment_matrix,
    encode_rows,
    group_members,
    step_rng,
)
from .exceptions import InvalidArgumentError, InvalidDataError
from .hierarchy import HierarchyNode, HierarchyTree, leaf_tree, reconstruct_final_clusters
from .kmeans import DEFAULT_MAX_ITER, DEFAULT_TOL
from .medoid import MedoidMode, select_medoid

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 100
SAMPLED_BATCH_SIZE = 1024

VARIANTS = ("cohirf", "cohirf-1000", "cohirf-sampled", "cohirf-rbf", "cohirf-full")


@dataclass(frozen=True)
class CohirfConfig:
    """Hyperparameters of one CoHiRF fit.

    ``q`` features are sampled per repetition (``None`` picks
    ``min(30, p - 1)``), ``n_repetitions`` is R and ``n_clusters`` is the
    K-Means C used inside every step. ``batch_size`` turns on the sampled
    variant; ``full_features`` skips feature sampling altogether.
    """

    q: Optional[int] = None
    n_repetitions: int = 5
    n_clusters: int = 3
    medoid_mode: MedoidMode = field(default_factory=MedoidMode)
    batch_size: Optional[int] = None
    full_features: bool = False
    seed: int = 0
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    max_steps: int = DEFAULT_MAX_STEPS
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_repetitions < 1:
            raise InvalidArgumentError(f"n_repetitions must be >= 1, got {self.n_repetitions}")
        if self.n_clusters < 2:
            raise InvalidArgumentError(f"n_clusters must be >= 2, got {self.n_clusters}")
        if self.q is not None and self.q < 2 and not self.full_features:
            raise InvalidArgumentError(f"q must be >= 2, got {self.q}")
        if self.batch_size is not None and self.batch_size < 2:
            raise InvalidArgumentError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.max_steps < 1:
            raise InvalidArgumentError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.tol < 0 or self.max_iter < 0:
            raise InvalidArgumentError("max_iter and tol must be non-negative")

    @classmethod
    def variant(cls, name: str, **kwargs) -> "CohirfConfig":
        """Config for one of the named variants in :data:`VARIANTS`."""
        if name == "cohirf":
            pass
        elif name == "cohirf-1000":
            kwargs.setdefault("medoid_mode", MedoidMode.capped(1000))
        elif name == "cohirf-sampled":
            kwargs.setdefault("batch_size", SAMPLED_BATCH_SIZE)
        elif name == "cohirf-rbf":
            kwargs.setdefault("medoid_mode", MedoidMode.rbf())
        elif name == "cohirf-full":
            kwargs.setdefault("full_features", True)
        else:
            raise InvalidArgumentError(f"unknown variant {name!r}; choose from {VARIANTS}")
        return cls(**kwargs)

    def effective_q(self, p: int) -> int:
        if self.full_features:
            return p
        q = self.q if self.q is not None else max(2, min(30, p - 1))
        if not 2 <= q <= p:
            raise InvalidArgumentError(f"need 2 <= q <= p, got q={q} with p={p}")
        return q

    def to_dict(self) -> dict:
        d = asdict(self)
        d["medoid_mode"] = self.medoid_mode.to_dict()
        return d


@dataclass(frozen=True)
class CohirfResult:
    labels: np.ndarray
    n_clusters: int
    hierarchy: HierarchyTree
    steps_run: int
    per_step_counts: tuple
    converged: bool = True
    medoids: np.ndarray = field(default=None, repr=False)

    def step_grouping(self, step: int) -> np.ndarray:
        """Group index, at ``step``, of every pool item of step ``step - 1``."""
        if not 1 <= step <= self.steps_run:
            raise InvalidArgumentError(f"step must lie in [1, {self.steps_run}]")
        step_nodes = [nd for nd in self.hierarchy.nodes if nd.step == step]
        prev = sorted(c for nd in step_nodes for c in nd.children)
        pos = {c: i for i, c in enumerate(prev)}
        out = np.empty(len(prev), dtype=np.int64)
        for k, nd in enumerate(step_nodes):
            for c in nd.children:
                out[pos[c]] = k
        return out


def _check_data(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise InvalidArgumentError(f"X must be a non-empty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidDataError("X contains NaN or infinite entries")
    return X


def consensus_step(X_curr: np.ndarray, config: CohirfConfig, step: int) -> ConsensusGrouping:
    """Group the current samples of one step.

    With a batch size smaller than the pool, only a uniform batch is
    clustered and every other sample becomes a singleton group.
    """
    n_curr, p = X_curr.shape
    q = config.effective_q(p)
    kw = dict(
        seed=config.seed,
        step=step,
        full_features=config.full_features,
        max_iter=config.max_iter,
        tol=config.tol,
        n_jobs=config.n_jobs,
    )
    B = config.batch_size
    if B is None or B >= n_curr:
        P = assignment_matrix(X_curr, q, config.n_repetitions, config.n_clusters, **kw)
        return encode_rows(P)

    batch = np.sort(step_rng(config.seed, step, _TAG_BATCH).choice(n_curr, size=B, replace=False))
    P = assignment_matrix(X_curr[batch], q, config.n_repetitions, config.n_clusters, **kw)
    inner = encode_rows(P)
    codes = np.empty(n_curr, dtype=np.int64)
    codes[batch] = inner.codes
    rest = np.setdiff1d(np.arange(n_curr), batch, assume_unique=True)
    codes[rest] = inner.n_new + np.arange(rest.size)
    codes, n_new = _first_appearance_ranks(codes)
    codes = codes.astype(np.int64)
    return ConsensusGrouping(codes, int(n_new), group_members(codes, n_new))


def _consensus_bound(n_curr: int, config: CohirfConfig) -> int:
    B = config.batch_size
    n_batch = n_curr if B is None else min(B, n_curr)
    c_eff = min(config.n_clusters, n_batch)
    return min(n_curr, c_eff ** config.n_repetitions + (n_curr - n_batch))


def cohirf_fit(X, config: Optional[CohirfConfig] = None) -> CohirfResult:
    """Run CoHiRF on the rows of ``X``."""
    X = _check_data(X)
    config = config or CohirfConfig()
    n, p = X.shape
    config.effective_q(p)

    pool_ids = np.arange(n)  # original sample id of each pool item
    pool_nodes = np.arange(n)  # hierarchy node of each pool item
    position = np.arange(n)  # pool item holding each original sample
    nodes = leaf_tree(n)
    counts = [n]
    converged = False

    step = 0
    while step < config.max_steps:
        step += 1
        X_curr = X if step == 1 else X[pool_ids]
        n_curr = X_curr.shape[0]
        grouping = consensus_step(X_curr, config, step)
        assert grouping.n_new <= _consensus_bound(n_curr, config), (
            f"consensus produced {grouping.n_new} groups from {n_curr} samples"
        )

        def pick(k, members=grouping.members, X_curr=X_curr, step=step):
            if members[k].size == 1:
                return members[k][0]
            rows = X_curr[members[k]]
            rng = step_rng(config.seed, step, _TAG_MEDOID, k)
            return members[k][select_medoid(rows, config.medoid_mode, rng)]

        if config.n_jobs != 1 and grouping.n_new > 1:
            with ThreadPoolExecutor(max_workers=config.n_jobs if config.n_jobs > 0 else None) as ex:
                picks = list(ex.map(pick, range(grouping.n_new)))
        else:
            picks = [pick(k) for k in range(grouping.n_new)]

        new_nodes = np.empty(grouping.n_new, dtype=np.int64)
        for k, members in enumerate(grouping.members):
            children = tuple(int(c) for c in pool_nodes[members])
            size = sum(nodes[c].size for c in children)
            node_id = len(nodes)
            nodes.append(HierarchyNode(node_id, step, int(pool_ids[picks[k]]), children, size))
            new_nodes[k] = node_id

        pool_ids = pool_ids[np.asarray(picks, dtype=np.int64)]
        pool_nodes = new_nodes
        position = grouping.codes[position]
        counts.append(grouping.n_new)
        logger.debug("step %d: %d -> %d samples", step, n_curr, grouping.n_new)
        if grouping.n_new == n_curr:
            converged = True
            break

    if not converged:
        logger.warning("stopped after max_steps=%d without convergence", config.max_steps)

    tree = HierarchyTree(tuple(nodes), tuple(int(v) for v in pool_nodes), n)
    return CohirfResult(
        labels=position.astype(np.int64),
        n_clusters=int(pool_ids.size),
        hierarchy=tree,
        steps_run=step,
        per_step_counts=tuple(counts),
        converged=converged,
        medoids=pool_ids.copy(),
    )


def cohirf_sampled_fit(X, config: Optional[CohirfConfig] = None, batch_size: int = SAMPLED_BATCH_SIZE) -> CohirfResult:
    """CoHiRF where each step only clusters a uniform batch of the pool."""
    config = config or CohirfConfig()
    if config.batch_size is None:
        config = replace(config, batch_size=batch_size)
    return cohirf_fit(X, config)


class CoHiRF:
    """Estimator-style wrapper around :func:`cohirf_fit`.

    >>> model = CoHiRF(q=2, n_repetitions=3, n_clusters=2).fit(X)  # doctest: +SKIP
    >>> model.labels_  # doctest: +SKIP
    """

    def __init__(self, **params):
        self.config = CohirfConfig(**params)

    def fit(self, X, y=None):
        self.result_ = cohirf_fit(X, self.config)
        self.labels_ = self.result_.labels
        self.n_clusters_ = self.result_.n_clusters
        self.hierarchy_ = self.result_.hierarchy
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


__all__ = [
    "CoHiRF",
    "CohirfConfig",
    "CohirfResult",
    "VARIANTS",
    "cohirf_fit",
    "cohirf_sampled_fit",
    "consensus_step",
    "reconstruct_final_clusters",
]
