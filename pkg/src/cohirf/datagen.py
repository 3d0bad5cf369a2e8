"""Synthetic clustering benchmarks with known ground truth.

Two generators, both with unit-variance isotropic Gaussian clouds and
cluster sizes that differ by at most one:

* hypercube: centers on distinct random vertices of ``{0, delta}^p``;
* separated Gaussians: centers on a randomly rotated regular simplex, so
  every pair of centers is exactly ``delta`` apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError

HYPERCUBE = "hypercube"
GAUSSIANS = "gaussians"
KINDS = (HYPERCUBE, GAUSSIANS)

SCALABILITY_GRID = (100, 347, 1202, 4163, 14427, 50000)


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    p: int
    k: int = 5
    delta: float = 100.0
    kind: str = HYPERCUBE
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown generator {self.kind!r}")
        if not self.n >= self.k >= 1:
            raise InvalidArgumentError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        if self.p < 1:
            raise InvalidArgumentError(f"p must be >= 1, got {self.p}")
        if not self.delta > 0:
            raise InvalidArgumentError(f"delta must be > 0, got {self.delta}")


def _even_labels(n, k, rng):
    labels = np.repeat(np.arange(k), [n // k + (i < n % k) for i in range(k)])
    return rng.permutation(labels)


def hypercube_centers(p: int, k: int, delta: float, rng) -> np.ndarray:
    """``k`` distinct vertices of ``{0, delta}^p`` drawn uniformly."""
    if p < 63 and k > 2**p:
        raise InvalidArgumentError(f"{k} distinct vertices do not exist in {p} dimensions")
    if p <= 20:
        codes = rng.choice(2**p, size=k, replace=False)
        bits = (codes[:, None] >> np.arange(p)[None, :]) & 1
        return bits.astype(np.float64) * delta
    while True:
        bits = rng.integers(0, 2, size=(k, p))
        if np.unique(bits, axis=0).shape[0] == k:
            return bits.astype(np.float64) * delta


def simplex_centers(p: int, k: int, delta: float, rng) -> np.ndarray:
    """``k`` points in ``R^p`` with every pairwise distance equal to ``delta``."""
    if p < k - 1:
        raise InvalidArgumentError(f"a {k}-point simplex needs p >= {k - 1}, got p={p}")
    if k == 1:
        return np.zeros((1, p))
    # regular simplex: centered standard basis of R^k, edge sqrt(2)
    vertices = np.eye(k) - 1.0 / k
    _, _, vt = np.linalg.svd(vertices)
    coords = vertices @ vt[: k - 1].T  # (k, k-1), isometric
    frame, _ = np.linalg.qr(rng.standard_normal((p, k - 1)))
    return (coords @ frame.T) * (delta / np.sqrt(2.0))


def _sample(centers, n, rng):
    k, p = centers.shape
    labels = _even_labels(n, k, rng)
    X = rng.standard_normal((n, p))
    X += centers[labels]
    return X, labels.astype(np.int64)


def gen_hypercube(spec: SyntheticSpec):
    """Return ``(X, labels)`` for a hypercube-vertex benchmark."""
    rng = np.random.default_rng(spec.seed)
    centers = hypercube_centers(spec.p, spec.k, spec.delta, rng)
    return _sample(centers, spec.n, rng)


def gen_separated_gaussians(spec: SyntheticSpec):
    """Return ``(X, labels)`` with equidistant cluster centers."""
    rng = np.random.default_rng(spec.seed)
    centers = simplex_centers(spec.p, spec.k, spec.delta, rng)
    return _sample(centers, spec.n, rng)


def generate(spec: SyntheticSpec):
    if spec.kind == HYPERCUBE:
        return gen_hypercube(spec)
    return gen_separated_gaussians(spec)
