"""Representative selection for consensus groups.

Every mode returns the index of an actual member of the group. Scores are
computed in row blocks so that the pairwise matrix of a large group is never
materialized in full.
"""

from __future__ import annotations

import decimal
import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import InvalidArgumentError, InvalidDataError

ABS_INNER_ARGMIN = "abs_inner_argmin"
ABS_INNER_ARGMAX = "abs_inner_argmax"
ABS_INNER_CAPPED = "abs_inner_capped"
RBF_ARGMAX = "rbf_argmax"
CENTROID = "centroid"

MODES = (ABS_INNER_ARGMIN, ABS_INNER_ARGMAX, ABS_INNER_CAPPED, RBF_ARGMAX, CENTROID)

DEFAULT_CAP = 1000
_BLOCK = 1024
# precision ceiling of the decimal kernel sums; kernel terms smaller than
# 10**-_MAX_DIGITS of the largest one drop out of the comparison
_MAX_DIGITS = 200
_EPS = float(np.finfo(np.float64).eps)
# rational re-ranking of near-tied candidates is skipped above this many
# multiply-adds; the float ranking is used instead
_EXACT_BUDGET = 2_000_000


@dataclass(frozen=True)
class MedoidMode:
    """How a group representative is chosen.

    ``gamma`` applies to the RBF mode only: a positive float, ``None`` for
    ``1 / p``, or ``"median"`` for ``1 / (2 * median squared distance)``.
    ``include_self`` adds the ``|<x_i, x_i>|`` term to the inner-product
    objectives.
    """

    kind: str = ABS_INNER_ARGMIN
    cap: int = DEFAULT_CAP
    gamma: Union[float, str, None] = None
    include_self: bool = False

    def __post_init__(self):
        if self.kind not in MODES:
            raise InvalidArgumentError(f"unknown medoid mode {self.kind!r}")
        if self.cap < 1:
            raise InvalidArgumentError(f"cap must be >= 1, got {self.cap}")
        if isinstance(self.gamma, str):
            if self.gamma != "median":
                raise InvalidArgumentError(f"gamma must be a number or 'median', got {self.gamma!r}")
        elif self.gamma is not None and not self.gamma > 0:
            raise InvalidArgumentError(f"gamma must be > 0, got {self.gamma}")

    @classmethod
    def abs_inner(cls, include_self: bool = False) -> "MedoidMode":
        return cls(ABS_INNER_ARGMIN, include_self=include_self)

    @classmethod
    def capped(cls, cap: int = DEFAULT_CAP, include_self: bool = False) -> "MedoidMode":
        return cls(ABS_INNER_CAPPED, cap=cap, include_self=include_self)

    @classmethod
    def rbf(cls, gamma: Union[float, str, None] = None) -> "MedoidMode":
        return cls(RBF_ARGMAX, gamma=gamma)

    @classmethod
    def centroid(cls) -> "MedoidMode":
        return cls(CENTROID)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "cap": self.cap,
            "gamma": self.gamma,
            "include_self": self.include_self,
        }


def _check_rows(rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise InvalidArgumentError("cannot select a medoid from an empty group")
    if not np.all(np.isfinite(rows)):
        raise InvalidDataError("group rows contain NaN or infinite entries")
    return rows


def resolve_gamma(rows: np.ndarray, gamma) -> float:
    if gamma is None:
        return 1.0 / rows.shape[1]
    if gamma == "median":
        m = rows.shape[0]
        if m < 2:
            return 1.0 / rows.shape[1]
        d2 = cdist(rows, rows, "sqeuclidean")[np.triu_indices(m, 1)]
        med = float(np.median(d2))
        gamma = 1.0 / (2.0 * med) if med > 0 else 0.0
        return gamma if 0.0 < gamma < math.inf else 1.0 / rows.shape[1]
    return float(gamma)


def _abs_inner_scores(rows, ref_idx, include_self):
    """Sum over ``rows[ref_idx]`` of ``|<x_i, x_j>|`` for every row ``i``.

    Also returns a bound on the rounding error of every score.
    """
    m, p = rows.shape
    ref = rows[ref_idx]
    pos_in_ref = np.full(m, -1)
    pos_in_ref[ref_idx] = np.arange(ref_idx.size)
    scores = np.empty(m)
    for start in range(0, m, _BLOCK):
        block = np.abs(rows[start : start + _BLOCK] @ ref.T)
        if not include_self:
            local = np.arange(block.shape[0])
            cols = pos_in_ref[start : start + block.shape[0]]
            hit = cols >= 0
            block[local[hit], cols[hit]] = 0.0
        scores[start : start + _BLOCK] = block.sum(axis=1)
    # sum_j sum_k |x_ik| |x_jk| bounds the cancellation in every dot product
    magnitude = np.abs(rows) @ np.abs(ref).sum(axis=0)
    err = 2.0 * (p + ref_idx.size + 4) * _EPS * magnitude
    return scores, err


def _rbf_scores(rows, gamma):
    """Log kernel sums ``log sum_{j != i} exp(-gamma |x_i - x_j|^2)`` and error bounds.

    Each row is shifted by its smallest exponent before exponentiating, so
    widely spread groups do not underflow to a wall of zero scores.
    """
    m, p = rows.shape
    scores = np.empty(m)
    err = np.empty(m)
    for start in range(0, m, _BLOCK):
        expo = gamma * cdist(rows[start : start + _BLOCK], rows, "sqeuclidean")
        local = np.arange(expo.shape[0])
        expo[local, start + local] = np.inf
        shift = expo.min(axis=1)
        block = np.exp(-(expo - shift[:, None]))
        total = block.sum(axis=1)
        finite = np.where(np.isfinite(expo), expo, 0.0)
        spread = (block * ((p + 3) * (finite + shift[:, None]) + 2.0)).sum(axis=1) / total
        scores[start : start + _BLOCK] = np.log(total) - shift
        err[start : start + _BLOCK] = 2.0 * _EPS * (spread + (p + 3) * shift + m + 4)
    return scores, err


def _near_ties(scores, err, maximize):
    """Indices whose score interval overlaps the interval of the float winner."""
    if maximize:
        return np.flatnonzero(scores + err >= np.max(scores - err))
    return np.flatnonzero(scores - err <= np.min(scores + err))


def _drop_duplicate_rows(rows, idx):
    """Keep the lowest index of every set of identical rows in ``idx``."""
    if idx.size < 2:
        return idx
    _, first = np.unique(rows[idx], axis=0, return_index=True)
    return np.sort(idx[first])


def _rbf_digits(exponents) -> int:
    """Digits that keep the smallest kernel term visible next to the largest."""
    lo, hi = min(exponents), max(exponents)
    return min(_MAX_DIGITS, 30 + int((hi - lo) / math.log(10)))


def _scaled_ints(rows):
    """Rows as Python ints sharing one power-of-two scale ``2**shift``.

    Every double is ``num / 2**k``; multiplying by the largest ``2**k`` makes
    the whole block integral, so sums and products below are exact.
    """
    fracs = [v.as_integer_ratio() for v in rows.ravel().tolist()]
    shift = max(den.bit_length() - 1 for _, den in fracs)
    ints = [num << (shift - (den.bit_length() - 1)) for num, den in fracs]
    return np.array(ints, dtype=object).reshape(rows.shape), shift


def _exact_abs_inner(rows, candidates, ref_idx, include_self):
    # all scores share the factor 2**(-2 * shift), so integers compare directly
    A, _ = _scaled_ints(rows)
    ref = A[ref_idx]
    out = []
    for i in candidates.tolist():
        dots = ref.dot(A[i])
        if not include_self:
            dots[ref_idx == i] = 0
        out.append(sum(abs(d) for d in dots))
    return out


def _exact_rbf(rows, candidates, gamma):
    """Kernel sums of the candidates, exponents exact, sums to many digits.

    Kernel sums such as ``e**-1 + e**-81`` and ``e**-1 + e**-100`` are equal in
    double precision; here the exponents are exact rationals and the sums are
    carried in decimal arithmetic with enough digits to separate them, up to
    a fixed ceiling.
    """
    A, shift = _scaled_ints(rows)
    g = Fraction(gamma) / (1 << (2 * shift))
    exps = []
    for i in candidates.tolist():
        diff = A - A[i]
        d2 = (diff * diff).sum(axis=1)
        exps.append([g * int(d2[j]) for j in range(len(A)) if j != i])
    digits = _rbf_digits([float(e) for ex in exps for e in ex])
    if len(exps) * len(exps[0]) * digits**2 > 20 * _EXACT_BUDGET:
        return None
    out = []
    with decimal.localcontext() as ctx:
        ctx.prec = digits
        for ex in exps:
            terms = sorted((-(decimal.Decimal(e.numerator) / decimal.Decimal(e.denominator))).exp() for e in ex)
            out.append(sum(terms, decimal.Decimal(0)))
    return out


def _pick(scores, err, maximize, rows, exact, work_per_candidate):
    """Winner of a float ranking, re-ranked exactly among near ties.

    Exact ties resolve to the lowest index.
    """
    tied = _drop_duplicate_rows(rows, _near_ties(scores, err, maximize))
    if tied.size == 1:
        return int(tied[0])
    values = None
    if tied.size * work_per_candidate <= _EXACT_BUDGET:
        values = exact(tied)
    if values is None:
        values = scores[tied].tolist()
    best = max(values) if maximize else min(values)
    return int(tied[values.index(best)])


def _symmetric_pair(mode: MedoidMode) -> bool:
    if mode.kind == RBF_ARGMAX:
        return True
    if mode.kind in (ABS_INNER_ARGMIN, ABS_INNER_ARGMAX):
        return not mode.include_self
    return mode.kind == ABS_INNER_CAPPED and mode.cap >= 2 and not mode.include_self


def _first_argmin(scores):
    return int(np.flatnonzero(scores == scores.min())[0])


def select_medoid(rows, mode: Optional[MedoidMode] = None, rng=None) -> int:
    """Index in ``[0, m)`` of the representative of ``rows`` under ``mode``.

    Ties resolve to the lowest index. Candidates whose float scores are within
    rounding error of the best are re-ranked with exact arithmetic, so
    identical rows and float-level ties cannot flip the choice. ``rng`` is
    only consumed by the capped mode, and only when the group is larger than
    the cap.
    """
    rows = _check_rows(rows)
    mode = mode or MedoidMode()
    m, p = rows.shape
    if m == 1:
        return 0
    if m == 2 and _symmetric_pair(mode):
        # both members score the same single pairwise term
        return 0

    if mode.kind == CENTROID:
        d2 = cdist(rows, rows.mean(axis=0, keepdims=True), "sqeuclidean")[:, 0]
        return _first_argmin(d2)
    if mode.kind == RBF_ARGMAX:
        gamma = resolve_gamma(rows, mode.gamma)
        scores, err = _rbf_scores(rows, gamma)
        return _pick(scores, err, True, rows, lambda c: _exact_rbf(rows, c, gamma), m * p)

    ref_idx = np.arange(m)
    if mode.kind == ABS_INNER_CAPPED and mode.cap < m:
        rng = np.random.default_rng(rng)
        ref_idx = np.sort(rng.choice(m, size=mode.cap, replace=False))
    scores, err = _abs_inner_scores(rows, ref_idx, mode.include_self)
    return _pick(
        scores, err, mode.kind == ABS_INNER_ARGMAX, rows,
        lambda c: _exact_abs_inner(rows, c, ref_idx, mode.include_self),
        ref_idx.size * p,
    )


def medoid_oracle(rows, mode: Optional[MedoidMode] = None, rng=None) -> int:
    """Literal evaluation of the medoid objective, one candidate at a time.

    For each candidate ``i`` the objective terms against every other member
    are formed directly (differences, not norm expansions) and summed with
    ``math.fsum``. Every candidate that is within rounding error of the best
    is then scored in exact rational arithmetic (decimal for the kernel
    exponentials). Meant for cross-checking :func:`select_medoid` on small
    groups.
    """
    rows = _check_rows(rows)
    mode = mode or MedoidMode()
    m, p = rows.shape

    def others(i, ref):
        return [j for j in ref if j != i]

    def as_fractions(i):
        return [Fraction(float(v)) for v in rows[i]]

    if mode.kind == CENTROID:
        mean = np.array([math.fsum(col) / m for col in rows.T])
        scores = [math.fsum((rows[i] - mean) ** 2) for i in range(m)]
        return min(range(m), key=lambda i: (scores[i], i))

    if mode.kind == RBF_ARGMAX:
        gamma = resolve_gamma(rows, mode.gamma)
        scores, bounds = [], []
        for i in range(m):
            diff = rows[others(i, range(m))] - rows[i]
            ex = gamma * (diff * diff).sum(axis=1)
            low = float(ex.min())
            terms = np.exp(-(ex - low))
            total = math.fsum(terms)
            scores.append(math.log(total) - low)
            spread = math.fsum(terms * ((p + 3) * ex + 2.0)) / total
            bounds.append(2.0 * _EPS * (spread + (p + 3) * low + m + 4))
        floor = max(s - b for s, b in zip(scores, bounds))
        tied = [i for i in range(m) if scores[i] + bounds[i] >= floor]
        if len(tied) == 1:
            return tied[0]
        g = Fraction(gamma)
        exact_exps = {}
        for i in tied:
            xi = as_fractions(i)
            exact_exps[i] = [
                g * sum((a - b) ** 2 for a, b in zip(xi, as_fractions(j))) for j in others(i, range(m))
            ]
        flat = [float(e) for i in tied for e in exact_exps[i]]
        prec = min(_MAX_DIGITS, 30 + int((max(flat) - min(flat)) / math.log(10)))
        with decimal.localcontext() as ctx:
            ctx.prec = prec
            exact = {}
            for i in tied:
                terms = [
                    (decimal.Decimal(-e.numerator) / decimal.Decimal(e.denominator)).exp()
                    for e in exact_exps[i]
                ]
                terms.sort()
                total = decimal.Decimal(0)
                for t in terms:
                    total += t
                exact[i] = total
        top = max(exact.values())
        return min(i for i in tied if exact[i] == top)

    ref = list(range(m))
    if mode.kind == ABS_INNER_CAPPED and mode.cap < m:
        rng = np.random.default_rng(rng)
        ref = sorted(int(j) for j in rng.choice(m, size=mode.cap, replace=False))
    scores, bounds = [], []
    for i in range(m):
        js = ref if mode.include_self else others(i, ref)
        if not js:
            scores.append(0.0)
            bounds.append(0.0)
            continue
        products = rows[js] * rows[i]
        scores.append(math.fsum(abs(v) for v in products.sum(axis=1)))
        bounds.append(2.0 * (p + 2) * _EPS * math.fsum(np.abs(products).ravel()))
    maximize = mode.kind == ABS_INNER_ARGMAX
    if maximize:
        floor = max(s - b for s, b in zip(scores, bounds))
        tied = [i for i in range(m) if scores[i] + bounds[i] >= floor]
    else:
        ceiling = min(s + b for s, b in zip(scores, bounds))
        tied = [i for i in range(m) if scores[i] - bounds[i] <= ceiling]
    if len(tied) == 1:
        return tied[0]
    exact = {}
    for i in tied:
        xi = as_fractions(i)
        js = ref if mode.include_self else others(i, ref)
        exact[i] = sum((abs(sum(a * b for a, b in zip(xi, as_fractions(j)))) for j in js), Fraction(0))
    best = max(exact.values()) if maximize else min(exact.values())
    return min(i for i in tied if exact[i] == best)
