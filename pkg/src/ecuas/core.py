"""Costs with a reject option and the scoring rules derived from them.

A system under evaluation emits, per sample, a candidate decision plus an
uncertainty score (or, equivalently, a confidence). Given a candidate-cost
matrix and a rejection cost ``gamma``, the optimal (Bayes) policy accepts the
candidate when its expected cost is at most ``gamma`` and rejects otherwise.
Evaluating that cost at the Bayes policy yields a proper scoring rule for each
``gamma``; integrating the family against a power-law weight over ``gamma``
yields the closed-form costs implemented here (``c_n_star`` and its zero-one
specializations ``c_n01`` / ``c_n01g``). Dataset-level aggregation is
``ecuas``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

import numpy as np

# Clamp applied to confidences before logarithms (the n=0 cost diverges as the
# confidence of a wrong answer approaches 1).
DEFAULT_EPS_Q = 1e-6
# Clamp applied to uncertainties before the n=0 logarithm.
DEFAULT_EPS_U = 1e-10

# Absolute tolerance for probability-vector validation.
SIMPLEX_ATOL = 1e-9

# Grace allowed on u <= u_max comparisons before the above-maximum safeguard
# triggers; absorbs roundoff in externally computed expected costs.
_U_MAX_GRACE = 1e-12


class _Reject:
    """Sentinel for the reject decision."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover
        return "REJECT"


REJECT = _Reject()

Decision = Union[int, _Reject]


@dataclass(frozen=True)
class CategoricalDistribution:
    """A probability vector over K >= 2 classes.

    Entries must be non-negative and sum to 1 within ``SIMPLEX_ATOL``;
    construction raises otherwise.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.shape[0] < 2:
            raise ValueError("probability vector must be 1-D with K >= 2 entries")
        if not np.all(np.isfinite(probs)):
            raise ValueError("probability vector has non-finite entries")
        if np.any(probs < 0.0):
            raise ValueError("probability vector has negative entries")
        total = float(probs.sum())
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {SIMPLEX_ATOL}")
        object.__setattr__(self, "probs", probs)

    @property
    def k(self) -> int:
        return int(self.probs.shape[0])

    @property
    def confidence(self) -> float:
        """Largest entry (probability of the most likely class)."""
        return float(self.probs.max())


class CostKind(Enum):
    ZERO_ONE = "zero-one"
    GENERALIZED_ZERO_ONE = "generalized-zero-one"
    GENERALIZED_ZERO_ONE_INFINITE = "generalized-zero-one-infinite"
    CUSTOM = "custom"


@dataclass
class CostMatrix:
    """Candidate-decision costs over K classes x M decisions.

    ``entries[y, d]`` is the cost of emitting decision ``d`` when the true
    class is ``y``. The generalized zero-one kinds carry only the class count
    (finite K, or the K -> infinity limit used for generative systems) and
    behave like a zero-one matrix over equivalence classes.
    """

    kind: CostKind
    entries: Optional[np.ndarray]
    k: Optional[int]
    _u_max_cache: Optional[float] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.entries is not None:
            entries = np.asarray(self.entries, dtype=np.float64)
            if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
                raise ValueError("cost matrix must be 2-D and non-empty")
            if not np.all(np.isfinite(entries)) or np.any(entries < 0.0):
                raise ValueError("cost entries must be finite and non-negative")
            self.entries = entries
            if self.k is None:
                self.k = int(entries.shape[0])
            elif self.k != entries.shape[0]:
                raise ValueError("class count disagrees with matrix shape")
        if self.kind in (CostKind.ZERO_ONE, CostKind.GENERALIZED_ZERO_ONE):
            if self.k is None or self.k < 2:
                raise ValueError("zero-one costs require K >= 2")
        if self.kind is CostKind.ZERO_ONE:
            e = self.entries
            if e is None or e.shape[0] != e.shape[1]:
                raise ValueError("zero-one matrix must be square")
            expected = 1.0 - np.eye(self.k)
            if not np.array_equal(e, expected):
                raise ValueError("zero-one matrix must be 0 on the diagonal and 1 elsewhere")

    @classmethod
    def zero_one(cls, k: int) -> "CostMatrix":
        if k < 2:
            raise ValueError("zero-one cost requires K >= 2")
        return cls(CostKind.ZERO_ONE, 1.0 - np.eye(k), k)

    @classmethod
    def generalized_zero_one(cls, k: int) -> "CostMatrix":
        """Zero-one cost over K equivalence classes (confidence records only)."""
        if k < 2:
            raise ValueError("generalized zero-one cost requires K >= 2")
        return cls(CostKind.GENERALIZED_ZERO_ONE, None, k)

    @classmethod
    def generalized_zero_one_infinite(cls) -> "CostMatrix":
        """K -> infinity limit of the zero-one cost (u_max = 1)."""
        return cls(CostKind.GENERALIZED_ZERO_ONE_INFINITE, None, None)

    @classmethod
    def custom(cls, entries: Iterable[Iterable[float]]) -> "CostMatrix":
        return cls(CostKind.CUSTOM, np.asarray(entries, dtype=np.float64), None)

    @property
    def num_decisions(self) -> int:
        if self.entries is None:
            raise ValueError(f"{self.kind.value} cost has no explicit decision set")
        return int(self.entries.shape[1])

    def cost(self, label: int, decision: int) -> float:
        if self.entries is None:
            raise ValueError(f"{self.kind.value} cost has no explicit entries")
        k, m = self.entries.shape
        if not (0 <= label < k) or not (0 <= decision < m):
            raise IndexError("label or decision index out of range")
        return float(self.entries[label, decision])


@dataclass(frozen=True)
class FullPosterior:
    """Evaluation record carrying the true label and the full posterior."""

    label: int
    q: CategoricalDistribution

    def __post_init__(self) -> None:
        if not (0 <= self.label < self.q.k):
            raise ValueError(f"label {self.label} out of range for K={self.q.k}")


@dataclass(frozen=True)
class ConfidenceOnly:
    """Evaluation record carrying only correctness and the confidence."""

    correct: bool
    q_e: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.q_e <= 1.0) or not math.isfinite(self.q_e):
            raise ValueError(f"confidence {self.q_e} outside [0, 1]")


UARecord = Union[FullPosterior, ConfidenceOnly]


@dataclass(frozen=True)
class PowerLaw:
    """Rejection-cost weight proportional to gamma**(n-1), normalized so the
    integrated cost equals 1 at maximum uncertainty."""

    n: float

    def __post_init__(self) -> None:
        if not (self.n >= 0.0) or not math.isfinite(self.n):
            raise ValueError("power-law exponent must be finite and >= 0")


@dataclass(frozen=True)
class DiracAt:
    """Point mass at a single rejection cost; recovers the fixed-gamma rule."""

    gamma0: float

    def __post_init__(self) -> None:
        if not (self.gamma0 >= 0.0):
            raise ValueError("gamma0 must be >= 0")


@dataclass(frozen=True)
class Tabulated:
    """Weight given on a strictly increasing gamma grid; linear in between,
    zero outside the grid range."""

    gammas: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        gammas = np.asarray(self.gammas, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if gammas.ndim != 1 or gammas.shape != weights.shape or gammas.size < 2:
            raise ValueError("tabulated weight needs matching 1-D grids with >= 2 points")
        if np.any(np.diff(gammas) <= 0.0):
            raise ValueError("gamma grid must be strictly increasing")
        if np.any(gammas < 0.0):
            raise ValueError("gamma grid must be non-negative")
        if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and non-negative")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "weights", weights)


WeightFamily = Union[PowerLaw, DiracAt, Tabulated]


@dataclass(frozen=True)
class BayesOutcome:
    """Candidate minimizing expected cost, with its expected cost (the
    uncertainty)."""

    candidate: int
    uncertainty: float


@dataclass
class ClampCounters:
    """Tally of safeguards applied during scoring; recorded, never raised."""

    uncertainty_above_max: int = 0
    uncertainty_log_clamped: int = 0
    confidence_below_min: int = 0
    confidence_above_max: int = 0

    def merge(self, other: "ClampCounters") -> None:
        self.uncertainty_above_max += other.uncertainty_above_max
        self.uncertainty_log_clamped += other.uncertainty_log_clamped
        self.confidence_below_min += other.confidence_below_min
        self.confidence_above_max += other.confidence_above_max

    def total(self) -> int:
        return (
            self.uncertainty_above_max
            + self.uncertainty_log_clamped
            + self.confidence_below_min
            + self.confidence_above_max
        )

    def as_dict(self) -> dict:
        return {
            "uncertainty_above_max": self.uncertainty_above_max,
            "uncertainty_log_clamped": self.uncertainty_log_clamped,
            "confidence_below_min": self.confidence_below_min,
            "confidence_above_max": self.confidence_above_max,
        }


class KahanSum:
    """Compensated sequential accumulator; bit-stable for a fixed input order."""

    __slots__ = ("total", "_c", "count")

    def __init__(self) -> None:
        self.total = 0.0
        self._c = 0.0
        self.count = 0

    def add(self, value: float) -> None:
        y = value - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t
        self.count += 1

    def mean(self) -> float:
        if self.count == 0:
            raise ValueError("mean of empty accumulator")
        return self.total / self.count


def kahan_mean(values: Iterable[float]) -> float:
    """Compensated mean taken in iteration order."""
    acc = KahanSum()
    for v in values:
        acc.add(v)
    return acc.mean()


def u_max(c: CostMatrix) -> float:
    """Maximum achievable uncertainty over the simplex.

    Exactly ``1 - 1/K`` for the zero-one kinds and 1 in the K -> infinity
    limit. For custom matrices the value is the maximum over the simplex of
    the concave piecewise-linear function ``min_d q . entries[:, d]``, solved
    as a small linear program.
    """
    if c._u_max_cache is not None:
        return c._u_max_cache
    if c.kind in (CostKind.ZERO_ONE, CostKind.GENERALIZED_ZERO_ONE):
        value = 1.0 - 1.0 / c.k
    elif c.kind is CostKind.GENERALIZED_ZERO_ONE_INFINITE:
        value = 1.0
    else:
        value = _u_max_linprog(c.entries)
    c._u_max_cache = value
    return value


def _u_max_linprog(entries: np.ndarray) -> float:
    # maximize t subject to t <= q . entries[:, d] for all d, q on the simplex
    from scipy.optimize import linprog

    k, m = entries.shape
    cost = np.zeros(k + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([-entries.T, np.ones((m, 1))])
    b_ub = np.zeros(m)
    a_eq = np.concatenate([np.ones(k), [0.0]])[None, :]
    bounds = [(0.0, None)] * k + [(0.0, float(entries.max()))]
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")
    if not res.success:  # pragma: no cover - well-posed by construction
        raise RuntimeError(f"u_max linear program failed: {res.message}")
    return float(res.x[-1])


def bayes_candidate(q: CategoricalDistribution, c: CostMatrix) -> BayesOutcome:
    """Candidate decision minimizing expected cost under ``q``.

    Ties are broken by the lowest decision index. The returned uncertainty is
    the expected cost of that candidate.
    """
    if c.kind is CostKind.ZERO_ONE:
        if c.k != q.k:
            raise ValueError(f"dimension mismatch: posterior K={q.k}, cost K={c.k}")
        candidate = int(np.argmax(q.probs))
        return BayesOutcome(candidate, float(1.0 - q.probs[candidate]))
    if c.entries is None:
        raise ValueError(f"{c.kind.value} cost has no explicit decision set")
    if c.entries.shape[0] != q.k:
        raise ValueError(
            f"dimension mismatch: posterior K={q.k}, cost K={c.entries.shape[0]}"
        )
    expected = q.probs @ c.entries
    candidate = int(np.argmin(expected))
    return BayesOutcome(candidate, float(expected[candidate]))


def bayes_decision(q: CategoricalDistribution, c: CostMatrix, gamma: float) -> Decision:
    """Optimal decision for rejection cost ``gamma``: the Bayes candidate when
    its uncertainty is at most ``gamma`` (equality accepts), else REJECT."""
    if gamma < 0.0:
        raise ValueError("gamma must be >= 0")
    outcome = bayes_candidate(q, c)
    if outcome.uncertainty > gamma:
        return REJECT
    return outcome.candidate


def c_gamma_star(y: int, candidate: int, u: float, gamma: float, c: CostMatrix) -> float:
    """Fixed-gamma scoring rule: candidate cost when accepted (u <= gamma),
    gamma when rejected.

    ``candidate`` and ``u`` may come from any external system, not just the
    Bayes rule, so black-box outputs can be scored.
    """
    if u < 0.0 or gamma < 0.0:
        raise ValueError("u and gamma must be >= 0")
    if u <= gamma:
        return c.cost(y, candidate)
    return gamma


def _power_weighted_cost(
    relative_u: float,
    candidate_cost_over_umax: float,
    n: float,
    eps_log_u: Optional[float],
    counters: Optional[ClampCounters],
) -> float:
    # Closed form of the power-law-weighted cost in terms of r = u / u_max and
    # candidate_cost / u_max. Working with ratios keeps u_max**-(n+1) out of
    # the arithmetic, which would overflow for large n.
    r = relative_u
    if n == 0.0:
        if candidate_cost_over_umax == 0.0:
            return r
        r_log = r
        if eps_log_u is not None and r < eps_log_u:
            r_log = eps_log_u
            if counters is not None:
                counters.uncertainty_log_clamped += 1
        return r - math.log(r_log) * candidate_cost_over_umax
    if candidate_cost_over_umax == 0.0:
        return r ** (n + 1.0)
    if r == 0.0:
        mismatch = 1.0 / n  # (1 - r**n) / n at r = 0
    else:
        # (1 - r**n) / n via expm1: stable for tiny n, where the direct form
        # rounds 1 - r**n to 0 against an overflowing 1/n
        mismatch = -math.expm1(n * math.log(r)) / n
    return r ** (n + 1.0) + (n + 1.0) * mismatch * candidate_cost_over_umax


def c_n_star(
    y: int,
    candidate: int,
    u: float,
    n: float,
    c: CostMatrix,
    *,
    eps_u: float = DEFAULT_EPS_U,
    counters: Optional[ClampCounters] = None,
) -> float:
    """Closed-form cost under the power-law weight with exponent ``n``.

    Uncertainties above the maximum achievable value are scored exactly 1 (the
    boundary cost) and counted as warnings; uncertainties below ``eps_u`` are
    clamped inside the n=0 logarithm only.
    """
    if u < 0.0:
        raise ValueError("u must be >= 0")
    if n < 0.0:
        raise ValueError("n must be >= 0")
    um = u_max(c)
    if um <= 0.0:
        raise ValueError("cost matrix admits no uncertainty; power-law weight undefined")
    candidate_cost = c.cost(y, candidate)
    if u > um + _U_MAX_GRACE * max(1.0, um):
        if counters is not None:
            counters.uncertainty_above_max += 1
        return 1.0
    r = min(u / um, 1.0)
    return _power_weighted_cost(r, candidate_cost / um, n, eps_u / um, counters)


def c_n01(
    correct: bool,
    q_e: float,
    n: float,
    k: int,
    *,
    eps_q: float = DEFAULT_EPS_Q,
    counters: Optional[ClampCounters] = None,
) -> float:
    """Zero-one specialization of ``c_n_star`` in terms of the confidence.

    Confidences below 1/K (inconsistent with an argmax decision) are clamped
    up to 1/K; confidences above 1 - eps_q are clamped down so the n=0
    logarithm stays finite. Both clamps are counted.
    """
    if n < 0.0:
        raise ValueError("n must be >= 0")
    if k < 2:
        raise ValueError("K must be >= 2")
    if not (0.0 <= q_e <= 1.0):
        raise ValueError(f"confidence {q_e} outside [0, 1]")
    q_min = 1.0 / k
    if q_e < q_min:
        q_e = q_min
        if counters is not None:
            counters.confidence_below_min += 1
    elif q_e > 1.0 - eps_q:
        q_e = 1.0 - eps_q
        if counters is not None:
            counters.confidence_above_max += 1
    um = 1.0 - q_min
    u = 1.0 - q_e
    wrong_over_umax = 0.0 if correct else 1.0 / um
    return _power_weighted_cost(u / um, wrong_over_umax, n, None, counters)


def c_n01g(
    correct: bool,
    q_e: float,
    n: float,
    *,
    eps_q: float = DEFAULT_EPS_Q,
    counters: Optional[ClampCounters] = None,
) -> float:
    """K -> infinity limit of ``c_n01`` for generative systems.

    The boundary q_e = 0 (maximum uncertainty) scores exactly 1; only the
    upper end is clamped, to keep the n=0 logarithm finite on wrong answers.
    """
    if n < 0.0:
        raise ValueError("n must be >= 0")
    if not (0.0 <= q_e <= 1.0):
        raise ValueError(f"confidence {q_e} outside [0, 1]")
    if q_e > 1.0 - eps_q:
        q_e = 1.0 - eps_q
        if counters is not None:
            counters.confidence_above_max += 1
    u = 1.0 - q_e
    wrong = 0.0 if correct else 1.0
    return _power_weighted_cost(u, wrong, n, None, counters)


def ecuas(
    records: Sequence[UARecord],
    n: float,
    c: CostMatrix,
    *,
    eps_q: float = DEFAULT_EPS_Q,
    eps_u: float = DEFAULT_EPS_U,
    counters: Optional[ClampCounters] = None,
) -> float:
    """Mean per-record cost over a dataset, accumulated in input order with
    compensated summation.

    Full-posterior records are scored through the Bayes candidate under ``c``;
    confidence-only records require zero-one semantics (finite K or the
    infinite limit).
    """
    if len(records) == 0:
        raise ValueError("empty dataset")
    kinds = {type(r) for r in records}
    if len(kinds) > 1:
        raise ValueError("mixed record kinds in one dataset")
    acc = KahanSum()
    if kinds == {FullPosterior}:
        if c.entries is None:
            raise ValueError("full-posterior records require an explicit cost matrix")
        for rec in records:
            outcome = bayes_candidate(rec.q, c)
            acc.add(
                c_n_star(
                    rec.label,
                    outcome.candidate,
                    outcome.uncertainty,
                    n,
                    c,
                    eps_u=eps_u,
                    counters=counters,
                )
            )
    else:
        if c.kind in (CostKind.ZERO_ONE, CostKind.GENERALIZED_ZERO_ONE):
            for rec in records:
                acc.add(c_n01(rec.correct, rec.q_e, n, c.k, eps_q=eps_q, counters=counters))
        elif c.kind is CostKind.GENERALIZED_ZERO_ONE_INFINITE:
            for rec in records:
                acc.add(c_n01g(rec.correct, rec.q_e, n, eps_q=eps_q, counters=counters))
        else:
            raise ValueError("confidence-only records require zero-one cost semantics")
    return acc.mean()
