"""Comparison metrics: error rate, ECE, AUC, Brier, cross-entropy, AURC,
risk-coverage curves, and the fixed-rejection-cost expected cost.

All dataset means are accumulated sequentially in input order with
compensated summation, and every sort is stable with input-order
tie-breaking, so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .core import (
    DEFAULT_EPS_Q,
    CostMatrix,
    FullPosterior,
    KahanSum,
    UARecord,
    bayes_candidate,
    kahan_mean,
)

DEFAULT_ECE_BINS = 15


class UndefinedMetricError(ValueError):
    """Raised when a metric is undefined for the given data (e.g. AUC on a
    single-outcome dataset)."""


@dataclass(frozen=True)
class ScoredSample:
    """One evaluated sample: confidence in [0, 1] plus correctness."""

    confidence: float
    correct: bool

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class RiskCoveragePoint:
    coverage: float
    selective_risk: float
    threshold: float


def error_rate(samples: Sequence[ScoredSample]) -> float:
    """Fraction of incorrect candidates."""
    if not samples:
        raise ValueError("empty input")
    return kahan_mean(0.0 if s.correct else 1.0 for s in samples)


def ece(samples: Sequence[ScoredSample], bins: int = DEFAULT_ECE_BINS) -> float:
    """Expected calibration error over equal-width confidence bins.

    Bins are right-closed except the first; empty bins contribute nothing.
    """
    if not samples:
        raise ValueError("empty input")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    n_b = [0] * bins
    correct_b = [0] * bins
    conf_b = [KahanSum() for _ in range(bins)]
    for s in samples:
        idx = min(bins - 1, max(0, math.ceil(s.confidence * bins) - 1))
        n_b[idx] += 1
        correct_b[idx] += 1 if s.correct else 0
        conf_b[idx].add(s.confidence)
    total = len(samples)
    acc = KahanSum()
    for i in range(bins):
        if n_b[i] == 0:
            continue
        gap = abs(correct_b[i] / n_b[i] - conf_b[i].mean())
        acc.add(n_b[i] / total * gap)
    return acc.total


def auc(samples: Sequence[ScoredSample]) -> float:
    """Probability that a correct sample outranks a wrong one by confidence,
    ties counted one half (the Mann-Whitney statistic)."""
    from scipy.stats import rankdata

    if not samples:
        raise ValueError("empty input")
    correct = np.array([s.correct for s in samples], dtype=bool)
    n_pos = int(correct.sum())
    n_neg = len(samples) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one correct and one wrong sample")
    scores = np.array([s.confidence for s in samples], dtype=np.float64)
    ranks = rankdata(scores, method="average")
    return float((ranks[correct].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def brier_binary(samples: Sequence[ScoredSample]) -> float:
    """Mean squared gap between confidence and correctness."""
    if not samples:
        raise ValueError("empty input")
    return kahan_mean((s.confidence - (1.0 if s.correct else 0.0)) ** 2 for s in samples)


def ce_binary(samples: Sequence[ScoredSample], eps_q: float = DEFAULT_EPS_Q) -> float:
    """Mean negative log-likelihood of correctness under the confidence,
    clamped into [eps_q, 1 - eps_q]."""
    if not samples:
        raise ValueError("empty input")

    def nll(s: ScoredSample) -> float:
        p = min(max(s.confidence, eps_q), 1.0 - eps_q)
        return -math.log(p) if s.correct else -math.log(1.0 - p)

    return kahan_mean(nll(s) for s in samples)


def _require_posteriors(records: Sequence[UARecord]) -> None:
    if not records:
        raise ValueError("empty input")
    if any(not isinstance(r, FullPosterior) for r in records):
        raise ValueError("full-posterior records required")


def brier_multiclass(records: Sequence[UARecord]) -> float:
    """Mean squared distance between the posterior and the one-hot label."""
    _require_posteriors(records)

    def sq(rec: FullPosterior) -> float:
        diff = rec.q.probs.copy()
        diff[rec.label] -= 1.0
        return float(diff @ diff)

    return kahan_mean(sq(r) for r in records)


def ce_multiclass(records: Sequence[UARecord], eps_q: float = DEFAULT_EPS_Q) -> float:
    """Mean negative log posterior of the true label, clamped below."""
    _require_posteriors(records)
    return kahan_mean(-math.log(max(float(r.q.probs[r.label]), eps_q)) for r in records)


def _stable_desc_order(samples: Sequence[ScoredSample]) -> List[int]:
    # Stable sort by confidence descending; ties keep input order.
    return sorted(range(len(samples)), key=lambda i: -samples[i].confidence)


def aurc(samples: Sequence[ScoredSample]) -> float:
    """Area under the risk-coverage sweep.

    Samples are ranked by confidence descending (stable); the value is the
    mean over prefix lengths of the prefix error rate.
    """
    if not samples:
        raise ValueError("empty input")
    order = _stable_desc_order(samples)
    acc = KahanSum()
    errors = 0
    for i, idx in enumerate(order, start=1):
        if not samples[idx].correct:
            errors += 1
        acc.add(errors / i)
    return acc.mean()


def risk_coverage_curve(samples: Sequence[ScoredSample]) -> List[RiskCoveragePoint]:
    """Selective risk and coverage at every distinct confidence threshold,
    tightest threshold first."""
    if not samples:
        raise ValueError("empty input")
    order = _stable_desc_order(samples)
    n = len(samples)
    points: List[RiskCoveragePoint] = []
    errors = 0
    for i, idx in enumerate(order, start=1):
        if not samples[idx].correct:
            errors += 1
        threshold = samples[idx].confidence
        last = i == n
        if last or samples[order[i]].confidence != threshold:
            points.append(RiskCoveragePoint(i / n, errors / i, threshold))
    return points


def expected_cost_fixed_gamma(
    records: Sequence[UARecord],
    c: CostMatrix,
    gamma: float,
    threshold: float,
) -> float:
    """Mean cost when candidates are accepted iff their uncertainty is at most
    ``threshold``; rejected samples are charged ``gamma``.

    Identically equals selective_risk * coverage + gamma * (1 - coverage).
    """
    if not records:
        raise ValueError("empty input")
    if gamma < 0.0:
        raise ValueError("gamma must be >= 0")
    acc = KahanSum()
    for rec in records:
        u, cost = _uncertainty_and_cost(rec, c)
        acc.add(cost if u <= threshold else gamma)
    return acc.mean()


def _uncertainty_and_cost(rec: UARecord, c: CostMatrix) -> "tuple[float, float]":
    if isinstance(rec, FullPosterior):
        outcome = bayes_candidate(rec.q, c)
        return outcome.uncertainty, c.cost(rec.label, outcome.candidate)
    return 1.0 - rec.q_e, 0.0 if rec.correct else 1.0


def selective_cost_identity(
    records: Sequence[UARecord],
    c: CostMatrix,
    gamma: float,
    threshold: float,
) -> "tuple[float, float, float]":
    """(coverage, selective risk, combined cost) computed independently of
    ``expected_cost_fixed_gamma``; the combined value satisfies the same
    accept/reject rule."""
    if not records:
        raise ValueError("empty input")
    accepted = KahanSum()
    n_accepted = 0
    for rec in records:
        u, cost = _uncertainty_and_cost(rec, c)
        if u <= threshold:
            accepted.add(cost)
            n_accepted += 1
    coverage = n_accepted / len(records)
    risk = accepted.mean() if n_accepted else 0.0
    return coverage, risk, risk * coverage + gamma * (1.0 - coverage)
