"""Naive-prior reference system and metric normalization.

Normalized metrics divide the raw value by the value a naive system achieves
on the same labels, where the naive system always outputs the empirical label
prior: a value of 1.0 means "as poor as always predicting the prior". Only
prior-sensitive metrics are normalized; ECE, AUC and AURC never are, and for
confidence-only (generative) datasets no prior exists, so normalization is
unavailable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from .core import (
    DEFAULT_EPS_Q,
    CategoricalDistribution,
    ClampCounters,
    KahanSum,
    c_n01,
    c_n01g,
    kahan_mean,
)

# Metrics eligible for normalization (prefix "n_" in reports).
NORMALIZABLE = ("er", "ce_qe", "bs_qe", "ce_q", "bs_q", "ecuas")

_EPS_NAIVE = 1e-12


class NormalizationUndefinedError(ValueError):
    """Raised when the naive reference value is too small to divide by."""


@dataclass(frozen=True)
class NaiveSystem:
    """Constant predictor: empirical label prior, its argmax, its max."""

    prior: CategoricalDistribution
    candidate: int
    confidence: float


def naive_prior(labels: Sequence[int], k: int | None = None) -> NaiveSystem:
    """Build the naive system from test labels; argmax ties go to the lowest
    class index."""
    if len(labels) == 0:
        raise ValueError("empty input")
    arr = np.asarray(labels, dtype=np.int64)
    if arr.min() < 0:
        raise ValueError("negative label")
    n_classes = int(arr.max()) + 1 if k is None else k
    if n_classes < 2:
        n_classes = 2
    if arr.max() >= n_classes:
        raise ValueError("label out of range")
    counts = np.bincount(arr, minlength=n_classes).astype(np.float64)
    prior = counts / counts.sum()
    candidate = int(np.argmax(prior))
    return NaiveSystem(CategoricalDistribution(prior), candidate, float(prior[candidate]))


def normalize_metric(raw_value: float, naive_value: float) -> float:
    """Raw metric divided by the naive system's value."""
    if naive_value <= _EPS_NAIVE:
        raise NormalizationUndefinedError(
            f"naive reference value {naive_value!r} too small to normalize by"
        )
    return raw_value / naive_value


def naive_reference_metrics(
    naive: NaiveSystem,
    labels: Sequence[int],
    n_values: Sequence[float],
    *,
    eps_q: float = DEFAULT_EPS_Q,
    infinite_k: bool = False,
) -> Dict[str, float]:
    """Metric values of the naive system on the given labels.

    The naive system's constant candidate and confidence run through the same
    scoring path as an evaluated system, so ratios are like-for-like; set
    ``infinite_k`` when the evaluated run used the K -> infinity cost. Keys:
    er, ce_qe, bs_qe, ce_q, bs_q, and ecuas_<n> per requested n.
    """
    if len(labels) == 0:
        raise ValueError("empty input")
    prior = naive.prior.probs
    k = naive.prior.k
    q_e = naive.confidence
    q_e_clamped = min(max(q_e, eps_q), 1.0 - eps_q)

    er_acc = KahanSum()
    ce_qe_acc = KahanSum()
    bs_qe_acc = KahanSum()
    ce_q_acc = KahanSum()
    bs_q_acc = KahanSum()
    one_hot_gap = {}
    for y in range(k):
        diff = prior.copy()
        diff[y] -= 1.0
        one_hot_gap[y] = float(diff @ diff)
    for y in labels:
        correct = int(y) == naive.candidate
        er_acc.add(0.0 if correct else 1.0)
        ce_qe_acc.add(-np.log(q_e_clamped) if correct else -np.log(1.0 - q_e_clamped))
        bs_qe_acc.add((q_e - (1.0 if correct else 0.0)) ** 2)
        ce_q_acc.add(-np.log(max(float(prior[int(y)]), eps_q)))
        bs_q_acc.add(one_hot_gap[int(y)])
    out: Dict[str, float] = {
        "er": er_acc.mean(),
        "ce_qe": ce_qe_acc.mean(),
        "bs_qe": bs_qe_acc.mean(),
        "ce_q": ce_q_acc.mean(),
        "bs_q": bs_q_acc.mean(),
    }
    counters = ClampCounters()  # naive-system clamps are not reported
    for n in n_values:
        if infinite_k:
            values = (
                c_n01g(int(y) == naive.candidate, q_e, n, eps_q=eps_q, counters=counters)
                for y in labels
            )
        else:
            values = (
                c_n01(int(y) == naive.candidate, q_e, n, k, eps_q=eps_q, counters=counters)
                for y in labels
            )
        out[f"ecuas_{_format_n(n)}"] = kahan_mean(values)
    return out


def _format_n(n: float) -> str:
    return str(int(n)) if float(n).is_integer() else str(n)
