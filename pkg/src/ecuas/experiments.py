"""Analysis harnesses: cost curves, rejection-cost sweeps, and the
temperature-degradation experiment.

All outputs are plain row tables (lists of dicts) meant for the table writers
in :mod:`ecuas.dataio`; plotting is left to external tooling.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from .core import (
    DEFAULT_EPS_Q,
    CostMatrix,
    KahanSum,
    UARecord,
    c_n01,
    c_n01g,
)
from .baselines import expected_cost_fixed_gamma
from .dataio import Dataset

# Fig-2-style default grid: log-spaced temperatures spanning sharpening
# through strong flattening.
DEFAULT_T_GRID = tuple(float(t) for t in np.logspace(math.log10(0.25), math.log10(8.0), 13))


def cost_curve(
    n: float,
    k: Optional[int],
    grid_size: int = 200,
    *,
    eps_q: float = DEFAULT_EPS_Q,
) -> List[Dict[str, float]]:
    """Per-confidence cost for correct and wrong candidates.

    ``k`` is the class count; ``None`` selects the K -> infinity limit. The
    confidence grid spans [1/K, 1 - eps_q] (or [0, 1 - eps_q] in the limit).
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if n < 0.0:
        raise ValueError("n must be >= 0")
    if k is None:
        lo = 0.0
    else:
        if k < 2:
            raise ValueError("K must be >= 2")
        lo = 1.0 / k
    grid = np.linspace(lo, 1.0 - eps_q, grid_size)
    rows = []
    for q_e in grid:
        if k is None:
            cost_correct = c_n01g(True, float(q_e), n, eps_q=eps_q)
            cost_wrong = c_n01g(False, float(q_e), n, eps_q=eps_q)
        else:
            cost_correct = c_n01(True, float(q_e), n, k, eps_q=eps_q)
            cost_wrong = c_n01(False, float(q_e), n, k, eps_q=eps_q)
        rows.append({"q_e": float(q_e), "cost_correct": cost_correct, "cost_wrong": cost_wrong})
    return rows


def temperature_experiment(
    calibrated: Dataset,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    n_list: Sequence[float] = (0.0, 1.0, 128.0),
    seed: int = 0,
    *,
    eps_q: float = DEFAULT_EPS_Q,
) -> List[Dict[str, float]]:
    """Degrade candidate quality by sampling from tempered posteriors.

    For each temperature the candidate is drawn from
    ``softmax(log(q) / t)`` while the reported confidence stays the original
    calibrated probability of the sampled class, simulating a system whose
    answers worsen while its confidence model does not. Sampling uses
    inverse-CDF over ascending class indices with one generator per
    temperature derived from (seed, t-index), so the output table is
    deterministic per seed and independent of evaluation order. Each row
    carries the Monte-Carlo standard error of its mean.
    """
    if calibrated.kind != "posterior":
        raise ValueError("temperature experiment needs a posterior dataset")
    if any(t <= 0.0 for t in t_grid):
        raise ValueError("temperatures must be > 0")
    if len(calibrated) == 0:
        raise ValueError("empty dataset")
    probs = np.stack([rec.q.probs for rec in calibrated.records])
    labels = np.array([rec.label for rec in calibrated.records])
    k = probs.shape[1]
    log_q = np.log(np.maximum(probs, 1e-300))
    rows = []
    for t_index, t in enumerate(t_grid):
        logits = log_q / t
        logits -= logits.max(axis=1, keepdims=True)
        tempered = np.exp(logits)
        tempered /= tempered.sum(axis=1, keepdims=True)
        rng = np.random.default_rng([seed, t_index])
        draws = rng.random(len(labels))
        cdf = np.cumsum(tempered, axis=1)
        candidates = (draws[:, None] > cdf).sum(axis=1)
        candidates = np.minimum(candidates, k - 1)
        confidences = probs[np.arange(len(labels)), candidates]
        hits = candidates == labels
        for n in n_list:
            acc = KahanSum()
            costs = np.empty(len(labels))
            for i in range(len(labels)):
                value = c_n01(bool(hits[i]), float(confidences[i]), n, k, eps_q=eps_q)
                acc.add(value)
                costs[i] = value
            se = float(costs.std(ddof=1) / math.sqrt(len(labels))) if len(labels) > 1 else 0.0
            rows.append({"t": float(t), "n": float(n), "ecuas": acc.mean(), "se": se})
    return rows


def gamma_sweep(
    records: Sequence[UARecord],
    c: CostMatrix,
    gamma_grid: Sequence[float],
) -> List[Dict[str, float]]:
    """Expected cost at each rejection cost, accepting iff u <= gamma.

    Integrating this table against a rejection-cost weight recovers the
    corresponding aggregate metric up to quadrature error.
    """
    if len(gamma_grid) == 0:
        raise ValueError("empty grid")
    rows = []
    for gamma in gamma_grid:
        value = expected_cost_fixed_gamma(records, c, float(gamma), float(gamma))
        rows.append({"gamma": float(gamma), "expected_cost": value})
    return rows
