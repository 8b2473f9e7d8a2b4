"""Post-hoc affine logistic calibration with cross-validation.

The calibrator maps a score vector ``s`` to ``softmax(alpha * log(s) + beta)``
with scalar ``alpha`` and a shift vector ``beta``. Since softmax ignores a
common shift, ``beta`` is gauge-fixed to sum to zero. With ``beta = 0`` the
transform reduces to temperature scaling with temperature ``1 / alpha``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.optimize import minimize

from .core import CategoricalDistribution

# Scores are clamped to at least this value, then renormalized, before logs.
EPS_SCORE = 1e-10

MAX_FIT_ITERATIONS = 10_000


@dataclass(frozen=True)
class AffineCalibrator:
    """Fitted transform ``softmax(alpha * log(s) + beta)`` with sum-zero beta."""

    alpha: float
    beta: np.ndarray

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta, dtype=np.float64)
        if not np.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if beta.ndim != 1 or not np.all(np.isfinite(beta)):
            raise ValueError("beta must be a finite vector")
        if abs(float(beta.sum())) > 1e-9:
            raise ValueError("beta must sum to zero")
        object.__setattr__(self, "beta", beta)


def _clamped_log_scores(scores: Sequence[CategoricalDistribution]) -> np.ndarray:
    mat = np.stack([s.probs for s in scores]).astype(np.float64)
    mat = np.maximum(mat, EPS_SCORE)
    mat /= mat.sum(axis=1, keepdims=True)
    return np.log(mat)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _nll_and_grad(params: np.ndarray, log_scores: np.ndarray, labels: np.ndarray):
    alpha, beta = params[0], params[1:]
    logits = alpha * log_scores + beta
    probs = _softmax(logits)
    n = log_scores.shape[0]
    logz = np.log(probs[np.arange(n), labels])
    loss = -float(logz.mean())
    resid = probs.copy()
    resid[np.arange(n), labels] -= 1.0
    grad_alpha = float((resid * log_scores).sum() / n)
    grad_beta = resid.sum(axis=0) / n
    return loss, np.concatenate([[grad_alpha], grad_beta])


def fit_affine(
    scores: Sequence[CategoricalDistribution],
    labels: Sequence[int],
    *,
    tol: float = 1e-12,
    max_iterations: int = MAX_FIT_ITERATIONS,
) -> AffineCalibrator:
    """Fit (alpha, beta) by minimizing mean multiclass cross-entropy.

    Deterministic: full-batch smooth convex objective solved from the identity
    initialization (alpha=1, beta=0) with an analytic gradient. Raises when
    fewer than K + 1 samples are given; a class missing from the labels only
    warns.
    """
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    if not scores:
        raise ValueError("empty input")
    k = scores[0].k
    if any(s.k != k for s in scores):
        raise ValueError("inconsistent class counts")
    if len(scores) < k + 1:
        raise ValueError(f"need at least K+1={k + 1} samples, got {len(scores)}")
    labels_arr = np.asarray(labels, dtype=np.int64)
    if labels_arr.min() < 0 or labels_arr.max() >= k:
        raise ValueError("label out of range")
    present = np.bincount(labels_arr, minlength=k) > 0
    if not present.all():
        missing = np.flatnonzero(~present).tolist()
        warnings.warn(f"classes {missing} absent from calibration labels", stacklevel=2)

    log_scores = _clamped_log_scores(scores)
    x0 = np.concatenate([[1.0], np.zeros(k)])
    res = minimize(
        _nll_and_grad,
        x0,
        args=(log_scores, labels_arr),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iterations, "ftol": tol, "gtol": 1e-10},
    )
    alpha = float(res.x[0])
    beta = res.x[1:]
    # The loss is invariant to a common shift of beta; fix the gauge.
    beta = beta - beta.mean()
    return AffineCalibrator(alpha, beta)


def apply_affine(m: AffineCalibrator, s: CategoricalDistribution) -> CategoricalDistribution:
    """Transform one score vector; identity (up to clamping) at alpha=1, beta=0."""
    log_s = _clamped_log_scores([s])
    probs = _softmax(m.alpha * log_s + m.beta)[0]
    return CategoricalDistribution(probs / probs.sum())


def temperature_transform(q: CategoricalDistribution, t: float) -> CategoricalDistribution:
    """Flatten (t > 1) or sharpen (t < 1) a distribution: softmax(log(q) / t)."""
    if not (t > 0.0):
        raise ValueError("temperature must be > 0")
    log_q = _clamped_log_scores([q])
    probs = _softmax(log_q / t)[0]
    return CategoricalDistribution(probs / probs.sum())


def crossval_calibrate(
    scores: Sequence[CategoricalDistribution],
    labels: Sequence[int],
    folds: int = 5,
    seed: int = 0,
) -> "tuple[List[CategoricalDistribution], List[AffineCalibrator]]":
    """Calibrate every sample with a model fitted on the other folds.

    One seeded shuffle, contiguous fold split, outputs re-assembled in input
    order; bit-identical for a fixed seed. Returns the calibrated scores and
    the per-fold calibrators.
    """
    n = len(scores)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n < folds:
        raise ValueError(f"need at least {folds} samples, got {n}")
    if len(labels) != n:
        raise ValueError("scores and labels must have equal length")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    fold_slices = np.array_split(order, folds)
    calibrated: List[CategoricalDistribution] = [None] * n  # type: ignore[list-item]
    models: List[AffineCalibrator] = []
    for held_out in fold_slices:
        held_set = set(held_out.tolist())
        train_idx = [i for i in order.tolist() if i not in held_set]
        model = fit_affine([scores[i] for i in train_idx], [labels[i] for i in train_idx])
        models.append(model)
        for i in held_out.tolist():
            calibrated[i] = apply_affine(model, scores[i])
    return calibrated, models
