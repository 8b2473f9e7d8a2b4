"""Numeric evaluation of weighted-integral costs; the validation oracle.

The weighted cost is the integral over rejection costs gamma in [0, u_max] of
``w(gamma) * (candidate cost if u <= gamma else gamma)``. The integrand has a
single breakpoint at gamma = u: below it the contribution is ``gamma * w``,
above it ``candidate_cost * w``. Each side is integrated by composite Simpson
on smooth pieces; power-law weights with fractional exponents get a geometric
piece layout toward gamma = 0, where their higher derivatives blow up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    CostMatrix,
    DiracAt,
    PowerLaw,
    Tabulated,
    WeightFamily,
    u_max,
)

# Dyadic pieces retained when grading toward a singular endpoint; the dropped
# tail of integral is below 2**-46 of the segment value whenever the piece
# budget below is not exhausted.
_MAX_DYADIC_PIECES = 1200
_MAX_INTERVALS = 1 << 20


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite-Simpson resolution: starting intervals per smooth piece and
    the absolute tolerance driving interval doubling."""

    subdivisions: int = 16
    tolerance: float = 1e-10

    def __post_init__(self) -> None:
        if self.subdivisions < 2:
            raise ValueError("subdivisions must be >= 2")
        if not (self.tolerance > 0.0):
            raise ValueError("tolerance must be > 0")


def _simpson_fixed(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, m: int) -> float:
    x = np.linspace(a, b, m + 1)
    y = f(x)
    h = (b - a) / m
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def _simpson_doubling(
    f: Callable[[np.ndarray], np.ndarray], a: float, b: float, m0: int, tol: float
) -> float:
    if b <= a:
        return 0.0
    m = max(2, m0 + (m0 % 2))
    prev = _simpson_fixed(f, a, b, m)
    while m < _MAX_INTERVALS:
        m *= 2
        cur = _simpson_fixed(f, a, b, m)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    return prev


def _integrate_power(
    scale: float, p: float, gamma_scale: float, a: float, b: float, m0: int, tol: float
) -> float:
    """Integral of ``scale * (gamma / gamma_scale)**p`` over [a, b] by
    composite Simpson on smooth pieces.

    For fractional or negative ``p`` the derivatives are unbounded toward
    gamma = 0, so the segment is split geometrically in that direction and
    each piece integrated to its share of ``tol``.
    """
    if b <= a or scale == 0.0:
        return 0.0

    def f(x: np.ndarray) -> np.ndarray:
        return scale * (x / gamma_scale) ** p

    if p >= 0.0 and float(p).is_integer():
        return _simpson_doubling(f, a, b, m0, tol)

    if a == 0.0:
        # p > -1 here (the only integrable case); pieces [b*2^-(j+1), b*2^-j].
        pieces = min(_MAX_DYADIC_PIECES, max(8, math.ceil(46.0 / (p + 1.0))))
        edges = [b * 2.0 ** (-j) for j in range(pieces + 1)]
    else:
        pieces = max(1, math.ceil(math.log2(b / a)))
        edges = [min(b, a * 2.0**j) for j in range(pieces + 1)]
        edges[-1] = b
        edges.reverse()
    piece_tol = tol / len(edges)
    total = 0.0
    for lo, hi in zip(edges[1:], edges[:-1]):
        if hi > lo:
            total += _simpson_doubling(f, lo, hi, m0, piece_tol)
    return total


def _tabulated_weight(w: Tabulated) -> Callable[[np.ndarray], np.ndarray]:
    def weight(x: np.ndarray) -> np.ndarray:
        return np.interp(x, w.gammas, w.weights, left=0.0, right=0.0)

    return weight


def _integrate_tabulated(
    w: Tabulated, f: Callable[[np.ndarray], np.ndarray], a: float, b: float, m0: int
) -> float:
    # Restrict to the weight's support, where the interpolant is continuous
    # (it may jump to zero at the boundary knots). Knots are breakpoints;
    # between consecutive knots the integrand is a polynomial of degree <= 2,
    # which Simpson integrates exactly.
    lo = max(a, float(w.gammas[0]))
    hi = min(b, float(w.gammas[-1]))
    if hi <= lo:
        return 0.0
    edges = [lo] + [float(g) for g in w.gammas if lo < g < hi] + [hi]
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        if right > left:
            total += _simpson_fixed(f, left, right, max(2, m0 + (m0 % 2)))
    return total


def _weighted_cost_numeric(
    u: float, um: float, candidate_cost: float, w: WeightFamily, cfg: QuadratureConfig
) -> float:
    if isinstance(w, DiracAt):
        if w.gamma0 > um:
            raise ValueError(f"gamma0={w.gamma0} outside [0, {um}]")
        return candidate_cost if u <= w.gamma0 else w.gamma0

    if isinstance(w, PowerLaw):
        n = w.n
        # alpha_n * gamma**(n-1) written as scale * (gamma/um)**(n-1) to keep
        # um**-(n+1) out of the arithmetic.
        scale = (n + 1.0) / (um * um)
        if n == 0.0:
            left = u / um  # integral of the constant gamma * w0 = 1/um
        else:
            left = _integrate_power(scale, n, um, 0.0, u, cfg.subdivisions, cfg.tolerance / 2.0)
            left *= um  # gamma * w = um * scale * (gamma/um)**n
        if candidate_cost == 0.0 or u == um:
            right = 0.0
        else:
            if u == 0.0 and n == 0.0:
                return math.inf  # flat weight diverges against a wrong sure answer
            right = candidate_cost * _integrate_power(
                scale, n - 1.0, um, u, um, cfg.subdivisions, cfg.tolerance / 2.0
            )
        return left + right

    if isinstance(w, Tabulated):
        if w.gammas[-1] > um + 1e-12:
            raise ValueError("tabulated gamma grid extends beyond u_max")
        weight = _tabulated_weight(w)
        left = _integrate_tabulated(w, lambda x: x * weight(x), 0.0, u, cfg.subdivisions)
        right = 0.0
        if candidate_cost != 0.0:
            right = candidate_cost * _integrate_tabulated(w, weight, u, um, cfg.subdivisions)
        return left + right

    raise TypeError(f"unsupported weight family: {type(w).__name__}")


def c_w_numeric(
    y: int,
    candidate: int,
    u: float,
    w: WeightFamily,
    c: CostMatrix,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> float:
    """Weighted-integral cost evaluated numerically.

    Splits the integral at the breakpoint gamma = u and applies composite
    Simpson per smooth piece. The flat-weight special case (power-law exponent
    0) integrates its left segment in closed form, since the weight itself is
    singular at 0 while ``gamma * w`` is constant there. Point-mass weights
    are evaluated by sifting.
    """
    um = u_max(c)
    if not (0.0 <= u <= um + 1e-12 * max(1.0, um)):
        raise ValueError(f"u={u} outside [0, {um}]")
    return _weighted_cost_numeric(min(u, um), um, c.cost(y, candidate), w, cfg)


def c_w_numeric_confidence(
    correct: bool,
    q_e: float,
    w: WeightFamily,
    k: "int | None" = None,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> float:
    """Oracle for confidence records under zero-one semantics.

    ``k`` is the class count; ``None`` selects the K -> infinity limit
    (maximum uncertainty 1). The uncertainty is 1 - q_e and the candidate
    cost is 1 for wrong answers.
    """
    if not (0.0 <= q_e <= 1.0):
        raise ValueError(f"confidence {q_e} outside [0, 1]")
    um = 1.0 if k is None else 1.0 - 1.0 / k
    u = 1.0 - q_e
    if u > um:
        raise ValueError(f"confidence {q_e} below the minimum 1/K")
    return _weighted_cost_numeric(u, um, 0.0 if correct else 1.0, w, cfg)


def u_max_grid(c: CostMatrix, resolution: float) -> float:
    """Lower bound on the maximum uncertainty via simplex lattice enumeration.

    Verification oracle for ``u_max``; accurate to O(resolution * max entry)
    and limited to K <= 4 (the lattice is exponential in K).
    """
    if c.entries is None:
        raise ValueError("grid search needs explicit cost entries")
    if not (0.0 < resolution < 1.0):
        raise ValueError("resolution must be in (0, 1)")
    k = c.entries.shape[0]
    if k > 4:
        raise ValueError("grid enumeration supports K <= 4 only")
    steps = int(round(1.0 / resolution))
    axis = np.linspace(0.0, 1.0, steps + 1)
    best = 0.0
    if k == 2:
        q = np.stack([axis, 1.0 - axis], axis=1)
        best = float(np.min(q @ c.entries, axis=1).max())
        return best
    # Chunk over the leading coordinate to bound memory.
    for q0 in axis:
        rest = axis[axis <= 1.0 - q0 + 1e-12]
        if k == 3:
            q1 = rest
            q2 = 1.0 - q0 - q1
            q = np.stack([np.full_like(q1, q0), q1, np.clip(q2, 0.0, None)], axis=1)
            best = max(best, float(np.min(q @ c.entries, axis=1).max()))
        else:
            for q1 in rest:
                q2 = axis[axis <= 1.0 - q0 - q1 + 1e-12]
                q3 = 1.0 - q0 - q1 - q2
                q = np.stack(
                    [
                        np.full_like(q2, q0),
                        np.full_like(q2, q1),
                        q2,
                        np.clip(q3, 0.0, None),
                    ],
                    axis=1,
                )
                best = max(best, float(np.min(q @ c.entries, axis=1).max()))
    return best
