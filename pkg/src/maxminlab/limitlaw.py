"""Limiting joint law of the complete and incomplete maxima and minima.

For levels (x2, y2) on the observed subsample and (x1, y1) on the whole
sample the limit is

    E[ G(x2)^P Hbar(y2)^P G(x1)^(1-P) Hbar(y1)^(1-P) ]

with the expectation over the law of P. Everything is evaluated through
the tail exponents g(x) = -ln G(x) and h(y) = -ln Hbar(y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .extremal import Convention
from .missing import PDistribution, point_mass

Tail = Callable[[float], float]


def gumbel_tail(x: float) -> float:
    """-ln of exp(-exp(-x))."""
    if x == math.inf:
        return 0.0
    if x == -math.inf:
        return math.inf
    return math.exp(-x)


class TableTail:
    """Tail exponent interpolated linearly from a monotone table of
    (level, tail value) pairs and held constant beyond its ends."""

    def __init__(self, levels: Sequence[float], values: Sequence[float]):
        lv = np.asarray(levels, dtype=float)
        tv = np.asarray(values, dtype=float)
        if lv.ndim != 1 or lv.size != tv.size or lv.size < 2:
            raise ValueError("tail table needs at least two (level, value) pairs")
        if np.any(np.diff(lv) <= 0):
            raise ValueError("tail table levels must be strictly increasing")
        d = np.diff(tv)
        if not (np.all(d <= 0) or np.all(d >= 0)):
            raise ValueError("tail table values must be monotone")
        if np.any(tv < 0):
            raise ValueError("tail values must be nonnegative")
        self.levels, self.values = lv, tv

    def __call__(self, x: float) -> float:
        return float(np.interp(x, self.levels, self.values))


@dataclass(frozen=True)
class LimitSpec:
    """Pair of limit laws through their tail exponents.

    ``vacuous_y`` is the min level at which the min constraint disappears
    (h = 0): +inf under the Gaussian convention, -inf under the general one.
    """

    g_tail: Tail
    h_tail: Tail
    family: str = "gumbel"
    convention: Convention = Convention.GAUSSIAN_SYMMETRIC

    @property
    def vacuous_y(self) -> float:
        if self.convention is Convention.GAUSSIAN_SYMMETRIC:
            return math.inf
        return -math.inf

    def G(self, x: float) -> float:
        return math.exp(-self.g_tail(x))

    def Hbar(self, y: float) -> float:
        return math.exp(-self.h_tail(y))


def gumbel() -> LimitSpec:
    return LimitSpec(gumbel_tail, gumbel_tail, "gumbel", Convention.GAUSSIAN_SYMMETRIC)


def custom(g_table, h_table, convention=Convention.GENERAL_LINEAR) -> LimitSpec:
    """Custom tails from ((levels), (values)) tables."""
    return LimitSpec(TableTail(*g_table), TableTail(*h_table), "custom", Convention(convention))


@dataclass(frozen=True)
class ThresholdQuad:
    """Levels (x2, y2) for the observed subsample and (x1, y1) for the whole sample."""

    x2: float
    y2: float
    x1: float
    y1: float

    def __post_init__(self):
        vals = (self.x2, self.y2, self.x1, self.y1)
        if any(math.isnan(v) for v in vals):
            raise ValueError(f"threshold quad has NaN level: {vals}")
        if self.x2 > self.x1:
            raise ValueError(f"threshold quad needs x2 <= x1, got x2={self.x2}, x1={self.x1}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x2, self.y2, self.x1, self.y1)


def _weighted_exp(p: np.ndarray, inner: float, outer: float) -> np.ndarray:
    # exp(-(p*inner + (1-p)*outer)) with 0 * inf = 0
    p = np.asarray(p, dtype=float)
    with np.errstate(invalid="ignore"):
        a = np.where(p == 0.0, 0.0, p * inner)
        b = np.where(p == 1.0, 0.0, (1.0 - p) * outer)
    return np.exp(-(a + b))


def tail_exponents(spec: LimitSpec, q: ThresholdQuad) -> tuple[float, float]:
    """(inner, outer) total tail exponents of the quad's event.

    An inner threshold looser than the outer one is implied by it, so the
    effective inner exponent is the larger of the two.
    """
    g2, g1 = spec.g_tail(q.x2), spec.g_tail(q.x1)
    h2, h1 = spec.h_tail(q.y2), spec.h_tail(q.y1)
    return max(g2, g1) + max(h2, h1), g1 + h1


def joint_limit(spec: LimitSpec, q: ThresholdQuad, pd: PDistribution) -> float:
    """Limit probability of {v(y2) < m(eps) <= M(eps) <= u(x2), v(y1) < m <= M <= u(x1)}."""
    inner, outer = tail_exponents(spec, q)
    return min(1.0, max(0.0, pd.expect(lambda p: _weighted_exp(p, inner, outer))))


def max_only_limit(spec: LimitSpec, x2: float, x1: float, pd: PDistribution) -> float:
    """Limit of P(M(eps) <= u(x2), M <= u(x1))."""
    y = spec.vacuous_y
    return joint_limit(spec, ThresholdQuad(x2, y, x1, y), pd)


def min_only_limit(spec: LimitSpec, y2: float, y1: float, pd: PDistribution) -> float:
    """Limit of P(m(eps) > v(y2), m > v(y1))."""
    return joint_limit(spec, ThresholdQuad(math.inf, y2, math.inf, y1), pd)


def single_threshold_limit(spec: LimitSpec, x: float, y: float, pd: PDistribution) -> float:
    """Limit of P(v(y) < m(eps) <= M(eps) <= u(x)), i.e. E[(G(x) Hbar(y))^P]."""
    return joint_limit(spec, ThresholdQuad(x, y, math.inf, spec.vacuous_y), pd)


def factorization_gap(
    spec: LimitSpec, q: ThresholdQuad, pd: PDistribution
) -> tuple[float, float, float]:
    """(joint, product of the max and min marginal limits, joint - product)."""
    joint = joint_limit(spec, q, pd)
    product = max_only_limit(spec, q.x2, q.x1, pd) * min_only_limit(spec, q.y2, q.y1, pd)
    return joint, product, joint - product


def factorization_check(spec: LimitSpec, q: ThresholdQuad, p: float) -> tuple[float, float, float]:
    """factorization_gap at a constant P = p; the difference vanishes."""
    return factorization_gap(spec, q, point_mass(p))


def limit_grid_csv(spec: LimitSpec, quads: Sequence[ThresholdQuad], pd: PDistribution) -> str:
    lines = ["x2,y2,x1,y1,value"]
    for q in quads:
        lines.append(",".join(repr(float(v)) for v in q.as_tuple()) + f",{joint_limit(spec, q, pd)!r}")
    return "\n".join(lines) + "\n"
