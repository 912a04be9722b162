"""Norming constants, threshold maps and the complete/incomplete extremes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class Convention(str, Enum):
    """How the minimum threshold depends on its level y.

    GENERAL_LINEAR: v_n(y) = c_n*y + d_n.
    GAUSSIAN_SYMMETRIC: v_n(y) = -c_n*y - d_n, the mirror image of u_n.
    """

    GENERAL_LINEAR = "general"
    GAUSSIAN_SYMMETRIC = "gaussian"


@dataclass(frozen=True)
class NormingConstants:
    a_n: float
    b_n: float
    c_n: float
    d_n: float
    n: int
    convention: Convention = Convention.GAUSSIAN_SYMMETRIC

    def __post_init__(self):
        if not (self.a_n > 0 and self.c_n > 0):
            raise ValueError(f"scale constants must be positive (a_n={self.a_n}, c_n={self.c_n})")
        object.__setattr__(self, "convention", Convention(self.convention))


def gaussian_norming(n: int) -> NormingConstants:
    """Standard normal constants: a_n = c_n = 1/sqrt(2 ln n) and
    b_n = d_n = sqrt(2 ln n) - (ln ln n + ln 4pi) / (2 sqrt(2 ln n))."""
    if n < 3:
        raise ValueError(f"gaussian norming needs n >= 3, got {n}")
    r = math.sqrt(2.0 * math.log(n))
    a = 1.0 / r
    b = r - (math.log(math.log(n)) + math.log(4.0 * math.pi)) / (2.0 * r)
    return NormingConstants(a, b, a, b, n, Convention.GAUSSIAN_SYMMETRIC)


def u_threshold(nc: NormingConstants, x):
    return nc.a_n * x + nc.b_n


def v_threshold(nc: NormingConstants, y):
    if nc.convention is Convention.GAUSSIAN_SYMMETRIC:
        return -nc.c_n * y - nc.d_n
    return nc.c_n * y + nc.d_n


def normalize_max(nc: NormingConstants, m):
    return (m - nc.b_n) / nc.a_n


def normalize_min(nc: NormingConstants, m):
    """Normalized minimum; under the Gaussian convention this is
    -(m + d_n)/c_n, whose law tends to the Gumbel law."""
    if nc.convention is Convention.GAUSSIAN_SYMMETRIC:
        return -(m + nc.d_n) / nc.c_n
    return (m - nc.d_n) / nc.c_n


@dataclass(frozen=True)
class ExtremalQuadruple:
    m_eps_max: float
    m_eps_min: float
    m_max: float
    m_min: float
    s_n: int
    normalized: Optional[tuple[float, float, float, float]] = None


def compute_quadruple(path, indicators, nc: Optional[NormingConstants] = None) -> ExtremalQuadruple:
    """Extremes of the complete sample and of the observed subsample.

    ``path`` may be a SamplePath or an array; ``indicators`` an
    IndicatorDraw or a 0/1 array. With no observed values the incomplete
    maximum is -inf and the incomplete minimum +inf (Gaussian support).
    """
    x = np.asarray(getattr(path, "values", path), dtype=float)
    eps = np.asarray(getattr(indicators, "indicators", indicators)).astype(bool)
    if x.shape != eps.shape:
        raise ValueError(f"length mismatch: path {x.size}, indicators {eps.size}")
    if nc is not None and nc.n != x.size:
        raise ValueError(f"norming constants are for n={nc.n}, path has {x.size}")
    if x.size == 0:
        raise ValueError("empty path")
    obs = x[eps]
    s_n = int(obs.size)
    if s_n:
        me_max, me_min = float(obs.max()), float(obs.min())
    else:
        me_max, me_min = -math.inf, math.inf
    m_max, m_min = float(x.max()), float(x.min())
    normalized = None
    if nc is not None:
        normalized = (
            float(normalize_max(nc, me_max)),
            float(normalize_min(nc, me_min)),
            float(normalize_max(nc, m_max)),
            float(normalize_min(nc, m_min)),
        )
    return ExtremalQuadruple(me_max, me_min, m_max, m_min, s_n, normalized)


def event_mask(quads: np.ndarray, s_n: np.ndarray, u2, v2, u1, v1) -> np.ndarray:
    """Membership in {v2 < m(eps) <= M(eps) <= u2, v1 < m <= M <= u1}.

    ``quads`` has columns (M_eps, m_eps, M, m). Rows with s_n == 0 satisfy
    the incomplete-sample part vacuously.
    """
    me_max, me_min, m_max, m_min = quads.T
    inner = (s_n == 0) | ((v2 < me_min) & (me_max <= u2))
    outer = (v1 < m_min) & (m_max <= u1)
    return inner & outer
