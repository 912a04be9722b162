"""Observation indicators and the law of the limiting observed fraction P."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

QUAD_ORDER = 64
KYFAN_GRID_STEP = 1e-3


@lru_cache(maxsize=None)
def _legendre(order: int):
    return roots_legendre(order)


@lru_cache(maxsize=None)
def _jacobi(order: int, a: float, b: float):
    t, w = roots_jacobi(order, a, b)
    return t, w / w.sum()


@dataclass(frozen=True)
class PDistribution:
    """Law of P on [0, 1]: ``point``, ``uniform``, ``beta`` or ``discrete``."""

    kind: str
    p: float = 1.0
    a: float = 0.0
    b: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        k = self.kind
        if k == "point":
            if not 0.0 <= self.p <= 1.0:
                raise ValueError(f"p_distribution.p: need 0 <= p <= 1, got {self.p}")
        elif k == "uniform":
            if not 0.0 <= self.a < self.b <= 1.0:
                raise ValueError(f"p_distribution.a/b: need 0 <= a < b <= 1, got ({self.a}, {self.b})")
        elif k == "beta":
            if not (self.alpha > 0 and self.beta > 0):
                raise ValueError("p_distribution.alpha/beta: must be positive")
        elif k == "discrete":
            if not self.atoms:
                raise ValueError("p_distribution.atoms: empty")
            vals = [v for v, _ in self.atoms]
            ws = [w for _, w in self.atoms]
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ValueError("p_distribution.atoms: values must lie in [0, 1]")
            if any(w < 0 for w in ws) or abs(math.fsum(ws) - 1.0) > 1e-12:
                raise ValueError("p_distribution.atoms: weights must be nonnegative and sum to 1")
        else:
            raise ValueError(f"p_distribution.kind: unknown kind {k!r}")

    @property
    def is_constant(self) -> bool:
        return self.kind == "point" or (self.kind == "discrete" and len(self.atoms) == 1)

    @property
    def mean(self) -> float:
        return self.expect(lambda p: p)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes and weights on [0, 1] (exact for point/discrete)."""
        if self.kind == "point":
            return np.array([self.p]), np.array([1.0])
        if self.kind == "discrete":
            v, w = zip(*self.atoms)
            return np.array(v, dtype=float), np.array(w, dtype=float)
        if self.kind == "uniform":
            t, w = _legendre(QUAD_ORDER)
            return self.a + (self.b - self.a) * (t + 1) / 2, w / 2
        # Jacobi weight (1-t)^(beta-1) (1+t)^(alpha-1) matches the beta density under P = (1+t)/2
        t, w = _jacobi(QUAD_ORDER, self.beta - 1.0, self.alpha - 1.0)
        return (t + 1) / 2, w

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        x, w = self.nodes()
        return float(np.dot(w, f(x)))

    def sample(self, rng: np.random.Generator, size=None):
        if self.kind == "point":
            return self.p if size is None else np.full(size, self.p)
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size)
        if self.kind == "beta":
            return rng.beta(self.alpha, self.beta, size)
        v, w = zip(*self.atoms)
        return rng.choice(np.array(v, dtype=float), size=size, p=np.array(w))

    def params(self) -> dict:
        if self.kind == "point":
            return {"p": self.p}
        if self.kind == "uniform":
            return {"a": self.a, "b": self.b}
        if self.kind == "beta":
            return {"alpha": self.alpha, "beta": self.beta}
        return {"atoms": " ".join(f"{v}:{w}" for v, w in self.atoms)}


def point_mass(p: float) -> PDistribution:
    return PDistribution("point", p=p)


def uniform(a: float = 0.0, b: float = 1.0) -> PDistribution:
    return PDistribution("uniform", a=a, b=b)


def beta(alpha: float, beta_: float) -> PDistribution:
    return PDistribution("beta", alpha=alpha, beta=beta_)


def discrete(atoms: Sequence[tuple[float, float]]) -> PDistribution:
    return PDistribution("discrete", atoms=tuple((float(v), float(w)) for v, w in atoms))


MISSING_KINDS = ("bernoulli", "exchangeable", "markov", "pattern")


@dataclass(frozen=True)
class MissingnessModel:
    """Mechanism producing the observation indicators eps_1..eps_n.

    bernoulli: iid Bernoulli(p).
    exchangeable: P drawn once per replicate from ``pdist``, then iid Bernoulli(P).
    markov: stationary two-state chain; p01 = P(0 -> 1), p10 = P(1 -> 0).
    pattern: fixed 0/1 sequences, replicate i uses pattern i mod len(patterns).
    """

    kind: str
    p: float = 1.0
    pdist: Optional[PDistribution] = None
    p01: float = 0.5
    p10: float = 0.5
    patterns: tuple[tuple[int, ...], ...] = ()
    p_limit: Optional[float] = None

    def __post_init__(self):
        k = self.kind
        if k == "bernoulli":
            if not 0.0 <= self.p <= 1.0:
                raise ValueError(f"missingness.p: need 0 <= p <= 1, got {self.p}")
        elif k == "exchangeable":
            if self.pdist is None:
                raise ValueError("missingness: exchangeable model needs a p_distribution")
        elif k == "markov":
            if not (0.0 <= self.p01 <= 1.0 and 0.0 <= self.p10 <= 1.0):
                raise ValueError("missingness.p01/p10: must lie in [0, 1]")
            if self.p01 + self.p10 <= 0:
                raise ValueError("missingness.p01/p10: chain must be irreducible (p01 + p10 > 0)")
        elif k == "pattern":
            if not self.patterns:
                raise ValueError("missingness.patterns: no pattern given")
            for pat in self.patterns:
                if any(e not in (0, 1) for e in pat):
                    raise ValueError("missingness.patterns: entries must be 0 or 1")
            if self.p_limit is not None and not 0.0 <= self.p_limit <= 1.0:
                raise ValueError("missingness.p_limit: must lie in [0, 1]")
        else:
            raise ValueError(f"missingness.kind: unknown kind {k!r}")

    @property
    def stationary_p(self) -> float:
        return self.p01 / (self.p01 + self.p10)

    def limit_distribution(self, n: Optional[int] = None) -> PDistribution:
        """Law of P used as the theoretical comparator."""
        if self.kind == "bernoulli":
            return point_mass(self.p)
        if self.kind == "exchangeable":
            return self.pdist
        if self.kind == "markov":
            return point_mass(self.stationary_p)
        if self.p_limit is not None:
            return point_mass(self.p_limit)
        fracs = [float(np.mean(pat[:n] if n else pat)) for pat in self.patterns]
        if len(set(fracs)) == 1:
            return point_mass(fracs[0])
        w = 1.0 / len(fracs)
        counts: dict[float, float] = {}
        for f in fracs:
            counts[f] = counts.get(f, 0.0) + w
        return discrete(sorted(counts.items()))

    def params(self) -> dict:
        if self.kind == "bernoulli":
            return {"p": self.p}
        if self.kind == "markov":
            return {"p01": self.p01, "p10": self.p10}
        if self.kind == "pattern":
            return {"patterns": len(self.patterns)}
        return {}


def iid_bernoulli(p: float) -> MissingnessModel:
    return MissingnessModel("bernoulli", p=p)


def exchangeable(pdist: PDistribution) -> MissingnessModel:
    return MissingnessModel("exchangeable", pdist=pdist)


def two_state_markov(p01: float, p10: float) -> MissingnessModel:
    return MissingnessModel("markov", p01=p01, p10=p10)


def deterministic_pattern(*patterns: Sequence[int], p_limit: Optional[float] = None) -> MissingnessModel:
    return MissingnessModel(
        "pattern", patterns=tuple(tuple(int(e) for e in pat) for pat in patterns), p_limit=p_limit
    )


def load_patterns(path) -> tuple[tuple[int, ...], ...]:
    """Read 0/1 patterns, one per line; blank lines are skipped."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if set(line) - {"0", "1"}:
                raise ValueError(f"{path}:{lineno}: pattern must contain only 0 and 1")
            out.append(tuple(int(ch) for ch in line))
    return tuple(out)


@dataclass
class IndicatorDraw:
    indicators: np.ndarray
    s_n: int
    realized_p: Optional[float] = None

    @property
    def n(self) -> int:
        return self.indicators.size


def _markov_indicators(n: int, p01: float, p10: float, rng: np.random.Generator) -> np.ndarray:
    # alternate geometric sojourns; a zero exit probability means the state is absorbing
    pi1 = p01 / (p01 + p10)
    state = 1 if rng.random() < pi1 else 0
    out = np.empty(n, dtype=np.int8)
    pos = 0
    while pos < n:
        exit_p = p10 if state == 1 else p01
        length = n - pos if exit_p == 0 else int(rng.geometric(exit_p))
        out[pos : pos + length] = state
        pos += length
        state = 1 - state
    return out


def draw_indicators(
    model: MissingnessModel, n: int, rng: np.random.Generator, replicate: int = 0
) -> IndicatorDraw:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    realized = None
    if model.kind == "bernoulli":
        eps = (rng.random(n) < model.p).astype(np.int8)
    elif model.kind == "exchangeable":
        realized = float(model.pdist.sample(rng))
        eps = (rng.random(n) < realized).astype(np.int8)
    elif model.kind == "markov":
        eps = _markov_indicators(n, model.p01, model.p10, rng)
    else:
        pat = model.patterns[replicate % len(model.patterns)]
        if len(pat) < n:
            raise ValueError(f"pattern of length {len(pat)} is shorter than n={n}")
        eps = np.asarray(pat[:n], dtype=np.int8)
    return IndicatorDraw(eps, int(eps.sum()), realized)


def kyfan_distance(errors: np.ndarray, step: float = KYFAN_GRID_STEP) -> float:
    """Smallest grid value e with mean(|errors| > e) < e."""
    err = np.sort(np.abs(np.asarray(errors, dtype=float)))
    m = int(round(1 / step))
    idx = np.arange(1, m + 1)
    grid = idx / m
    count_above = err.size - np.searchsorted(err, grid, side="right")
    # count/size < idx/m, in integers to keep the strict inequality exact
    ok = np.nonzero(count_above * m < idx * err.size)[0]
    return float(grid[ok[0]]) if ok.size else 1.0


def _target_p(model: MissingnessModel, draw: IndicatorDraw, replicate: int) -> float:
    if draw.realized_p is not None:
        return draw.realized_p
    if model.kind == "bernoulli":
        return model.p
    if model.kind == "markov":
        return model.stationary_p
    if model.p_limit is not None:
        return model.p_limit
    return float(np.mean(model.patterns[replicate % len(model.patterns)]))


def kyfan_estimate(
    model: MissingnessModel, n: int, reps: int, rng: np.random.Generator
) -> float:
    """Monte Carlo estimate of the Ky Fan distance between S_n/n and P."""
    if reps < 100:
        raise ValueError(f"reps must be >= 100, got {reps}")
    errors = np.empty(reps)
    for i in range(reps):
        d = draw_indicators(model, n, rng, replicate=i)
        errors[i] = d.s_n / n - _target_p(model, d, i)
    return kyfan_distance(errors)
