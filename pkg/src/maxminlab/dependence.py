"""Correlation models for stationary Gaussian sequences and numerical checks
of the weak-dependence conditions (Berman, Davis, D′).

Condition D itself (mixing coefficients) is not computable for a general
model; it is assumed to hold whenever the Berman or Davis condition does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .extremal import NormingConstants, u_threshold, v_threshold

RHO_CAP = 1.0 - 1e-9
TAIL_CLIP = 8.5

KINDS = ("iid", "ar1", "power", "log")


@dataclass(frozen=True)
class CorrelationModel:
    """Analytic autocorrelation rho_k of a stationary standard Gaussian sequence.

    kind is one of ``iid``, ``ar1`` (rho_k = phi**k), ``power``
    (rho_k = min(1, c*k**-alpha)) or ``log`` (rho_k = min(1, c/ln(k+e))).
    """

    kind: str
    phi: float = 0.0
    c: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"correlation.kind: unknown kind {self.kind!r}")
        if self.kind == "ar1" and not -1.0 < self.phi < 1.0:
            raise ValueError(f"correlation.phi: need |phi| < 1, got {self.phi}")
        if self.kind in ("power", "log") and not self.c > 0:
            raise ValueError(f"correlation.c: need c > 0, got {self.c}")
        if self.kind == "power" and not self.alpha > 0:
            raise ValueError(f"correlation.alpha: need alpha > 0, got {self.alpha}")

    @property
    def label(self) -> str:
        if self.kind == "iid":
            return "iid"
        if self.kind == "ar1":
            return f"ar1(phi={self.phi:g})"
        if self.kind == "power":
            return f"power(c={self.c:g},alpha={self.alpha:g})"
        return f"log(c={self.c:g})"

    def params(self) -> dict:
        if self.kind == "ar1":
            return {"phi": self.phi}
        if self.kind == "power":
            return {"c": self.c, "alpha": self.alpha}
        if self.kind == "log":
            return {"c": self.c}
        return {}


def iid() -> CorrelationModel:
    return CorrelationModel("iid")


def ar1(phi: float) -> CorrelationModel:
    return CorrelationModel("ar1", phi=phi)


def power_decay(c: float, alpha: float) -> CorrelationModel:
    return CorrelationModel("power", c=c, alpha=alpha)


def log_decay(c: float) -> CorrelationModel:
    return CorrelationModel("log", c=c)


def rho_array(model: CorrelationModel, lags) -> np.ndarray:
    """Vectorized rho_k for an array of nonnegative integer lags."""
    k = np.asarray(lags, dtype=float)
    if np.any(k < 0):
        raise ValueError("lags must be nonnegative")
    if model.kind == "iid":
        r = np.zeros_like(k)
    elif model.kind == "ar1":
        r = np.power(model.phi, k)
    elif model.kind == "power":
        with np.errstate(divide="ignore"):
            r = np.minimum(RHO_CAP, model.c * np.power(k, -model.alpha))
    else:
        r = np.minimum(RHO_CAP, model.c / np.log(k + math.e))
    # AR(1) with phi close to 1 can round to 1.0 at small lags
    r = np.minimum(r, RHO_CAP)
    return np.where(k == 0, 1.0, r)


def rho_at(model: CorrelationModel, k: int) -> float:
    if k < 0:
        raise ValueError(f"lag must be nonnegative, got {k}")
    return float(rho_array(model, [k])[0])


def berman_statistic(model: CorrelationModel, n: int) -> float:
    """rho_n * ln n; tends to 0 under the Berman condition."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    return rho_at(model, n) * math.log(n)


def davis_sum(model: CorrelationModel, p: float, N: int) -> float:
    """Partial sum sum_{k=1..N} |rho_k|**p."""
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    terms = np.abs(rho_array(model, np.arange(1, N + 1))) ** p
    return math.fsum(terms)


def _interval_prob(lo: float, hi: float) -> float:
    # P(lo < Z <= hi), computed on the side with the smaller tail
    if lo >= 0:
        return float(ndtr(-lo) - ndtr(-hi))
    return float(ndtr(hi) - ndtr(lo))


def bvn_rect(a_lo: float, a_hi: float, b_lo: float, b_hi: float, rho: float) -> float:
    """P(a_lo < X <= a_hi, b_lo < Y <= b_hi) for a standard bivariate normal
    pair with correlation ``rho``.

    Integrates phi(t) * P(b_lo < Y <= b_hi | X = t) over the first
    coordinate. Infinite bounds are allowed.
    """
    if not a_lo < a_hi:
        raise ValueError(f"invalid first interval: ({a_lo}, {a_hi}]")
    if not b_lo < b_hi:
        raise ValueError(f"invalid second interval: ({b_lo}, {b_hi}]")
    if not -1.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (-1, 1), got {rho}")

    if rho == 0.0:
        return _interval_prob(a_lo, a_hi) * _interval_prob(b_lo, b_hi)

    lo = max(a_lo, -TAIL_CLIP)
    hi = min(a_hi, TAIL_CLIP)
    if lo >= hi:
        return 0.0
    s = math.sqrt((1.0 - rho) * (1.0 + rho))
    inv_sqrt_2pi = 1.0 / math.sqrt(2.0 * math.pi)

    def integrand(t):
        cond = _interval_prob((b_lo - rho * t) / s, (b_hi - rho * t) / s)
        return inv_sqrt_2pi * math.exp(-0.5 * t * t) * cond

    # kinks of the conditional probability sit where b_* = rho * t
    points = [b / rho for b in (b_lo, b_hi) if math.isfinite(b) and lo < b / rho < hi]
    if lo < 0.0 < hi:
        points.append(0.0)
    points = sorted(set(points))
    val, _ = integrate.quad(
        integrand, lo, hi, points=points or None, epsabs=1e-13, epsrel=1e-12, limit=500
    )
    return min(max(val, 0.0), 1.0)


def dprime_sum(
    model: CorrelationModel,
    n: int,
    k: int,
    x: float,
    y: float,
    norming: NormingConstants,
) -> float:
    """Truncated D′(u_n(x), v_n(y)) sum at block count k.

    n * sum_{j=1..[n/k]} of the four joint exceedance probabilities of
    (X_1, X_{j+1}) beyond u = u_n(x) (above) and v = v_n(y) (at or below).
    """
    if not n >= k >= 1:
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
    u = u_threshold(norming, x)
    v = v_threshold(norming, y)
    inf = math.inf
    rhos = rho_array(model, np.arange(1, n // k + 1))
    total = []
    for r in rhos:
        r = float(r)
        terms = 0.0
        if u < inf:
            terms += bvn_rect(u, inf, u, inf, r)
            if v > -inf:
                terms += bvn_rect(u, inf, -inf, v, r)
                terms += bvn_rect(-inf, v, u, inf, r)
        if v > -inf:
            terms += bvn_rect(-inf, v, -inf, v, r)
        total.append(terms)
    return n * math.fsum(total)


class Verdict(str, Enum):
    SATISFIED = "SatisfiedNumerically"
    VIOLATED = "ViolatedNumerically"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class ConditionReport:
    berman_values: list[tuple[int, float]]
    davis_partial_sums: list[tuple[int, float]]
    dprime_values: list[tuple[int, float]]
    verdicts: dict[str, Verdict] = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["condition,n_or_N,value"]
        for name, rows in (
            ("berman", self.berman_values),
            ("davis", self.davis_partial_sums),
            ("dprime", self.dprime_values),
        ):
            lines += [f"{name},{n},{v!r}" for n, v in rows]
        lines.append("")
        lines.append("# verdicts")
        lines.append("condition,verdict")
        lines += [f"{name},{v.value}" for name, v in self.verdicts.items()]
        return "\n".join(lines) + "\n"


VANISH_CUTOFF = 0.05
DAVIS_TAIL_CUTOFF = 1e-6


def _value_a_decade_before(traj: Sequence[tuple[int, float]]):
    n_last = traj[-1][0]
    earlier = [(n, v) for n, v in traj[:-1] if n <= n_last / 10]
    return earlier[-1] if earlier else (traj[0] if len(traj) > 1 else None)


def _vanishing_verdict(traj: Sequence[tuple[int, float]]) -> Verdict:
    last = abs(traj[-1][1])
    ref = _value_a_decade_before(traj)
    if ref is None:
        return Verdict.SATISFIED if last < VANISH_CUTOFF else Verdict.INCONCLUSIVE
    earlier = abs(ref[1])
    if last < VANISH_CUTOFF and last <= earlier:
        return Verdict.SATISFIED
    if last >= VANISH_CUTOFF and last >= earlier:
        return Verdict.VIOLATED
    return Verdict.INCONCLUSIVE


def _davis_verdict(traj: Sequence[tuple[int, float]]) -> Verdict:
    n_last, s_last = traj[-1]
    pts = [(n, s) for n, s in traj if n <= n_last / 10]
    if not pts:
        return Verdict.INCONCLUSIVE
    n_mid, s_mid = pts[-1]
    tail = s_last - s_mid
    if tail < DAVIS_TAIL_CUTOFF:
        return Verdict.SATISFIED
    prev = [(n, s) for n, s in traj if n <= n_mid / 10]
    if prev and tail >= s_mid - prev[-1][1]:
        return Verdict.VIOLATED
    return Verdict.INCONCLUSIVE


def classify_conditions(
    berman_values: Sequence[tuple[int, float]],
    davis_partial_sums: Sequence[tuple[int, float]],
    dprime_values: Sequence[tuple[int, float]],
) -> ConditionReport:
    """Finite-n verdicts for the three trajectories.

    Berman and D′ are satisfied when the value at the largest n is below
    0.05 and no larger than a decade earlier. Davis is satisfied when the
    partial sums grow by less than 1e-6 over the last decade of N.
    """
    for name, traj in (
        ("berman", berman_values),
        ("davis", davis_partial_sums),
        ("dprime", dprime_values),
    ):
        if not traj:
            raise ValueError(f"{name} trajectory is empty")
    verdicts = {
        "berman": _vanishing_verdict(berman_values),
        "davis": _davis_verdict(davis_partial_sums),
        "dprime": _vanishing_verdict(dprime_values),
    }
    return ConditionReport(
        list(berman_values), list(davis_partial_sums), list(dprime_values), verdicts
    )


def log_grid(lo: int, hi: int, per_decade: int = 1) -> list[int]:
    exps = np.arange(math.log10(lo), math.log10(hi) + 1e-9, 1.0 / per_decade)
    return sorted({int(round(10**e)) for e in exps})


def condition_report(
    model: CorrelationModel,
    p: float = 2.0,
    x: float = 0.0,
    y: float = 0.0,
    n_max: int = 10**6,
    dprime_n_max: int = 10**5,
) -> ConditionReport:
    """Run all three diagnostics over a logarithmic grid and classify them.

    The D′ sum at each n uses k_n = ceil(sqrt(n)) blocks so that the value
    is comparable across n.
    """
    from .extremal import gaussian_norming

    ns = log_grid(10, n_max)
    berman = [(n, berman_statistic(model, n)) for n in ns]
    rhos = np.abs(rho_array(model, np.arange(1, n_max + 1))) ** p
    csum = np.cumsum(rhos)
    davis = [(n, float(csum[n - 1])) for n in ns]
    dprime = []
    for n in log_grid(100, dprime_n_max):
        k = math.ceil(math.sqrt(n))
        dprime.append((n, dprime_sum(model, n, k, x, y, gaussian_norming(n))))
    return classify_conditions(berman, davis, dprime)
