"""Monte Carlo experiments comparing empirical event frequencies with the
limit law and, for independent sequences, with the exact finite-n law."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import beta as beta_fn
from scipy.special import gammaln, logsumexp, ndtr, xlogy

from . import limitlaw
from .dependence import CorrelationModel
from .extremal import (
    NormingConstants,
    event_mask,
    gaussian_norming,
    normalize_max,
    normalize_min,
    u_threshold,
    v_threshold,
)
from .genpath import (
    INDICATOR_STREAM,
    PATH_STREAM,
    EmbeddingFailure,
    generate_path,
    replicate_rng,
)
from .limitlaw import LimitSpec, ThresholdQuad
from .missing import MissingnessModel, PDistribution, draw_indicators


class GenerationError(RuntimeError):
    def __init__(self, replicate: int, cause: Exception):
        self.replicate = replicate
        self.cause = cause
        super().__init__(f"replicate {replicate}: {cause}")


@dataclass
class ExperimentConfig:
    correlation: CorrelationModel
    missingness: MissingnessModel
    n: int
    reps: int
    thresholds: list[ThresholdQuad] = field(default_factory=list)
    base_seed: int = 0
    workers: int = 1
    norming: Optional[NormingConstants] = None
    sampler: str = "auto"

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n: need n >= 3, got {self.n}")
        if self.reps < 1:
            raise ValueError(f"reps: need reps >= 1, got {self.reps}")
        if self.workers < 1:
            raise ValueError(f"workers: need workers >= 1, got {self.workers}")
        if self.norming is not None and self.norming.n != self.n:
            raise ValueError(f"norming: constants are for n={self.norming.n}, config has n={self.n}")
        if self.sampler not in ("auto", "circulant"):
            raise ValueError(f"sampler: unknown sampler {self.sampler!r}")

    @property
    def norming_constants(self) -> NormingConstants:
        return self.norming if self.norming is not None else gaussian_norming(self.n)

    def with_n(self, n: int) -> "ExperimentConfig":
        return ExperimentConfig(
            self.correlation, self.missingness, n, self.reps, list(self.thresholds),
            self.base_seed, self.workers, None, self.sampler,
        )


@dataclass
class Sample:
    """Raw extremes of every replicate: columns (M_eps, m_eps, M, m)."""

    raw: np.ndarray
    s_n: np.ndarray
    realized_p: np.ndarray
    nc: NormingConstants

    @property
    def reps(self) -> int:
        return self.s_n.size

    @property
    def empty_count(self) -> int:
        return int((self.s_n == 0).sum())

    def normalized(self) -> np.ndarray:
        me_max, me_min, m_max, m_min = self.raw.T
        with np.errstate(invalid="ignore"):
            return np.column_stack([
                normalize_max(self.nc, me_max),
                normalize_min(self.nc, me_min),
                normalize_max(self.nc, m_max),
                normalize_min(self.nc, m_min),
            ])

    def raw_thresholds(self, q: ThresholdQuad) -> tuple[float, float, float, float]:
        return (
            u_threshold(self.nc, q.x2), v_threshold(self.nc, q.y2),
            u_threshold(self.nc, q.x1), v_threshold(self.nc, q.y1),
        )

    def event(self, q: ThresholdQuad) -> np.ndarray:
        return event_mask(self.raw, self.s_n, *self.raw_thresholds(q))


@dataclass
class EstimateRow:
    quad: ThresholdQuad
    empirical: float
    std_err: float
    theoretical: float
    abs_dev: float
    dev_in_se: float

    def csv_line(self) -> str:
        vals = list(self.quad.as_tuple()) + [
            self.empirical, self.std_err, self.theoretical, self.abs_dev, self.dev_in_se,
        ]
        return ",".join(repr(float(v)) for v in vals)


ESTIMATE_HEADER = "x2,y2,x1,y1,empirical,std_err,theoretical,abs_dev,dev_in_se"
RAW_HEADER = (
    "replicate,M_eps,m_eps,M,m,s_n,"
    "normalized_M_eps,normalized_m_eps,normalized_M,normalized_m"
)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[EstimateRow]
    sample: Sample
    p_distribution: PDistribution
    wall_time: float

    def estimates_csv(self) -> str:
        return "\n".join([ESTIMATE_HEADER] + [r.csv_line() for r in self.rows]) + "\n"

    def raw_csv(self) -> str:
        norm = self.sample.normalized()
        lines = [RAW_HEADER]
        for i in range(self.sample.reps):
            r = self.sample.raw[i]
            lines.append(
                ",".join(
                    [str(i)] + [repr(float(v)) for v in r] + [str(int(self.sample.s_n[i]))]
                    + [repr(float(v)) for v in norm[i]]
                )
            )
        return "\n".join(lines) + "\n"


def _simulate_block(cfg: ExperimentConfig, start: int, stop: int):
    k = stop - start
    raw = np.empty((k, 4))
    s_n = np.empty(k, dtype=np.int64)
    realized = np.full(k, np.nan)
    n = cfg.n
    for j, i in enumerate(range(start, stop)):
        try:
            path = generate_path(cfg.correlation, n, replicate_rng(cfg.base_seed, i, PATH_STREAM), cfg.sampler)
        except (EmbeddingFailure, ValueError) as exc:
            raise GenerationError(i, exc) from exc
        draw = draw_indicators(cfg.missingness, n, replicate_rng(cfg.base_seed, i, INDICATOR_STREAM), replicate=i)
        x = path.values
        obs = x[draw.indicators.astype(bool)]
        if obs.size:
            raw[j, 0], raw[j, 1] = obs.max(), obs.min()
        else:
            raw[j, 0], raw[j, 1] = -math.inf, math.inf
        raw[j, 2], raw[j, 3] = x.max(), x.min()
        s_n[j] = draw.s_n
        if draw.realized_p is not None:
            realized[j] = draw.realized_p
    return raw, s_n, realized


def _blocks(reps: int, workers: int) -> list[tuple[int, int]]:
    nblocks = max(1, min(reps, workers * 4))
    edges = np.linspace(0, reps, nblocks + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def simulate(cfg: ExperimentConfig) -> Sample:
    """Generate every replicate's extremal quadruple. The output does not
    depend on ``cfg.workers``."""
    blocks = _blocks(cfg.reps, cfg.workers)
    if cfg.workers == 1:
        parts = [_simulate_block(cfg, a, b) for a, b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futs = [pool.submit(_simulate_block, cfg, a, b) for a, b in blocks]
            parts = [f.result() for f in futs]
    raw = np.concatenate([p[0] for p in parts])
    s_n = np.concatenate([p[1] for p in parts])
    realized = np.concatenate([p[2] for p in parts])
    return Sample(raw, s_n, realized, cfg.norming_constants)


def estimate_row(sample: Sample, q: ThresholdQuad, theoretical: float) -> EstimateRow:
    emp = float(sample.event(q).mean())
    se = math.sqrt(emp * (1.0 - emp) / sample.reps)
    dev = abs(emp - theoretical)
    dev_se = dev / se if se > 0 else math.inf
    return EstimateRow(q, emp, se, theoretical, dev, dev_se)


def run_experiment(cfg: ExperimentConfig, spec: Optional[LimitSpec] = None) -> ExperimentResult:
    t0 = time.perf_counter()
    spec = spec or limitlaw.gumbel()
    sample = simulate(cfg)
    pd = cfg.missingness.limit_distribution(cfg.n)
    rows = [estimate_row(sample, q, limitlaw.joint_limit(spec, q, pd)) for q in cfg.thresholds]
    return ExperimentResult(cfg, rows, sample, pd, time.perf_counter() - t0)


def _log_binomial_sum(n: int, p: float, a: float, b: float) -> float:
    # log of sum_s C(n,s) p^s (1-p)^(n-s) a^s b^(n-s)
    s = np.arange(n + 1)
    logc = gammaln(n + 1) - gammaln(s + 1) - gammaln(n - s + 1)
    with np.errstate(divide="ignore"):
        terms = logc + xlogy(s, p * a) + xlogy(n - s, (1 - p) * b)
    return float(logsumexp(terms))


def _markov_expectation(n: int, p01: float, p10: float, a: float, b: float) -> float:
    # E[prod_i w(eps_i)] with w(1) = a, w(0) = b for the stationary chain
    pi1 = p01 / (p01 + p10)
    trans = np.array([[1 - p01, p01], [p10, 1 - p10]])
    w = np.array([b, a])
    vec = np.array([1 - pi1, pi1]) * w
    log_scale = 0.0
    for _ in range(n - 1):
        vec = (vec @ trans) * w
        tot = vec.sum()
        if tot == 0:
            return 0.0
        log_scale += math.log(tot)
        vec /= tot
    return math.exp(log_scale + math.log(vec.sum())) if vec.sum() > 0 else 0.0


def _mixture_expectation(pd: PDistribution, n: int, a: float, b: float) -> float:
    def cond(p):
        return (p * a + (1 - p) * b) ** n

    if pd.kind in ("point", "discrete"):
        x, w = pd.nodes()
        return float(np.dot(w, cond(x)))
    if pd.kind == "uniform":
        val, _ = integrate.quad(cond, pd.a, pd.b, epsabs=1e-13, epsrel=1e-11, limit=500)
        return val / (pd.b - pd.a)
    val, _ = integrate.quad(
        cond, 0.0, 1.0, weight="alg", wvar=(pd.alpha - 1.0, pd.beta - 1.0),
        epsabs=1e-13, epsrel=1e-11, limit=500,
    )
    return val / beta_fn(pd.alpha, pd.beta)


def iid_oracle(
    n: int,
    u2: float,
    v2: float,
    u1: float,
    v1: float,
    missingness: MissingnessModel,
    mc_over_p: int = 0,
    rng: Optional[np.random.Generator] = None,
    correlation: Optional[CorrelationModel] = None,
) -> float:
    """Exact finite-n probability of the quad event for iid N(0,1) values.

    Observed values must fall in the inner interval (intersected with the
    outer one) and the others in the outer interval, so the probability
    is E[a^S_n b^(n - S_n)] over the indicator law.
    """
    if correlation is not None and correlation.kind != "iid":
        raise ValueError(f"iid_oracle needs an iid correlation model, got {correlation.label}")
    if not v1 < u1:
        raise ValueError(f"outer interval is empty: v1={v1}, u1={u1}")
    lo, hi = max(v1, v2), min(u1, u2)
    a = float(max(ndtr(hi) - ndtr(lo), 0.0)) if lo < hi else 0.0
    b = float(ndtr(u1) - ndtr(v1))
    kind = missingness.kind
    if kind == "bernoulli":
        return math.exp(_log_binomial_sum(n, missingness.p, a, b))
    if kind == "markov":
        return _markov_expectation(n, missingness.p01, missingness.p10, a, b)
    if kind == "pattern":
        vals = []
        for pat in missingness.patterns:
            if len(pat) < n:
                raise ValueError(f"pattern of length {len(pat)} is shorter than n={n}")
            s = int(sum(pat[:n]))
            vals.append(a**s * b ** (n - s))
        return float(np.mean(vals))
    pd = missingness.pdist
    if mc_over_p > 0 and not pd.is_constant:
        rng = rng if rng is not None else np.random.default_rng(0)
        p = pd.sample(rng, mc_over_p)
        return float(np.mean((p * a + (1 - p) * b) ** n))
    return _mixture_expectation(pd, n, a, b)


def independence_gap(sample: Sample, x: float, y: float) -> float:
    """|P(joint) - P(max part) P(min part)| for the single-threshold event on
    the observed subsample; replicates with nothing observed count as inside."""
    u, v = u_threshold(sample.nc, x), v_threshold(sample.nc, y)
    me_max, me_min = sample.raw[:, 0], sample.raw[:, 1]
    empty = sample.s_n == 0
    max_part = empty | (me_max <= u)
    min_part = empty | (me_min > v)
    joint = float((max_part & min_part).mean())
    return abs(joint - float(max_part.mean()) * float(min_part.mean()))


DIFF_GRID = np.linspace(0.0, 5.0, 51)
QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass
class DifferenceSummary:
    used: int
    excluded: int
    grid: np.ndarray
    min_diff_ecdf: np.ndarray
    max_diff_ecdf: np.ndarray
    quantiles: dict[str, dict[float, float]]
    min_diff: np.ndarray = field(repr=False)
    max_diff: np.ndarray = field(repr=False)


def _ecdf(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    v = np.sort(values)
    return np.searchsorted(v, grid, side="right") / max(v.size, 1)


def difference_statistic(sample: Sample, grid: np.ndarray = DIFF_GRID) -> DifferenceSummary:
    """Empirical law of (m(eps) - m)/c_n and (M - M(eps))/a_n alongside the
    normalized complete-sample extremes. Replicates with s_n = 0 are excluded."""
    keep = sample.s_n >= 1
    raw = sample.raw[keep]
    norm = sample.normalized()[keep]
    nc = sample.nc
    dmin = (raw[:, 1] - raw[:, 3]) / nc.c_n
    dmax = (raw[:, 2] - raw[:, 0]) / nc.a_n
    series = {
        "min_diff": dmin,
        "normalized_min": norm[:, 3],
        "max_diff": dmax,
        "normalized_max": norm[:, 2],
    }
    quantiles = {
        name: ({q: float(np.quantile(v, q)) for q in QUANTILE_LEVELS} if v.size else {})
        for name, v in series.items()
    }
    return DifferenceSummary(
        int(keep.sum()), int((~keep).sum()), np.asarray(grid),
        _ecdf(dmin, grid), _ecdf(dmax, grid), quantiles, dmin, dmax,
    )


@dataclass
class SweepPoint:
    n: int
    max_abs_dev: float
    std_err: float
    quad: ThresholdQuad
    result: ExperimentResult = field(repr=False)


def convergence_sweep(
    cfg: ExperimentConfig, n_list: Sequence[int], spec: Optional[LimitSpec] = None
) -> list[SweepPoint]:
    """Largest |empirical - limit| over the quads at each n."""
    if list(n_list) != sorted(set(n_list)):
        raise ValueError("n_list must be strictly increasing")
    out = []
    for n in n_list:
        res = run_experiment(cfg.with_n(n), spec)
        worst = max(res.rows, key=lambda r: r.abs_dev)
        out.append(SweepPoint(n, worst.abs_dev, worst.std_err, worst.quad, res))
    return out


def nonincreasing_within(points: Sequence[SweepPoint], k: float = 2.0) -> bool:
    """Each deviation is at most the previous one plus k pooled standard errors."""
    for prev, cur in zip(points, points[1:]):
        pooled = math.hypot(prev.std_err, cur.std_err)
        if cur.max_abs_dev > prev.max_abs_dev + k * pooled:
            return False
    return True
