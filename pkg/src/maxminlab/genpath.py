"""Exact samplers for stationary standard Gaussian sequences.

Two independent routes are provided: the AR(1) recursion and circulant
embedding. Every replicate gets its own generator derived from
(base_seed, replicate, stream), so results do not depend on scheduling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .dependence import CorrelationModel, rho_array

log = logging.getLogger(__name__)

PATH_STREAM = 0
INDICATOR_STREAM = 1
EIGEN_TOL = 1e-8


class EmbeddingFailure(RuntimeError):
    """The circulant embedding of the covariance is not nonnegative definite."""

    def __init__(self, model: CorrelationModel, n: int, min_eig: float, max_eig: float):
        self.model = model
        self.n = n
        self.min_eig = min_eig
        self.max_eig = max_eig
        super().__init__(
            f"circulant embedding failed for {model.label} at n={n}: "
            f"min eigenvalue {min_eig:.3e} (max {max_eig:.3e})"
        )


def replicate_rng(base_seed: int, replicate: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(base_seed, spawn_key=(replicate, stream))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class SamplePath:
    values: np.ndarray
    model: CorrelationModel
    seed_info: tuple | None = None

    @property
    def n(self) -> int:
        return self.values.size


def generate_iid(n: int, rng: np.random.Generator) -> SamplePath:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return SamplePath(rng.standard_normal(n), CorrelationModel("iid"))


def generate_ar1(n: int, phi: float, rng: np.random.Generator) -> SamplePath:
    """X_1 ~ N(0,1), X_{t+1} = phi X_t + sqrt(1 - phi^2) Z_t."""
    model = CorrelationModel("ar1", phi=phi)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    e = rng.standard_normal(n)
    e[1:] *= math.sqrt(1.0 - phi * phi)
    return SamplePath(lfilter([1.0], [1.0, -phi], e), model)


@lru_cache(maxsize=32)
def circulant_sqrt_eigenvalues(model: CorrelationModel, n: int) -> np.ndarray:
    """sqrt(lambda / m) for the size m = 2(n-1) circulant embedding of rho_0..rho_{n-1}.

    Tiny negative eigenvalues (above -1e-8 * max) are clipped to zero;
    anything more negative raises EmbeddingFailure.
    """
    r = rho_array(model, np.arange(n))
    row = np.concatenate([r, r[-2:0:-1]])
    lam = np.fft.rfft(row).real
    lam_max = float(lam.max())
    lam_min = float(lam.min())
    if lam_min < -EIGEN_TOL * lam_max:
        raise EmbeddingFailure(model, n, lam_min, lam_max)
    if lam_min < 0:
        log.warning(
            "clipping %d slightly negative circulant eigenvalues (min %.2e) for %s, n=%d",
            int((lam < 0).sum()), lam_min, model.label, n,
        )
        lam = np.maximum(lam, 0.0)
    m = row.size
    return np.sqrt(lam / m)


def generate_circulant(n: int, model: CorrelationModel, rng: np.random.Generator) -> SamplePath:
    """Exact stationary path with autocorrelation rho_0..rho_{n-1}."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n <= 2:
        # embedding of size 2(n-1) degenerates; use the 2x2 Cholesky factor directly
        z = rng.standard_normal(n)
        if n == 2:
            r = float(rho_array(model, [1])[0])
            z[1] = r * z[0] + math.sqrt(1 - r * r) * z[1]
        return SamplePath(z, model)
    sq = circulant_sqrt_eigenvalues(model, n)
    m = 2 * (n - 1)
    # the full spectrum is symmetric; build it from the half spectrum
    full = np.concatenate([sq, sq[-2:0:-1]])
    w = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    x = np.fft.fft(full * w).real[:n]
    return SamplePath(x, model)


def generate_path(
    model: CorrelationModel, n: int, rng: np.random.Generator, method: str = "auto"
) -> SamplePath:
    """Dispatch to the natural sampler for the model.

    ``method`` may force ``circulant``; ``auto`` uses the iid draw for
    iid, the recursion for AR(1), and circulant embedding otherwise.
    """
    if method == "circulant":
        return generate_circulant(n, model, rng)
    if model.kind == "iid":
        return generate_iid(n, rng)
    if model.kind == "ar1":
        return generate_ar1(n, model.phi, rng)
    return generate_circulant(n, model, rng)


def sample_autocorrelation(x: np.ndarray, lag: int) -> float:
    x = np.asarray(x, dtype=float)
    xc = x - x.mean()
    if lag == 0:
        return 1.0
    return float(np.dot(xc[:-lag], xc[lag:]) / np.dot(xc, xc))
