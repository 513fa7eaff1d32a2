"""Exact sampling of d-dimensional fractional Brownian motion on uniform grids.

Both samplers work in increment space: the fractional Gaussian noise on the
grid is drawn exactly (Cholesky factor of the Toeplitz covariance, or
circulant embedding) and cumulatively summed.  Paths are stored at the right
endpoints ``t_i = i*T/M``, ``i = 1..M``; the value ``B_0 = 0`` is implicit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
import scipy.linalg
import scipy.stats

from .model import ExperimentParams, ParameterError
from .rng import PROCESS_FIRST, PROCESS_SECOND, coordinate_streams, substream

CHOLESKY_MAX_M = 4096
# relative size of negative circulant eigenvalues that may be clamped to zero
NEG_EIG_TOL = 1e-10

Streams = Union[np.random.Generator, Sequence[np.random.Generator]]


class EmbeddingError(RuntimeError):
    """The circulant embedding of the increment covariance is not nonnegative."""


@dataclass(frozen=True)
class TimeGrid:
    T: float
    M: int

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError(f"T must be positive, got {self.T!r}")
        if int(self.M) != self.M or self.M < 1:
            raise ParameterError(f"M must be a positive integer, got {self.M!r}")

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def times(self) -> np.ndarray:
        return self.T * np.arange(1, self.M + 1) / self.M


@dataclass(frozen=True)
class FbmPath:
    hurst: float
    grid: TimeGrid
    values: np.ndarray  # shape (M, d)

    @property
    def d(self) -> int:
        return self.values.shape[1]


def fbm_covariance(h, s, t):
    """Cov(B_s, B_t) = (s^2H + t^2H - |s-t|^2H) / 2."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    out = 0.5 * (s ** (2 * h) + t ** (2 * h) - np.abs(s - t) ** (2 * h))
    return out if out.ndim else float(out)


def fgn_autocovariance(h, lag, dt: float = 1.0):
    """Autocovariance of fBm increments over steps of length ``dt`` at integer ``lag``."""
    j = np.abs(np.asarray(lag, dtype=float))
    out = 0.5 * dt ** (2 * h) * (
        np.abs(j + 1) ** (2 * h) + np.abs(j - 1) ** (2 * h) - 2 * j ** (2 * h)
    )
    return out if out.ndim else float(out)


def _as_stream_list(streams: Streams, d: int) -> list[np.random.Generator]:
    if isinstance(streams, np.random.Generator):
        return [streams] * d
    streams = list(streams)
    if len(streams) != d:
        raise ValueError(f"need {d} coordinate streams, got {len(streams)}")
    return streams


@lru_cache(maxsize=32)
def _increment_cholesky(h: float, M: int, dt: float) -> np.ndarray:
    gamma = fgn_autocovariance(h, np.arange(M), dt)
    cov = scipy.linalg.toeplitz(gamma)
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise EmbeddingError(f"increment covariance not positive definite (h={h}, M={M})") from exc
    factor.setflags(write=False)
    return factor


def embedding_size(M: int) -> int:
    """First power of two >= 2M."""
    size = 1
    while size < 2 * M:
        size *= 2
    return size


@lru_cache(maxsize=32)
def circulant_eigenvalues(h: float, M: int, dt: float) -> np.ndarray:
    """Eigenvalues of the circulant matrix embedding the M-step increment covariance."""
    m = embedding_size(M)
    half = fgn_autocovariance(h, np.arange(m // 2 + 1), dt)
    row = np.concatenate([half, half[-2:0:-1]])
    lam = np.fft.fft(row).real
    floor = -NEG_EIG_TOL * lam.max()
    if lam.min() < floor:
        raise EmbeddingError(
            f"circulant embedding has eigenvalue {lam.min():.3e} < {floor:.3e} (h={h}, M={M})"
        )
    lam = np.clip(lam, 0.0, None)
    lam.setflags(write=False)
    return lam


def sample_path_cholesky(h: float, grid: TimeGrid, d: int, streams: Streams) -> FbmPath:
    if grid.M > CHOLESKY_MAX_M:
        raise ParameterError(f"Cholesky sampler limited to M <= {CHOLESKY_MAX_M}, got {grid.M}")
    factor = _increment_cholesky(float(h), grid.M, grid.dt)
    values = np.empty((grid.M, d))
    for c, rng in enumerate(_as_stream_list(streams, d)):
        values[:, c] = np.cumsum(factor @ rng.standard_normal(grid.M))
    return FbmPath(h, grid, values)


def sample_path_circulant(h: float, grid: TimeGrid, d: int, streams: Streams) -> FbmPath:
    lam = circulant_eigenvalues(float(h), grid.M, grid.dt)
    m = lam.size
    scale = np.sqrt(lam / m)
    values = np.empty((grid.M, d))
    for c, rng in enumerate(_as_stream_list(streams, d)):
        z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        increments = np.fft.fft(scale * z).real[: grid.M]
        values[:, c] = np.cumsum(increments)
    return FbmPath(h, grid, values)


SAMPLERS = {
    "cholesky": sample_path_cholesky,
    "circulant": sample_path_circulant,
}


def get_sampler(name: str):
    try:
        return SAMPLERS[name]
    except KeyError:
        raise ParameterError(f"unknown sampler {name!r}; choose from {sorted(SAMPLERS)}") from None


def sample_pair(params: ExperimentParams, replicate: int, sampler: str = "circulant") -> tuple[FbmPath, FbmPath]:
    """The independent pair (B^H1, B~^H2) of replicate ``replicate``, sharing one grid."""
    if not 0 <= replicate < params.N:
        raise ParameterError(f"replicate index {replicate} outside [0, {params.N})")
    draw = get_sampler(sampler)
    grid = TimeGrid(params.T, params.M)
    d = params.d
    first = draw(params.hurst.h1, grid, d, coordinate_streams(params.seed, replicate, PROCESS_FIRST, d))
    second = draw(params.hurst.h2, grid, d, coordinate_streams(params.seed, replicate, PROCESS_SECOND, d))
    return first, second


def write_paths_csv(path, pairs: Sequence[tuple[int, FbmPath, FbmPath]]) -> None:
    """Dump path pairs as rows (replicate, process, coord, time_index, time, value)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["replicate", "process", "coord", "time_index", "time", "value"])
        for replicate, first, second in pairs:
            for process, p in ((PROCESS_FIRST, first), (PROCESS_SECOND, second)):
                times = p.grid.times
                for c in range(p.d):
                    for i in range(p.grid.M):
                        writer.writerow([replicate, process, c, i + 1, repr(float(times[i])), repr(float(p.values[i, c]))])


def sample_values(sampler: str, h: float, grid: TimeGrid, n: int, seed: int) -> np.ndarray:
    """Array (n, M) of one-dimensional paths, replicate r drawn from substream (seed, r)."""
    draw = get_sampler(sampler)
    return np.vstack([draw(h, grid, 1, substream(seed, r)).values[:, 0] for r in range(n)])


def familywise_threshold(n_tests: int, level_sigma: float = 3.0) -> float:
    """Per-test |z| cutoff whose Sidak family-wise error equals a single two-sided ``level_sigma`` test."""
    alpha = 2.0 * scipy.stats.norm.sf(level_sigma)
    per_test = -math.expm1(math.log1p(-alpha) / n_tests)
    return float(scipy.stats.norm.isf(per_test / 2.0))


def moment_zscores(x: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """z-scores of sample means against 0 and of upper-triangle sample second moments against ``cov``."""
    n = x.shape[0]
    mean_z = x.mean(0) / (x.std(0, ddof=1) / math.sqrt(n))
    iu = np.triu_indices(x.shape[1])
    prod = x[:, iu[0]] * x[:, iu[1]]
    cov_z = (prod.mean(0) - cov[iu]) / (prod.std(0, ddof=1) / math.sqrt(n))
    return mean_z, cov_z


def two_sample_zscores(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Element-wise z-scores of mean and second-moment differences between two samples."""
    iu = np.triu_indices(x.shape[1])

    def stats(a):
        prod = a[:, iu[0]] * a[:, iu[1]]
        n = a.shape[0]
        return a.mean(0), a.var(0, ddof=1) / n, prod.mean(0), prod.var(0, ddof=1) / n

    mx, vx, px, pvx = stats(x)
    my, vy, py, pvy = stats(y)
    return (mx - my) / np.sqrt(vx + vy), (px - py) / np.sqrt(pvx + pvy)
