"""Numerical checks of the Gram-matrix inequalities behind the moment bound.

Q1, Q2 are covariance matrices of fBm sampled at increasing times.  The
checks cover smallest-eigenvalue and determinant interpolation for Q1 + Q2,
the increment-product lower bound on det(Q), the local-nondeterminism bound
on lambda_min(Q) through the all-ones upper-triangular matrix G, and the
n-independence of lambda_min(G^T G).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .fbm import fbm_covariance
from .model import ParameterError
from .rng import substream

GRAM_MAX_N = 64
FUZZ_MAX_N = 10
INTERP_SLACK = 1e-12
MIN_GAP_FRACTION = 1e-3


@dataclass(frozen=True)
class GramPair:
    times_s: np.ndarray
    times_t: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray

    @classmethod
    def build(cls, h1: float, times_s, h2: float, times_t) -> "GramPair":
        s = np.asarray(times_s, float)
        t = np.asarray(times_t, float)
        return cls(s, t, build_gram(h1, s), build_gram(h2, t))

    @property
    def B(self) -> np.ndarray:
        return self.Q1 + self.Q2


def _check_times(times, max_n: int) -> np.ndarray:
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size < 1 or times.size > max_n:
        raise ParameterError(f"need 1 <= n <= {max_n} times, got {times.size}")
    if times[0] <= 0 or np.any(np.diff(times) <= 0):
        raise ParameterError("times must be positive and strictly increasing")
    return times


def build_gram(h: float, times) -> np.ndarray:
    times = _check_times(times, GRAM_MAX_N)
    return fbm_covariance(h, times[:, None], times[None, :])


def _check_symmetric(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=1e-13, atol=1e-14 * np.abs(A).max()):
        raise ParameterError("matrix is not symmetric")
    return A


def lambda_min(A) -> float:
    """Smallest eigenvalue of a symmetric matrix (LAPACK symmetric solver)."""
    A = _check_symmetric(A)
    return float(np.linalg.eigvalsh(A)[0])


def eigen_residual(A) -> float:
    """||A v - lambda v|| / ||A|| for the smallest eigenpair."""
    A = _check_symmetric(A)
    w, V = np.linalg.eigh(A)
    v = V[:, 0]
    return float(np.linalg.norm(A @ v - w[0] * v) / np.linalg.norm(A, 2))


def _check_spd(A) -> np.ndarray:
    A = _check_symmetric(A)
    if lambda_min(A) <= 0:
        raise ParameterError("matrix is not positive definite")
    return A


def check_eigen_interpolation(A, B, rho_grid) -> bool:
    """lambda_min(A+B) >= lambda_min(A)^rho lambda_min(B)^(1-rho) for every rho."""
    A, B = _check_spd(A), _check_spd(B)
    la, lb, lab = lambda_min(A), lambda_min(B), lambda_min(A + B)
    scale = max(la, lb, lab)
    return all(lab >= la**r * lb ** (1 - r) - INTERP_SLACK * scale for r in rho_grid)


def check_det_interpolation(A, B, gamma_grid) -> bool:
    """det(A+B) >= det(A)^gamma det(B)^(1-gamma), compared on the log scale."""
    A, B = _check_spd(A), _check_spd(B)
    la = np.linalg.slogdet(A)[1]
    lb = np.linalg.slogdet(B)[1]
    lab = np.linalg.slogdet(A + B)[1]
    return all(lab >= g * la + (1 - g) * lb - INTERP_SLACK for g in gamma_grid)


def increments(times) -> np.ndarray:
    times = np.asarray(times, float)
    return np.diff(np.concatenate([[0.0], times]))


def check_det_product_bound(h: float, times) -> float:
    """det(Q) / prod_j (t_j - t_{j-1})^{2H}; equals 1 for Brownian motion."""
    times = _check_times(times, FUZZ_MAX_N)
    logdet = np.linalg.slogdet(build_gram(h, times))[1]
    return math.exp(logdet - 2 * h * float(np.sum(np.log(increments(times)))))


def g_matrix(n: int) -> np.ndarray:
    return np.triu(np.ones((n, n)))


def g_matrix_min_eig(n: int) -> float:
    """lambda_min(G^T G) for the n x n upper-triangular all-ones G."""
    if not 1 <= n <= GRAM_MAX_N:
        raise ParameterError(f"n must be in [1, {GRAM_MAX_N}], got {n}")
    G = g_matrix(n)
    return lambda_min(G.T @ G)


def g_inverse_norm_bound(n: int) -> float:
    """1/||G^{-1}||_2^2, an independent lower bound for lambda_min(G^T G) (>= 1/4)."""
    inv = np.eye(n) - np.eye(n, k=1)
    return 1.0 / np.linalg.norm(inv, 2) ** 2


def check_lnd_eigen_bound(h: float, times) -> float:
    """lambda_min(Q) / [lambda_min(G^T G) * min_j (t_j - t_{j-1})^{2H}]."""
    times = _check_times(times, FUZZ_MAX_N)
    Q = build_gram(h, times)
    n = times.size
    return lambda_min(Q) / (g_matrix_min_eig(n) * float(np.min(increments(times))) ** (2 * h))


def random_times(rng: np.random.Generator, n: int, T: float = 1.0) -> np.ndarray:
    """n increasing times in (0, T] with every gap (including from 0) at least 1e-3 T."""
    gap = MIN_GAP_FRACTION * T
    free = T - n * gap
    u = np.sort(rng.uniform(0.0, free, n))
    return u + gap * np.arange(1, n + 1)


@dataclass
class FuzzCase:
    case_id: int
    h1: float
    h2: float
    n: int
    eig_interp: bool
    det_interp: bool
    positive_definite: bool
    det_ratio: float
    lnd_ratio: float


def fuzz_case(seed: int, case_id: int, max_n: int = 6, grid_points: int = 11) -> FuzzCase:
    rng = substream(seed, case_id)
    n = int(rng.integers(1, max_n + 1))
    h1, h2 = (float(v) for v in rng.uniform(0.05, 0.95, 2))
    pair = GramPair.build(h1, random_times(rng, n), h2, random_times(rng, n))
    grid = np.linspace(0.0, 1.0, grid_points)
    pd = lambda_min(pair.Q1) > 0 and lambda_min(pair.Q2) > 0
    return FuzzCase(
        case_id=case_id,
        h1=h1,
        h2=h2,
        n=n,
        eig_interp=check_eigen_interpolation(pair.Q1, pair.Q2, grid),
        det_interp=check_det_interpolation(pair.Q1, pair.Q2, grid),
        positive_definite=pd,
        det_ratio=check_det_product_bound(h1, pair.times_s),
        lnd_ratio=check_lnd_eigen_bound(h1, pair.times_s),
    )


def fuzz_campaign(seed: int, cases: int = 1000, max_n: int = 6) -> list[FuzzCase]:
    return [fuzz_case(seed, i, max_n) for i in range(cases)]


def brownian_exactness(seed: int, cases: int = 100, max_n: int = FUZZ_MAX_N) -> dict:
    """Largest deviation of the det/LND ratios from 1 at H = 1/2 over random times."""
    worst_det = worst_lnd = 0.0
    for i in range(cases):
        rng = substream(seed, 1_000_000 + i)
        times = random_times(rng, int(rng.integers(1, max_n + 1)))
        worst_det = max(worst_det, abs(check_det_product_bound(0.5, times) - 1.0))
        worst_lnd = max(worst_lnd, 1.0 - check_lnd_eigen_bound(0.5, times))
    return {"det_ratio_max_dev": worst_det, "lnd_ratio_max_shortfall": worst_lnd}


def fuzz_summary(cases: list[FuzzCase]) -> dict:
    return {
        "cases": len(cases),
        "eig_interp_violations": sum(not c.eig_interp for c in cases),
        "det_interp_violations": sum(not c.det_interp for c in cases),
        "pd_violations": sum(not c.positive_definite for c in cases),
        "det_ratio_min": min(c.det_ratio for c in cases),
        "lnd_ratio_min": min(c.lnd_ratio for c in cases),
    }


def write_fuzz_csv(path, cases: list[FuzzCase]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "H", "n", "ratio_kind", "ratio_value"])
        for c in cases:
            w.writerow([c.case_id, repr(c.h1), c.n, "det_product", repr(c.det_ratio)])
            w.writerow([c.case_id, repr(c.h1), c.n, "lnd_eigen", repr(c.lnd_ratio)])
