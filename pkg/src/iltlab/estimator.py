"""Monte Carlo estimation of the mollified derivative intersection local time.

For one path pair the functional is the right-endpoint Riemann sum

    alpha_eps = (T/M)^2 * sum_{a,b} d^k f_eps(B_{t_a} - B~_{s_b}).

Replicates are independent given their counter-based substreams and are
reduced in replicate order with ``math.fsum``, so every statistic here is
bit-reproducible whatever the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .fbm import FbmPath, sample_pair
from .kernel import KernelSpec, kernel_eval
from .model import ExperimentParams, ParameterError

MAX_MOMENT_ORDER = 6
MIN_TAIL_SAMPLES = 10_000
TAIL_FRACTION = 0.1


@dataclass(frozen=True)
class EstimateRecord:
    params: ExperimentParams
    mean: float
    variance: float
    std_error: float  # nan when replicates_used == 1
    replicates_used: int

    @property
    def std_error_usable(self) -> bool:
        return self.replicates_used > 1


@dataclass
class SweepResult:
    epsilons: list[float]
    means: list[float]
    std_errors: list[float]
    cauchy_gaps: list[float]  # E|alpha_{eps_j} - alpha_{eps_{j+1}}|^2, one fewer than epsilons
    gap_std_errors: list[float]
    slope: float  # least-squares slope of log|mean| on log eps
    difference_slope: float  # slope of log|mean_j - mean_{j+1}| on log eps_j
    samples: np.ndarray = field(repr=False)  # replicates x levels

    def gap_decrease_z(self) -> list[float]:
        """z-scores of gap_j - gap_{j+1} from the paired per-replicate squared differences."""
        sq = np.diff(self.samples, axis=1) ** 2
        out = []
        for j in range(sq.shape[1] - 1):
            delta = sq[:, j] - sq[:, j + 1]
            se = np.std(delta, ddof=1) / math.sqrt(delta.size)
            out.append(math.fsum(delta) / delta.size / se if se > 0 else math.inf)
        return out


@dataclass(frozen=True)
class MomentEstimate:
    order: int
    value: float
    std_error: float


@dataclass(frozen=True)
class TailFit:
    b: float
    ci_low: float
    ci_high: float
    method: str
    exceedances: int


def riemann_functional(path_a: FbmPath, path_b: FbmPath, spec: KernelSpec) -> float:
    """Right-endpoint rectangle rule for the double time integral of the kernel."""
    return float(riemann_functional_multi(path_a, path_b, spec.k, [spec.epsilon])[0])


def riemann_functional_multi(path_a: FbmPath, path_b: FbmPath, k, epsilons) -> np.ndarray:
    """The functional at several mollifier widths, sharing the pairwise differences."""
    if path_a.grid != path_b.grid:
        raise ParameterError("paths must share one time grid")
    if path_a.d != path_b.d or path_a.d != len(getattr(k, "k", k)):
        raise ParameterError(f"dimension mismatch: paths {path_a.d}/{path_b.d}, multi-index {k}")
    diffs = path_a.values[:, None, :] - path_b.values[None, :, :]
    dt = path_a.grid.dt
    return np.array([dt * dt * np.sum(kernel_eval(KernelSpec(eps, k), diffs)) for eps in epsilons])


def replicate_values(params: ExperimentParams, epsilons, sampler: str = "circulant", workers: int = 1) -> np.ndarray:
    """Array (N, len(epsilons)) of functional values, rows in replicate order."""
    epsilons = [float(e) for e in epsilons]

    def one(r: int) -> np.ndarray:
        a, b = sample_pair(params, r, sampler)
        return riemann_functional_multi(a, b, params.k, epsilons)

    if workers <= 1:
        rows = [one(r) for r in range(params.N)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(params.N)))
    return np.vstack(rows)


def _mean_var(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    mean = math.fsum(x) / n
    if n == 1:
        return mean, 0.0
    return mean, math.fsum((x - mean) ** 2) / (n - 1)


def summarize(params: ExperimentParams, values: np.ndarray) -> EstimateRecord:
    values = np.asarray(values, dtype=float)
    n = values.size
    mean, var = _mean_var(values)
    se = math.sqrt(var / n) if n > 1 else math.nan
    return EstimateRecord(params, mean, var, se, n)


def mc_estimate(params: ExperimentParams, sampler: str = "circulant", workers: int = 1) -> EstimateRecord:
    values = replicate_values(params, [params.epsilon], sampler, workers)[:, 0]
    return summarize(params, values)


def log_slope(x, y) -> float:
    """Least-squares slope of log|y| on log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y, float))), 1)[0])


def difference_slope(epsilons, means) -> float:
    """Scaling exponent from successive differences of a power law with an additive constant.

    If m(eps) = A eps^{-a} + B, then m(eps_j) - m(eps_{j+1}) on a geometric eps grid is
    proportional to eps_j^{-a}, so the constant B drops out of the fit.
    """
    eps = np.asarray(epsilons, float)
    diffs = np.diff(np.asarray(means, float))
    return log_slope(eps[:-1], diffs)


def eps_cauchy_sweep(
    params: ExperimentParams, halvings: int, sampler: str = "circulant", workers: int = 1
) -> SweepResult:
    """Halve eps ``halvings`` times from params.epsilon on common path pairs."""
    if halvings < 2:
        raise ParameterError(f"halvings must be >= 2, got {halvings}")
    epsilons = [params.epsilon * 2.0**-j for j in range(halvings + 1)]
    values = replicate_values(params, epsilons, sampler, workers)
    return sweep_from_samples(epsilons, values)


def sweep_from_samples(epsilons, values: np.ndarray) -> SweepResult:
    n = values.shape[0]
    means, ses = [], []
    for col in values.T:
        m, v = _mean_var(col)
        means.append(m)
        ses.append(math.sqrt(v / n) if n > 1 else math.nan)
    gaps, gap_ses = [], []
    for sq in (np.diff(values, axis=1) ** 2).T:
        m, v = _mean_var(sq)
        gaps.append(m)
        gap_ses.append(math.sqrt(v / n) if n > 1 else math.nan)
    return SweepResult(
        epsilons=list(epsilons),
        means=means,
        std_errors=ses,
        cauchy_gaps=gaps,
        gap_std_errors=gap_ses,
        slope=log_slope(epsilons, means),
        difference_slope=difference_slope(epsilons, means) if len(epsilons) >= 3 else math.nan,
        samples=values,
    )


def moment_from_samples(values, n: int) -> MomentEstimate:
    """Mean of |X|^n with a jackknife standard error."""
    if not 1 <= n <= MAX_MOMENT_ORDER:
        raise ParameterError(f"moment order must be in [1, {MAX_MOMENT_ORDER}], got {n}")
    x = np.abs(np.asarray(values, dtype=float)) ** n
    size = x.size
    total = math.fsum(x)
    value = total / size
    if size == 1:
        return MomentEstimate(n, value, math.nan)
    loo = (total - x) / (size - 1)
    se = math.sqrt((size - 1) / size * math.fsum((loo - math.fsum(loo) / size) ** 2))
    return MomentEstimate(n, value, se)


def empirical_moment(params: ExperimentParams, n: int, sampler: str = "circulant", workers: int = 1) -> MomentEstimate:
    if not 1 <= n <= MAX_MOMENT_ORDER:
        raise ParameterError(f"moment order must be in [1, {MAX_MOMENT_ORDER}], got {n}")
    values = replicate_values(params, [params.epsilon], sampler, workers)[:, 0]
    return moment_from_samples(values, n)


def moment_growth_fit(moments: list[MomentEstimate], kappa1: float) -> dict:
    """Compare log-moments with (2 - 2 kappa1) log n! + c n.

    With g_n = log m_n - (2 - 2 kappa1) log n!, the moment bound says g_n stays
    below a line in n.  ``c`` is the least-squares slope of g_n on n and
    ``curvature_z`` the second differences of g_n in units of their
    (correlation-ignoring) delta-method standard errors; values well above 3
    would indicate faster-than-allowed growth.
    """
    orders = np.array([m.order for m in moments], dtype=float)
    if np.any(np.diff(orders) != 1):
        raise ParameterError("moment orders must be consecutive")
    values = np.array([m.value for m in moments])
    rel_se = np.array([m.std_error for m in moments]) / values
    lgf = np.array([math.lgamma(n + 1) for n in orders])
    g = np.log(values) - (2 - 2 * kappa1) * lgf
    c = float(np.polyfit(orders, g, 1)[0]) if orders.size >= 2 else math.nan
    second = g[2:] - 2 * g[1:-1] + g[:-2]
    second_se = np.sqrt(rel_se[2:] ** 2 + 4 * rel_se[1:-1] ** 2 + rel_se[:-2] ** 2)
    return {
        "orders": orders.astype(int).tolist(),
        "g": g.tolist(),
        "c": c,
        "curvature": second.tolist(),
        "curvature_z": (second / second_se).tolist(),
    }


_LAG_X, _LAG_W = np.polynomial.laguerre.laggauss(60)


def _tail_nll(theta, z):
    # density of exceedances z >= 1 proportional to exp(-c z^b)
    b, c = math.exp(theta[0]), math.exp(theta[1])
    g = (1.0 / b) * (1.0 + _LAG_X / c) ** (1.0 / b - 1.0)
    log_norm = -c - math.log(c) + math.log(float(_LAG_W @ g))
    return c * float(np.mean(z**b)) + log_norm


def _fit_tail_mle(a: np.ndarray) -> float:
    u = a[int((1 - TAIL_FRACTION) * a.size)]
    z = a[a > u] / u
    res = minimize(
        _tail_nll, [0.0, 0.0], args=(z,), method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000},
    )
    return math.exp(res.x[0])


def _fit_tail_regression(a: np.ndarray) -> float:
    n = a.size
    surv = 1.0 - np.arange(1, n + 1) / (n + 1)
    top = surv <= TAIL_FRACTION
    return float(np.polyfit(np.log(a[top]), np.log(-np.log(surv[top])), 1)[0])


def tail_exponent_fit(samples, method: str = "mle", n_boot: int = 200, seed: int = 0, level: float = 0.95) -> TailFit:
    """Fit b in P(|X| > x) ~ exp(-c x^b) from the top decile of |X|.

    ``method="mle"`` maximizes the likelihood of the exceedances over the
    decile threshold under a density proportional to exp(-c x^b); this family
    contains the Gaussian (b = 2) and exponential (b = 1) laws exactly.
    ``method="regression"`` regresses log(-log S(x)) on log x, which is biased
    low for Gaussian tails at practical sample sizes.  The interval is a
    percentile bootstrap with a seeded generator.
    """
    a = np.sort(np.abs(np.asarray(samples, dtype=float)))
    if a.size < MIN_TAIL_SAMPLES:
        raise ParameterError(f"tail fit needs at least {MIN_TAIL_SAMPLES} samples, got {a.size}")
    fitters = {"mle": _fit_tail_mle, "regression": _fit_tail_regression}
    if method not in fitters:
        raise ParameterError(f"unknown tail-fit method {method!r}")
    fit = fitters[method]
    b = fit(a)
    rng = np.random.default_rng(seed)
    boots = [fit(np.sort(rng.choice(a, a.size))) for _ in range(n_boot)]
    lo, hi = np.quantile(boots, [(1 - level) / 2, (1 + level) / 2]) if n_boot else (math.nan, math.nan)
    return TailFit(b, float(lo), float(hi), method, int(a.size - int((1 - TAIL_FRACTION) * a.size) - 1))
