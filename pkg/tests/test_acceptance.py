"""Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed below.

The lines are collected into the pytest terminal summary (see conftest.py);
run ``pytest tests/test_acceptance.py -v`` to see them.
"""

import filecmp
import math
import time

import mpmath
import numpy as np

from helpers import simplex_mc
from iltlab import bounds
from iltlab.cli import main
from iltlab.estimator import difference_slope, eps_cauchy_sweep, mc_estimate
from iltlab.fbm import TimeGrid, familywise_threshold, fbm_covariance, moment_zscores, sample_values, two_sample_zscores
from iltlab.kernel import KernelSpec, kernel_eval, kernel_eval_fourier
from iltlab.model import ExperimentParams, HurstPair, MultiIndex, beta_exponent, existence_condition_value
from iltlab.oracle import blowup_rate, dirichlet_simplex_integral, first_moment_mollified

CLOSED_FORM = (2 * math.pi) ** -0.5 * (4 / 3) * (2**1.5 - 2)


def verdict(log, number, ok, detail):
    log.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    print(log[-1])
    assert ok, detail


def test_criterion_01_first_moment(acceptance_log):
    p = ExperimentParams(HurstPair(0.5, 0.5), MultiIndex((0,)), T=1.0, epsilon=0.5, M=256, N=2000, seed=42)
    start = time.perf_counter()
    rec = mc_estimate(p)
    elapsed = time.perf_counter() - start
    oracle = first_moment_mollified(p.hurst, p.k, p.T, p.epsilon).value
    tol = max(3 * rec.std_error, 0.02 * oracle)
    ok = abs(rec.mean - oracle) <= tol and elapsed < 120
    verdict(acceptance_log, 1, ok,
            f"mc={rec.mean:.5f}+-{rec.std_error:.5f} oracle={oracle:.5f} tol={tol:.5f} time={elapsed:.1f}s")


def test_criterion_02_closed_form(acceptance_log):
    res = first_moment_mollified(HurstPair(0.5, 0.5), MultiIndex((0,)), 1.0, 0.0)
    err = abs(res.value - CLOSED_FORM)
    verdict(acceptance_log, 2, res.converged and err < 1e-5, f"oracle={res.value:.9f} closed={CLOSED_FORM:.9f} err={err:.1e}")


def test_criterion_03_equal_hurst_reduction(acceptance_log):
    betas_ok = all(beta_exponent(HurstPair(0.5, 0.5), d) == 2 / d for d in range(1, 5))
    rng = np.random.default_rng(3)
    mismatches = 0
    for _ in range(1000):
        h = float(rng.uniform(0.01, 0.99))
        d = int(rng.integers(1, 9))
        if (existence_condition_value(HurstPair(h, h), MultiIndex.zeros(d)) < 1) != (h * d < 2):
            mismatches += 1
    verdict(acceptance_log, 3, betas_ok and mismatches == 0, f"beta=2/d exact: {betas_ok}; condition mismatches={mismatches}/1000")


def _mp_gaussian(eps):
    def f(*x):
        sq = mpmath.fsum(xi * xi for xi in x)
        return (2 * mpmath.pi * eps) ** (-mpmath.mpf(len(x)) / 2) * mpmath.exp(-sq / (2 * eps))

    return f


def test_criterion_04_kernel(acceptance_log):
    rng = np.random.default_rng(44)
    fd_worst = 0.0
    with mpmath.workdps(40):
        for _ in range(100):
            d = int(rng.integers(1, 4))
            k = tuple(int(v) for v in rng.integers(0, 5, size=d))
            eps = float(rng.uniform(0.01, 4.0))
            x = rng.uniform(-3, 3, size=d)
            ref = float(mpmath.diff(_mp_gaussian(mpmath.mpf(eps)), tuple(mpmath.mpf(v) for v in x), k))
            if ref != 0.0:
                fd_worst = max(fd_worst, abs(kernel_eval(KernelSpec(eps, MultiIndex(k)), x) - ref) / abs(ref))
    fourier_worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 3))
        k = tuple(int(v) for v in rng.integers(0, 5, size=d))
        eps = float(rng.uniform(0.01, 4.0))
        x = rng.uniform(-3, 3, size=d) * math.sqrt(eps)
        spec = KernelSpec(eps, MultiIndex(k))
        v = kernel_eval(spec, x)
        fourier_worst = max(fourier_worst, abs(kernel_eval_fourier(spec, x) - v) / max(1.0, abs(v)))
    ok = fd_worst < 1e-6 and fourier_worst < 1e-8
    verdict(acceptance_log, 4, ok, f"finite-difference rel err max={fd_worst:.1e}; Fourier err max={fourier_worst:.1e}")


def test_criterion_05_sampler_law(acceptance_log):
    grid = TimeGrid(1.0, 32)
    worst = 0.0
    cut = familywise_threshold(32 + 32 * 33 // 2)
    for sampler in ("cholesky", "circulant"):
        for h in (0.2, 0.5, 0.75):
            x = sample_values(sampler, h, grid, 10_000, seed=11)
            mean_z, cov_z = moment_zscores(x, fbm_covariance(h, grid.times[:, None], grid.times[None, :]))
            worst = max(worst, np.abs(mean_z).max(), np.abs(cov_z).max())
    grid64 = TimeGrid(1.0, 64)
    two_cut = familywise_threshold(64 + 64 * 65 // 2)
    two_worst = 0.0
    for h in (0.2, 0.5, 0.75):
        mz, cz = two_sample_zscores(
            sample_values("cholesky", h, grid64, 10_000, seed=101),
            sample_values("circulant", h, grid64, 10_000, seed=202),
        )
        two_worst = max(two_worst, np.abs(mz).max(), np.abs(cz).max())
    ok = worst < cut and two_worst < two_cut
    verdict(acceptance_log, 5, ok,
            f"law max|z|={worst:.2f} (cut {cut:.2f}); two-sample max|z|={two_worst:.2f} (cut {two_cut:.2f})")


def test_criterion_06_divergent_scaling(acceptance_log):
    hurst, k = HurstPair(0.9, 0.9), MultiIndex((2, 0))
    a = blowup_rate(hurst, k)
    eps = [2.0**-j for j in range(3, 11)]
    oracle_slope = difference_slope(eps, [first_moment_mollified(hurst, k, 1.0, e).value for e in eps])
    p = ExperimentParams(hurst, k, T=1.0, epsilon=2.0**-3, M=128, N=6000, seed=2026)
    sweep = eps_cauchy_sweep(p, 3)
    oracle_err = abs(oracle_slope / -a - 1)
    mc_err = abs(sweep.slope / -a - 1)
    ok = oracle_err < 0.02 and mc_err < 0.10
    verdict(acceptance_log, 6, ok,
            f"-a={-a:.4f} oracle slope={oracle_slope:.4f} ({oracle_err:.1%}); mc slope={sweep.slope:.4f} ({mc_err:.1%})")


def test_criterion_07_cauchy_gaps(acceptance_log):
    p = ExperimentParams(HurstPair(0.5, 0.5), MultiIndex((0,)), T=1.0, epsilon=0.5, M=256, N=2000, seed=7)
    sweep = eps_cauchy_sweep(p, 3)
    z = sweep.gap_decrease_z()
    ok = all(v > 3 for v in z)
    gaps = ", ".join(f"{g:.3g}" for g in sweep.cauchy_gaps)
    verdict(acceptance_log, 7, ok, f"gaps=[{gaps}] decrease z=[{', '.join(f'{v:.1f}' for v in z)}]")


def test_criterion_08_matrix_suite(acceptance_log):
    summary = bounds.fuzz_summary(bounds.fuzz_campaign(seed=8, cases=1000))
    brown = bounds.brownian_exactness(seed=8, cases=1000)
    g_min = min(bounds.g_matrix_min_eig(n) for n in range(1, 65))
    violations = summary["eig_interp_violations"] + summary["det_interp_violations"] + summary["pd_violations"]
    ok = (
        violations == 0
        and brown["det_ratio_max_dev"] <= 1e-10
        and brown["lnd_ratio_max_shortfall"] <= 1e-10
        and g_min >= 0.2
    )
    verdict(acceptance_log, 8, ok,
            f"violations={violations}/1000 brownian dev={brown['det_ratio_max_dev']:.1e}/"
            f"{brown['lnd_ratio_max_shortfall']:.1e} g_min={g_min:.4f} lnd_ratio_min={summary['lnd_ratio_min']:.3f}")


def test_criterion_09_dirichlet(acceptance_log):
    rng = np.random.default_rng(9)
    cases = [(-0.5, -0.5)] + [tuple(rng.uniform(-0.6, 1.5, size=n)) for n in (2, 3, 2, 3)]
    worst = 0.0
    for i, a in enumerate(cases):
        est = simplex_mc(a, 1.0, 10_000_000, seed=100 + i)
        worst = max(worst, abs(est / dirichlet_simplex_integral(a, 1.0) - 1))
    pi_err = abs(dirichlet_simplex_integral((-0.5, -0.5), 1.0) / math.pi - 1)
    verdict(acceptance_log, 9, worst < 0.01 and pi_err < 0.01, f"max rel MC err={worst:.2%} (5 cases, 1e7 points); pi case err={pi_err:.1e}")


RUNS = [
    ["check-condition"],
    ["simulate", "--M", "32", "--N", "8", "--d", "2"],
    ["estimate", "--M", "32", "--N", "200"],
    ["sweep-eps", "--M", "32", "--N", "200"],
    ["moments", "--M", "32", "--N", "200"],
    ["oracle", "--h1", "0.9", "--h2", "0.9", "--d", "2", "--k", "2,0"],
    ["verify-bounds", "--fuzz-cases", "200"],
]


def test_criterion_10_determinism(acceptance_log, tmp_path):
    differing = []
    for i, argv in enumerate(RUNS):
        dirs = []
        for workers in ("1", "4"):
            out = tmp_path / f"run{i}_w{workers}"
            assert main(argv + ["--seed", "31", "--workers", workers, "--out", str(out)]) == 0
            dirs.append(out)
        names = sorted(p.name for p in dirs[0].iterdir())
        match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
        differing += mismatch + errors
    verdict(acceptance_log, 10, not differing, f"{len(RUNS)} commands, workers 1 vs 4, differing artifacts={differing}")
