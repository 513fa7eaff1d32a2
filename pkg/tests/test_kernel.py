import math

import mpmath
import numpy as np
import pytest

from iltlab.kernel import (
    KernelSpec,
    QuadratureError,
    hermite,
    kernel_eval,
    kernel_eval_fourier,
)
from iltlab.model import MultiIndex, ParameterError

SQ2PI = 1 / math.sqrt(2 * math.pi)


@pytest.mark.parametrize("m,x,expected", [(0, 3.7, 1.0), (2, 2.0, 3.0), (3, 1.0, -2.0), (4, 0.0, 3.0)])
def test_hermite_examples(m, x, expected):
    assert hermite(m, x) == pytest.approx(expected, abs=1e-14)


def test_hermite_recurrence_and_guard():
    x = np.linspace(-3, 3, 13)
    for m in range(1, 20):
        assert np.allclose(hermite(m + 1, x), x * hermite(m, x) - m * hermite(m - 1, x), rtol=1e-12, atol=1e-9)
    with pytest.raises(ParameterError):
        hermite(21, 0.0)


def test_kernel_examples():
    assert kernel_eval(KernelSpec(1.0, MultiIndex((0,))), [0.0]) == pytest.approx(SQ2PI, rel=1e-14)
    assert kernel_eval(KernelSpec(1.0, MultiIndex((2,))), [0.0]) == pytest.approx(-SQ2PI, rel=1e-14)
    # -(x/eps) f_eps(x) = -(4/pi) e^{-1/2} = -0.7722588... (-0.77228 is off in the fifth digit)
    v = kernel_eval(KernelSpec(0.25, MultiIndex((1, 0))), [0.5, 0.0])
    assert v == pytest.approx(-4 / math.pi * math.exp(-0.5), rel=1e-14)
    assert v == pytest.approx(-0.77228, rel=5e-5)


def test_mixed_first_derivative_matches_central_difference():
    f = lambda a: kernel_eval(KernelSpec(0.25, MultiIndex((0, 0))), [a, 0.0])
    d = lambda s: (f(0.5 + s) - f(0.5 - s)) / (2 * s)
    fd = (4 * d(5e-4) - d(1e-3)) / 3
    assert kernel_eval(KernelSpec(0.25, MultiIndex((1, 0))), [0.5, 0.0]) == pytest.approx(fd, rel=1e-6)


def _richardson_second_derivative(f, x, h):
    d = lambda s: (f(x + s) - 2 * f(x) + f(x - s)) / (s * s)
    return (4 * d(h / 2) - d(h)) / 3


def test_second_derivative_matches_richardson_fd():
    f = lambda x: kernel_eval(KernelSpec(1.0, MultiIndex((0,))), [x])
    fd = _richardson_second_derivative(f, 0.0, 1e-3)
    assert kernel_eval(KernelSpec(1.0, MultiIndex((2,))), [0.0]) == pytest.approx(fd, rel=1e-6)


def _mp_gaussian(eps):
    def f(*x):
        sq = mpmath.fsum(xi * xi for xi in x)
        return (2 * mpmath.pi * eps) ** (-mpmath.mpf(len(x)) / 2) * mpmath.exp(-sq / (2 * eps))

    return f


def test_matches_high_precision_finite_differences():
    rng = np.random.default_rng(2024)
    worst = 0.0
    with mpmath.workdps(40):
        for _ in range(100):
            d = int(rng.integers(1, 4))
            k = tuple(int(v) for v in rng.integers(0, 5, size=d))
            eps = float(rng.uniform(0.01, 4.0))
            x = rng.uniform(-3, 3, size=d)
            ref = mpmath.diff(_mp_gaussian(mpmath.mpf(eps)), tuple(mpmath.mpf(v) for v in x), k)
            got = kernel_eval(KernelSpec(eps, MultiIndex(k)), x)
            if ref == 0:
                continue
            worst = max(worst, abs(got - float(ref)) / abs(float(ref)))
    assert worst < 1e-6


@pytest.mark.parametrize(
    "eps,k,x",
    [(1.0, (0,), [0.0]), (1.0, (1,), [1.0]), (2.0, (2,), [0.3])],
)
def test_fourier_examples(eps, k, x):
    spec = KernelSpec(eps, MultiIndex(k))
    v = kernel_eval(spec, x)
    assert abs(kernel_eval_fourier(spec, x) - v) <= 1e-8 * max(1.0, abs(v))


def test_fourier_first_derivative_closed_form():
    v = kernel_eval_fourier(KernelSpec(1.0, MultiIndex((1,))), [1.0])
    assert v == pytest.approx(-math.exp(-0.5) * SQ2PI, abs=1e-8)


def test_fourier_consistency_random():
    rng = np.random.default_rng(7)
    for _ in range(60):
        d = int(rng.integers(1, 3))
        k = tuple(int(v) for v in rng.integers(0, 5, size=d))
        eps = float(rng.uniform(0.01, 4.0))
        x = rng.uniform(-3, 3, size=d) * math.sqrt(eps)
        spec = KernelSpec(eps, MultiIndex(k))
        v = kernel_eval(spec, x)
        assert abs(kernel_eval_fourier(spec, x) - v) <= 1e-8 * max(1.0, abs(v))


def test_fourier_admissible_range():
    with pytest.raises(ParameterError):
        kernel_eval_fourier(KernelSpec(1.0, MultiIndex((5,))), [0.0])
    with pytest.raises(ParameterError):
        kernel_eval_fourier(KernelSpec(1.0, MultiIndex((0, 0, 0))), [0.0, 0.0, 0.0])
    assert issubclass(QuadratureError, RuntimeError)


def test_parity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = int(rng.integers(1, 4))
        k = MultiIndex(tuple(int(v) for v in rng.integers(0, 5, size=d)))
        spec = KernelSpec(float(rng.uniform(0.05, 2)), k)
        x = rng.normal(size=d)
        assert kernel_eval(spec, -x) == pytest.approx((-1) ** k.order * kernel_eval(spec, x), rel=1e-13, abs=1e-300)


def test_odd_order_vanishes_at_origin():
    assert kernel_eval(KernelSpec(0.3, MultiIndex((1, 2))), [0.0, 0.0]) == 0.0


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("eps", [0.01, 1.0, 3.0])
def test_normalization(d, eps):
    n = 400
    half = 10 * math.sqrt(eps)
    h = 2 * half / n
    mid = -half + h * (np.arange(n) + 0.5)
    grid = np.stack(np.meshgrid(*([mid] * d), indexing="ij"), axis=-1)
    total = kernel_eval(KernelSpec(eps, MultiIndex.zeros(d)), grid).sum() * h**d
    assert total == pytest.approx(1.0, abs=1e-6)


def test_dimension_mismatch():
    with pytest.raises(ParameterError):
        kernel_eval(KernelSpec(1.0, MultiIndex((0, 0))), [0.0])
    with pytest.raises(ParameterError):
        KernelSpec(0.0, MultiIndex((0,)))


def test_vectorized_matches_pointwise():
    spec = KernelSpec(0.7, MultiIndex((2, 1)))
    pts = np.random.default_rng(0).normal(size=(5, 4, 2))
    batch = kernel_eval(spec, pts)
    assert batch.shape == (5, 4)
    assert batch[3, 2] == kernel_eval(spec, pts[3, 2])
