"""Gaussian mollifier f_eps and its mixed partial derivatives.

The production path is the closed Hermite form

    d^k f_eps(x) = f_eps(x) * prod_i (-1)^{k_i} eps^{-k_i/2} He_{k_i}(x_i / sqrt(eps)),

with He_m the probabilists' Hermite polynomials.  ``kernel_eval_fourier``
evaluates the Fourier integral representation directly and exists only as an
independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .model import MultiIndex, ParameterError

HERMITE_MAX_ORDER = 20
FOURIER_TOL = 1e-8


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    epsilon: float
    k: MultiIndex

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon!r}")
        if not isinstance(self.k, MultiIndex):
            object.__setattr__(self, "k", MultiIndex(tuple(self.k)))

    @property
    def d(self) -> int:
        return self.k.d


def hermite(m: int, x):
    """Probabilists' Hermite polynomial He_m by forward recurrence."""
    if m < 0 or m > HERMITE_MAX_ORDER:
        raise ParameterError(f"Hermite order must be in [0, {HERMITE_MAX_ORDER}], got {m}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if m == 0:
        return prev if prev.ndim else float(prev)
    cur = x.copy()
    for j in range(1, m):
        prev, cur = cur, x * cur - j * prev
    return cur if cur.ndim else float(cur)


def kernel_eval(spec: KernelSpec, x):
    """Evaluate d^k f_eps at ``x``; the last axis of ``x`` holds the d coordinates."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != spec.d:
        raise ParameterError(f"point dimension {x.shape[-1:] or ()} does not match d={spec.d}")
    eps = spec.epsilon
    sq = np.sum(x * x, axis=-1)
    out = (2 * math.pi * eps) ** (-spec.d / 2) * np.exp(-sq / (2 * eps))
    root = math.sqrt(eps)
    for i, ki in enumerate(spec.k.k):
        if ki:
            out = out * ((-1) ** ki * root ** (-ki)) * hermite(ki, x[..., i] / root)
    return out if np.ndim(out) else float(out)


def _fourier_1d(eps: float, m: int, x: float) -> float:
    # (1/2pi) int (ip)^m e^{ipx} e^{-eps p^2/2} dp with p = q/sqrt(eps), folded onto q >= 0
    y = x / math.sqrt(eps)
    if m % 2 == 0:
        sign, weight = (-1) ** (m // 2), "cos"
    else:
        sign, weight = (-1) ** ((m + 1) // 2), "sin"
    # q^m e^{-q^2/2} < 1e-30 beyond q = 14 for m <= 4
    value, err, *_ = integrate.quad(
        lambda q: q**m * math.exp(-q * q / 2), 0.0, 14.0,
        weight=weight, wvar=y, epsabs=1e-14, epsrel=1e-13, limit=500, full_output=1,
    )
    if err > FOURIER_TOL * 1e-2 * max(1.0, abs(value)):
        raise QuadratureError(f"Fourier quadrature error estimate {err:.2e} exceeds tolerance")
    return sign * value / math.pi * eps ** (-(m + 1) / 2)


def kernel_eval_fourier(spec: KernelSpec, x) -> float:
    """Slow cross-check: the Fourier-integral form, one 1D quadrature per coordinate."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != spec.d:
        raise ParameterError(f"point dimension {x.size} does not match d={spec.d}")
    if spec.d > 2 or max(spec.k.k) > 4:
        raise ParameterError("Fourier cross-check supports d <= 2 and k_i <= 4 only")
    out = 1.0
    for ki, xi in zip(spec.k.k, x):
        out *= _fourier_1d(spec.epsilon, ki, float(xi))
    return out
