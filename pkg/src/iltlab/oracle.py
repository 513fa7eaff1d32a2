"""Ground-truth values: first moments, blow-up rates and simplex integrals.

The first moment of the mollified functional reduces, after integrating the
Gaussian in Fourier space, to

    E[alpha_eps] = (-1)^{|k|/2} c_{k,d} int_0^T int_0^T (eps + t^{2H1} + s^{2H2})^{-(|k|+d)/2} dt ds.

``first_moment_mollified`` returns the nonnegative magnitude ``c_{k,d} * integral``;
``signed_first_moment`` attaches the sign.  The double integral is computed in
coordinates where it is homogeneous at eps = 0: for H1 <= H2 put t = u^{H2/H1},
so the integrand becomes (H2/H1) u^{H2/H1 - 1} (eps + u^{2H2} + s^{2H2})^{-(|k|+d)/2},
and split the domain into dyadic L-shaped shells around the origin.  At eps = 0
consecutive shells differ by the exact factor 2^{-(e+1)}, e the radial exponent.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .model import HurstPair, MultiIndex, ParameterError, existence_condition_value, radial_exponent, kappa1

REL_TOL = 1e-6
EVAL_BUDGET = 10_000_000
DIVERGENT_LEVELS = 16

_GL_LO = np.polynomial.legendre.leggauss(8)
_GL_HI = np.polynomial.legendre.leggauss(16)


class OracleError(RuntimeError):
    """Quadrature failed to converge where convergence was expected."""


@dataclass
class MomentOracleResult:
    value: float  # math.inf when divergent
    converged: bool
    refinement_trace: list[float] = field(default_factory=list)
    tolerance: float = REL_TOL
    evaluations: int = 0

    @property
    def divergent(self) -> bool:
        return not self.converged

    def as_dict(self) -> dict:
        out = {
            "trace": list(self.refinement_trace),
            "tolerance": self.tolerance,
            "evaluations": self.evaluations,
        }
        if self.converged:
            out["value"] = self.value
        else:
            out["divergent"] = True
        return out


def double_factorial_odd(m: int) -> int:
    """(m-1)!! for even m >= 0, with (-1)!! = 1."""
    out = 1
    for j in range(m - 1, 0, -2):
        out *= j
    return out


def c_kd_constant(k: MultiIndex) -> float:
    """(2 pi)^{-d} int |xi_1|^k e^{-|xi|^2/2} d xi = (2 pi)^{-d/2} (k_1 - 1)!!."""
    if not k.is_single_even():
        raise ParameterError(f"c_kd needs k with at most one nonzero entry, and it even; got {k.k}")
    return (2 * math.pi) ** (-k.d / 2) * double_factorial_odd(k.order)


def moment_sign(k: MultiIndex) -> int:
    """Sign of E[alpha^(k)]: the Fourier factor i^{|k|} for even |k|."""
    return -1 if k.order % 4 == 2 else 1


class _Integrand:
    """(H2/H1) u^{H2/H1-1} (eps + u^{2H2} + s^{2H2})^{-p} with H1 <= H2."""

    def __init__(self, lo: float, hi: float, power: float, eps: float):
        self.ratio = hi / lo
        self.two_h = 2 * hi
        self.power = power
        self.eps = eps
        self.evaluations = 0

    def __call__(self, u: np.ndarray, s: np.ndarray) -> np.ndarray:
        self.evaluations += u.size
        base = self.eps + u**self.two_h + s**self.two_h
        return self.ratio * u ** (self.ratio - 1) * base ** (-self.power)


GRADING_POWER = 4


def _axis_nodes(a: float, b: float, rule):
    x, w = rule
    z = 0.5 * (x + 1.0)
    if a == 0.0:
        # v = b z^4 flattens the algebraic singularities sitting on the axes
        q = GRADING_POWER
        return b * z**q, 0.5 * w * b * q * z ** (q - 1)
    return a + (b - a) * z, 0.5 * w * (b - a)


def _tensor_rule(f, a, b, c, d, rule):
    u, wu = _axis_nodes(a, b, rule)
    s, ws = _axis_nodes(c, d, rule)
    U, S = np.meshgrid(u, s, indexing="ij")
    return float(wu @ f(U, S) @ ws)


def _cell(f, a, b, c, d):
    hi = _tensor_rule(f, a, b, c, d, _GL_HI)
    lo = _tensor_rule(f, a, b, c, d, _GL_LO)
    return hi, abs(hi - lo)


def adaptive_rectangle(f, rects, rel_tol: float, budget: int, abs_tol: float = 0.0):
    """Globally adaptive tensor Gauss-Legendre cubature over a union of rectangles.

    Cells are split into quarters in order of decreasing error estimate until
    the summed estimate falls below ``max(rel_tol * |total|, abs_tol)``.  Sums are taken with
    ``math.fsum`` over cells in a canonical order so the result does not depend
    on the refinement history.
    """
    heap = []
    counter = 0
    for r in rects:
        val, err = _cell(f, *r)
        heap.append((-err, counter, r, val))
        counter += 1
    heapq.heapify(heap)
    while True:
        total = math.fsum(item[3] for item in heap)
        err = math.fsum(-item[0] for item in heap)
        if err <= max(rel_tol * abs(total), abs_tol) or err == 0.0:
            return total, err
        if f.evaluations > budget:
            raise OracleError(f"cubature budget of {budget} evaluations exhausted (error {err:.3e})")
        _, _, (a, b, c, d), _ = heapq.heappop(heap)
        mu, ms = 0.5 * (a + b), 0.5 * (c + d)
        for r in ((a, mu, c, ms), (mu, b, c, ms), (a, mu, ms, d), (mu, b, ms, d)):
            val, e = _cell(f, *r)
            heapq.heappush(heap, (-e, counter, r, val))
            counter += 1


def _shell(f, r: float, rel_tol: float, budget: int, abs_tol: float) -> float:
    h = 0.5 * r
    rects = [(h, r, 0.0, h), (0.0, h, h, r), (h, r, h, r)]
    return adaptive_rectangle(f, rects, rel_tol, budget, abs_tol)[0]


def first_moment_mollified(
    hurst: HurstPair,
    k: MultiIndex,
    T: float,
    epsilon: float,
    rel_tol: float = REL_TOL,
    budget: int = EVAL_BUDGET,
    max_levels: int = 200,
) -> MomentOracleResult:
    """c_{k,d} * int_0^T int_0^T (eps + t^{2H1} + s^{2H2})^{-(|k|+d)/2} dt ds.

    With eps = 0 and radial exponent <= -1 the integral diverges; the result
    is then ``converged=False`` with a trace of growing partial sums over
    ``DIVERGENT_LEVELS`` dyadic shells.
    """
    if epsilon < 0:
        raise ParameterError(f"epsilon must be nonnegative, got {epsilon!r}")
    if not T > 0:
        raise ParameterError(f"T must be positive, got {T!r}")
    const = c_kd_constant(k)
    lo, hi = sorted((hurst.h1, hurst.h2))
    f = _Integrand(lo, hi, (k.order + k.d) / 2, epsilon)
    U, S = T ** (lo / hi), T
    R = min(U, S)
    local_tol = rel_tol * 1e-2

    outer = 0.0
    if U > R:
        outer = adaptive_rectangle(f, [(R, U, 0.0, S)], local_tol, budget)[0]
    elif S > R:
        outer = adaptive_rectangle(f, [(0.0, U, R, S)], local_tol, budget)[0]

    diverges = epsilon == 0 and radial_exponent(hurst, k) <= -1
    shells: list[float] = []
    trace: list[float] = []
    for level in range(DIVERGENT_LEVELS if diverges else max_levels):
        partial = math.fsum([outer, *shells])
        shells.append(_shell(f, R * 2.0**-level, local_tol, budget, local_tol * partial))
        partial = math.fsum([outer, *shells])
        if diverges:
            trace.append(const * partial)
            continue
        tail = 0.0
        if len(shells) >= 2 and shells[-2] > 0:
            q = shells[-1] / shells[-2]
            if not 0 <= q < 1:
                trace.append(const * partial)
                continue
            tail = shells[-1] * q / (1 - q)
        estimate = const * (partial + tail)
        trace.append(estimate)
        if (
            len(trace) >= 2
            and abs(trace[-1] - trace[-2]) < rel_tol * abs(trace[-1])
            and tail < rel_tol * partial
        ):
            return MomentOracleResult(estimate, True, trace, rel_tol, f.evaluations)
        if f.evaluations > budget:
            break
    if diverges:
        return MomentOracleResult(math.inf, False, trace, rel_tol, f.evaluations)
    raise OracleError(
        f"first-moment quadrature did not converge within {len(trace)} levels "
        f"({f.evaluations} evaluations); last values {trace[-3:]}"
    )


def signed_first_moment(hurst: HurstPair, k: MultiIndex, T: float, epsilon: float, **kw) -> float:
    """E[alpha^(k)_eps(0)] including the sign (-1)^{|k|/2}."""
    res = first_moment_mollified(hurst, k, T, epsilon, **kw)
    return moment_sign(k) * res.value


def blowup_rate(hurst: HurstPair, k: MultiIndex) -> float:
    """a in E[alpha_eps] ~ eps^{-a} when the existence condition fails:
    a = (|k|+d)/2 - (H1+H2)/(2 H1 H2)."""
    a = (k.order + k.d) / 2 - (hurst.h1 + hurst.h2) / (2 * hurst.h1 * hurst.h2)
    if not a > 0:
        raise ParameterError(
            f"blow-up rate only defined when the existence condition fails (a = {a:.6g} <= 0)"
        )
    return a


def dirichlet_simplex_integral(exponents, T: float = 1.0) -> float:
    """int over 0 < t_1 < ... < t_n < T of prod (t_j - t_{j-1})^{a_j}, t_0 = 0.

    Equals T^{n+A} prod Gamma(a_j + 1) / Gamma(n + A + 1) with A = sum a_j.
    """
    a = np.asarray(exponents, dtype=float).reshape(-1)
    if a.size == 0:
        raise ParameterError("need at least one exponent")
    if np.any(a <= -1):
        raise ParameterError(f"simplex integral diverges for exponents <= -1: {a.tolist()}")
    if not T > 0:
        raise ParameterError(f"T must be positive, got {T!r}")
    n, A = a.size, float(a.sum())
    log_val = (n + A) * math.log(T) + float(special.gammaln(a + 1).sum()) - float(special.gammaln(n + A + 1))
    return math.exp(log_val)


def simplex_exponents(hurst: HurstPair, k: MultiIndex, n: int, j: int = 0) -> np.ndarray:
    """Exponents of the simplex integral bounding the n-th moment; slot j carries the extra |k| term."""
    w = hurst.harmonic
    a = np.full(n, -w * k.d)
    a[j] -= w * k.order
    return a


def gamma_bound_check(hurst: HurstPair, k: MultiIndex, T: float, n: int) -> tuple[float, float]:
    """Exact simplex integral (lhs) against C^n T^{n kappa1 - m} / Gamma(n kappa1 - m + 1) (rhs).

    m = H1 H2 |k|/(H1+H2); the constant C is fitted so both sides agree at n = 1.
    """
    if not 1 <= n <= 8:
        raise ParameterError(f"n must be in [1, 8], got {n}")
    if existence_condition_value(hurst, k) >= 1:
        raise ParameterError("simplex exponents diverge: existence condition fails")
    kap = kappa1(hurst, k.d)
    m = hurst.harmonic * k.order

    def shape(nn):
        return T ** (nn * kap - m) / math.gamma(nn * kap - m + 1)

    lhs1 = dirichlet_simplex_integral(simplex_exponents(hurst, k, 1), T)
    C = lhs1 / shape(1)
    lhs = dirichlet_simplex_integral(simplex_exponents(hurst, k, n), T)
    return lhs, C**n * shape(n)
