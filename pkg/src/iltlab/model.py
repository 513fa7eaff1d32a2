"""Parameter types and closed-form scalar functions of (H1, H2, d, k)."""

from __future__ import annotations

from dataclasses import dataclass, field


class ParameterError(ValueError):
    """Raised when a parameter violates its domain constraints."""


@dataclass(frozen=True)
class HurstPair:
    h1: float
    h2: float

    def __post_init__(self):
        for name in ("h1", "h2"):
            h = getattr(self, name)
            if not 0.0 < h < 1.0:
                raise ParameterError(f"{name} must lie strictly inside (0, 1), got {h!r}")

    def swapped(self) -> "HurstPair":
        return HurstPair(self.h2, self.h1)

    @property
    def harmonic(self) -> float:
        """H1*H2/(H1+H2), the scale factor shared by every exponent below."""
        return self.h1 * self.h2 / (self.h1 + self.h2)


@dataclass(frozen=True)
class MultiIndex:
    k: tuple[int, ...]

    def __post_init__(self):
        if any(isinstance(v, bool) or int(v) != v for v in self.k):
            raise ParameterError(f"multi-index entries must be integers, got {self.k}")
        k = tuple(int(v) for v in self.k)
        if len(k) < 1:
            raise ParameterError("multi-index needs at least one coordinate")
        if any(v < 0 for v in k):
            raise ParameterError(f"multi-index entries must be nonnegative, got {k}")
        object.__setattr__(self, "k", k)

    @classmethod
    def zeros(cls, d: int) -> "MultiIndex":
        return cls((0,) * d)

    @property
    def d(self) -> int:
        return len(self.k)

    @property
    def order(self) -> int:
        """|k| = k_1 + ... + k_d."""
        return sum(self.k)

    def is_single_even(self) -> bool:
        """True for k = 0 or k with one nonzero, even entry."""
        nonzero = [v for v in self.k if v]
        return len(nonzero) == 0 or (len(nonzero) == 1 and nonzero[0] % 2 == 0)


@dataclass(frozen=True)
class ExperimentParams:
    hurst: HurstPair
    k: MultiIndex
    T: float = 1.0
    epsilon: float = 0.5
    M: int = 256
    N: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError(f"horizon T must be positive, got {self.T!r}")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon!r}")
        if int(self.M) != self.M or self.M < 1:
            raise ParameterError(f"grid size M must be a positive integer, got {self.M!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"replicate count N must be a positive integer, got {self.N!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def d(self) -> int:
        return self.k.d

    def with_epsilon(self, epsilon: float) -> "ExperimentParams":
        return ExperimentParams(self.hurst, self.k, self.T, epsilon, self.M, self.N, self.seed)


@dataclass(frozen=True)
class ConditionReport:
    """Existence condition and derived exponents for one (H1, H2, k).

    ``exists`` is the strict sufficient condition ``condition_value < 1``.
    Necessity of the condition is only established for k = 0 or k with a
    single nonzero even entry; ``necessity_covered`` records whether this k
    falls in that regime.
    """

    condition_value: float
    exists: bool
    beta: float
    kappa1: float
    radial_exponent: float
    necessity_covered: bool = field(default=True)

    def as_dict(self) -> dict:
        return {
            "condition_value": self.condition_value,
            "exists": self.exists,
            "beta": self.beta,
            "kappa1": self.kappa1,
            "radial_exponent": self.radial_exponent,
            "necessity_covered": self.necessity_covered,
        }


def existence_condition_value(hurst: HurstPair, k: MultiIndex) -> float:
    """H1*H2*(|k|+d)/(H1+H2); the derivative local time exists when this is < 1."""
    return hurst.h1 * hurst.h2 * (k.order + k.d) / (hurst.h1 + hurst.h2)


def beta_exponent(hurst: HurstPair, d: int) -> float:
    """Exponential-integrability exponent (H1+H2)/(2 d H1 H2)."""
    if d < 1:
        raise ParameterError("d must be >= 1")
    return (hurst.h1 + hurst.h2) / (2 * d * hurst.h1 * hurst.h2)


def kappa1(hurst: HurstPair, d: int) -> float:
    """Moment-growth exponent 1 - d H1 H2/(H1+H2)."""
    if d < 1:
        raise ParameterError("d must be >= 1")
    return 1.0 - d * hurst.h1 * hurst.h2 / (hurst.h1 + hurst.h2)


def radial_exponent(hurst: HurstPair, k: MultiIndex) -> float:
    """Power of r in the polar form of the first-moment integral.

    With the pair ordered so that H1 <= H2 this is -(|k|+d) H2 + H2/H1; the
    first moment is finite iff the exponent exceeds -1.
    """
    lo, hi = sorted((hurst.h1, hurst.h2))
    return -(k.order + k.d) * hi + hi / lo


def condition_report(hurst: HurstPair, k: MultiIndex) -> ConditionReport:
    value = existence_condition_value(hurst, k)
    return ConditionReport(
        condition_value=value,
        exists=value < 1.0,
        beta=beta_exponent(hurst, k.d),
        kappa1=kappa1(hurst, k.d),
        radial_exponent=radial_exponent(hurst, k),
        necessity_covered=k.is_single_even(),
    )
