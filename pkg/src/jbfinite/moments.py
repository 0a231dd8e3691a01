"""Exact moment statistics behind the Jarque-Bera normality test.

Central moments use the population convention (divisor N throughout, never
N-1).  With ``m_i`` the i-th central moment, the sample skewness and
kurtosis are

    sqrt(b1) = m3 / m2^(3/2)        b2 = m4 / m2^2

and the omnibus statistic combines them against their asymptotic null
moments (variance 6/N for skewness, mean 3 and variance 24/N for kurtosis).
The adjusted variant replaces those asymptotic values with the exact
finite-sample moments of skewness and kurtosis under normality:

    c1 = var(sqrt(b1)) = 6(N-2) / ((N+1)(N+3))
    c2 = E(b2)         = 3(N-1) / (N+1)
    c3 = var(b2)       = 24 N (N-2)(N-3) / ((N+1)^2 (N+3)(N+5))

Both statistics converge to a chi-squared law with two degrees of freedom;
the closed forms of that limit live here as well.

Every sum is evaluated with :func:`math.fsum` (exactly rounded), so all
statistics are invariant, bit for bit, under permutation of the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

__all__ = [
    "Kind",
    "DegenerateSampleError",
    "FiniteSampleConstants",
    "central_moment",
    "skewness",
    "kurtosis",
    "lm_statistic",
    "finite_constants",
    "alm_statistic",
    "chi2_cdf_2df",
    "chi2_quantile_2df",
]


class Kind(str, Enum):
    """The two statistic variants every table, fit and p-value is tagged with."""

    LM = "lm"
    ALM = "alm"


class DegenerateSampleError(ValueError):
    """Sample variance is zero; moment-ratio statistics are undefined."""


def _as_floats(values: Iterable[float]) -> list[float]:
    out = [float(v) for v in values]
    if not out:
        raise ValueError("empty sample")
    return out


def central_moment(values: Sequence[float], order: int) -> float:
    """i-th central moment with divisor N:  sum((x - mean)^i) / N."""
    if order < 1:
        raise ValueError("moment order must be a positive integer")
    xs = _as_floats(values)
    n = len(xs)
    mean = math.fsum(xs) / n
    return math.fsum((x - mean) ** order for x in xs) / n


def _moment_ratios(values: Sequence[float]) -> tuple[int, float, float]:
    """Return (n, sqrt_b1, b2) or raise for degenerate/too-small samples."""
    xs = _as_floats(values)
    n = len(xs)
    if n < 2:
        raise ValueError("sample must contain at least 2 observations")
    mean = math.fsum(xs) / n
    m2 = math.fsum((x - mean) ** 2 for x in xs) / n
    if m2 == 0.0:
        raise DegenerateSampleError("degenerate sample: zero variance")
    m3 = math.fsum((x - mean) ** 3 for x in xs) / n
    m4 = math.fsum((x - mean) ** 4 for x in xs) / n
    sqrt_b1 = m3 / (m2 * math.sqrt(m2))
    b2 = m4 / (m2 * m2)
    return n, sqrt_b1, b2


def skewness(values: Sequence[float]) -> float:
    """Sample skewness sqrt(b1) = m3 / m2^(3/2)."""
    return _moment_ratios(values)[1]


def kurtosis(values: Sequence[float]) -> float:
    """Sample kurtosis b2 = m4 / m2^2 (3 for the normal limit, not excess)."""
    return _moment_ratios(values)[2]


def lm_statistic(values: Sequence[float]) -> float:
    """Jarque-Bera statistic  N * (b1/6 + (b2 - 3)^2 / 24)."""
    n, sqrt_b1, b2 = _moment_ratios(values)
    return n * (sqrt_b1 * sqrt_b1 / 6.0 + (b2 - 3.0) * (b2 - 3.0) / 24.0)


@dataclass(frozen=True)
class FiniteSampleConstants:
    """Exact finite-sample mean/variances of skewness and kurtosis at size n."""

    n: int
    c1: float
    c2: float
    c3: float


def finite_constants(n: int) -> FiniteSampleConstants:
    """Exact (c1, c2, c3) for sample size n; requires n >= 4.

    At n = 3 the (N-3) factor makes c3 vanish and the adjusted statistic
    divides by zero, hence the hard lower bound.
    """
    if n < 4:
        raise ValueError(f"ALM undefined for N < 4 (got N={n})")
    nd = float(n)
    c1 = 6.0 * (nd - 2.0) / ((nd + 1.0) * (nd + 3.0))
    c2 = 3.0 * (nd - 1.0) / (nd + 1.0)
    c3 = 24.0 * nd * (nd - 2.0) * (nd - 3.0) / (
        ((nd + 1.0) * (nd + 1.0)) * ((nd + 3.0) * (nd + 5.0))
    )
    return FiniteSampleConstants(n=n, c1=c1, c2=c2, c3=c3)


def alm_statistic(values: Sequence[float]) -> float:
    """Adjusted statistic  b1/c1 + (b2 - c2)^2 / c3;  requires n >= 4.

    The exact variances c1 and c3 already carry the 1/N scaling (N c1 -> 6,
    N c3 -> 24), so no leading sample-size factor appears: the adjusted
    statistic converges to the same chi-squared(2) law as the plain one.
    """
    n, sqrt_b1, b2 = _moment_ratios(values)
    k = finite_constants(n)
    return sqrt_b1 * sqrt_b1 / k.c1 + (b2 - k.c2) * (b2 - k.c2) / k.c3


def chi2_cdf_2df(x: float) -> float:
    """Distribution function of chi-squared with 2 df: 1 - exp(-x/2).

    Uses expm1 so small x keeps full precision.
    """
    if x < 0:
        raise ValueError("chi-squared statistic must be nonnegative")
    return -math.expm1(-0.5 * x)


def chi2_quantile_2df(p: float) -> float:
    """Quantile of chi-squared with 2 df: -2 ln(1 - p), for p in [0, 1)."""
    if not 0.0 <= p < 1.0:
        raise ValueError("probability must lie in [0, 1)")
    return -2.0 * math.log1p(-p)
