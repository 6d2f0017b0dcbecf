"""Self-contained statistics kernel.

Sample mean/std (n-1 denominator), Pearson correlation with two-sided
p-value, paired two-sided t-test, and the Student-t CDF they need. The
t CDF is evaluated through the regularized incomplete beta function
using the continued-fraction expansion (modified Lentz iteration), good
to well below 1e-10 absolute error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError

_MAX_ITER = 300
_EPS = 1e-15
_FPMIN = 1e-300


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    dof: int
    p_value: float
    mean_diff: float


def mean_std(xs: list[float] | tuple[float, ...]) -> tuple[float, float]:
    """Sample mean and standard deviation (n-1 denominator)."""
    n = len(xs)
    if n < 2:
        raise DataError(f"need at least 2 values for a standard deviation, got {n}")
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return mean, math.sqrt(var)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz method."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    # pick the representation that converges fast
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, dof: int) -> float:
    """CDF of Student's t with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    if t == 0.0:
        return 0.5
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    x = dof / (dof + t * t)
    tail = 0.5 * reg_inc_beta(dof / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


def _two_sided_p(t: float, dof: int) -> float:
    return 2.0 * (1.0 - t_cdf(abs(t), dof))


def pearson(xs, ys) -> tuple[float, float]:
    """Product-moment correlation with a two-sided t-distributed p-value.

    p is computed from t = r*sqrt((n-2)/(1-r^2)) with n-2 degrees of
    freedom; perfectly correlated series get p = 0.
    """
    n = len(xs)
    if n != len(ys):
        raise DataError(f"length mismatch: {n} vs {len(ys)}")
    if n < 3:
        raise DataError(f"need at least 3 pairs, got {n}")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise DataError("constant series: correlation undefined")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if 1.0 - r * r <= 0.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, _two_sided_p(t, n - 2)


def paired_t_test(a, b) -> TTestResult:
    """Two-sided paired t-test on matched samples.

    Zero-variance differences with a nonzero mean are reported as
    t = +/-inf with p = 0 rather than NaN.
    """
    n = len(a)
    if n != len(b):
        raise DataError(f"length mismatch: {n} vs {len(b)}")
    if n < 2:
        raise DataError(f"need at least 2 pairs, got {n}")
    diffs = [x - y for x, y in zip(a, b)]
    mean, std = mean_std(diffs)
    dof = n - 1
    if std == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, dof, 1.0, 0.0)
        t = math.inf if mean > 0 else -math.inf
        return TTestResult(t, dof, 0.0, mean)
    t = mean / (std / math.sqrt(n))
    return TTestResult(t, dof, _two_sided_p(t, dof), mean)
