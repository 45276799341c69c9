"""Pearson chi-squared and one-way ANOVA without external numerics.

The regularized incomplete gamma and beta functions are evaluated
in-module: power series where they converge fast, modified Lentz
continued fractions elsewhere.  Target accuracy is well beyond the 1e-8
relative error the tests check against direct density integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import VdsAgentError

_ITMAX = 500
_EPS = 1e-15
_TINY = 1e-300


class DegenerateTable(VdsAgentError):
    """The contingency table cannot support a chi-squared test."""


class DegenerateInput(VdsAgentError):
    """The ANOVA groups cannot support an F test."""


def _gamma_series(a: float, x: float) -> float:
    ap = a
    total = 1.0 / a
    delta = total
    for _ in range(_ITMAX):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    # Lentz's method for the continued fraction of Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_p(a: float, x: float) -> float:
    """P(a, x), the regularized lower incomplete gamma function."""
    if a <= 0 or x < 0:
        raise ValueError("require a > 0 and x >= 0")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


def regularized_gamma_q(a: float, x: float) -> float:
    """Q(a, x) = 1 - P(a, x), computed directly in the right tail."""
    if a <= 0 or x < 0:
        raise ValueError("require a > 0 and x >= 0")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def _beta_cf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _ITMAX + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def regularized_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), the regularized incomplete beta function."""
    if a <= 0 or b <= 0:
        raise ValueError("require a > 0 and b > 0")
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    front = math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                     + a * math.log(x) + b * math.log(1.0 - x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def chi_squared_cdf(x: float, df: int) -> float:
    if df < 1:
        raise ValueError("df must be >= 1")
    if x < 0:
        return 0.0
    return regularized_gamma_p(df / 2.0, x / 2.0)


def f_cdf(x: float, df1: int, df2: int) -> float:
    if df1 < 1 or df2 < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if x <= 0:
        return 0.0
    return regularized_beta(df1 / 2.0, df2 / 2.0,
                            df1 * x / (df1 * x + df2))


@dataclass(frozen=True)
class ChiSquaredResult:
    statistic: float
    df: int
    p_value: float


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float


def chi_squared_test(table: Sequence[Sequence[float]]) -> ChiSquaredResult:
    """Pearson chi-squared test of independence on a g x c count table.

    Expected counts come from the marginals; cells whose expected count
    is zero contribute zero to the statistic.
    """
    rows = [list(r) for r in table]
    if len(rows) < 2:
        raise DegenerateTable("need at least two groups")
    width = len(rows[0])
    if width < 2 or any(len(r) != width for r in rows):
        raise DegenerateTable("rows must share a width of at least two")
    for r in rows:
        for cell in r:
            if cell < 0:
                raise DegenerateTable("counts must be non-negative")
    row_totals = [sum(r) for r in rows]
    if any(t == 0 for t in row_totals):
        raise DegenerateTable("a group has zero observations")
    col_totals = [sum(r[j] for r in rows) for j in range(width)]
    grand = sum(row_totals)
    statistic = 0.0
    for i, r in enumerate(rows):
        for j, observed in enumerate(r):
            expected = row_totals[i] * col_totals[j] / grand
            if expected == 0:
                continue
            statistic += (observed - expected) ** 2 / expected
    df = (len(rows) - 1) * (width - 1)
    p_value = 1.0 if statistic == 0 else regularized_gamma_q(df / 2.0,
                                                             statistic / 2.0)
    return ChiSquaredResult(statistic=statistic, df=df, p_value=p_value)


def anova_test(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """One-way ANOVA across g >= 2 groups of observations.

    Conventions: all values identical everywhere -> F = 0, p = 1; zero
    within-group variance with nonzero between -> F = inf, p = 0.
    """
    data = [list(g) for g in groups]
    if len(data) < 2:
        raise DegenerateInput("need at least two groups")
    if any(not g for g in data):
        raise DegenerateInput("every group needs at least one value")
    n_total = sum(len(g) for g in data)
    df_between = len(data) - 1
    df_within = n_total - len(data)
    if df_within < 1:
        raise DegenerateInput("need more observations than groups")
    grand = sum(sum(g) for g in data) / n_total
    ss_between = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in data)
    ss_within = sum((x - sum(g) / len(g)) ** 2 for g in data for x in g)
    if ss_within == 0:
        if ss_between == 0:
            return AnovaResult(0.0, df_between, df_within, 1.0)
        return AnovaResult(math.inf, df_between, df_within, 0.0)
    f_stat = (ss_between / df_between) / (ss_within / df_within)
    p_value = regularized_beta(df_within / 2.0, df_between / 2.0,
                               df_within / (df_within + df_between * f_stat))
    return AnovaResult(f_stat=f_stat, df_between=df_between,
                       df_within=df_within, p_value=p_value)
