"""Statistical kernel: Welch t-test, one-way ANOVA, two-sided Fisher exact
test, odds ratio, Holm-Bonferroni correction, Krippendorff's alpha.

Only the procedures the audit pipeline needs, implemented directly. The
t and F tail probabilities go through the regularized incomplete beta
function; Fisher probabilities are accumulated in log space so large
tables stay exact to float precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.special import betainc

from .records import ValidationError


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: float | tuple[float, float]
    p_value: float
    degenerate: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": list(self.df) if isinstance(self.df, tuple) else self.df,
            "p_value": self.p_value,
            "degenerate": self.degenerate,
            "reason": self.reason,
        }


def _degenerate(reason: str, df=float("nan")) -> TestResult:
    return TestResult(
        statistic=float("nan"), df=df, p_value=float("nan"), degenerate=True, reason=reason
    )


def student_t_sf(t: float, df: float) -> float:
    """P(T_df > t). Via the identity with the regularized incomplete beta."""
    if df <= 0:
        raise ValidationError(f"t distribution needs df > 0, got {df}")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    half_tail = 0.5 * float(betainc(df / 2.0, 0.5, x))
    return half_tail if t >= 0 else 1.0 - half_tail


def f_sf(f: float, df1: float, df2: float) -> float:
    """P(F_{df1,df2} > f)."""
    if df1 <= 0 or df2 <= 0:
        raise ValidationError(f"F distribution needs positive df, got ({df1}, {df2})")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = df2 / (df2 + df1 * f)
    return float(betainc(df2 / 2.0, df1 / 2.0, x))


def _mean_var(sample: Sequence[float]) -> tuple[float, float]:
    n = len(sample)
    m = sum(sample) / n
    v = sum((x - m) ** 2 for x in sample) / (n - 1)
    return m, v


def welch_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> TestResult:
    """Unequal-variance two-sample t-test, two-sided.

    t = (mean_a - mean_b) / sqrt(s2_a/n_a + s2_b/n_b), with the
    Welch-Satterthwaite degrees of freedom.
    """
    na, nb = len(sample_a), len(sample_b)
    if na < 2 or nb < 2:
        raise ValidationError("welch_t_test needs at least 2 observations per sample")
    ma, va = _mean_var(sample_a)
    mb, vb = _mean_var(sample_b)
    qa, qb = va / na, vb / nb
    if qa + qb == 0.0:
        return _degenerate("zero variance")
    t = (ma - mb) / math.sqrt(qa + qb)
    # Satterthwaite df, written with normalized weights so tiny variances
    # cannot underflow the quotient.
    ra, rb = qa / (qa + qb), qb / (qa + qb)
    df = 1.0 / (ra * ra / (na - 1) + rb * rb / (nb - 1))
    p = min(1.0, 2.0 * student_t_sf(abs(t), df))
    return TestResult(statistic=t, df=df, p_value=p)


def pooled_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> TestResult:
    """Classic equal-variance two-sample t-test (optional alternative)."""
    na, nb = len(sample_a), len(sample_b)
    if na < 2 or nb < 2:
        raise ValidationError("pooled_t_test needs at least 2 observations per sample")
    ma, va = _mean_var(sample_a)
    mb, vb = _mean_var(sample_b)
    df = na + nb - 2
    sp2 = ((na - 1) * va + (nb - 1) * vb) / df
    if sp2 == 0.0:
        return _degenerate("zero variance", df=float(df))
    t = (ma - mb) / math.sqrt(sp2 * (1 / na + 1 / nb))
    p = min(1.0, 2.0 * student_t_sf(abs(t), df))
    return TestResult(statistic=t, df=float(df), p_value=p)


def one_way_anova(groups: Sequence[Sequence[float]]) -> TestResult:
    """One-way fixed-effects ANOVA: F = (SSB/df1) / (SSW/df2)."""
    if len(groups) < 2:
        raise ValidationError("one_way_anova needs at least 2 groups")
    if any(len(g) < 2 for g in groups):
        raise ValidationError("one_way_anova needs at least 2 observations per group")
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    grand = sum(sum(g) for g in groups) / n_total
    ssb = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
    ssw = sum(sum((x - sum(g) / len(g)) ** 2 for x in g) for g in groups)
    df1, df2 = k - 1, n_total - k
    if ssw == 0.0:
        if ssb == 0.0:
            return _degenerate("zero variance within and between groups", df=(float(df1), float(df2)))
        return TestResult(statistic=float("inf"), df=(float(df1), float(df2)), p_value=0.0)
    f = (ssb / df1) / (ssw / df2)
    return TestResult(statistic=f, df=(float(df1), float(df2)), p_value=f_sf(f, df1, df2))


@dataclass(frozen=True)
class ContingencyTable2x2:
    """Rows = groups, columns = (theme present, theme absent)."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValidationError(f"cell {name} must be a non-negative integer, got {v!r}")
        if self.a + self.b + self.c + self.d == 0:
            raise ValidationError("contingency table is all zeros")

    @property
    def cells(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)


# Relative slack when comparing point probabilities, absorbing float ties.
_FISHER_SLACK = 1e-7


def fisher_exact_two_sided(table: ContingencyTable2x2) -> float:
    """Two-sided Fisher exact p by the point-probability method.

    Sums hypergeometric probabilities of every table with the observed
    margins whose point probability is <= the observed one (with 1e-7
    relative slack). Log-space factorials keep large counts stable.
    """
    a, b, c, d = table.cells
    r1, r2 = a + b, c + d
    c1 = a + c
    n = r1 + r2

    lchoose = math.lgamma

    def log_comb(m: int, k: int) -> float:
        return lchoose(m + 1) - lchoose(k + 1) - lchoose(m - k + 1)

    denom = log_comb(n, c1)

    def log_p(x: int) -> float:
        return log_comb(r1, x) + log_comb(r2, c1 - x) - denom

    lo = max(0, c1 - r2)
    hi = min(r1, c1)
    lp_obs = log_p(a)
    cutoff = lp_obs + math.log1p(_FISHER_SLACK)
    qualifying = [lp for lp in (log_p(x) for x in range(lo, hi + 1)) if lp <= cutoff]
    if len(qualifying) == hi - lo + 1:
        return 1.0  # every table qualifies; the sum is 1 by normalization
    m = max(qualifying)
    total = math.exp(m) * sum(math.exp(lp - m) for lp in qualifying)
    return min(1.0, total)


@dataclass(frozen=True)
class OddsRatioResult:
    value: float
    corrected: bool  # True when the Haldane-Anscombe +0.5 was applied

    def to_dict(self) -> dict:
        return {"value": self.value, "haldane_corrected": self.corrected}


def odds_ratio(table: ContingencyTable2x2) -> OddsRatioResult:
    """(a*d)/(b*c); any zero cell switches to the +0.5-corrected formula."""
    a, b, c, d = table.cells
    if min(a, b, c, d) == 0:
        a2, b2, c2, d2 = a + 0.5, b + 0.5, c + 0.5, d + 0.5
        return OddsRatioResult(value=(a2 * d2) / (b2 * c2), corrected=True)
    return OddsRatioResult(value=(a * d) / (b * c), corrected=False)


def holm_bonferroni(p_values: Sequence[float]) -> list[float]:
    """Step-down Holm adjustment, returned in input order.

    adjusted_(k) = max_{j <= k} min(1, (m - j + 1) * p_(j)) along the
    ascending (stable) sort.
    """
    m = len(p_values)
    for p in p_values:
        if not (0.0 <= p <= 1.0):
            raise ValidationError(f"p-value out of [0, 1]: {p!r}")
    order = sorted(range(m), key=lambda i: p_values[i])
    adjusted = [0.0] * m
    running = 0.0
    for rank, idx in enumerate(order):
        running = max(running, min(1.0, (m - rank) * p_values[idx]))
        adjusted[idx] = running
    return adjusted


@dataclass(frozen=True)
class AlphaResult:
    value: float | None
    degenerate: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return {"value": self.value, "degenerate": self.degenerate, "reason": self.reason}


ALPHA_METRICS = ("nominal", "interval", "ordinal")


def krippendorff_alpha(
    ratings: Sequence[Sequence[float | None]], metric: str = "interval"
) -> AlphaResult:
    """Krippendorff's alpha over an item x rater matrix with missing cells.

    Coincidence-matrix formulation: alpha = 1 - D_o / D_e with
    D_o/D_e = (n - 1) * sum(o_ck * d2_ck) / sum(n_c * n_k * d2_ck).
    Items with fewer than two ratings are ignored; metric is one of
    nominal, interval, ordinal.
    """
    if metric not in ALPHA_METRICS:
        raise ValidationError(f"unknown metric {metric!r}; expected one of {ALPHA_METRICS}")

    units = []
    for row in ratings:
        vals = [float(v) for v in row if v is not None]
        if len(vals) >= 2:
            units.append(vals)
    if len(units) < 2:
        return AlphaResult(None, degenerate=True, reason="fewer than 2 items with 2+ ratings")

    values = sorted({v for unit in units for v in unit})
    index = {v: i for i, v in enumerate(values)}
    k = len(values)
    coincidence = [[0.0] * k for _ in range(k)]
    for unit in units:
        weight = 1.0 / (len(unit) - 1)
        for i, vi in enumerate(unit):
            for j, vj in enumerate(unit):
                if i != j:
                    coincidence[index[vi]][index[vj]] += weight
    marginals = [sum(row) for row in coincidence]
    n = sum(marginals)

    if metric == "nominal":
        def d2(i: int, j: int) -> float:
            return 0.0 if i == j else 1.0
    elif metric == "interval":
        def d2(i: int, j: int) -> float:
            return (values[i] - values[j]) ** 2
    else:  # ordinal
        def d2(i: int, j: int) -> float:
            lo, hi = min(i, j), max(i, j)
            span = sum(marginals[g] for g in range(lo, hi + 1))
            return (span - (marginals[i] + marginals[j]) / 2.0) ** 2

    observed = sum(
        coincidence[i][j] * d2(i, j) for i in range(k) for j in range(k) if i != j
    )
    expected = sum(
        marginals[i] * marginals[j] * d2(i, j) for i in range(k) for j in range(k) if i != j
    )
    if expected == 0.0:
        return AlphaResult(None, degenerate=True, reason="zero expected disagreement")
    alpha = 1.0 - (n - 1.0) * observed / expected
    return AlphaResult(alpha)
