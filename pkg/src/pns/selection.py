"""Great-versus-small decision rules applied at each pipeline level.

Each rule consumes the residual vectors of the great and the small fit and
decides whether the extra angle parameter of the small subsphere is
justified: a two-sample Kolmogorov-Smirnov test on absolute residuals, an
F test on residual variances, a Gaussian likelihood ratio test on the
residual sums of squares, and a BIC comparison.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "LevelTestResult",
    "ks_two_sample",
    "variance_f_test",
    "lr_test",
    "bic_choice",
    "chi2_cdf",
    "f_cdf",
    "f_quantile",
    "kolmogorov_cdf",
]


@dataclass(frozen=True)
class LevelTestResult:
    test: str
    statistic: float
    p_value: float | None
    chose_small: bool
    n: int
    degenerate: bool = False


# -- distribution utilities -------------------------------------------------

def chi2_cdf(x: float, df: float) -> float:
    """P(X <= x) for a chi-squared variable with df degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 0.0
    return float(special.gammainc(df / 2.0, x / 2.0))


def f_cdf(x: float, df1: float, df2: float) -> float:
    """P(X <= x) for an F variable with (df1, df2) degrees of freedom."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if x <= 0:
        return 0.0
    return float(special.betainc(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2)))


def f_quantile(q: float, df1: float, df2: float) -> float:
    """Inverse F cdf for q in (0, 1)."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie strictly between 0 and 1")
    y = float(special.betaincinv(df1 / 2.0, df2 / 2.0, q))
    return df2 * y / (df1 * (1.0 - y))


def kolmogorov_cdf(x: float) -> float:
    """Cdf of the Kolmogorov distribution (limit of sqrt(n) sup |F_n - F|)."""
    if x <= 0:
        return 0.0
    return float(1.0 - special.kolmogorov(x))


# -- decision rules ----------------------------------------------------------

def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value.

    D is the largest gap between the two empirical cdfs, evaluated on both
    sides of every pooled sample value so ties are handled exactly. The
    p-value uses the Kolmogorov limit at effective size n_a n_b / (n_a + n_b).
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    if min(a.size, b.size) < 8:
        warnings.warn("KS asymptotic p-value is unreliable below n = 8", RuntimeWarning)
    pooled = np.concatenate([a, b])
    cdf_a_hi = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b_hi = np.searchsorted(b, pooled, side="right") / b.size
    cdf_a_lo = np.searchsorted(a, pooled, side="left") / a.size
    cdf_b_lo = np.searchsorted(b, pooled, side="left") / b.size
    d = max(np.abs(cdf_a_hi - cdf_b_hi).max(), np.abs(cdf_a_lo - cdf_b_lo).max())
    n_eff = a.size * b.size / (a.size + b.size)
    p = float(np.clip(special.kolmogorov(np.sqrt(n_eff) * d), 0.0, 1.0))
    return float(d), p


def ks_level_test(res_great, res_small, alpha: float) -> LevelTestResult:
    """KS rule on the absolute residuals of the two fits."""
    d, p = ks_two_sample(np.abs(res_great), np.abs(res_small))
    n = np.asarray(res_great).size
    return LevelTestResult("ks", d, p, chose_small=p < alpha, n=n)


def variance_f_test(res_great, res_small, alpha: float) -> LevelTestResult:
    """One-sided F test of residual variances, great over small."""
    g = np.asarray(res_great, dtype=float).ravel()
    s = np.asarray(res_small, dtype=float).ravel()
    if g.size < 3 or s.size < 3:
        raise ValueError("need at least 3 residuals per fit")
    var_g = g.var(ddof=1)
    var_s = s.var(ddof=1)
    if var_s <= 0.0:
        return LevelTestResult("var", np.inf, 0.0, chose_small=True,
                               n=g.size, degenerate=True)
    f = var_g / var_s
    p = 1.0 - f_cdf(f, g.size - 1, s.size - 1)
    return LevelTestResult("var", float(f), float(p), chose_small=p < alpha, n=g.size)


def lr_test(res_great, res_small, alpha: float) -> LevelTestResult:
    """Gaussian likelihood ratio test: n log(RSS_great / RSS_small) vs chi2(1)."""
    g = np.asarray(res_great, dtype=float).ravel()
    s = np.asarray(res_small, dtype=float).ravel()
    if g.size < 3 or s.size < 3:
        raise ValueError("need at least 3 residuals per fit")
    rss_g = float(g @ g)
    rss_s = float(s @ s)
    if rss_s <= 0.0:
        return LevelTestResult("lr", np.inf, 0.0, chose_small=True,
                               n=g.size, degenerate=True)
    stat = g.size * np.log(rss_g / rss_s)
    p = 1.0 - chi2_cdf(stat, 1)
    return LevelTestResult("lr", float(stat), float(p), chose_small=p < alpha, n=g.size)


def bic_choice(res_great, res_small, m: int) -> LevelTestResult:
    """BIC comparison with m axis parameters, plus one angle for the small fit.

    The recorded statistic is BIC_small - BIC_great (negative favors small).
    """
    g = np.asarray(res_great, dtype=float).ravel()
    s = np.asarray(res_small, dtype=float).ravel()
    n = g.size
    rss_g = float(g @ g)
    rss_s = float(s @ s)
    if rss_s <= 0.0:
        return LevelTestResult("bic", -np.inf, None, chose_small=True,
                               n=n, degenerate=True)
    bic_g = n * np.log(rss_g / n) + m * np.log(n)
    bic_s = n * np.log(rss_s / n) + (m + 1) * np.log(n)
    diff = bic_s - bic_g
    return LevelTestResult("bic", float(diff), None, chose_small=diff < 0.0, n=n)
