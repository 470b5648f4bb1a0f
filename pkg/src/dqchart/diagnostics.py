"""Assumption checks run before charting.

* Mardia's multivariate skewness and kurtosis (normality of daily means),
* Bartlett's test of sphericity (are the signs correlated at all?),
* sample autocorrelation of each daily-mean series.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Iterable

import numpy as np
from scipy import stats

from .ingest import StudyDataset

__all__ = ["TestResult", "AcfResult", "mardia_test", "bartlett_sphericity", "acf",
           "daily_mean_rows"]


@dataclass(frozen=True)
class TestResult:
    name: str
    statistics: dict
    p_values: dict
    level: float
    passed: bool
    n: int
    extra: dict = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    values: np.ndarray
    band: float
    n: int

    def outside_band(self) -> np.ndarray:
        """Lags >= 1 whose |acf| exceeds the 95% white-noise band."""
        return self.lags[1:][np.abs(self.values[1:]) > self.band]


def _as_rows(rows) -> np.ndarray:
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if not np.all(np.isfinite(x)):
        raise ValueError("rows must be complete and finite")
    return x


def mardia_test(rows, level: float = 0.05) -> TestResult:
    """Mardia's multivariate skewness and kurtosis tests.

    Uses the maximum-likelihood covariance (divisor n).  Skewness is referred
    to chi-square with p(p+1)(p+2)/6 degrees of freedom, kurtosis to the
    standard normal (two-sided).  ``passed`` means normality is not rejected
    by either component at ``level``.
    """
    x = _as_rows(rows)
    n, p = x.shape
    if n < p + 2:
        raise ValueError(f"Mardia's test needs at least p + 2 = {p + 2} rows, got {n}")
    xc = x - x.mean(axis=0)
    s = xc.T @ xc / n
    evals = np.linalg.eigvalsh(s)
    if not evals[0] > 1e-12 * max(evals[-1], 1e-300):
        raise np.linalg.LinAlgError("sample covariance is singular")
    # whiten, then sum_ij (y_i . y_j)^3 = sum_abc (sum_i y_ia y_ib y_ic)^2 avoids the n x n matrix
    y = np.linalg.solve(np.linalg.cholesky(s), xc.T).T
    m3 = np.einsum("ia,ib,ic->abc", y, y, y)
    b1 = float(np.sum(m3 ** 2) / n ** 2)
    b2 = float(np.mean(np.sum(y ** 2, axis=1) ** 2))
    skew_stat = n * b1 / 6.0
    df = p * (p + 1) * (p + 2) / 6.0
    kurt_z = (b2 - p * (p + 2)) / np.sqrt(8.0 * p * (p + 2) / n)
    p_skew = float(stats.chi2.sf(skew_stat, df))
    p_kurt = float(2.0 * stats.norm.sf(abs(kurt_z)))
    return TestResult(
        "mardia",
        {"b1p": b1, "b2p": b2, "skewness": skew_stat, "kurtosis_z": float(kurt_z)},
        {"skewness": p_skew, "kurtosis": p_kurt},
        level,
        p_skew >= level and p_kurt >= level,
        n,
        {"df_skewness": df},
    )


def bartlett_sphericity(corr, n: int, level: float = 0.05) -> TestResult:
    """Bartlett's test that a correlation matrix is the identity.

    ``passed`` means sphericity is rejected, i.e. the signs are correlated
    and a multivariate chart is warranted.
    """
    r = np.asarray(corr, dtype=float)
    p = r.shape[0]
    if r.shape != (p, p) or not np.allclose(r, r.T):
        raise ValueError("correlation matrix must be square and symmetric")
    if n <= p:
        raise ValueError("sample size must exceed the dimension")
    sign, logdet = np.linalg.slogdet(r)
    if sign <= 0 or np.linalg.eigvalsh(r)[0] <= 0:
        raise np.linalg.LinAlgError("correlation matrix is not positive definite")
    stat = -(n - 1 - (2 * p + 5) / 6.0) * logdet
    stat = max(float(stat), 0.0)
    df = p * (p - 1) / 2.0
    pval = float(stats.chi2.sf(stat, df)) if df > 0 else 1.0
    return TestResult("bartlett_sphericity", {"chi2": stat}, {"chi2": pval}, level,
                      pval < level, n, {"df": df})


def cov_to_corr(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    d = np.sqrt(np.diag(sigma))
    corr = sigma / np.outer(d, d)
    np.fill_diagonal(corr, 1.0)
    return corr


def acf(series, max_lag: int = 20) -> AcfResult:
    """Sample autocorrelations of a series with gaps.

    Missing entries (None or NaN) are dropped and the remaining points are
    treated as consecutive.  The band is +-1.96 / sqrt(N).
    """
    vals = np.array([np.nan if v is None else v for v in series], dtype=float)
    x = vals[np.isfinite(vals)]
    n = x.size
    if n < 10:
        raise ValueError(f"acf needs at least 10 defined points, got {n}")
    max_lag = min(int(max_lag), n - 1)
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        raise ValueError("zero-variance series")
    values = np.array([1.0] + [float(xc[:-k] @ xc[k:]) / denom for k in range(1, max_lag + 1)])
    return AcfResult(np.arange(max_lag + 1), values, 1.96 / np.sqrt(n), n)


def daily_mean_rows(data: StudyDataset, days: Iterable[date] | None = None):
    """Daily mean vectors for days on which every sign was measured.

    Returns ``(days_used, rows)``.
    """
    days = data.days if days is None else sorted(days)
    used, rows = [], []
    for day in days:
        vec = []
        for s in data.signs:
            vals = data.day_values(day, s)
            if not vals:
                break
            vec.append(float(np.mean(list(vals.values()))))
        else:
            used.append(day)
            rows.append(vec)
    return used, np.array(rows, dtype=float).reshape(len(rows), data.p)
