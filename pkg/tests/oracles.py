"""Independent reference computations used by several test modules."""
import numpy as np


def empirical_mean_covariance(sigma, mask, reps, rng, chunk=50_000):
    """Monte-Carlo covariance of daily means for a fixed missingness mask.

    ``mask[k, j]`` says participant k has sign j.  Participants are drawn
    independently from N(0, sigma).  Returns (covariance, standard errors)
    of the per-sign means over ``reps`` simulated days.
    """
    sigma = np.asarray(sigma, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    n, p = mask.shape
    chol = np.linalg.cholesky(sigma)
    counts = mask.sum(axis=0)
    sums = np.zeros((p, p))
    sq = np.zeros((p, p))
    done = 0
    means_all = []
    while done < reps:
        r = min(chunk, reps - done)
        x = rng.standard_normal((r, n, p)) @ chol.T
        means = (x * mask).sum(axis=1) / counts
        means_all.append(means)
        done += r
    means = np.concatenate(means_all)
    centered = means - means.mean(axis=0)
    prods = centered[:, :, None] * centered[:, None, :]
    cov = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / np.sqrt(reps)
    return cov, se


def random_spd(p, rng, scale=1.0):
    a = rng.standard_normal((p, p))
    return scale * (a @ a.T + p * np.eye(p) * 0.2)


def random_mask(n, p, rng, q=0.3):
    """Random participant x sign mask with at least one participant per sign."""
    while True:
        mask = rng.random((n, p)) > q
        if mask.any(axis=0).all():
            return mask


def cofactor_inverse(a):
    """Matrix inverse by the adjugate (cofactor) formula."""
    a = np.asarray(a, dtype=float)
    p = a.shape[0]
    cof = np.empty_like(a)
    for i in range(p):
        for j in range(p):
            minor = np.delete(np.delete(a, i, axis=0), j, axis=1)
            cof[i, j] = (-1) ** (i + j) * (_det(minor) if minor.size else 1.0)
    return cof.T / _det(a)


def _det(a):
    """Determinant by Laplace expansion along the first row."""
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    if n == 2:
        return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return sum((-1) ** j * a[0, j] * _det(np.delete(a[1:], j, axis=1)) for j in range(n))


def chi2_table(signs, alpha=0.02):
    """UclTable holding the exact chi-square limits (known-parameter chart)."""
    from itertools import combinations

    from scipy import stats

    from dqchart.ucl_sim import UclConfig, UclEntry, UclTable

    table = UclTable(tuple(signs), UclConfig(m=19, n_bar=20, alpha=alpha))
    for r in range(1, len(signs) + 1):
        for sub in combinations(signs, r):
            table.entries[sub] = UclEntry(sub, float(stats.chi2.ppf(1 - alpha, r)), 0.0)
    return table


def univariate_ucl(mu, var, m, n_bar, alpha, inner, outer, rng):
    """Independent simulation of a single-sign control limit.

    For one column the OGK pipeline reduces to a Tukey-weighted location, a
    hard-rejection step whose cutoff is relative to the median squared
    distance (so the scale constant cancels) and the mean/variance of the
    retained points.  Returns (mean of quantiles, standard error).
    """
    from scipy import stats

    sd = np.sqrt(var)
    cut = stats.chi2.ppf(0.9, 1) / stats.chi2.ppf(0.5, 1)
    rank = int(np.ceil((1 - alpha) * inner))
    q = np.empty(outer)
    for r in range(outer):
        x = mu + sd * rng.standard_normal(m * n_bar)
        med = np.median(x)
        mad = np.median(np.abs(x - med))
        u = (x - med) / (4.5 * mad)
        w = np.where(np.abs(u) < 1, (1 - u * u) ** 2, 0.0)
        loc = np.sum(w * x) / np.sum(w)
        d = (x - loc) ** 2
        kept = x[d <= cut * np.median(d)]
        center = kept.mean()
        s2 = np.mean((kept - center) ** 2)
        xbar = mu + sd / np.sqrt(n_bar) * rng.standard_normal(inner)
        t2 = n_bar * (xbar - center) ** 2 / s2
        q[r] = np.sort(t2)[rank - 1]
    return q.mean(), q.std(ddof=1) / np.sqrt(outer)
