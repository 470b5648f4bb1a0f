"""Orthogonalized Gnanadesikan-Kettenring (OGK) robust location and scatter.

The estimator follows Maronna and Zamar (2002):

1. standardize every column with a robust scale,
2. build the pairwise Gnanadesikan-Kettenring correlation matrix,
3. rotate the data onto its eigenvectors and repeat (two iterations),
4. take robust scales/locations of the final scores and map back.

A single hard-rejection reweighting step at the ``beta`` chi-square quantile
is applied afterwards, with the cutoff calibrated by the median distance.
The reweighted covariance is the plain trimmed covariance (divisor equal to
the number of retained rows, no consistency factor), which is what the
``covOGK``/``CovOgk`` routines in R return.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "DegenerateScaleError",
    "InsufficientDataError",
    "RobustEstimationError",
    "RobustEstimates",
    "complete_case_matrix",
    "tau_location_scale",
    "robust_scale",
    "gk_covariance",
    "jacobi_eigh",
    "ogk_estimate",
    "save_estimates",
    "load_estimates",
]

# Maronna-Zamar tuning constants of the tau-scale
TAU_C1 = 4.5
TAU_C2 = 3.0


class RobustEstimationError(ArithmeticError):
    """OGK estimation could not produce a positive definite result."""


class DegenerateScaleError(RobustEstimationError):
    """Raised when a robust scale is zero (constant or near-constant data)."""


class InsufficientDataError(ValueError):
    """Too few complete Phase I rows to estimate p-dimensional scatter."""


@dataclass(frozen=True)
class RobustEstimates:
    """Phase I location vector and scatter matrix for an ordered sign list."""

    signs: tuple[str, ...]
    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    n_used: int
    scale_estimator: str = "tau2"
    iterations: int = 2
    reweighted: bool = True
    n_retained: int | None = field(default=None, compare=False)

    def __post_init__(self):
        p = len(self.signs)
        mu = np.asarray(self.mu_hat, dtype=float)
        sigma = np.asarray(self.sigma_hat, dtype=float)
        if mu.shape != (p,) or sigma.shape != (p, p):
            raise ValueError(
                f"estimates do not match {p} signs: mu {mu.shape}, sigma {sigma.shape}")
        object.__setattr__(self, "signs", tuple(self.signs))
        object.__setattr__(self, "mu_hat", mu)
        object.__setattr__(self, "sigma_hat", sigma)

    @property
    def p(self) -> int:
        return len(self.signs)

    def restrict(self, signs: Sequence[str]) -> "RobustEstimates":
        """Return the estimates for a subset of signs, in the given order."""
        idx = [self.signs.index(s) for s in signs]
        return RobustEstimates(
            tuple(signs), self.mu_hat[idx], self.sigma_hat[np.ix_(idx, idx)],
            self.n_used, self.scale_estimator, self.iterations, self.reweighted,
            self.n_retained)


def complete_case_matrix(data, phase1_days: Iterable[date]) -> np.ndarray:
    """Stack every participant-day that has all signs observed.

    Rows are ordered by day, then participant id.

    Raises
    ------
    InsufficientDataError
        If fewer than ``p + 2`` complete rows are available.
    """
    days = list(phase1_days)
    known = set(data.days)
    unknown = [d for d in days if d not in known]
    if unknown:
        raise ValueError(f"Phase I days not in the dataset: {unknown[:3]}")
    p = len(data.signs)
    rows = []
    for day in sorted(days):
        for pid in data.participants:
            vec = [data.cells.get((day, s, pid)) for s in data.signs]
            if all(v is not None for v in vec):
                rows.append(vec)
    if len(rows) < p + 2:
        raise InsufficientDataError(
            f"insufficient Phase I data: {len(rows)} complete rows, need at least {p + 2}")
    return np.array(rows, dtype=float)


def _tau_expectation(c2: float) -> float:
    b = c2 * stats.norm.ppf(0.75)
    return 2.0 * ((1.0 - b * b) * stats.norm.cdf(b) - b * stats.norm.pdf(b) + b * b) - 1.0


_TAU_EXPECT = _tau_expectation(TAU_C2)


def _tau_columns(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise tau location and scale of a 2-d array."""
    med = np.median(x, axis=0)
    mad = np.median(np.abs(x - med), axis=0)
    if not np.all(mad > 0):
        bad = np.flatnonzero(~(mad > 0))
        raise DegenerateScaleError(
            f"degenerate scale: median absolute deviation is zero in column(s) {bad.tolist()}")
    u = (x - med) / (TAU_C1 * mad)
    w = np.where(np.abs(u) < 1.0, (1.0 - u * u) ** 2, 0.0)
    loc = np.sum(w * x, axis=0) / np.sum(w, axis=0)
    r = np.minimum(((x - loc) / mad) ** 2, TAU_C2 ** 2)
    return loc, mad * np.sqrt(np.mean(r, axis=0) / _TAU_EXPECT)


def tau_location_scale(x) -> tuple[float, float]:
    """Tau location and scale of a 1-d sample (Maronna-Zamar, c1=4.5, c2=3).

    The scale is divided by its expectation under the normal model, so it is
    consistent for the standard deviation of Gaussian data.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("tau scale needs a 1-d sample of length >= 2")
    try:
        loc, scale = _tau_columns(x[:, None])
    except DegenerateScaleError:
        raise DegenerateScaleError("degenerate scale: median absolute deviation is zero") from None
    return float(loc[0]), float(scale[0])


def robust_scale(x) -> float:
    """Consistency-corrected tau-scale of ``x``."""
    return tau_location_scale(x)[1]


def gk_covariance(y, unit_diagonal: bool = False) -> np.ndarray:
    """Pairwise Gnanadesikan-Kettenring covariance matrix of the columns of ``y``.

    cov(a, b) = (s(a + b)**2 - s(a - b)**2) / 4 with s the tau-scale.  With
    ``unit_diagonal`` the diagonal is set to one, as used inside OGK where the
    columns are already standardized.
    """
    y = np.asarray(y, dtype=float)
    p = y.shape[1]
    jj, kk = np.tril_indices(p, -1)
    out = np.eye(p)
    if not unit_diagonal:
        np.fill_diagonal(out, _tau_columns(y)[1] ** 2)
    if jj.size:
        _, s_plus = _tau_columns(y[:, jj] + y[:, kk])
        _, s_minus = _tau_columns(y[:, jj] - y[:, kk])
        c = (s_plus ** 2 - s_minus ** 2) / 4.0
        out[jj, kk] = c
        out[kk, jj] = c
    return out


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns.  Sweeps stop once the off-diagonal Frobenius
    norm drops below ``tol`` times the norm of the matrix.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("jacobi_eigh needs a square matrix")
    a = (a + a.T) / 2.0
    n = a.shape[0]
    v = np.eye(n)
    target = tol * max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.tril(a, -1) ** 2))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * a[:, q]
                a[:, q] = s * col_p + c * a[:, q]
                row_p = a[p, :].copy()
                a[p, :] = c * row_p - s * a[q, :]
                a[q, :] = s * row_p + c * a[q, :]
                a[p, q] = a[q, p] = 0.0
                vec_p = v[:, p].copy()
                v[:, p] = c * vec_p - s * v[:, q]
                v[:, q] = s * vec_p + c * v[:, q]
    else:
        raise RobustEstimationError(f"Jacobi did not converge in {max_sweeps} sweeps")
    evals = np.diag(a).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]


def _column_scales(z, names=None):
    try:
        return _tau_columns(z)[1]
    except DegenerateScaleError:
        mad = np.median(np.abs(z - np.median(z, axis=0)), axis=0)
        j = int(np.flatnonzero(~(mad > 0))[0])
        label = names[j] if names is not None else f"column {j}"
        raise DegenerateScaleError(f"degenerate scale for {label}") from None


def ogk_estimate(rows, signs: Sequence[str] | None = None, n_iter: int = 2,
                 reweight: bool = True, beta: float = 0.9,
                 rescale: bool = False) -> RobustEstimates:
    """OGK estimate of location and scatter from complete rows.

    Parameters
    ----------
    rows : array_like, shape (n, p)
        Complete observations, one per row.
    signs : sequence of str, optional
        Column names; defaults to ``x0, x1, ...``.
    n_iter : int
        Number of orthogonalization passes.
    reweight : bool
        Apply the hard-rejection reweighting step.
    beta : float
        Chi-square coverage used for the reweighting cutoff.
    rescale : bool
        Divide the trimmed covariance by the normal-theory shrinkage factor
        ``P(chi2_{p+2} <= chi2_p(beta)) / beta`` so that it is consistent at
        the Gaussian.  Off by default (see module docstring).

    Returns
    -------
    RobustEstimates
    """
    x = np.asarray(rows, dtype=float)
    if x.ndim != 2:
        raise ValueError("rows must be a 2-d array")
    n, p = x.shape
    if p < 1:
        raise ValueError("need at least one column")
    if signs is None:
        signs = tuple(f"x{j}" for j in range(p))
    if len(signs) != p:
        raise ValueError("signs do not match the number of columns")
    if n < p + 2:
        raise InsufficientDataError(f"insufficient Phase I data: {n} rows for p={p}")

    z = x
    transform = np.eye(p)
    for it in range(n_iter):
        scale = _column_scales(z, signs if it == 0 else None)
        y = z / scale
        corr = gk_covariance(y, unit_diagonal=True)
        _, evecs = jacobi_eigh(corr)
        z = y @ evecs
        transform = transform @ (scale[:, None] * evecs)

    loc_z, scale_z = _tau_columns(z)
    center = transform @ loc_z
    cov = (transform * scale_z ** 2) @ transform.T
    n_kept = n

    if reweight:
        dist = np.sum(((z - loc_z) / scale_z) ** 2, axis=1)
        cutoff = stats.chi2.ppf(beta, p) * np.median(dist) / stats.chi2.ppf(0.5, p)
        keep = dist <= cutoff
        n_kept = int(keep.sum())
        if n_kept < p + 1:
            raise RobustEstimationError("reweighting retained too few rows")
        xk = x[keep]
        center = xk.mean(axis=0)
        resid = xk - center
        cov = resid.T @ resid / n_kept
        if rescale:
            q = stats.chi2.ppf(beta, p)
            cov = cov * beta / stats.chi2.cdf(q, p + 2)

    cov = (cov + cov.T) / 2.0
    evals = np.linalg.eigvalsh(cov)
    if not evals[0] > 1e-10 * evals[-1]:
        raise RobustEstimationError("OGK scatter matrix is not positive definite")
    return RobustEstimates(tuple(signs), center, cov, n, "tau2", n_iter, reweight, n_kept)


def save_estimates(est: RobustEstimates, path) -> None:
    """Write estimates as plain text at 17 significant digits."""
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    lines = [
        "# dqchart robust estimates",
        "signs " + " ".join(est.signs),
        f"n_used {est.n_used}",
        f"scale_estimator {est.scale_estimator}",
        f"iterations {est.iterations}",
        f"reweighted {str(est.reweighted).lower()}",
        "mu " + " ".join(fmt(v) for v in est.mu_hat),
        "sigma",
    ]
    lines += [" ".join(fmt(v) for v in row) for row in est.sigma_hat]
    Path(path).write_text("\n".join(lines) + "\n")


def load_estimates(path) -> RobustEstimates:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()
             if ln.strip() and not ln.startswith("#")]
    meta = {}
    it = iter(lines)
    for ln in it:
        if ln == "sigma":
            break
        key, _, rest = ln.partition(" ")
        meta[key] = rest
    signs = tuple(meta["signs"].split())
    sigma = [[float(v) for v in next(it).split()] for _ in signs]
    return RobustEstimates(
        signs,
        np.array([float(v) for v in meta["mu"].split()]),
        np.array(sigma),
        int(meta.get("n_used", 0)),
        meta.get("scale_estimator", "tau2"),
        int(meta.get("iterations", 2)),
        meta.get("reweighted", "true") == "true",
    )
