"""Daily weighted Hotelling T-squared chart with dimension reduction."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

from .ingest import StudyDataset, daily_summary
from .robust import RobustEstimates
from .weighting import DaySummary, scaled_covariance, weight_matrix

__all__ = [
    "MAX_CONDITION",
    "SingularCovarianceError",
    "NoDataError",
    "ReducedSystem",
    "ChartPoint",
    "ChartSeries",
    "t_squared",
    "reduce_dimensions",
    "run_chart",
    "series_to_csv",
    "series_to_json",
]

MAX_CONDITION = 1e12


class SingularCovarianceError(ArithmeticError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class NoDataError(ValueError):
    """No sign was measured on the day."""


def t_squared(mean_vec, mu, sigma_xbar) -> float:
    """Quadratic form (x - mu)' S^-1 (x - mu) via a Cholesky solve.

    Raises
    ------
    SingularCovarianceError
        If ``sigma_xbar`` is not positive definite or its condition number
        exceeds ``MAX_CONDITION``.
    """
    dev = np.atleast_1d(np.asarray(mean_vec, dtype=float) - np.asarray(mu, dtype=float))
    s = np.atleast_2d(np.asarray(sigma_xbar, dtype=float))
    if s.shape != (dev.size, dev.size):
        raise ValueError(f"dimension mismatch: deviation {dev.shape}, covariance {s.shape}")
    evals = np.linalg.eigvalsh(s)
    cond = evals[-1] / evals[0] if evals[0] > 0 else np.inf
    if not cond <= MAX_CONDITION:
        raise SingularCovarianceError(
            f"covariance of the daily means is singular or ill-conditioned (cond={cond:.3g})", cond)
    factor = linalg.cho_factor(s, lower=True)
    return max(float(dev @ linalg.cho_solve(factor, dev)), 0.0)


@dataclass(frozen=True)
class ReducedSystem:
    mean: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    active: tuple[str, ...]


def reduce_dimensions(summary: DaySummary, est: RobustEstimates) -> ReducedSystem:
    """Drop signs without measurements from the mean, mu and W * Sigma."""
    if tuple(summary.signs) != tuple(est.signs):
        raise ValueError("summary and estimates use different sign lists")
    idx = np.flatnonzero(summary.defined)
    if idx.size == 0:
        raise NoDataError(f"no measurements on {summary.day}")
    sigma = scaled_covariance(weight_matrix(summary), est.sigma_hat)
    return ReducedSystem(summary.means[idx], est.mu_hat[idx], sigma,
                         tuple(summary.signs[j] for j in idx))


@dataclass
class ChartPoint:
    day: date
    active_signs: tuple[str, ...]
    counts: tuple[int, ...]
    t2: float | None
    ucl: float | None
    signal: bool
    phase1: bool = False
    status: str = "ok"
    note: str = ""
    myt: object = None


@dataclass
class ChartSeries:
    points: list[ChartPoint]
    estimates: RobustEstimates
    phase1_days: tuple[date, ...] = ()

    @property
    def signs(self) -> tuple[str, ...]:
        return self.estimates.signs

    def signals(self, prospective_only: bool = False) -> list[ChartPoint]:
        return [pt for pt in self.points if pt.signal and not (prospective_only and pt.phase1)]

    @property
    def alert(self) -> bool:
        return bool(self.signals(prospective_only=True))


def chart_point(summary: DaySummary, est: RobustEstimates, ucls, phase1: bool = False,
                decompose: bool = True) -> ChartPoint:
    """Evaluate one day: reduce, compute T-squared, compare to the subset UCL."""
    counts = tuple(int(c) for c in summary.counts)
    try:
        red = reduce_dimensions(summary, est)
    except NoDataError:
        return ChartPoint(summary.day, (), counts, None, None, False, phase1, "no_data")
    ucl = ucls[red.active]
    try:
        t2 = t_squared(red.mean, red.mu, red.sigma)
    except SingularCovarianceError as exc:
        return ChartPoint(summary.day, red.active, counts, None, ucl, False, phase1,
                          "singular", str(exc))
    point = ChartPoint(summary.day, red.active, counts, t2, ucl, t2 > ucl, phase1)
    if decompose and point.signal:
        from .myt import decompose_reduced
        point.myt = decompose_reduced(red, ucls, summary.day)
    return point


def run_chart(data: StudyDataset, est: RobustEstimates, ucls,
              phase1_days: Iterable[date] = (), include_phase1: bool = True,
              decompose: bool = True) -> ChartSeries:
    """Chart every study day; Phase I days are flagged and optionally skipped."""
    if tuple(data.signs) != tuple(est.signs) or tuple(ucls.signs) != tuple(est.signs):
        raise ValueError("dataset, estimates and UCL table must share one sign list")
    phase1 = set(phase1_days)
    points = []
    for day in data.days:
        in_p1 = day in phase1
        if in_p1 and not include_phase1:
            continue
        points.append(chart_point(daily_summary(data, day), est, ucls, in_p1, decompose))
    return ChartSeries(points, est, tuple(sorted(phase1)))


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def series_to_csv(series: ChartSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "t2", "ucl", "signal", "active_signs"]
               + [f"n_{s}" for s in series.signs] + ["phase1", "status"])
    for pt in series.points:
        w.writerow([pt.day.isoformat(), _fmt(pt.t2), _fmt(pt.ucl), int(pt.signal),
                    "+".join(pt.active_signs), *pt.counts, int(pt.phase1), pt.status])
    return buf.getvalue()


def series_to_json(series: ChartSeries) -> str:
    out = {
        "signs": list(series.signs),
        "phase1_days": [d.isoformat() for d in series.phase1_days],
        "points": [],
    }
    for pt in series.points:
        out["points"].append({
            "date": pt.day.isoformat(),
            "t2": pt.t2,
            "ucl": pt.ucl,
            "signal": pt.signal,
            "active_signs": list(pt.active_signs),
            "counts": dict(zip(series.signs, pt.counts)),
            "phase1": pt.phase1,
            "status": pt.status,
            "note": pt.note,
            "myt": pt.myt.to_dict() if pt.myt is not None else None,
        })
    return json.dumps(out, indent=2)
