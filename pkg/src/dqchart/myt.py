"""All-subset decomposition of a T-squared signal.

For every nonempty subset of the day's active signs the T-squared statistic
of the restricted system is compared with that subset's own control limit.
Subsets that exceed their limit while no proper subset does are reported as
implicated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from itertools import combinations

import numpy as np

from .chart import ReducedSystem, SingularCovarianceError, reduce_dimensions, t_squared
from .robust import RobustEstimates
from .weighting import DaySummary

__all__ = ["MytEntry", "MytReport", "myt_decompose", "decompose_reduced"]


@dataclass(frozen=True)
class MytEntry:
    subset: tuple[str, ...]
    t2: float | None
    ucl: float
    exceeds: bool
    status: str = "ok"


@dataclass
class MytReport:
    day: date | None
    entries: list[MytEntry] = field(default_factory=list)
    implicated: list[tuple[str, ...]] = field(default_factory=list)

    @property
    def implicated_signs(self) -> set[str]:
        return {s for sub in self.implicated for s in sub}

    def entry(self, subset) -> MytEntry:
        wanted = set(subset)
        for e in self.entries:
            if set(e.subset) == wanted:
                return e
        raise KeyError(subset)

    def ranked(self) -> list[MytEntry]:
        """Entries by decreasing T-squared / UCL ratio."""
        return sorted((e for e in self.entries if e.t2 is not None),
                      key=lambda e: e.t2 / e.ucl, reverse=True)

    def to_dict(self) -> dict:
        return {
            "date": self.day.isoformat() if self.day else None,
            "implicated": [list(s) for s in self.implicated],
            "entries": [{"subset": list(e.subset), "t2": e.t2, "ucl": e.ucl,
                         "exceeds": e.exceeds, "status": e.status} for e in self.entries],
        }


def decompose_reduced(red: ReducedSystem, ucls, day: date | None = None) -> MytReport:
    k = len(red.active)
    report = MytReport(day)
    exceeding = []
    for r in range(1, k + 1):
        for idx in combinations(range(k), r):
            sub = tuple(red.active[j] for j in idx)
            ix = list(idx)
            limit = ucls[sub]
            try:
                t2 = t_squared(red.mean[ix], red.mu[ix], red.sigma[np.ix_(ix, ix)])
            except SingularCovarianceError:
                report.entries.append(MytEntry(sub, None, limit, False, "indeterminate"))
                continue
            hit = t2 > limit
            report.entries.append(MytEntry(sub, t2, limit, hit))
            if hit:
                exceeding.append(frozenset(sub))
    for sub in exceeding:
        if not any(other < sub for other in exceeding):
            report.implicated.append(tuple(s for s in red.active if s in sub))
    return report


def myt_decompose(summary: DaySummary, est: RobustEstimates, ucls) -> MytReport:
    """Decompose one day's statistic over all subsets of its active signs."""
    return decompose_reduced(reduce_dimensions(summary, est), ucls, summary.day)
