"""Synthetic telehealth studies with random missingness and injected faults.

Each day draws from its own random substream in a fixed order (attendance,
values, per-sign drops), so faults and missingness settings never change
the underlying draws.  Missingness does not depend on the values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import DEFAULT_SIGNS, StudyDataset
from .ucl_sim import substream

__all__ = ["FaultSpec", "ScenarioConfig", "generate_study", "missing_fraction",
           "study_calendar"]

FAULT_KINDS = ("cap", "fix", "shift")


@dataclass(frozen=True)
class FaultSpec:
    """``cap``: min(x, value); ``fix``: value; ``shift``: x + value."""

    kind: str
    sign: str
    value: float
    start: date
    end: date | None = None

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ValueError(f"fault kind must be one of {FAULT_KINDS}, got {self.kind!r}")
        if self.end is not None and self.end < self.start:
            raise ValueError("fault window ends before it starts")

    def active(self, day: date) -> bool:
        return self.start <= day and (self.end is None or day <= self.end)

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "cap":
            return np.minimum(x, self.value)
        if self.kind == "fix":
            return np.full_like(x, self.value)
        return x + self.value


def study_calendar(start: date, n_days: int, weekdays_only: bool = True) -> tuple[date, ...]:
    days = []
    d = start
    while len(days) < n_days:
        if not weekdays_only or d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return tuple(days)


@dataclass(frozen=True)
class ScenarioConfig:
    mu: np.ndarray
    sigma: np.ndarray
    n: int = 24
    n_days: int = 50
    start: date = date(2018, 1, 1)
    weekdays_only: bool = True
    q_day: float = 0.0
    q_sign: float = 0.0
    # participant index -> (first day index, last day index), inclusive
    windows: dict = field(default_factory=dict)
    faults: tuple[FaultSpec, ...] = ()
    seed: int = 0
    signs: tuple[str, ...] = DEFAULT_SIGNS

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "signs", tuple(self.signs))
        object.__setattr__(self, "faults", tuple(self.faults))
        if sigma.shape != (mu.size, mu.size) or len(self.signs) != mu.size:
            raise ValueError("mu, sigma and signs disagree in dimension")
        for q in (self.q_day, self.q_sign):
            if not 0.0 <= q < 1.0:
                raise ValueError("missingness probabilities must lie in [0, 1)")
        cal = self.calendar
        for f in self.faults:
            if f.sign not in self.signs:
                raise ValueError(f"fault on unknown sign {f.sign!r}")
            if f.start > cal[-1] or (f.end is not None and f.end < cal[0]):
                raise ValueError("fault window lies outside the calendar")

    @property
    def calendar(self) -> tuple[date, ...]:
        return study_calendar(self.start, self.n_days, self.weekdays_only)

    @property
    def participant_ids(self) -> tuple[str, ...]:
        width = max(2, len(str(self.n)))
        return tuple(f"P{k + 1:0{width}d}" for k in range(self.n))

    def to_dict(self) -> dict:
        return {
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "signs": list(self.signs),
            "n": self.n,
            "n_days": self.n_days,
            "start": self.start.isoformat(),
            "weekdays_only": self.weekdays_only,
            "q_day": self.q_day,
            "q_sign": self.q_sign,
            "windows": {str(k): list(v) for k, v in self.windows.items()},
            "faults": [
                {"kind": f.kind, "sign": f.sign, "value": f.value, "start": f.start.isoformat(),
                 "end": f.end.isoformat() if f.end else None}
                for f in self.faults
            ],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        doc = dict(doc)
        if "start" in doc:
            doc["start"] = date.fromisoformat(doc["start"])
        if "signs" in doc:
            doc["signs"] = tuple(doc["signs"])
        doc["windows"] = {int(k): tuple(v) for k, v in doc.get("windows", {}).items()}
        doc["faults"] = tuple(
            FaultSpec(f["kind"], f["sign"], float(f["value"]), date.fromisoformat(f["start"]),
                      date.fromisoformat(f["end"]) if f.get("end") else None)
            for f in doc.get("faults", ())
        )
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def generate_study(cfg: ScenarioConfig) -> StudyDataset:
    try:
        chol = np.linalg.cholesky(cfg.sigma)
    except np.linalg.LinAlgError:
        raise ValueError("generator sigma is not positive definite") from None
    pids = cfg.participant_ids
    p = len(cfg.signs)
    cells = {}
    for i, day in enumerate(cfg.calendar):
        rng = substream(cfg.seed, i)
        skip = rng.random(cfg.n) < cfg.q_day
        values = cfg.mu + rng.standard_normal((cfg.n, p)) @ chol.T
        drop = rng.random((cfg.n, p)) < cfg.q_sign
        for f in cfg.faults:
            if f.active(day):
                j = cfg.signs.index(f.sign)
                values[:, j] = f.apply(values[:, j])
        for k, pid in enumerate(pids):
            if skip[k]:
                continue
            first, last = cfg.windows.get(k, (0, cfg.n_days - 1))
            if not first <= i <= last:
                continue
            for j, s in enumerate(cfg.signs):
                if not drop[k, j]:
                    cells[(day, s, pid)] = float(values[k, j])
    return StudyDataset(cfg.signs, pids, cfg.calendar, cells)


def missing_fraction(data: StudyDataset) -> tuple[dict, float]:
    """Per-sign and overall fraction of absent cells, 1 - observed / (n * days)."""
    total = data.n * len(data.days)
    if total == 0:
        raise ValueError("dataset has no participants or no days")
    observed = dict.fromkeys(data.signs, 0)
    for (_, s, _) in data.cells:
        observed[s] += 1
    per_sign = {s: 1.0 - observed[s] / total for s in data.signs}
    return per_sign, float(np.mean(list(per_sign.values())))
