"""Monte-Carlo upper control limits for the weighted T-squared chart.

One outer replicate:

1. draw ``m * n_bar`` participant vectors from N(mu, Sigma),
2. estimate location/scatter from them with OGK,
3. draw ``inner_reps`` daily means from N(mu, Sigma / n_bar) and compute
   T-squared against the OGK estimates (scatter scaled by 1 / n_bar),
4. keep the empirical (1 - alpha) quantile.

The limit is the mean of the outer-replicate quantiles.  Every (subset,
replicate, attempt) triple draws from its own Philox substream, so results do
not depend on evaluation order.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import date
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .robust import InsufficientDataError, RobustEstimationError, ogk_estimate

__all__ = [
    "UclConfig",
    "MissingScenario",
    "UclEntry",
    "UclTable",
    "UclSimulationError",
    "n_bar",
    "substream",
    "mvn_sample",
    "empirical_quantile",
    "simulate_ucl",
    "ucl_table",
    "all_subsets",
    "LazyUclTable",
]

MAX_SIGNS = 12
MAX_CONSECUTIVE_FAILURES = 5


class UclSimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class UclConfig:
    m: int
    n_bar: int
    alpha: float = 0.02
    inner_reps: int = 10_000
    outer_reps: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.n_bar < 1:
            raise ValueError("n_bar must be at least 1")
        if self.inner_reps < 1000:
            raise ValueError("inner_reps must be at least 1000")
        if self.outer_reps < 1:
            raise ValueError("outer_reps must be at least 1")


@dataclass(frozen=True)
class MissingScenario:
    """Random missingness applied to the Step 1 data before complete-case OGK.

    ``q_day`` removes a whole participant vector, ``q_sign`` single cells.
    """

    q_day: float = 0.0
    q_sign: float = 0.0

    @property
    def cell_fraction(self) -> float:
        return 1.0 - (1.0 - self.q_day) * (1.0 - self.q_sign)


@dataclass(frozen=True)
class UclEntry:
    subset: tuple[str, ...]
    ucl: float
    se: float
    retries: int = 0


@dataclass
class UclTable:
    signs: tuple[str, ...]
    config: UclConfig
    entries: dict[tuple[str, ...], UclEntry] = field(default_factory=dict)

    def canonical(self, subset: Iterable[str]) -> tuple[str, ...]:
        wanted = set(subset)
        unknown = wanted - set(self.signs)
        if unknown:
            raise KeyError(f"unknown signs {sorted(unknown)}")
        return tuple(s for s in self.signs if s in wanted)

    def __getitem__(self, subset) -> float:
        return self.entries[self.canonical(subset)].ucl

    def __contains__(self, subset) -> bool:
        try:
            return self.canonical(subset) in self.entries
        except KeyError:
            return False

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        doc = {
            "config": asdict(self.config),
            "signs": list(self.signs),
            "entries": [
                {"subset": list(e.subset), "ucl": e.ucl, "se": e.se, "retries": e.retries}
                for e in sorted(self.entries.values(),
                                key=lambda e: (len(e.subset), [self.signs.index(s) for s in e.subset]))
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "UclTable":
        doc = json.loads(text)
        table = cls(tuple(doc["signs"]), UclConfig(**doc["config"]))
        for e in doc["entries"]:
            sub = tuple(e["subset"])
            table.entries[sub] = UclEntry(sub, float(e["ucl"]), float(e["se"]), int(e.get("retries", 0)))
        return table

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "UclTable":
        return cls.from_json(Path(path).read_text())


def n_bar(data, phase1_days: Iterable[date]) -> int:
    """Average number of measurements per sign and day, rounded to nearest."""
    days = list(phase1_days)
    if not days:
        raise ValueError("empty Phase I window")
    window = set(days)
    total = sum(1 for key in data.cells if key[0] in window)
    if total == 0:
        raise ValueError("no measurements in the Phase I window")
    avg = total / (len(days) * len(data.signs))
    return int(math.floor(avg + 0.5))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for a (seed, key...) pair."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def mvn_sample(mu, sigma, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """``mu + L z`` with L the lower Cholesky factor of ``sigma``."""
    mu = np.asarray(mu, dtype=float)
    try:
        chol = np.linalg.cholesky(np.asarray(sigma, dtype=float))
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("sigma is not positive definite") from None
    if size is None:
        return mu + chol @ rng.standard_normal(mu.size)
    return mu + rng.standard_normal((size, mu.size)) @ chol.T


def empirical_quantile(values, prob: float) -> float:
    """Order statistic at 1-based rank ceil(prob * N)."""
    v = np.sort(np.asarray(values, dtype=float))
    k = max(1, math.ceil(prob * v.size - 1e-9))
    return float(v[k - 1])


def _subset_key(subset: Sequence[int]) -> int:
    return sum(1 << j for j in subset)


def _outer_quantile(mu, sigma, cfg: UclConfig, rng, estimate: bool,
                    missing: MissingScenario | None) -> float:
    if estimate:
        rows = mvn_sample(mu, sigma, rng, cfg.m * cfg.n_bar)
        if missing is not None:
            absent = rng.random(rows.shape[0]) < missing.q_day
            dropped = rng.random(rows.shape) < missing.q_sign
            complete = ~absent & ~dropped.any(axis=1)
            rows = rows[complete]
        est = ogk_estimate(rows)
        center, scatter = est.mu_hat, est.sigma_hat
    else:
        center, scatter = mu, sigma
    means = mvn_sample(mu, sigma / cfg.n_bar, rng, cfg.inner_reps)
    chol = np.linalg.cholesky(scatter / cfg.n_bar)
    r = np.linalg.solve(chol, (means - center).T)
    t2 = np.einsum("ij,ij->j", r, r)
    return empirical_quantile(t2, 1.0 - cfg.alpha)


def simulate_ucl(mu, sigma, subset: Sequence[int] | None, cfg: UclConfig, *,
                 estimate: bool = True, missing: MissingScenario | None = None,
                 return_quantiles: bool = False):
    """Simulated control limit for one subset of signs (column indices).

    Returns ``(ucl, standard_error, retries)``; with ``return_quantiles`` the
    per-replicate quantiles are appended.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if subset is None:
        subset = range(mu.size)
    subset = sorted(set(int(j) for j in subset))
    if not subset:
        raise ValueError("subset must be nonempty")
    mu_s = mu[subset]
    sigma_s = sigma[np.ix_(subset, subset)]
    key = _subset_key(subset)
    quantiles = np.empty(cfg.outer_reps)
    retries = 0
    for rep in range(cfg.outer_reps):
        for attempt in range(MAX_CONSECUTIVE_FAILURES + 1):
            if attempt == MAX_CONSECUTIVE_FAILURES:
                raise UclSimulationError(
                    f"OGK failed {MAX_CONSECUTIVE_FAILURES} times in a row (subset {subset}, rep {rep})")
            rng = substream(cfg.seed, key, rep, attempt)
            try:
                quantiles[rep] = _outer_quantile(mu_s, sigma_s, cfg, rng, estimate, missing)
                break
            except (RobustEstimationError, InsufficientDataError, np.linalg.LinAlgError):
                retries += 1
    ucl = float(quantiles.mean())
    se = float(quantiles.std(ddof=1) / math.sqrt(cfg.outer_reps)) if cfg.outer_reps > 1 else float("nan")
    if return_quantiles:
        return ucl, se, retries, quantiles
    return ucl, se, retries


def all_subsets(p: int) -> list[tuple[int, ...]]:
    """Nonempty index subsets ordered by size, then lexicographically."""
    return [c for r in range(1, p + 1) for c in combinations(range(p), r)]


def ucl_table(mu, sigma, cfg: UclConfig, signs: Sequence[str] | None = None, *,
              estimate: bool = True, missing: MissingScenario | None = None) -> UclTable:
    mu = np.asarray(mu, dtype=float)
    p = mu.size
    if p > MAX_SIGNS:
        raise ValueError(
            f"{p} signs give {2 ** p - 1} subsets; restrict to at most {MAX_SIGNS} signs")
    signs = tuple(signs) if signs is not None else tuple(f"x{j}" for j in range(p))
    table = UclTable(signs, cfg)
    for sub in all_subsets(p):
        ucl, se, retries = simulate_ucl(mu, sigma, sub, cfg, estimate=estimate, missing=missing)
        names = tuple(signs[j] for j in sub)
        table.entries[names] = UclEntry(names, ucl, se, retries)
    return table


class LazyUclTable:
    """UclTable look-alike that simulates each subset limit on first use.

    Used when parameters are refit often and only a few subsets are needed.
    """

    def __init__(self, mu, sigma, cfg: UclConfig, signs: Sequence[str]):
        self.mu = np.asarray(mu, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        self.config = cfg
        self.signs = tuple(signs)
        self.entries: dict[tuple[str, ...], UclEntry] = {}

    canonical = UclTable.canonical

    def __getitem__(self, subset) -> float:
        names = self.canonical(subset)
        if names not in self.entries:
            idx = [self.signs.index(s) for s in names]
            ucl, se, retries = simulate_ucl(self.mu, self.sigma, idx, self.config)
            self.entries[names] = UclEntry(names, ucl, se, retries)
        return self.entries[names].ucl
