"""Per-day weighting matrix and covariance of the daily mean vector.

With U_j the participants measured on sign j and n_j = |U_j|, the daily
means have covariance W * Sigma (element-wise), where

    W[j, k] = |U_j & U_k| / (n_j * n_k).

Signs with n_j = 0 have no mean and are flagged undefined; they are removed
before any arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

__all__ = ["DaySummary", "WeightMatrix", "summary_from_members", "weight_matrix",
           "scaled_covariance"]


@dataclass(frozen=True)
class DaySummary:
    """Daily means, counts and pairwise overlap counts for one day.

    ``means[j]`` is only meaningful where ``defined[j]`` (``counts[j] >= 1``);
    undefined entries hold NaN and are never used numerically.
    """

    day: date | None
    signs: tuple[str, ...]
    means: np.ndarray
    counts: np.ndarray
    overlaps: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return self.counts >= 1

    @property
    def active_signs(self) -> tuple[str, ...]:
        return tuple(s for s, d in zip(self.signs, self.defined) if d)


def summary_from_members(signs: Sequence[str], members: Sequence[dict],
                         day: date | None = None) -> DaySummary:
    """Build a DaySummary from per-sign ``{participant: value}`` maps."""
    p = len(signs)
    if len(members) != p:
        raise ValueError("one participant map per sign is required")
    sets = [frozenset(m) for m in members]
    counts = np.array([len(s) for s in sets], dtype=int)
    overlaps = np.empty((p, p), dtype=int)
    for j in range(p):
        for k in range(j, p):
            overlaps[j, k] = overlaps[k, j] = len(sets[j] & sets[k])
    means = np.full(p, np.nan)
    for j, m in enumerate(members):
        if m:
            means[j] = float(np.mean(list(m.values())))
    return DaySummary(day, tuple(signs), means, counts, overlaps)


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric weights; rows/columns where ``defined`` is False are zero and unusable."""

    day: date | None
    entries: np.ndarray
    defined: np.ndarray

    def active(self) -> np.ndarray:
        idx = np.flatnonzero(self.defined)
        return self.entries[np.ix_(idx, idx)]


def weight_matrix(summary: DaySummary) -> WeightMatrix:
    counts = summary.counts.astype(float)
    defined = summary.counts >= 1
    w = np.zeros(summary.overlaps.shape)
    idx = np.flatnonzero(defined)
    sub = np.ix_(idx, idx)
    w[sub] = summary.overlaps[sub] / np.outer(counts[idx], counts[idx])
    return WeightMatrix(summary.day, w, defined)


def scaled_covariance(w: WeightMatrix, sigma) -> np.ndarray:
    """Covariance of the daily means, restricted to the defined signs."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != w.entries.shape:
        raise ValueError(
            f"dimension mismatch: weights {w.entries.shape}, sigma {sigma.shape}")
    idx = np.flatnonzero(w.defined)
    out = w.entries[np.ix_(idx, idx)] * sigma[np.ix_(idx, idx)]
    return (out + out.T) / 2.0
