"""Long-format measurement records: parsing, plausibility cleaning, daily summaries.

A study is stored as a sparse map ``(day, sign, participant) -> value``.  A
missing measurement is simply an absent key.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .weighting import DaySummary, summary_from_members

__all__ = [
    "DEFAULT_SIGNS",
    "IngestError",
    "MeasurementRecord",
    "StudyDataset",
    "PlausibilityRanges",
    "Removal",
    "parse_long_csv",
    "write_long_csv",
    "clean",
    "write_removal_report",
    "daily_summary",
]

DEFAULT_SIGNS = ("BT", "SBP", "DBP", "HR", "SpO2")
HEADER = ("date", "participant", "sign", "value")


class IngestError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class MeasurementRecord:
    day: date
    participant: str
    sign: str
    value: float


@dataclass(frozen=True)
class StudyDataset:
    """Panel of measurements keyed by (day, sign, participant)."""

    signs: tuple[str, ...]
    participants: tuple[str, ...]
    days: tuple[date, ...]
    cells: Mapping[tuple[date, str, str], float] = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "signs", tuple(self.signs))
        object.__setattr__(self, "participants", tuple(sorted(set(self.participants))))
        object.__setattr__(self, "days", tuple(sorted(set(self.days))))

    @property
    def p(self) -> int:
        return len(self.signs)

    @property
    def n(self) -> int:
        return len(self.participants)

    def records(self) -> list[MeasurementRecord]:
        sign_pos = {s: j for j, s in enumerate(self.signs)}
        keys = sorted(self.cells, key=lambda k: (k[0], k[2], sign_pos[k[1]]))
        return [MeasurementRecord(d, pid, s, self.cells[(d, s, pid)]) for d, s, pid in keys]

    def day_values(self, day: date, sign: str) -> dict[str, float]:
        """``{participant: value}`` for one day and sign."""
        return {pid: self.cells[(day, sign, pid)] for pid in self.participants
                if (day, sign, pid) in self.cells}

    def with_cells(self, cells: Mapping) -> "StudyDataset":
        return StudyDataset(self.signs, self.participants, self.days, dict(cells))

    def subset_days(self, days: Iterable[date]) -> "StudyDataset":
        keep = set(days)
        return StudyDataset(self.signs, self.participants, tuple(d for d in self.days if d in keep),
                            {k: v for k, v in self.cells.items() if k[0] in keep})


@dataclass(frozen=True)
class PlausibilityRanges:
    """Closed admissible interval per sign."""

    bounds: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        for sign, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ValueError(f"empty plausibility range for {sign}: [{lo}, {hi}]")

    @classmethod
    def default(cls) -> "PlausibilityRanges":
        text = resources.files("dqchart.data").joinpath("default_ranges.json").read_text()
        return cls.from_mapping(json.loads(text))

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "PlausibilityRanges":
        return cls({k: (float(v[0]), float(v[1])) for k, v in mapping.items()})

    @classmethod
    def load(cls, path) -> "PlausibilityRanges":
        return cls.from_mapping(json.loads(Path(path).read_text()))

    def override(self, mapping: Mapping) -> "PlausibilityRanges":
        merged = dict(self.bounds)
        merged.update(PlausibilityRanges.from_mapping(mapping).bounds)
        return PlausibilityRanges(merged)


@dataclass(frozen=True)
class Removal:
    day: date
    participant: str
    sign: str
    value: float
    reason: str


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8-sig")
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8-sig")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    return data


def parse_long_csv(source, signs: Sequence[str] = DEFAULT_SIGNS,
                   calendar: Iterable[date] | None = None,
                   participants: Iterable[str] | None = None) -> StudyDataset:
    """Parse ``date,participant,sign,value`` rows into a StudyDataset.

    ``source`` may be bytes, a path, or a binary/text file object.  Days are
    inferred from the rows unless an explicit ``calendar`` is given, in which
    case days with no records still count as study days.

    Raises
    ------
    IngestError
        On an empty input, a bad header, a malformed row (with its line
        number), an unknown sign, or a duplicate cell.
    """
    text = _read_text(source)
    if not text.strip():
        raise IngestError("empty input")
    signs = tuple(signs)
    sign_set = set(signs)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != HEADER:
        raise IngestError(f"line 1: expected header {','.join(HEADER)}, got {header}")

    cells: dict = {}
    first_seen: dict = {}
    pids = set(participants or ())
    days = set(calendar or ())
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise IngestError(f"line {line}: expected 4 fields, got {len(row)}")
        d_txt, pid, sign, v_txt = (c.strip() for c in row)
        try:
            day = date.fromisoformat(d_txt)
        except ValueError:
            raise IngestError(f"line {line}: bad date {d_txt!r}") from None
        if not pid:
            raise IngestError(f"line {line}: empty participant id")
        if sign not in sign_set:
            raise IngestError(f"line {line}: unknown sign {sign!r}")
        try:
            value = float(v_txt)
        except ValueError:
            raise IngestError(f"line {line}: bad value {v_txt!r}") from None
        if not math.isfinite(value):
            raise IngestError(f"line {line}: non-finite value {v_txt!r}")
        key = (day, sign, pid)
        if key in cells:
            raise IngestError(
                f"duplicate cell {d_txt},{pid},{sign} on lines {first_seen[key]} and {line}")
        cells[key] = value
        first_seen[key] = line
        pids.add(pid)
        if calendar is None:
            days.add(day)
        elif day not in days:
            raise IngestError(f"line {line}: date {d_txt} is not in the supplied calendar")
    if not cells and calendar is None:
        raise IngestError("empty input: no data rows")
    return StudyDataset(signs, tuple(pids), tuple(days), cells)


def write_long_csv(data: StudyDataset, dest=None) -> str:
    """Serialize to long CSV; values use ``repr`` so parsing round-trips exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in data.records():
        w.writerow([r.day.isoformat(), r.participant, r.sign, repr(float(r.value))])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text, encoding="utf-8")
    return text


def clean(data: StudyDataset, ranges: PlausibilityRanges) -> tuple[StudyDataset, list[Removal]]:
    """Drop every cell outside its sign's closed plausibility interval."""
    missing = [s for s in data.signs if s not in ranges.bounds]
    if missing:
        raise ValueError(f"no plausibility range for {missing}")
    kept = {}
    removed = []
    for rec in data.records():
        lo, hi = ranges.bounds[rec.sign]
        if lo <= rec.value <= hi:
            kept[(rec.day, rec.sign, rec.participant)] = rec.value
        else:
            reason = "below" if rec.value < lo else "above"
            removed.append(Removal(rec.day, rec.participant, rec.sign, rec.value,
                                   f"{reason} plausible range {lo:g}..{hi:g}"))
    return data.with_cells(kept), removed


def write_removal_report(removals: Sequence[Removal], dest=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("date", "participant", "sign", "value", "reason"))
    for r in removals:
        w.writerow([r.day.isoformat(), r.participant, r.sign, repr(float(r.value)), r.reason])
    if dest is not None:
        Path(dest).write_text(buf.getvalue(), encoding="utf-8")
    return buf.getvalue()


def daily_summary(data: StudyDataset, day: date) -> DaySummary:
    if day not in data.days:
        raise KeyError(f"{day} is not a study day")
    members = [data.day_values(day, s) for s in data.signs]
    return summary_from_members(data.signs, members, day)
