"""Reading raw activity records and binning them into monthly series.

Months are handled as integer ordinals, ``year * 12 + (month - 1)``, so that
month arithmetic is plain integer arithmetic.  Two CSV layouts are accepted:

* event records, header ``entity_id,timestamp`` with ``YYYY-MM-DD`` (or
  ``YYYY-MM``) timestamps, one row per event;
* occurrence tables, header ``entity_id,month,count`` with an optional
  trailing ``state`` column, already aggregated per month.
"""
from __future__ import annotations

import csv
import io
import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, TextIO

import numpy as np

__all__ = [
    "DataError",
    "FormatError",
    "RowParseError",
    "EventRecord",
    "OccurrenceRecord",
    "ActivitySeries",
    "ObservationWindow",
    "month_ordinal",
    "month_label",
    "parse_month",
    "parse_events",
    "parse_occurrences",
    "bin_monthly",
    "bin_occurrences",
    "window_for",
]

EVENT_HEADER = ("entity_id", "timestamp")
OCCURRENCE_HEADER = ("entity_id", "month", "count")

_DATE_RE = re.compile(r"^(\d{4})-(\d{1,2})(?:-(\d{1,2}))?(?:[T ].*)?$")


class DataError(ValueError):
    """Input data violates a format or content contract."""


class FormatError(DataError):
    """The CSV header does not match the expected layout."""


class RowParseError(DataError):
    """One or more data rows could not be parsed.

    ``errors`` holds ``(line_number, message)`` pairs for every bad row,
    with line numbers counted from 1 at the header.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"line {n}: {msg}" for n, msg in self.errors[:10])
        more = "" if len(self.errors) <= 10 else f" (+{len(self.errors) - 10} more)"
        super().__init__(f"{len(self.errors)} unparseable row(s): {lines}{more}")


def month_ordinal(year: int, month: int) -> int:
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range: {month}")
    return year * 12 + (month - 1)


def month_label(ordinal: int) -> str:
    year, m = divmod(int(ordinal), 12)
    return f"{year:04d}-{m + 1:02d}"


def parse_month(text: str) -> int:
    """Parse ``YYYY-MM`` or ``YYYY-MM-DD[...]`` into a month ordinal.

    Anything finer than a month is validated and then discarded.
    """
    m = _DATE_RE.match(text.strip())
    if m is None:
        raise ValueError(f"not a date: {text!r}")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {text!r}")
    if m.group(3) is not None:
        day = int(m.group(3))
        # Leap days etc. are not worth a calendar lookup; the day is dropped anyway.
        if not 1 <= day <= 31:
            raise ValueError(f"day out of range in {text!r}")
    return month_ordinal(year, month)


@dataclass(frozen=True)
class EventRecord:
    entity_id: str
    month: int


@dataclass(frozen=True)
class OccurrenceRecord:
    entity_id: str
    month: int
    count: float
    state: str | None = None


@dataclass(frozen=True)
class ObservationWindow:
    """Inclusive range of month ordinals covered by an analysis."""

    epoch_month: int
    end_month: int

    def __post_init__(self):
        if self.end_month < self.epoch_month:
            raise ValueError("end_month precedes epoch_month")

    def contains(self, month: int) -> bool:
        return self.epoch_month <= month <= self.end_month

    @property
    def n_months(self) -> int:
        return self.end_month - self.epoch_month + 1


@dataclass(frozen=True)
class ActivitySeries:
    """Monthly activity counts for one entity.

    ``counts[k]`` is the activity in month ``start_month + k``; the series
    runs from the first recorded activity through the analysis end month.
    """

    entity_id: str
    start_month: int
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a non-empty 1-d sequence")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        if counts[0] <= 0:
            raise ValueError("series must start at the first recorded activity")
        object.__setattr__(self, "counts", counts)

    @property
    def end_month(self) -> int:
        return self.start_month + len(self.counts) - 1

    @property
    def total(self):
        return self.counts.sum()

    @property
    def last_active_month(self) -> int:
        return self.start_month + int(np.flatnonzero(self.counts)[-1])

    @property
    def insufficient_history(self) -> bool:
        # Activity that began within the final two months of the window.
        return len(self.counts) <= 2

    def truncate(self, end_month: int) -> "ActivitySeries":
        """The same entity seen with an earlier analysis cutoff."""
        if end_month < self.start_month:
            raise ValueError("cutoff precedes the first activity")
        if end_month > self.end_month:
            raise ValueError(
                f"cutoff {month_label(end_month)} is past the observed end "
                f"{month_label(self.end_month)}"
            )
        return ActivitySeries(
            self.entity_id, self.start_month, self.counts[: end_month - self.start_month + 1]
        )


def _read_rows(source: TextIO | str, header: tuple[str, ...], optional: tuple[str, ...] = ()):
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        first = next(reader)
    except StopIteration:
        raise FormatError("empty input: missing header") from None
    names = tuple(c.strip().lstrip("﻿") for c in first)
    if names[: len(header)] != header or names[len(header):] not in (
        optional[:k] for k in range(len(optional) + 1)
    ):
        expected = ",".join(header + optional)
        raise FormatError(f"bad header {','.join(names)!r}, expected {expected!r}")
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        yield reader.line_num, [c.strip() for c in row], len(names)


def parse_events(source: TextIO | str) -> list[EventRecord]:
    """Parse the event CSV into records, one per data row.

    Bad rows do not stop parsing; they are collected and raised together as
    a :class:`RowParseError` once the whole stream has been read.
    """
    records, errors = [], []
    for line, row, width in _read_rows(source, EVENT_HEADER):
        if len(row) != width:
            errors.append((line, f"expected {width} fields, got {len(row)}"))
            continue
        entity_id, stamp = row
        if not entity_id:
            errors.append((line, "empty entity_id"))
            continue
        try:
            records.append(EventRecord(entity_id, parse_month(stamp)))
        except ValueError as exc:
            errors.append((line, str(exc)))
    if errors:
        raise RowParseError(errors)
    return records


def parse_occurrences(source: TextIO | str) -> list[OccurrenceRecord]:
    """Parse a pre-aggregated occurrence table (term x month counts)."""
    records, errors = [], []
    for line, row, width in _read_rows(source, OCCURRENCE_HEADER, optional=("state",)):
        if len(row) != width:
            errors.append((line, f"expected {width} fields, got {len(row)}"))
            continue
        entity_id, month, count = row[:3]
        state = row[3] if width == 4 else None
        if not entity_id:
            errors.append((line, "empty entity_id"))
            continue
        try:
            value = float(count)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"bad count {count!r}")
            records.append(OccurrenceRecord(entity_id, parse_month(month), value, state))
        except ValueError as exc:
            errors.append((line, str(exc)))
    if errors:
        raise RowParseError(errors)
    return records


def window_for(records: Iterable, end_month: int | None = None) -> ObservationWindow:
    """Smallest window holding every record, optionally with a fixed cutoff."""
    months = [r.month for r in records]
    if not months:
        raise DataError("no records")
    end = max(months) if end_month is None else end_month
    return ObservationWindow(min(months), end)


def _series_from_totals(totals: Mapping[str, Mapping[int, float]], window: ObservationWindow):
    out = {}
    for entity_id in sorted(totals):
        by_month = {m: c for m, c in totals[entity_id].items() if c > 0}
        if not by_month:
            continue
        start = min(by_month)
        integral = all(isinstance(c, (int, np.integer)) for c in by_month.values())
        counts = np.zeros(window.end_month - start + 1, dtype=np.int64 if integral else float)
        for m, c in by_month.items():
            counts[m - start] += c
        out[entity_id] = ActivitySeries(entity_id, start, counts)
    return out


def bin_monthly(events: Iterable[EventRecord], window: ObservationWindow) -> dict[str, ActivitySeries]:
    """Count events per entity and month.

    Every record is counted, duplicates included.  Each series starts at the
    entity's earliest event and is zero-filled through ``window.end_month``.
    """
    totals: dict[str, dict[int, int]] = defaultdict(lambda: defaultdict(int))
    for ev in events:
        if not window.contains(ev.month):
            raise DataError(
                f"event for {ev.entity_id!r} in {month_label(ev.month)} lies outside "
                f"{month_label(window.epoch_month)}..{month_label(window.end_month)}"
            )
        totals[ev.entity_id][ev.month] += 1
    return _series_from_totals(totals, window)


def bin_occurrences(
    records: Iterable[OccurrenceRecord], window: ObservationWindow
) -> dict[str, ActivitySeries]:
    """Same output as :func:`bin_monthly`, summing counts across states."""
    totals: dict[str, dict[int, float]] = defaultdict(lambda: defaultdict(float))
    for rec in records:
        if not window.contains(rec.month):
            raise DataError(
                f"record for {rec.entity_id!r} in {month_label(rec.month)} lies outside the window"
            )
        totals[rec.entity_id][rec.month] += rec.count
    series = _series_from_totals(totals, window)
    # Integral tables come back as integer counts.
    for key, s in series.items():
        if np.all(s.counts == np.round(s.counts)):
            series[key] = ActivitySeries(s.entity_id, s.start_month, s.counts.astype(np.int64))
    return series
