"""Scoring leaving-time predictions on a cohort that left in a given year."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .ingestion import month_ordinal

__all__ = ["YearScore", "CohortReport", "EmptyCohortError", "select_cohort", "score_cohort", "actual_leave_date"]


class EmptyCohortError(ValueError):
    pass


@dataclass(frozen=True)
class YearScore:
    analysis_year: int
    n: int
    mean_expected_leave: float
    variance: float
    mean_error: float
    within_1yr: float
    within_2yr: float


@dataclass(frozen=True)
class CohortReport:
    leave_year: int
    cohort_size: int
    per_year: dict

    def to_json(self) -> str:
        doc = {
            "leave_year": self.leave_year,
            "cohort_size": self.cohort_size,
            "per_year": [asdict(self.per_year[y]) for y in sorted(self.per_year)],
        }
        return json.dumps(doc, indent=2, default=float)

    def to_rows(self):
        return [asdict(self.per_year[y]) for y in sorted(self.per_year)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = [f for f in YearScore.__dataclass_fields__]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(self.to_rows())
        return buf.getvalue()


def actual_leave_date(path) -> float:
    """Midpoint of the last active month, as a decimal year."""
    return (path.last_active_month + 0.5) / 12.0


def select_cohort(paths, leave_year: int):
    """Lifepaths whose final activity falls in ``leave_year``.

    Only entities observed through the end of that year qualify; anything
    active later is excluded by construction.
    """
    end_of_year = month_ordinal(leave_year, 12)
    cohort = []
    for path in paths:
        if path.end_month < end_of_year:
            raise ValueError(f"{path.entity_id}: data ends before the end of {leave_year}")
        if path.last_active_month // 12 == leave_year:
            cohort.append(path)
    if not cohort:
        raise EmptyCohortError(f"no entity left in {leave_year}")
    return cohort


def score_cohort(cohort, leave_year: int) -> CohortReport:
    """Per analysis year: spread of expected leaving times and hit rates.

    ``mean_error`` is measured against the middle of ``leave_year``; the
    one- and two-year hit rates against each entity's own last active month.
    """
    cohort = list(cohort)
    if not cohort:
        raise EmptyCohortError("empty cohort")
    by_year: dict[int, list[tuple[float, float]]] = {}
    for path in cohort:
        actual = actual_leave_date(path)
        for p in path.points:
            by_year.setdefault(p.analysis_year, []).append((p.expected_leave, actual))

    per_year = {}
    for year in sorted(by_year):
        arr = np.array(sorted(by_year[year]))
        expected, actual = arr[:, 0], arr[:, 1]
        gap = np.abs(expected - actual)
        per_year[year] = YearScore(
            analysis_year=year,
            n=len(arr),
            mean_expected_leave=float(expected.mean()),
            variance=float(expected.var()),
            mean_error=float(np.mean(expected - (leave_year + 0.5))),
            within_1yr=float(np.mean(gap <= 1.0)),
            within_2yr=float(np.mean(gap <= 2.0)),
        )
    return CohortReport(leave_year, len(cohort), per_year)
