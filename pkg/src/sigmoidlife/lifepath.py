"""Yearly refits of one entity and the trajectory they trace.

Every analysis year truncates the entity's monthly series at December of
that year (or at the end of the data, for a final partial year), refits the
logistic curve and converts the result to calendar units.  Dates in this
module are decimal years unless a name says ``month``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .fit import FitOptions, InsufficientDataError, fit_sigmoid
from .ingestion import ActivitySeries, month_ordinal
from .series import CalendarFit, cumulative, denormalize_params, normalize

__all__ = [
    "Status",
    "LifepathPoint",
    "Lifepath",
    "AmplitudeBelowOneError",
    "fit_window",
    "expanding_window_fits",
    "expected_leave_time",
    "phase",
    "trajectory_step_distance",
    "stabilization_year",
    "display_inflection",
    "SENTINEL_YEAR",
    "lifepath_table",
]

SENTINEL_YEAR = 2030.0
INFLECTION_BAND_MONTHS = 1.0
DORMANCY_MONTHS = 6
DEACTIVATION_SATURATION = 1.05
STABILIZATION_EPS = 0.05


class Status(str, enum.Enum):
    ACCELERATION = "acceleration"
    AT_INFLECTION = "at_inflection"
    DECELERATION = "deceleration"
    DEACTIVATED = "deactivated"


class AmplitudeBelowOneError(ValueError):
    code = "amplitude_below_one"


@dataclass(frozen=True)
class LifepathPoint:
    analysis_year: int
    cutoff_month: int
    fit: CalendarFit
    expected_leave: float
    expected_total: float
    status: Status

    @property
    def inflection_year(self) -> float:
        return self.fit.inflection_year

    @property
    def ln_slope(self) -> float:
        """Log of the slope per month; stable once the entity has stopped."""
        return self.fit.ln_slope_per_month


@dataclass(frozen=True)
class Lifepath:
    entity_id: str
    points: tuple
    start_month: int
    last_active_month: int
    end_month: int

    def __post_init__(self):
        years = [p.analysis_year for p in self.points]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise ValueError("analysis years must be strictly increasing")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def year(self, analysis_year):
        for p in self.points:
            if p.analysis_year == analysis_year:
                return p
        return None


def expected_leave_time(fit: CalendarFit) -> float:
    """Date (decimal year) at which less than half a unit of activity is still expected.

    Solves ``A - y(t) = 1/2`` for the fitted curve, giving
    ``t0 + ln(2A - 1) / m`` with ``A`` in activity units and ``m`` per month.
    """
    if fit.amplitude < 1.0:
        raise AmplitudeBelowOneError(
            f"amplitude_below_one: fitted amplitude {fit.amplitude:.6g} < 1"
        )
    return (fit.inflection + math.log(2.0 * fit.amplitude - 1.0) / fit.slope) / 12.0


def phase(fit: CalendarFit, cutoff_month: int, recent_activity: float,
          delta_months: float = INFLECTION_BAND_MONTHS) -> Status:
    """Lifecycle phase of a fit relative to its analysis cutoff.

    ``recent_activity`` is the activity inside the trailing dormancy horizon.
    """
    if cutoff_month < fit.inflection - delta_months:
        return Status.ACCELERATION
    if abs(cutoff_month - fit.inflection) <= delta_months:
        return Status.AT_INFLECTION
    if fit.saturation_status <= DEACTIVATION_SATURATION and recent_activity <= 0:
        return Status.DEACTIVATED
    return Status.DECELERATION


def fit_window(series: ActivitySeries, end_month: int, opts: FitOptions | None = None):
    """Fit the entity as seen at ``end_month``; None when history is too short."""
    opts = opts or FitOptions()
    window = series.truncate(end_month)
    if window.insufficient_history:
        return None
    nc = normalize(cumulative(window), opts.pad_length, first_activity_month=window.start_month)
    try:
        fit = fit_sigmoid(nc, opts)
    except InsufficientDataError:
        return None
    return denormalize_params(fit, nc.scale)


def _point(series, year, cutoff, opts, dormancy_months):
    cal = fit_window(series, cutoff, opts)
    if cal is None:
        return None
    # A single-order entity can land a hair under one order; it has left at t0.
    leave = expected_leave_time(cal) if cal.amplitude >= 1.0 else cal.inflection_year
    recent = series.counts[max(0, cutoff - dormancy_months + 1 - series.start_month): cutoff - series.start_month + 1].sum()
    return LifepathPoint(
        analysis_year=year,
        cutoff_month=cutoff,
        fit=cal,
        expected_leave=float(leave),
        expected_total=cal.amplitude,
        status=phase(cal, cutoff, recent),
    )


def expanding_window_fits(
    series: ActivitySeries,
    years,
    opts: FitOptions | None = None,
    *,
    dormancy_months: int = DORMANCY_MONTHS,
) -> Lifepath:
    """Refit ``series`` at the end of every year in ``years``.

    Years ending before the first activity are skipped, as are years where
    the entity started within the last two months (a gap, not an error).
    The year containing the series' last month is cut at that month.
    """
    last_year = series.end_month // 12
    points = []
    for year in sorted(set(int(y) for y in years)):
        if year > last_year:
            raise ValueError(f"analysis year {year} is past the end of the data")
        cutoff = min(month_ordinal(year, 12), series.end_month)
        if cutoff < series.start_month:
            continue
        p = _point(series, year, cutoff, opts, dormancy_months)
        if p is not None:
            points.append(p)
    return Lifepath(
        entity_id=series.entity_id,
        points=tuple(points),
        start_month=series.start_month,
        last_active_month=series.last_active_month,
        end_month=series.end_month,
    )


def trajectory_step_distance(p1: LifepathPoint, p2: LifepathPoint) -> float:
    """Euclidean distance in the (inflection year, ln slope per month) plane."""
    return math.hypot(p2.inflection_year - p1.inflection_year, p2.ln_slope - p1.ln_slope)


def stabilization_year(path, eps: float = STABILIZATION_EPS):
    """First analysis year whose incoming and outgoing steps are both below ``eps``.

    The outgoing step is only required when a later point exists.  Returns
    None when the path never settles (or has fewer than two points).
    """
    pts = list(path.points if isinstance(path, Lifepath) else path)
    if len(pts) < 2:
        return None
    steps = [trajectory_step_distance(a, b) for a, b in zip(pts, pts[1:])]
    for i in range(1, len(pts)):
        if steps[i - 1] < eps and (i == len(pts) - 1 or steps[i] < eps):
            return pts[i].analysis_year
    return None


def display_inflection(fit: CalendarFit, cutoff_month: int | None = None):
    """Plot coordinates (inflection year, amplitude) with the early-growth sentinel.

    Entities whose inflection lies more than five years past the cutoff while
    the amplitude is over twice the observed total get the sentinel year and
    their observed total as amplitude.
    """
    cutoff = fit.end_month if cutoff_month is None else cutoff_month
    if fit.inflection - cutoff > 60 and fit.saturation_status > 2.0:
        return SENTINEL_YEAR, fit.final_cumulative
    return fit.inflection_year, fit.amplitude


def lifepath_table(paths):
    """Rows for the lifepath CSV, ordered by entity then year."""
    rows = []
    for path in sorted(paths, key=lambda p: p.entity_id):
        for p in path.points:
            rows.append(
                {
                    "entity_id": path.entity_id,
                    "analysis_year": p.analysis_year,
                    "amplitude": p.fit.amplitude,
                    "ln_slope": p.ln_slope,
                    "inflection_date": p.inflection_year,
                    "expected_leave": p.expected_leave,
                    "expected_total": p.expected_total,
                    "status": p.status.value,
                    "converged": p.fit.converged,
                }
            )
    return rows

