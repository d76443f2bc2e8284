"""Cumulative series, the padded unit-square rescaling, and its inverse.

A series of ``n`` monthly counts becomes ``L = pad_length + n`` points: the
padding zeros stand for the months before the first activity.  Both axes are
then mapped onto [0, 1]; ``t = 1`` is the analysis end month and ``y = 1`` is
the total activity at that month.

Calendar times are fractional month ordinals (see
:func:`sigmoidlife.ingestion.month_ordinal`); divide by 12 for decimal years.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingestion import ActivitySeries, DataError

__all__ = [
    "DEFAULT_PAD",
    "ScaleInfo",
    "NormalizedCumulative",
    "CalendarFit",
    "cumulative",
    "normalize",
    "normalize_series",
    "denormalize_series",
    "denormalize_params",
    "t_to_month",
    "month_to_t",
    "start_time_coordinate",
]

DEFAULT_PAD = 100


class NoActivityError(DataError):
    """The series never records any activity."""

    code = "no_activity"


@dataclass(frozen=True)
class ScaleInfo:
    pad_length: int
    total_points: int
    final_cumulative: float
    first_activity_month: int
    end_month: int
    epoch_month: int | None = None

    @property
    def months_per_unit(self) -> int:
        """Number of months spanned by the unit t-axis (``L - 1``)."""
        return self.total_points - 1

    @property
    def origin_month(self) -> int:
        """Month sitting at ``t = 0`` (the first padding point)."""
        return self.first_activity_month - self.pad_length


@dataclass(frozen=True)
class NormalizedCumulative:
    t: np.ndarray
    y: np.ndarray
    scale: ScaleInfo

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class CalendarFit:
    """A sigmoid fit expressed in calendar units.

    ``amplitude`` is in activity units (orders), ``slope`` per month and
    ``inflection`` a fractional month ordinal.  ``ln_slope`` keeps the log of
    the slope on the normalized axis, the quantity used for the population
    parameter spaces.
    """

    amplitude: float
    slope: float
    inflection: float
    ln_slope: float
    saturation_status: float
    reduced_chi2: float
    converged: bool
    final_cumulative: float
    end_month: int

    @property
    def inflection_year(self) -> float:
        return self.inflection / 12.0

    @property
    def ln_slope_per_month(self) -> float:
        return float(np.log(self.slope))


def cumulative(series) -> np.ndarray:
    """Running total of monthly counts (accepts an ActivitySeries or a sequence)."""
    counts = series.counts if isinstance(series, ActivitySeries) else np.asarray(series)
    if counts.size == 0:
        raise ValueError("empty series")
    return np.cumsum(counts)


def normalize(
    cum,
    pad_length: int = DEFAULT_PAD,
    *,
    first_activity_month: int = 0,
    end_month: int | None = None,
    epoch_month: int | None = None,
) -> NormalizedCumulative:
    """Pad a cumulative series with leading zeros and rescale it to the unit square.

    Parameters
    ----------
    cum : sequence of numbers
        Non-decreasing cumulative activity, first element at the first
        active month.
    pad_length : int
        Number of zero months prepended before the first activity.
    first_activity_month, end_month : int
        Month ordinals of the first and last points of ``cum``.  ``end_month``
        defaults to ``first_activity_month + len(cum) - 1`` and must agree
        with it when given.

    Returns
    -------
    NormalizedCumulative
    """
    cum = np.asarray(cum, dtype=float)
    if cum.ndim != 1 or cum.size == 0:
        raise ValueError("cumulative series must be a non-empty 1-d sequence")
    if pad_length < 0:
        raise ValueError("pad_length must be >= 0")
    if np.any(np.diff(cum) < 0):
        raise ValueError("cumulative series must be non-decreasing")
    final = cum[-1]
    if final <= 0:
        raise NoActivityError("no_activity: series has no recorded activity")
    expected_end = first_activity_month + cum.size - 1
    if end_month is None:
        end_month = expected_end
    elif end_month != expected_end:
        raise ValueError("end_month does not match the series length")

    n_points = pad_length + cum.size
    if n_points < 2:
        raise ValueError("need at least two points after padding")
    y = np.concatenate([np.zeros(pad_length), cum / final])
    y[-1] = 1.0
    t = np.arange(n_points) / (n_points - 1)
    scale = ScaleInfo(
        pad_length=pad_length,
        total_points=n_points,
        final_cumulative=float(final),
        first_activity_month=first_activity_month,
        end_month=end_month,
        epoch_month=epoch_month,
    )
    return NormalizedCumulative(t, y, scale)


def normalize_series(series: ActivitySeries, pad_length: int = DEFAULT_PAD, epoch_month=None):
    return normalize(
        cumulative(series),
        pad_length,
        first_activity_month=series.start_month,
        epoch_month=epoch_month,
    )


def denormalize_series(nc: NormalizedCumulative) -> np.ndarray:
    """Recover the unpadded cumulative series from its normalized form."""
    return nc.y[nc.scale.pad_length:] * nc.scale.final_cumulative


def t_to_month(t, scale: ScaleInfo):
    """Map normalized time to a fractional month ordinal."""
    return scale.origin_month + np.asarray(t, dtype=float) * scale.months_per_unit


def month_to_t(month, scale: ScaleInfo):
    return (np.asarray(month, dtype=float) - scale.origin_month) / scale.months_per_unit


def denormalize_params(fit, scale: ScaleInfo) -> CalendarFit:
    """Express a normalized-unit sigmoid fit in calendar units.

    The amplitude is multiplied by the final cumulative activity, the
    inflection mapped onto the month axis, and the slope divided by the
    number of months per unit of normalized time.
    """
    return CalendarFit(
        amplitude=float(fit.amplitude * scale.final_cumulative),
        slope=float(fit.slope / scale.months_per_unit),
        inflection=float(t_to_month(fit.inflection, scale)),
        ln_slope=float(np.log(fit.slope)),
        saturation_status=float(fit.saturation_status),
        reduced_chi2=float(fit.reduced_chi2),
        converged=bool(fit.converged),
        final_cumulative=scale.final_cumulative,
        end_month=scale.end_month,
    )


def start_time_coordinate(first_activity_month, epoch_month: int, end_month: int, pad_length=DEFAULT_PAD):
    """Position of a start month on the dataset-wide normalized axis.

    The axis is the one an entity active since ``epoch_month`` would get, so
    the epoch sits at ``pad_length / (L - 1)`` and ``end_month`` at 1.
    """
    span = pad_length + end_month - epoch_month
    return (pad_length + np.asarray(first_activity_month, dtype=float) - epoch_month) / span
