"""Synthetic order streams drawn from the logistic model.

An entity with planted ``(A, m, t0)`` places ``A`` orders whose times are
i.i.d. draws from the logistic distribution with location ``t0`` and rate
``m`` (per month), i.e. its expected cumulative curve is exactly the model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingestion import EventRecord, month_ordinal

__all__ = [
    "logistic_order_times",
    "events_from_months",
    "PlantedEntity",
    "simulate_cohort",
    "simulate_population",
]


def logistic_order_times(rng: np.random.Generator, n: int, inflection_month: float, slope_per_month: float):
    """``n`` sorted order times (fractional month ordinals)."""
    u = rng.random(n)
    # u == 0 has probability ~1e-16 per draw; nudge it off the pole anyway.
    u = np.clip(u, 1e-15, 1 - 1e-15)
    return np.sort(inflection_month + np.log(u / (1.0 - u)) / slope_per_month)


def events_from_months(entity_id: str, months) -> list[EventRecord]:
    return [EventRecord(entity_id, int(m)) for m in months]


@dataclass(frozen=True)
class PlantedEntity:
    entity_id: str
    n_orders: int
    slope: float
    inflection: float
    first_month: int
    last_month: int


def _draw_sizes_and_slopes(rng, n, size_range, scale_range_months):
    lo, hi = np.log(size_range[0]), np.log(size_range[1])
    sizes = np.floor(np.exp(rng.uniform(lo, hi, n)) + 0.5).astype(int)
    s_lo, s_hi = np.log(scale_range_months[0]), np.log(scale_range_months[1])
    slopes = 1.0 / np.exp(rng.uniform(s_lo, s_hi, n))
    return sizes, slopes


def simulate_cohort(
    n_entities: int,
    leave_year: int,
    *,
    seed: int,
    epoch_month: int,
    size_range=(3, 300),
    scale_range_months=(1.0, 12.0),
    prefix: str = "E",
):
    """Entities whose last order falls in ``leave_year``.

    Sizes are log-uniform over ``size_range`` and the logistic time scale
    ``1/m`` log-uniform over ``scale_range_months``.  Each stream is shifted
    so that its final order lands in a uniformly chosen month of the leave
    year; orders falling before ``epoch_month`` are dropped.

    Returns
    -------
    events : list of EventRecord
    truth : list of PlantedEntity
    """
    rng = np.random.default_rng(seed)
    sizes, slopes = _draw_sizes_and_slopes(rng, n_entities, size_range, scale_range_months)
    width = len(str(n_entities - 1))
    events, truth = [], []
    for i, (n, m) in enumerate(zip(sizes, slopes)):
        times = logistic_order_times(rng, n, 0.0, m)
        target = month_ordinal(leave_year, 1) + rng.integers(12) + rng.random()
        shift = target - times[-1]
        months = np.floor(times + shift).astype(int)
        months = months[months >= epoch_month]
        eid = f"{prefix}{i:0{width}d}"
        events.extend(events_from_months(eid, months))
        truth.append(PlantedEntity(eid, len(months), float(m), float(shift), int(months[0]), int(months[-1])))
    return events, truth


def simulate_population(
    n_entities: int,
    *,
    seed: int,
    epoch_month: int,
    end_month: int,
    size_range=(1, 300),
    scale_range_months=(1.0, 24.0),
    prefix: str = "P",
):
    """Entities with inflection times spread uniformly over the window.

    Orders after ``end_month`` or before ``epoch_month`` are unobserved and
    dropped; entities left with no observed orders are redrawn.
    """
    rng = np.random.default_rng(seed)
    width = len(str(n_entities - 1))
    events, truth = [], []
    i = 0
    while len(truth) < n_entities:
        (n,), (m,) = _draw_sizes_and_slopes(rng, 1, size_range, scale_range_months)
        t0 = rng.uniform(epoch_month, end_month + 1)
        months = np.floor(logistic_order_times(rng, n, t0, m)).astype(int)
        months = months[(months >= epoch_month) & (months <= end_month)]
        if months.size == 0:
            continue
        eid = f"{prefix}{i:0{width}d}"
        i += 1
        events.extend(events_from_months(eid, months))
        truth.append(PlantedEntity(eid, len(months), float(m), float(t0), int(months[0]), int(months[-1])))
    return events, truth
