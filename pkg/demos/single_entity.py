"""Follow one simulated customer year by year.

Run: python demos/single_entity.py
"""
import numpy as np

from sigmoidlife.ingestion import ObservationWindow, bin_monthly, month_label, month_ordinal
from sigmoidlife.lifepath import expanding_window_fits, stabilization_year
from sigmoidlife.simulate import events_from_months, logistic_order_times

rng = np.random.default_rng(0)
window = ObservationWindow(month_ordinal(2000, 1), month_ordinal(2016, 12))

# 120 orders, fastest around mid 2007, roughly a four-year active span
times = logistic_order_times(rng, 120, month_ordinal(2007, 6), 0.12)
months = np.floor(times).astype(int)
months = months[(months >= window.epoch_month) & (months <= window.end_month)]
series = bin_monthly(events_from_months("C42", months), window)["C42"]
print(f"first order {month_label(series.start_month)}, last {month_label(series.last_active_month)}, "
      f"{series.total} orders")

path = expanding_window_fits(series, range(2004, 2017))
print(f"{'year':>4} {'amplitude':>9} {'ln slope':>8} {'inflection':>10} {'leave':>8}  status")
for p in path:
    print(f"{p.analysis_year:>4} {p.fit.amplitude:9.1f} {p.ln_slope:8.3f} {p.inflection_year:10.2f} "
          f"{p.expected_leave:8.2f}  {p.status.value}")
print("parameters settle in", stabilization_year(path))
