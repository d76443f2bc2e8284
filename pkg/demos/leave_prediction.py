"""How early can we tell that a customer is leaving?

A cohort of simulated customers all place their last order in 2009.  Each
is refitted at the end of every year and the predicted leaving dates are
scored against the truth.

Run: python demos/leave_prediction.py   (about a second per 50 customers)
"""
from sigmoidlife.ingestion import ObservationWindow, bin_monthly, month_ordinal
from sigmoidlife.lifepath import expanding_window_fits
from sigmoidlife.simulate import simulate_cohort
from sigmoidlife.validate import score_cohort, select_cohort

epoch, end = month_ordinal(1999, 11), month_ordinal(2017, 9)
events, _ = simulate_cohort(200, 2009, seed=3, epoch_month=epoch)
series = bin_monthly(events, ObservationWindow(epoch, end))
paths = [expanding_window_fits(s, range(2004, 2013)) for s in series.values()]

report = score_cohort(select_cohort(paths, 2009), 2009)
print(f"cohort of {report.cohort_size}")
print("year  within 1y  within 2y  mean error (y)")
for year, s in sorted(report.per_year.items()):
    print(f"{year}  {s.within_1yr:9.2f}  {s.within_2yr:9.2f}  {s.mean_error:+14.2f}")
