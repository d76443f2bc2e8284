"""Draw a population from the analytic model and look at its size distribution.

Run: python demos/size_distribution.py
"""
import numpy as np

from sigmoidlife.dist import breakpoint_slope_line, fit_segmented_powerlaw, survival
from sigmoidlife.genmodel import sample_population, to_order_counts

pop = sample_population(6065, seed=1)
orders = to_order_counts(pop)
print("band shares:", np.round(np.bincount(pop.band) / len(pop), 3))
print(f"orders: median {np.median(orders):.0f}, max {orders.max()}")

fit = fit_segmented_powerlaw(survival(orders))
print(f"N(J) ~ J^-{fit.alpha1:.2f} below J*={fit.breakpoint:.0f}, J^-{fit.alpha2:.2f} above")

line = breakpoint_slope_line(fit, orders, pop.m_prime)
big = orders > fit.breakpoint
print(f"median ln slope near J*: {line:.2f}; "
      f"{np.mean(pop.m_prime[big] < line):.0%} of the {big.sum()} larger entities sit below it")
