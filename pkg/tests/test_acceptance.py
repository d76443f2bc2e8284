"""Numbered acceptance criteria; each prints PASS/FAIL in the terminal summary."""
import filecmp
import math
import time

import numpy as np
import pytest

from conftest import write_events
from oracles import band_masses
from sigmoidlife.cli import main
from sigmoidlife.dist import SurvivalDistribution, fit_segmented_powerlaw, scaling_collapse, survival
from sigmoidlife.entropy import shannon_entropy
from sigmoidlife.fit import fit_linear, fit_sigmoid, sigmoid_eval
from sigmoidlife.genmodel import sample_population, to_order_counts
from sigmoidlife.ingestion import ActivitySeries, ObservationWindow, bin_monthly, month_ordinal
from sigmoidlife.lifepath import expanding_window_fits, trajectory_step_distance
from sigmoidlife.simulate import simulate_cohort, simulate_population
from sigmoidlife.validate import score_cohort, select_cohort

T220 = np.linspace(0.0, 1.0, 220)
TRUE = np.array([1.0, 20.0, 0.5])


@pytest.mark.acceptance(1, "sigmoid recovery")
def test_noiseless_recovery_and_speed():
    y = sigmoid_eval(*TRUE, T220)
    fit = fit_sigmoid((T220, y))
    assert np.all(np.abs(np.array(fit.params) / TRUE - 1) < 1e-6)
    times = []
    for _ in range(50):
        t = time.perf_counter()
        fit_sigmoid((T220, y))
        times.append(time.perf_counter() - t)
    print(f"median fit time {1e3 * np.median(times):.3f} ms")
    assert np.median(times) < 0.010


@pytest.mark.acceptance(1, "sigmoid recovery")
def test_noisy_recovery():
    rng = np.random.default_rng(1)
    clean = sigmoid_eval(*TRUE, T220)
    errs, conv = [], []
    for _ in range(1000):
        fit = fit_sigmoid((T220, clean + rng.normal(0, 0.01, T220.size)))
        errs.append(np.abs(np.array(fit.params) / TRUE - 1))
        conv.append(fit.converged)
    med = np.median(errs, axis=0)
    print(f"median relative errors A={med[0]:.4%} m={med[1]:.4%} t0={med[2]:.4%}, converged {np.mean(conv):.3f}")
    assert np.all(med < 0.02)
    assert np.mean(conv) >= 0.99


@pytest.mark.acceptance(2, "sigmoid beats linear reduced chi-square")
def test_chi2_dominance():
    rng = np.random.default_rng(2)
    wins = 0
    for _ in range(1000):
        A, m, t0 = rng.uniform(0.5, 2.0), rng.uniform(5.0, 50.0), rng.uniform(0.2, 0.8)
        y = sigmoid_eval(A, m, t0, T220) + rng.normal(0, 0.01, T220.size)
        wins += fit_sigmoid((T220, y)).reduced_chi2 < fit_linear((T220, y)).reduced_chi2
    print(f"sigmoid wins {wins}/1000")
    assert wins >= 990


def two_regime_sizes(n=5000, a1=0.49, a2=1.38, kink=50.0):
    # floor of the inverse survival function at evenly spaced probabilities
    u = (np.arange(n) + 0.5) / n
    s_kink = kink ** -a1
    J = np.where(u > s_kink, u ** (-1 / a1), kink * (u / s_kink) ** (-1 / a2))
    return np.floor(J).astype(np.int64)


@pytest.mark.acceptance(3, "segmented power law")
def test_segmented_recovery():
    fit = fit_segmented_powerlaw(survival(two_regime_sizes()))
    print(f"alpha1={fit.alpha1:.3f} alpha2={fit.alpha2:.3f} J*={fit.breakpoint:g}")
    assert not fit.degenerate
    assert abs(fit.alpha1 - 0.49) <= 0.05
    assert abs(fit.alpha2 - 1.38) <= 0.10
    assert 40 <= fit.breakpoint <= 62


@pytest.mark.acceptance(3, "segmented power law")
def test_single_power_law_degenerate():
    J = np.arange(1, 1001)
    fit = fit_segmented_powerlaw(SurvivalDistribution(J, 1000.0 / J))
    assert fit.degenerate


def collapse_family(b1=0.52, b2=0.60, years=range(1, 19)):
    def g(u):
        return 1000 * u ** -0.49 * (1 + u / 30) ** -0.89

    dists = []
    for y in years:
        J = np.arange(1, 20000, dtype=float)
        N = y ** b1 * g(J / y ** b2)
        keep = N >= 1
        dists.append(SurvivalDistribution(J[keep], N[keep], window_years=y))
    return dists


@pytest.mark.acceptance(4, "scaling collapse")
def test_scaling_collapse():
    dists = collapse_family()
    t = time.perf_counter()
    res = scaling_collapse(dists)
    elapsed = time.perf_counter() - t
    print(f"beta=({res.beta1:.4f}, {res.beta2:.4f}) dispersion {res.dispersion:.3g} "
          f"vs {res.dispersion_unscaled:.3g} unscaled, {elapsed:.2f} s")
    assert abs(res.beta1 - 0.52) <= 0.05
    assert abs(res.beta2 - 0.60) <= 0.05
    assert res.dispersion < 0.1 * res.dispersion_unscaled
    assert elapsed < 5.0


@pytest.mark.acceptance(5, "generative model")
def test_density_normalized():
    total = sum(band_masses())
    print(f"integral {total:.9f}")
    assert abs(total - 1) <= 1e-3


@pytest.mark.acceptance(5, "generative model")
def test_band_frequencies():
    pop = sample_population(100_000, seed=5)
    freq = np.bincount(pop.band, minlength=3) / len(pop)
    print("band frequencies", np.round(freq, 4))
    assert np.all(np.abs(freq - (0.57, 0.03, 0.40)) <= 0.01)


@pytest.mark.acceptance(5, "generative model")
def test_population_closure():
    orders = to_order_counts(sample_population(6065, seed=1))
    fit = fit_segmented_powerlaw(survival(orders))
    print(f"alpha1={fit.alpha1:.3f} alpha2={fit.alpha2:.3f} J*={fit.breakpoint}")
    assert not fit.degenerate


@pytest.mark.acceptance(6, "prediction harness")
def test_prediction_harness():
    leave_year = 2009
    epoch, end = month_ordinal(1999, 11), month_ordinal(2017, 9)
    events, truth = simulate_cohort(500, leave_year, seed=1, epoch_month=epoch)
    series = bin_monthly(events, ObservationWindow(epoch, end))
    years = range(leave_year - 5, leave_year + 1)
    paths = [expanding_window_fits(series[k], years) for k in sorted(series)]
    cohort = select_cohort(paths, leave_year)
    assert len(cohort) == 500
    report = score_cohort(cohort, leave_year)
    for y, s in report.per_year.items():
        print(f"{y}: n={s.n} within_1yr={s.within_1yr:.3f} within_2yr={s.within_2yr:.3f} "
              f"mean_error={s.mean_error:+.3f}")
        assert s.within_2yr >= s.within_1yr
    assert report.per_year[leave_year].within_1yr >= 0.80
    final = [abs(report.per_year[y].mean_error) for y in years[-3:]]
    assert all(b <= a for a, b in zip(final, final[1:]))


def frozen(A, m, t0_month, end):
    start = int(t0_month - 45 / m)
    cum = sigmoid_eval(A, m, t0_month, np.arange(start, end + 1))
    return ActivitySeries(f"A{A}m{m}", start, np.diff(cum, prepend=0.0))


@pytest.mark.acceptance(7, "stabilization of frozen entities")
def test_frozen_entities_stabilize():
    end = month_ordinal(2016, 12)
    worst_step, worst_spread = 0.0, 0.0
    for A, m, t0 in [(50, 0.5, (2004, 6)), (8, 0.9, (2006, 2)), (400, 0.4, (2003, 9)), (3, 1.5, (2007, 11))]:
        s = frozen(A, m, month_ordinal(*t0), end)
        flat_year = (month_ordinal(*t0) + int(40 / m)) // 12 + 1
        path = expanding_window_fits(s, range(flat_year, 2017))
        assert len(path) >= 3
        steps = [trajectory_step_distance(a, b) for a, b in zip(path.points, path.points[1:])]
        leaves = [p.expected_leave for p in path]
        worst_step = max(worst_step, max(steps))
        worst_spread = max(worst_spread, max(leaves) - min(leaves))
    print(f"largest step {worst_step:.2e}, largest expected_leave spread {worst_spread:.2e} yr")
    assert worst_step < 1e-3
    assert worst_spread <= 0.1


@pytest.mark.acceptance(8, "entropy")
def test_entropy():
    for n in (2, 4, 16):
        assert abs(shannon_entropy([1.0] * n) - math.log(n)) <= 1e-12
    assert shannon_entropy([7, 0, 0, 0]) == 0.0
    c = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
    assert abs(shannon_entropy(c * 1e3) - shannon_entropy(c)) <= 1e-12


@pytest.mark.acceptance(9, "determinism")
def test_sample_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["sample", "--seed", "42", "--out", str(out)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert mismatch == [] and errors == []


@pytest.mark.acceptance(9, "determinism")
def test_lifepath_parallel_matches_serial(tmp_path):
    events, _ = simulate_population(60, seed=9, epoch_month=month_ordinal(2000, 1),
                                    end_month=month_ordinal(2012, 12))
    path = write_events(tmp_path / "events.csv", events)
    outs = []
    for jobs in ("1", "8"):
        out = tmp_path / f"jobs{jobs}"
        assert main(["lifepath", "--input", str(path), "--jobs", jobs, "--out", str(out)]) == 0
        outs.append((out / "lifepath.csv").read_bytes())
    assert outs[0] == outs[1]
