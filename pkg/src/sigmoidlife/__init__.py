"""Logistic lifecycle analysis of per-entity activity streams."""
from .dist import SurvivalDistribution, fit_segmented_powerlaw, scaling_collapse, survival
from .entropy import OccurrenceVector, shannon_entropy
from .fit import FitOptions, SigmoidFit, fit_linear, fit_sigmoid
from .genmodel import GenerativeModelParams, density, sample_population
from .ingestion import ActivitySeries, bin_monthly, bin_occurrences, parse_events, parse_occurrences
from .lifepath import Lifepath, expanding_window_fits, expected_leave_time
from .series import cumulative, normalize
from .validate import CohortReport, score_cohort, select_cohort

__version__ = "0.1.0"
