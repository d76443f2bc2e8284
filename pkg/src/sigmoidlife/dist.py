"""Survival counts N(J), two-regime power-law fits, and scaling collapse.

``N(J)`` counts entities whose total activity is at least ``J``.  Power laws
are fitted by least squares on ``(log J, log N)``, using only the values of
``J`` at which some entity actually sits (where ``N`` steps down); the flat
stretches between occupied sizes carry no information and would otherwise
swamp the fit with tail points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "SurvivalDistribution",
    "SegmentedPowerLawFit",
    "CollapseResult",
    "NoOverlapError",
    "survival",
    "fit_segmented_powerlaw",
    "collapse_dispersion",
    "scaling_collapse",
    "breakpoint_slope_line",
]

MIN_SEGMENT_POINTS = 4
TWO_REGIME_RATIO = 0.9
COLLAPSE_BINS = 30


class NoOverlapError(ValueError):
    code = "no_overlap"


@dataclass(frozen=True)
class SurvivalDistribution:
    J: np.ndarray
    N: np.ndarray
    window_years: int | None = None

    def __post_init__(self):
        J = np.asarray(self.J)
        N = np.asarray(self.N)
        if J.shape != N.shape or J.ndim != 1 or J.size == 0:
            raise ValueError("J and N must be equal-length, non-empty 1-d arrays")
        if np.any(np.diff(J) <= 0) or J[0] <= 0:
            raise ValueError("J must be positive and strictly ascending")
        if np.any(N <= 0) or np.any(np.diff(N) > 0):
            raise ValueError("N must be positive and non-increasing")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "N", N)

    def __len__(self):
        return len(self.J)

    def support(self):
        """``(J, N)`` at the sizes some entity occupies (where N steps down)."""
        nxt = np.append(self.N[1:], 0)
        keep = self.N > nxt
        return self.J[keep], self.N[keep]

    def at(self, J):
        """N(J) for arbitrary positive J, zero past the largest size."""
        idx = np.searchsorted(self.J, J, side="left")
        N = np.append(self.N, 0)
        return N[np.minimum(idx, len(self.N))]


@dataclass(frozen=True)
class SegmentedPowerLawFit:
    alpha1: float
    alpha2: float
    breakpoint: float | None
    stderr1: float
    stderr2: float
    sse: float
    sse_single: float
    intercept: float
    n_points: int
    degenerate: bool

    def predict_log(self, J):
        """Fitted ``log N`` at ``J``."""
        x = np.log(np.asarray(J, dtype=float))
        y = self.intercept - self.alpha1 * x
        if not self.degenerate:
            y = y - (self.alpha2 - self.alpha1) * np.maximum(0.0, x - np.log(self.breakpoint))
        return y

    def to_dict(self):
        return {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "breakpoint": self.breakpoint,
            "stderr1": self.stderr1,
            "stderr2": self.stderr2,
            "sse": self.sse,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class CollapseResult:
    beta1: float
    beta2: float
    dispersion: float
    dispersion_unscaled: float

    def to_dict(self):
        return {"beta1": self.beta1, "beta2": self.beta2, "dispersion": self.dispersion}


def survival(sizes, window_years: int | None = None) -> SurvivalDistribution:
    """Number of entities with activity at least J, for J = 1 .. max(sizes)."""
    sizes = np.asarray(sizes)
    if sizes.size == 0:
        raise ValueError("survival of an empty population")
    if np.any(sizes != np.floor(sizes)) or np.any(sizes < 1):
        raise ValueError("sizes must be positive integers")
    counts = np.bincount(sizes.astype(np.int64))
    # N(J) = sum_{i >= J} n_i
    N = np.cumsum(counts[::-1])[::-1][1:]
    J = np.arange(1, len(counts))
    return SurvivalDistribution(J, N, window_years)


def _ols(x, y):
    xc = x - x.mean()
    sxx = xc @ xc
    slope = (xc @ (y - y.mean())) / sxx
    intercept = y.mean() - slope * x.mean()
    resid = y - intercept - slope * x
    sse = resid @ resid
    dof = x.size - 2
    stderr = np.sqrt(sse / dof / sxx) if dof > 0 else np.nan
    return intercept, slope, sse, stderr


def fit_segmented_powerlaw(
    dist: SurvivalDistribution,
    jmin: float = 1,
    *,
    nmin: float = 1,
    min_segment_points: int = MIN_SEGMENT_POINTS,
    ratio: float = TWO_REGIME_RATIO,
) -> SegmentedPowerLawFit:
    """Continuous two-segment line through ``(log J, log N)``.

    Every occupied J leaving at least ``min_segment_points`` points on each
    side is tried as the kink; the one with the smallest squared error wins.
    Unless that error is below ``ratio`` times the single-line error, the
    result is flagged ``degenerate`` and carries the single-line exponent in
    both slots.  Standard errors come from separate OLS fits per segment.

    ``nmin`` drops the sparsest tail points (``N < nmin``), whose log counts
    are dominated by rank discreteness.  The default keeps every point.
    """
    J, N = dist.support()
    keep = (J >= jmin) & (N >= nmin)
    x, y = np.log(J[keep].astype(float)), np.log(N[keep].astype(float))
    n = x.size
    if n < 2 * min_segment_points:
        raise ValueError(f"need at least {2 * min_segment_points} occupied sizes >= jmin, got {n}")

    a0, b0, sse_single, se0 = _ols(x, y)
    best = None
    ones = np.ones(n)
    for k in range(min_segment_points - 1, n - min_segment_points + 1):
        hinge = np.maximum(0.0, x - x[k])
        X = np.column_stack([ones, x, hinge])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        sse = resid @ resid
        if best is None or sse < best[0] - 1e-15:
            best = (sse, k, coef)

    sse, k, coef = best
    if not sse < ratio * sse_single:
        return SegmentedPowerLawFit(
            alpha1=float(-b0), alpha2=float(-b0), breakpoint=None,
            stderr1=float(se0), stderr2=float(se0), sse=float(sse_single),
            sse_single=float(sse_single), intercept=float(a0), n_points=n, degenerate=True,
        )
    _, _, _, se1 = _ols(x[: k + 1], y[: k + 1])
    _, _, _, se2 = _ols(x[k:], y[k:])
    return SegmentedPowerLawFit(
        alpha1=float(-coef[1]),
        alpha2=float(-(coef[1] + coef[2])),
        breakpoint=float(np.exp(x[k])),
        stderr1=float(se1),
        stderr2=float(se2),
        sse=float(sse),
        sse_single=float(sse_single),
        intercept=float(coef[0]),
        n_points=n,
        degenerate=False,
    )


def _log_curves(dists):
    curves = []
    for d in dists:
        if d.window_years is None or d.window_years <= 0:
            raise ValueError("scaling collapse needs a positive window_years on every distribution")
        J, N = d.support()
        curves.append((np.log(J.astype(float)), np.log(N.astype(float)), np.log(d.window_years)))
    return curves


def _dispersion(curves, beta1, beta2, bins):
    xs = [x - beta2 * ly for x, _, ly in curves]
    lo = max(x[0] for x in xs)
    hi = min(x[-1] for x in xs)
    if not hi > lo:
        return np.inf
    edges = np.linspace(lo, hi, bins + 1)
    centers = 0.5 * (edges[1:] + edges[:-1])
    stacked = np.vstack([np.interp(centers, x, y - beta1 * ly) for x, (_, y, ly) in zip(xs, curves)])
    return float(np.mean(np.var(stacked, axis=0)))


def collapse_dispersion(dists, beta1, beta2, bins: int = COLLAPSE_BINS) -> float:
    """Mean across-curve variance of ``log(N / Y**beta1)`` over ``log(J / Y**beta2)``.

    The curves are linearly interpolated at the centres of ``bins`` equal bins
    spanning the range covered by every rescaled curve.
    """
    value = _dispersion(_log_curves(dists), beta1, beta2, bins)
    if not np.isfinite(value):
        raise NoOverlapError(f"no_overlap: rescaled curves share no J range at beta=({beta1}, {beta2})")
    return value


def scaling_collapse(
    dists,
    *,
    bins: int = COLLAPSE_BINS,
    grid=np.linspace(0.0, 1.5, 31),
    start=(0.5, 0.5),
) -> CollapseResult:
    """Exponents ``(beta1, beta2)`` that best collapse ``N(Y, J) / Y**beta1`` onto ``f(J / Y**beta2)``.

    A coarse sweep over ``grid`` x ``grid`` is followed by Nelder-Mead
    refinement from both the best grid point and ``start``.
    """
    dists = list(dists)
    if len(dists) < 3:
        raise ValueError("scaling collapse needs at least three windows")
    curves = _log_curves(dists)
    base = _dispersion(curves, 0.0, 0.0, bins)
    if not np.isfinite(base):
        raise NoOverlapError("no_overlap: curves have disjoint supports")

    def objective(b):
        return _dispersion(curves, b[0], b[1], bins)

    best_val, best = base, np.zeros(2)
    for b1 in grid:
        for b2 in grid:
            v = objective((b1, b2))
            if v < best_val:
                best_val, best = v, np.array([b1, b2])
    for x0 in (best, np.asarray(start, float)):
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-6, "fatol": 1e-14, "maxiter": 2000})
        if res.fun < best_val:
            best_val, best = float(res.fun), res.x
    return CollapseResult(float(best[0]), float(best[1]), float(best_val), float(base))


def breakpoint_slope_line(fit: SegmentedPowerLawFit, totals, ln_slopes, band: float = 0.25) -> float:
    """Median ln(slope) of entities whose total activity sits near the breakpoint.

    "Near" means ``|ln(total) - ln(J*)| <= band``; an empty band is widened
    once to twice its width before giving up.
    """
    if fit.degenerate or fit.breakpoint is None:
        raise ValueError("fit has no breakpoint")
    totals = np.asarray(totals, dtype=float)
    ln_slopes = np.asarray(ln_slopes, dtype=float)
    dist_ln = np.abs(np.log(totals) - np.log(fit.breakpoint))
    for width in (band, 2 * band):
        sel = dist_ln <= width
        if sel.any():
            return float(np.median(ln_slopes[sel]))
    raise ValueError(f"no entities within a factor exp({2 * band}) of the breakpoint")
