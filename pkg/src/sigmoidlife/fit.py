"""Three-parameter logistic fits to normalized cumulative series.

The model is ``y(t) = A / (1 + exp(-m (t - t0)))``.  Fitting is plain
unweighted least squares, solved by a Levenberg-Marquardt iteration with an
analytic Jacobian.  ``A`` and ``m`` are optimized on a log scale, which keeps
them positive; upper bounds and the box on ``t0`` are enforced by clamping
with an active set.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .series import DEFAULT_PAD, NormalizedCumulative

__all__ = [
    "FitOptions",
    "SigmoidFit",
    "LinearFit",
    "Saturation",
    "InsufficientDataError",
    "sigmoid_eval",
    "fit_sigmoid",
    "fit_linear",
    "classify",
    "initial_guess",
]

# exp(-z) overflows double precision past z ~ -709.
_Z_CLIP = 700.0


class InsufficientDataError(ValueError):
    code = "insufficient_data"


class Saturation(str, enum.Enum):
    SATURATED = "saturated"
    UNSATURATED = "unsaturated"


@dataclass(frozen=True)
class FitOptions:
    """Knobs for :func:`fit_sigmoid`.

    Bounds are in normalized units.  ``slope_max = e**9.5`` places the fits of
    single-step series (one order, then nothing) at ln(slope) a little above
    9.
    """

    pad_length: int = DEFAULT_PAD
    amplitude_max: float = 10.0
    slope_max: float = math.exp(9.5)
    inflection_min: float = 0.0
    inflection_max: float = 2.0
    xtol: float = 1e-10
    gtol: float = 1e-12
    max_iter: int = 200
    restart_scales: tuple = (0.1, 0.5, 2.0, 10.0, 50.0)
    # Run the restart ladder even when the first start converges.  Sparse,
    # step-like series can have several basins; this costs ~6x per fit.
    always_restart: bool = False
    # Floors only protect the log transform from -inf.
    amplitude_min: float = 1e-12
    slope_min: float = 1e-8

    @classmethod
    def from_mapping(cls, mapping) -> "FitOptions":
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown fit option(s): {', '.join(sorted(unknown))}")
        kw = dict(mapping)
        if "restart_scales" in kw:
            kw["restart_scales"] = tuple(float(s) for s in kw["restart_scales"])
        return replace(cls(), **kw)


@dataclass(frozen=True)
class SigmoidFit:
    amplitude: float
    slope: float
    inflection: float
    rss: float
    reduced_chi2: float
    saturation_status: float
    converged: bool
    iterations: int
    n_points: int

    @property
    def params(self):
        return self.amplitude, self.slope, self.inflection

    def __call__(self, t):
        return sigmoid_eval(self.amplitude, self.slope, self.inflection, t)


@dataclass(frozen=True)
class LinearFit:
    intercept: float
    slope: float
    rss: float
    reduced_chi2: float

    def __call__(self, t):
        return self.intercept + self.slope * np.asarray(t, dtype=float)


def sigmoid_eval(A, m, t0, t):
    """Logistic curve ``A / (1 + exp(-m (t - t0)))``, safe for any exponent."""
    z = np.clip(m * (np.asarray(t, dtype=float) - t0), -_Z_CLIP, _Z_CLIP)
    out = A / (1.0 + np.exp(-z))
    return out if out.ndim else float(out)


def _as_arrays(series):
    if isinstance(series, NormalizedCumulative):
        return np.asarray(series.t, float), np.asarray(series.y, float)
    t, y = series
    return np.asarray(t, float), np.asarray(y, float)


def initial_guess(t, y):
    """Starting point from the data's final level, half-rise time and steepest step."""
    y_final = y[-1]
    A0 = 1.05 * y_final
    t0 = t[np.argmax(y >= 0.5 * y_final)]
    max_slope = np.max(np.diff(y) / np.diff(t))
    m0 = 4.0 * max_slope / A0 if max_slope > 0 else 1.0
    return A0, m0, t0


class _Problem:
    def __init__(self, t, y, opts: FitOptions):
        self.t, self.y, self.opts = t, y, opts
        self.lower = np.array([math.log(opts.amplitude_min), math.log(opts.slope_min), opts.inflection_min])
        self.upper = np.array([math.log(opts.amplitude_max), math.log(opts.slope_max), opts.inflection_max])

    def clamp(self, p):
        return np.minimum(np.maximum(p, self.lower), self.upper)

    def evaluate(self, p):
        """Residual ``y - model`` and the logistic factor it was built from."""
        A, m = math.exp(p[0]), math.exp(p[1])
        z = m * (self.t - p[2])
        np.clip(z, -_Z_CLIP, _Z_CLIP, out=z)
        s = 1.0 / (1.0 + np.exp(-z))
        return self.y - A * s, s

    def jacobian(self, p, s):
        """Jacobian of the model (not the residual) in (log A, log m, t0)."""
        A, m = math.exp(p[0]), math.exp(p[1])
        As = A * s
        core = As * (1.0 - s) * m
        return np.stack([As, core * (self.t - p[2]), -core])


def _lm(prob: _Problem, p0):
    """Levenberg-Marquardt with Marquardt scaling; returns (p, cost, converged, iterations)."""
    opts = prob.opts
    p = prob.clamp(np.asarray(p0, float))
    r, s = prob.evaluate(p)
    cost = r @ r
    lam = 1e-3
    converged = False
    it = 0
    while it < opts.max_iter:
        it += 1
        Jt = prob.jacobian(p, s)
        g = Jt @ r
        JTJ = Jt @ Jt.T
        # Coordinates pinned at a bound with the descent direction pointing out.
        pinned = ((p <= prob.lower) & (g < 0)) | ((p >= prob.upper) & (g > 0))
        free = ~pinned
        if not free.any() or np.max(np.abs(g[free])) < opts.gtol:
            converged = True
            break
        if pinned.any():
            H = JTJ[np.ix_(free, free)]
            gf = g[free]
        else:
            H, gf = JTJ, g
        d = np.diag(H).copy()
        d[d <= 0] = 1e-300
        accepted = False
        while lam < 1e20:
            try:
                delta = np.linalg.solve(H + np.diag(lam * d), gf)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if pinned.any():
                step = np.zeros(3)
                step[free] = delta
            else:
                step = delta
            p_new = prob.clamp(p + step)
            small = np.linalg.norm(p_new - p) <= opts.xtol * (np.linalg.norm(p) + opts.xtol)
            r_new, s_new = prob.evaluate(p_new)
            cost_new = r_new @ r_new
            if cost_new <= cost and not small:
                p, r, s, cost = p_new, r_new, s_new, cost_new
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                break
            if small:
                # Any further damping only shrinks the step: numerically at a minimum.
                if cost_new <= cost:
                    p, r, s, cost = p_new, r_new, s_new, cost_new
                converged = True
                break
            lam *= 10.0
        if converged or not accepted:
            break
    return p, cost, converged, it


def fit_sigmoid(series, opts: FitOptions | None = None) -> SigmoidFit:
    """Least-squares logistic fit.

    Parameters
    ----------
    series : NormalizedCumulative or (t, y) pair
    opts : FitOptions, optional

    Returns
    -------
    SigmoidFit
        Parameters in the units of ``series``.  If the first start fails to
        converge (or ``opts.always_restart`` is set), the restart ladder
        rescales the initial slope; the lowest residual among converged runs
        is kept, ties going to the smaller slope.
    """
    opts = opts or FitOptions()
    t, y = _as_arrays(series)
    n = t.size
    if n < 4:
        raise InsufficientDataError(f"insufficient_data: {n} points, need at least 4")
    if not np.any(y > 0):
        raise InsufficientDataError("insufficient_data: no nonzero values")
    prob = _Problem(t, y, opts)
    A0, m0, t00 = initial_guess(t, y)
    start = np.array([math.log(A0), math.log(m0), t00])

    runs = [(*_lm(prob, start), 1.0)]
    if opts.always_restart or not runs[0][2]:
        for k in opts.restart_scales:
            s = start.copy()
            s[1] += math.log(k)
            runs.append((*_lm(prob, s), k))
    pool = [r for r in runs if r[2]] or runs
    best_cost = min(r[1] for r in pool)
    tied = [r for r in pool if r[1] <= best_cost + 1e-12]
    p, cost, converged, _, _ = min(tied, key=lambda r: r[0][1])
    iterations = sum(r[3] for r in runs)

    A, m, t0 = math.exp(p[0]), math.exp(p[1]), float(p[2])
    y_final = y[-1] if y[-1] > 0 else np.max(y)
    return SigmoidFit(
        amplitude=A,
        slope=m,
        inflection=t0,
        rss=float(cost),
        reduced_chi2=float(cost / (n - 3)) if n > 3 else float("nan"),
        saturation_status=float(A / y_final),
        converged=bool(converged),
        iterations=int(iterations),
        n_points=int(n),
    )


def fit_linear(series) -> LinearFit:
    """Ordinary least-squares line with reduced chi-square ``RSS / (L - 2)``."""
    t, y = _as_arrays(series)
    if t.size < 3:
        raise InsufficientDataError("insufficient_data: need at least 3 points")
    tc = t - t.mean()
    sxx = tc @ tc
    if sxx == 0:
        raise ValueError("degenerate abscissa: all t values are equal")
    slope = (tc @ (y - y.mean())) / sxx
    intercept = y.mean() - slope * t.mean()
    resid = y - (intercept + slope * t)
    rss = float(resid @ resid)
    return LinearFit(float(intercept), float(slope), rss, rss / (t.size - 2))


def classify(fit) -> Saturation:
    """Saturated when the amplitude does not exceed the observed final level."""
    return Saturation.SATURATED if fit.saturation_status <= 1.0 else Saturation.UNSATURATED
