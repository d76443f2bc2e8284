"""Analytic probability model over (start time, ln slope, ln amplitude).

The joint density factorizes as ``p(t0, m', A') = p(A'|m',t0) p(m'|t0) p(t0)``:

* ``t0`` (start time on the normalized axis) is uniform on ``[t0a, t0b]``;
* ``m'`` (ln of the normalized slope) falls in one of three bands with fixed
  weights and is uniform inside its band.  The first band starts at
  ``n0 + exp(n1 * t0**4)``, so it depends on ``t0``; the ranges between the
  bands carry no probability;
* ``A'`` (ln of total activity) is normal.  In the first band its mean is a
  quadratic in ``m'`` and its spread linear in ``m'``, truncated to
  ``A' >= 0``; the other bands share one fixed normal.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy.special import ndtr

__all__ = [
    "GenerativeModelParams",
    "EntityParams",
    "Population",
    "m_prime_floor",
    "band_edges",
    "density",
    "sample_population",
    "to_order_counts",
    "load_params",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GenerativeModelParams:
    """Model constants, calibrated at an analysis time of 2017.

    ``slope_bands`` lists the fixed upper edge of the first band followed by
    the (lower, upper) edges of the remaining bands.
    """

    t0a: float = 0.32
    t0b: float = 1.0
    regime_weights: tuple = (0.57, 0.03, 0.40)
    band1_upper: float = 6.5
    slope_bands: tuple = ((8.9, 9.1), (9.3, 9.4))
    n0: float = 0.5
    n1: float = 1.5
    a0: float = 0.13
    a1: float = -2.12
    a2: float = 9.86
    b0: float = -0.20
    b1: float = 1.93
    mu2: float = 1.0
    sigma2: float = field(default=math.log(1.5))

    def __post_init__(self):
        w = tuple(float(x) for x in self.regime_weights)
        bands = tuple(tuple(float(e) for e in b) for b in self.slope_bands)
        object.__setattr__(self, "regime_weights", w)
        object.__setattr__(self, "slope_bands", bands)
        if len(w) != 1 + len(bands):
            raise ValueError("need one weight per slope band")
        if any(x < 0 for x in w) or not math.isclose(sum(w), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"regime weights must be non-negative and sum to 1, got {w}")
        if not self.t0a < self.t0b:
            raise ValueError("t0a must be below t0b")
        floor_hi = m_prime_floor(self.t0b, self)
        floor_lo = m_prime_floor(max(self.t0a, 0.0), self)
        if not floor_hi < self.band1_upper:
            raise ValueError("first slope band is empty for some admissible t0")
        for lo, hi in bands:
            if not lo < hi:
                raise ValueError(f"bad slope band ({lo}, {hi})")
        # sigma1 is linear in m', so checking both ends of the band suffices.
        for m in (min(floor_lo, floor_hi), self.band1_upper):
            if not self.b0 * m + self.b1 > 0:
                raise ValueError(f"sigma1 is not positive at m'={m}")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")

    @classmethod
    def from_mapping(cls, mapping) -> "GenerativeModelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown model parameter(s): {', '.join(sorted(unknown))}")
        return replace(cls(), **mapping)

    def to_dict(self):
        d = asdict(self)
        d["regime_weights"] = list(self.regime_weights)
        d["slope_bands"] = [list(b) for b in self.slope_bands]
        return d

    def mu1(self, m):
        return self.a0 * m * m + self.a1 * m + self.a2

    def sigma1(self, m):
        return self.b0 * m + self.b1


def load_params(path) -> GenerativeModelParams:
    with open(path, encoding="utf-8") as fh:
        return GenerativeModelParams.from_mapping(json.load(fh))


@dataclass(frozen=True)
class EntityParams:
    t0: float
    m_prime: float
    A_prime: float


def m_prime_floor(t0, model: GenerativeModelParams | None = None):
    """Lower edge of the first ln-slope band, ``n0 + exp(n1 * t0**4)``."""
    model = model or DEFAULT_PARAMS
    return model.n0 + np.exp(model.n1 * np.asarray(t0, dtype=float) ** 4)


DEFAULT_PARAMS = GenerativeModelParams()


def band_edges(t0, model: GenerativeModelParams = DEFAULT_PARAMS):
    """``[(lo, hi), ...]`` for every band at start time ``t0``."""
    return [(float(m_prime_floor(t0, model)), model.band1_upper), *model.slope_bands]


def _normal_pdf(x, mu, sigma):
    return np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (_SQRT_2PI * sigma)


def density(t0, m_prime, A_prime, model: GenerativeModelParams = DEFAULT_PARAMS):
    """Joint density ``p(t0, m', A')``; zero outside the support.

    Broadcasts over array arguments.  Bands are half-open, ``(lo, hi]``.
    """
    t0, m, a = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t0, m_prime, A_prime)))
    in_t = (t0 >= model.t0a) & (t0 <= model.t0b)
    p_t = np.where(in_t, 1.0 / (model.t0b - model.t0a), 0.0)

    floor = m_prime_floor(np.clip(t0, model.t0a, model.t0b), model)
    w = model.regime_weights
    in1 = (m > floor) & (m <= model.band1_upper)
    p_m = np.where(in1, w[0] / np.maximum(model.band1_upper - floor, 1e-300), 0.0)
    for wk, (lo, hi) in zip(w[1:], model.slope_bands):
        p_m = np.where((m > lo) & (m <= hi), wk / (hi - lo), p_m)

    mu1 = model.mu1(m)
    sd1 = np.where(in1, model.sigma1(m), 1.0)
    # Truncation at A' >= 0: renormalize by the kept mass.
    p_a1 = np.where(a >= 0, _normal_pdf(a, mu1, sd1) / ndtr(mu1 / sd1), 0.0)
    p_a2 = _normal_pdf(a, model.mu2, model.sigma2)
    p_a = np.where(in1, p_a1, p_a2)

    out = p_t * p_m * p_a
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Population:
    """Columnar sample of entity parameters; ``band`` is the 0-based slope band."""

    t0: np.ndarray
    m_prime: np.ndarray
    A_prime: np.ndarray
    band: np.ndarray

    def __len__(self):
        return len(self.t0)

    def __getitem__(self, i):
        return EntityParams(float(self.t0[i]), float(self.m_prime[i]), float(self.A_prime[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def sample_population(n: int, model: GenerativeModelParams = DEFAULT_PARAMS, seed=None) -> Population:
    """Draw ``n`` i.i.d. entities; deterministic for a given ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    t0 = rng.uniform(model.t0a, model.t0b, n)
    band = rng.choice(len(model.regime_weights), size=n, p=np.asarray(model.regime_weights))

    lo = np.empty(n)
    hi = np.empty(n)
    first = band == 0
    lo[first] = m_prime_floor(t0[first], model)
    hi[first] = model.band1_upper
    for k, (blo, bhi) in enumerate(model.slope_bands, start=1):
        sel = band == k
        lo[sel], hi[sel] = blo, bhi
    m = rng.uniform(lo, hi)

    mu = np.where(first, model.mu1(m), model.mu2)
    sd = np.where(first, model.sigma1(m), model.sigma2)
    a = rng.normal(mu, sd)
    redo = first & (a < 0)
    while redo.any():
        a[redo] = rng.normal(mu[redo], sd[redo])
        redo &= a < 0
    return Population(t0, m, a, band)


def to_order_counts(population) -> np.ndarray:
    """Total activity per entity, ``max(1, round(exp(A')))``."""
    a = population.A_prime if isinstance(population, Population) else np.array(
        [p.A_prime for p in population], dtype=float
    )
    if a.size == 0:
        raise ValueError("empty population")
    return np.maximum(1, np.floor(np.exp(a) + 0.5)).astype(np.int64)
