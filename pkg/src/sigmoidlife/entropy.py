"""How spread out an entity's activity is across states (Shannon entropy, nats)."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .ingestion import DataError

__all__ = ["OccurrenceVector", "shannon_entropy", "entropy_by_entity"]


@dataclass(frozen=True)
class OccurrenceVector:
    labels: tuple
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 1 or len(self.labels) != counts.size:
            raise ValueError("labels and counts must have equal length")
        if np.any(~np.isfinite(counts)) or np.any(counts < 0):
            raise ValueError("counts must be finite and non-negative")
        if not counts.sum() > 0:
            raise ValueError("all-zero occurrence vector has no entropy")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_counts(cls, counts):
        counts = np.asarray(counts, dtype=float)
        return cls(tuple(range(counts.size)), counts)


def shannon_entropy(v) -> float:
    """``-sum p ln p`` over the normalized counts; empty states contribute 0.

    Accepts an :class:`OccurrenceVector` or a bare sequence of counts.
    """
    if not isinstance(v, OccurrenceVector):
        v = OccurrenceVector.from_counts(v)
    p = v.counts / v.counts.sum()
    # denormal counts can vanish here even when positive
    p = p[p > 0]
    h = -float(np.sum(p * np.log(p)))
    # A single state gives -0.0; rounding can leave a tiny negative too.
    return h if h > 0 else 0.0


def entropy_by_entity(records) -> dict[str, float]:
    """Entropy of each entity's total counts across states.

    Records are summed over months first.  Entities whose counts are all zero
    are dropped.
    """
    per_state: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
    for rec in records:
        if rec.state is None:
            raise DataError("entropy needs occurrence records with a state column")
        per_state[rec.entity_id][rec.state] += rec.count
    out = {}
    for eid in sorted(per_state):
        states = sorted(per_state[eid])
        counts = np.array([per_state[eid][s] for s in states])
        if counts.sum() > 0:
            out[eid] = shannon_entropy(OccurrenceVector(tuple(states), counts))
    return out
