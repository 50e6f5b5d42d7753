"""Adverse events: yearly occurrence, affected subset, condition impact."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import CONDITION_MAX, CONDITION_MIN, AdverseEventSpec
from .sampling import sample_range, sample_range_array, sample_weibull

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class EventOccurrence:
    year: int
    event_name: str
    n_affected: int
    total_condition_loss: float
    sampled_fraction: float
    sampled_impact_mean: float


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def sample_mean_time(rng: np.random.Generator, spec: AdverseEventSpec) -> float:
    return sample_range(rng, spec.mean_time, spec.mean_time_sampling, _TINY, math.inf)


def event_occurs_this_year(rng: np.random.Generator, spec: AdverseEventSpec) -> bool:
    """Draw a mean time, then a Weibull time-to-event; the event fires if it lands within the year."""
    scale = sample_mean_time(rng, spec)
    return sample_weibull(rng, spec.weibull_shape, scale) <= 1.0


def select_affected(
    rng: np.random.Generator, conditions: np.ndarray, fraction: float, from_all: bool = False
) -> np.ndarray:
    """Random subset of agents hit by an event, without replacement.

    Only agents with condition > 0 are eligible unless ``from_all``.  The
    subset size is ``round(fraction * eligible)``, halves rounded away
    from zero.  No random draw is made when that size is 0.
    """
    eligible = np.arange(conditions.size) if from_all else np.flatnonzero(conditions > CONDITION_MIN)
    k = min(round_half_away(fraction * eligible.size), eligible.size)
    if k <= 0:
        return np.empty(0, dtype=np.intp)
    return eligible[rng.choice(eligible.size, size=k, replace=False)]


def apply_event(
    rng: np.random.Generator,
    conditions: np.ndarray,
    spec: AdverseEventSpec,
    year: int,
    from_all: bool = False,
) -> EventOccurrence:
    """Apply one occurrence of ``spec`` to ``conditions`` in place.

    Draw order: the affected fraction, the subset, then one impact per
    affected agent in subset order.
    """
    fraction = sample_range(rng, spec.fraction_affected, spec.fraction_sampling, 0.0, 1.0)
    idx = select_affected(rng, conditions, fraction, from_all)
    if idx.size == 0:
        return EventOccurrence(year, spec.name, 0, 0.0, fraction, 0.0)
    impacts = sample_range_array(rng, idx.size, spec.condition_loss, spec.impact_sampling, CONDITION_MIN, CONDITION_MAX)
    before = conditions[idx]
    after = np.maximum(before - impacts, CONDITION_MIN)
    conditions[idx] = after
    return EventOccurrence(
        year=year,
        event_name=spec.name,
        n_affected=int(idx.size),
        total_condition_loss=math.fsum(before - after),
        sampled_fraction=fraction,
        sampled_impact_mean=math.fsum(impacts) / idx.size,
    )
