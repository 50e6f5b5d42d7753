"""Yearly simulation loop, single runs and ensembles.

Random draws within a run happen in a fixed order, which is part of the
contract (a reference implementation reproduces runs bit for bit).  See
:mod:`decaylab.sampling` for how the streams are keyed.

1. Population stream: ``num_agents`` initial conditions, agent by agent.
2. Each year, each adverse event in config order:
   timing stream - the mean time, then the Weibull time-to-event;
   impact stream, only if the event fires - the affected fraction, the
   subset choice, then one impact per affected agent in subset order.

Continuous processes draw nothing.  Within a year continuous degradation
is applied first, then adverse events in config order.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .damage import DamageFunction, agent_slice, build_damage
from .domain import CONDITION_MIN, ScenarioConfig
from .events import EventOccurrence, apply_event, event_occurs_this_year
from .sampling import RunStreams, sample_truncated_normal_array


@dataclass
class RunResult:
    run_index: int
    percentage_good: np.ndarray
    condition_mass: np.ndarray
    initial_conditions: np.ndarray
    final_conditions: np.ndarray
    event_log: list[EventOccurrence] = field(default_factory=list)
    time_to_lifetime_fraction: int | None = None

    @property
    def censored(self) -> bool:
        return self.time_to_lifetime_fraction is None

    def same_as(self, other: "RunResult") -> bool:
        """Bit-for-bit equality of every recorded quantity."""
        return (
            self.run_index == other.run_index
            and self.time_to_lifetime_fraction == other.time_to_lifetime_fraction
            and np.array_equal(self.percentage_good, other.percentage_good)
            and np.array_equal(self.condition_mass, other.condition_mass)
            and np.array_equal(self.initial_conditions, other.initial_conditions)
            and np.array_equal(self.final_conditions, other.final_conditions)
            and list(self.event_log) == list(other.event_log)
        )


@dataclass
class EnsembleResult:
    runs: list[RunResult]
    average_time: float | None
    sd_time: float | None
    max_time: int | None
    censored_run_count: int

    @property
    def lifetimes(self) -> list[int]:
        """Lifetimes of the uncensored runs, in run order."""
        return [r.time_to_lifetime_fraction for r in self.runs if r.time_to_lifetime_fraction is not None]


def time_to_fraction(percentage_good, fraction: float) -> int | None:
    """First year index at which the percentage good is at or below ``100 * fraction``."""
    limit = 100.0 * fraction
    for i, p in enumerate(percentage_good):
        if p <= limit:
            return i
    return None


def percentage_good(conditions: np.ndarray, threshold: float = 0.0) -> float:
    return 100.0 * np.count_nonzero(conditions > threshold) / conditions.size


def initialize_population(rng: np.random.Generator, cfg: ScenarioConfig) -> np.ndarray:
    init = cfg.init
    return sample_truncated_normal_array(rng, cfg.num_agents, init.mean, init.sd, init.lower_bound, init.upper_bound)


def _damage_functions(cfg: ScenarioConfig) -> list[tuple[slice, DamageFunction]]:
    return [(agent_slice(p, cfg.num_agents), build_damage(p)) for p in cfg.continuous_processes]


def simulate_year(
    streams: RunStreams,
    conditions: np.ndarray,
    cfg: ScenarioConfig,
    year: int,
    damage: list[tuple[slice, DamageFunction]] | None = None,
) -> list[EventOccurrence]:
    """Advance ``conditions`` by one year in place and return the events that fired."""
    if damage is None:
        damage = _damage_functions(cfg)
    for sl, dfi in damage:
        seg = conditions[sl]
        alive = seg > CONDITION_MIN
        if alive.any():
            vals = seg[alive]
            seg[alive] = np.maximum(vals - dfi.annual_losses(vals, year), CONDITION_MIN)
    occurred = []
    for spec in cfg.adverse_events:
        timing, impact = streams.event(spec.name)
        if event_occurs_this_year(timing, spec):
            occurred.append(apply_event(impact, conditions, spec, year, cfg.select_from_all))
    return occurred


def simulate_run(cfg: ScenarioConfig, run_index: int) -> RunResult:
    """One stochastic future of the collection; a pure function of ``(cfg, run_index)``."""
    streams = RunStreams(cfg.master_seed, run_index)
    damage = _damage_functions(cfg)
    conditions = initialize_population(streams.population, cfg)
    initial = conditions.copy()
    limit = 100.0 * cfg.lifetime_fraction

    pct = [percentage_good(conditions, cfg.good_condition_threshold)]
    mass = [math.fsum(conditions)]
    log: list[EventOccurrence] = []
    lifetime = 0 if pct[0] <= limit else None
    year = 0
    while lifetime is None and year < cfg.num_years:
        log.extend(simulate_year(streams, conditions, cfg, year, damage))
        year += 1
        pct.append(percentage_good(conditions, cfg.good_condition_threshold))
        mass.append(math.fsum(conditions))
        if pct[-1] <= limit:
            lifetime = year
    return RunResult(
        run_index=run_index,
        percentage_good=np.array(pct),
        condition_mass=np.array(mass),
        initial_conditions=initial,
        final_conditions=conditions,
        event_log=log,
        time_to_lifetime_fraction=lifetime,
    )


def summarize_runs(runs: list[RunResult]) -> EnsembleResult:
    runs = sorted(runs, key=lambda r: r.run_index)
    times = [r.time_to_lifetime_fraction for r in runs if r.time_to_lifetime_fraction is not None]
    return EnsembleResult(
        runs=runs,
        average_time=statistics.fmean(times) if times else None,
        sd_time=statistics.stdev(times) if len(times) >= 2 else None,
        max_time=max(times) if times else None,
        censored_run_count=len(runs) - len(times),
    )


def default_threads() -> int:
    env = os.environ.get("DECAYLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def run_ensemble(cfg: ScenarioConfig, threads: int | None = None) -> EnsembleResult:
    """Run ``cfg.num_simulations`` independent runs and aggregate their lifetimes.

    ``threads`` > 1 spreads runs over worker processes; the result does
    not depend on it.  The sd is the sample sd (n - 1) and is ``None``
    with fewer than two uncensored runs.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    indices = range(cfg.num_simulations)
    if threads == 1 or cfg.num_simulations == 1:
        runs = [simulate_run(cfg, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=min(threads, cfg.num_simulations)) as pool:
            runs = list(pool.map(simulate_run, [cfg] * cfg.num_simulations, indices))
    return summarize_runs(runs)
