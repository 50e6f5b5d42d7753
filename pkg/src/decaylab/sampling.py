"""Random number streams and the samplers the model needs.

Generators are PCG64 seeded through :class:`numpy.random.SeedSequence`
with ``master_seed`` as entropy and a spawn key naming the stream:

* ``(run_index,)`` - initial conditions of the run;
* ``(run_index, key(name), 0)`` - occurrence timing of the event ``name``;
* ``(run_index, key(name), 1)`` - affected fraction, subset and impacts of it.

Equal keys give identical streams and different keys independent ones,
with no sequential dependence between runs.  Because each event draws
only from its own streams, removing or reordering one process leaves the
draws of every other process unchanged (common random numbers).

Array samplers in this module consume the stream in exactly the same
order as the equivalent sequence of scalar calls, so a vectorized engine
and a one-value-at-a-time reference produce bit-identical results.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import log_ndtr, ndtri_exp

from .domain import Range

#: Two-sided 95% normal quantile used to turn a range into a standard deviation.
Z95 = 1.959964

#: Consecutive rejections tolerated before falling back to inverse-CDF sampling.
REJECTION_CAP = 100


def make_rng(master_seed: int, run_index: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(run_index),))
    return np.random.Generator(np.random.PCG64(seq))


def stream_key(name: str) -> int:
    """Injective integer key for a process name."""
    return int.from_bytes(b"\x01" + name.encode("utf-8"), "big")


def make_event_rngs(master_seed: int, run_index: int, name: str) -> tuple[np.random.Generator, np.random.Generator]:
    """(timing, impact) generators of one adverse event in one run."""
    key = stream_key(name)
    return tuple(
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(master_seed), spawn_key=(int(run_index), key, i))))
        for i in (0, 1)
    )


class RunStreams:
    """All random streams of one run."""

    def __init__(self, master_seed: int, run_index: int):
        self.master_seed = int(master_seed)
        self.run_index = int(run_index)
        self.population = make_rng(master_seed, run_index)
        self._events: dict[str, tuple[np.random.Generator, np.random.Generator]] = {}

    def event(self, name: str) -> tuple[np.random.Generator, np.random.Generator]:
        if name not in self._events:
            self._events[name] = make_event_rngs(self.master_seed, self.run_index, name)
        return self._events[name]


def _check_truncnorm(sd: float, lo: float, hi: float) -> None:
    if not lo < hi:
        raise ValueError(f"truncated normal needs lo < hi, got lo={lo}, hi={hi}")
    if not sd >= 0:
        raise ValueError(f"truncated normal needs sd >= 0, got {sd}")


def _truncnorm_ppf(u: float, mean: float, sd: float, lo: float, hi: float) -> float:
    """Inverse CDF of the truncated normal, computed in log space so it holds up far in the tails."""
    a = (lo - mean) / sd
    b = (hi - mean) / sd
    flip = a > 0
    if flip:
        # Right-tail window: sample its mirror image in the left tail.
        a, b, u = -b, -a, 1.0 - u
    la, lb = log_ndtr(a), log_ndtr(b)
    ratio = math.exp(la - lb) if la > -math.inf else 0.0
    inner = ratio + u * (1.0 - ratio)
    z = float(ndtri_exp(lb + math.log(inner))) if inner > 0 else a
    z = min(max(z, a), b)
    x = mean + sd * (-z if flip else z)
    return min(max(x, lo), hi)


def sample_truncated_normal(rng: np.random.Generator, mean: float, sd: float, lo: float, hi: float) -> float:
    """Draw from normal(mean, sd) conditioned on ``[lo, hi]``.

    Rejection sampling with up to :data:`REJECTION_CAP` normal draws, then
    one uniform draw pushed through the truncated inverse CDF.  ``sd == 0``
    returns ``clamp(mean, lo, hi)`` without touching the stream.
    """
    _check_truncnorm(sd, lo, hi)
    if sd == 0:
        return min(max(float(mean), lo), hi)
    for _ in range(REJECTION_CAP):
        x = mean + sd * rng.standard_normal()
        if lo <= x <= hi:
            return float(x)
    return _truncnorm_ppf(rng.random(), mean, sd, lo, hi)


def sample_truncated_normal_array(
    rng: np.random.Generator, n: int, mean: float, sd: float, lo: float, hi: float
) -> np.ndarray:
    """``n`` draws, identical to ``n`` successive :func:`sample_truncated_normal` calls."""
    _check_truncnorm(sd, lo, hi)
    if n <= 0:
        return np.empty(0)
    if sd == 0:
        return np.full(n, min(max(float(mean), lo), hi))

    saved = rng.bit_generator.state
    out = np.empty(n)
    filled = 0
    run = 0  # rejections already spent on the value being filled
    while filled < n:
        x = mean + sd * rng.standard_normal(n - filled)
        ok = (x >= lo) & (x <= hi)
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            run += x.size
        else:
            gaps = np.diff(idx, prepend=-1) - 1
            gaps[0] += run
            if gaps.max() >= REJECTION_CAP:
                break
            run = x.size - 1 - idx[-1]
        if run >= REJECTION_CAP:
            break
        out[filled:filled + idx.size] = x[idx]
        filled += idx.size
    else:
        return out

    # A cap was hit somewhere: replay the scalar path so uniform fallback
    # draws interleave with the normals exactly as they would one at a time.
    rng.bit_generator.state = saved
    return np.array([sample_truncated_normal(rng, mean, sd, lo, hi) for _ in range(n)])


def weibull_from_uniform(u: float, shape: float, scale: float) -> float:
    """Inverse transform: ``scale * (-ln u) ** (1 / shape)`` for ``u`` in (0, 1]."""
    return scale * (-math.log(u)) ** (1.0 / shape)


def sample_weibull(rng: np.random.Generator, shape: float, scale: float) -> float:
    if not shape > 0 or not scale > 0:
        raise ValueError(f"Weibull needs shape > 0 and scale > 0, got shape={shape}, scale={scale}")
    # 1 - U keeps the argument in (0, 1] so the log is always finite.
    return weibull_from_uniform(1.0 - rng.random(), shape, scale)


def sample_uniform_range(rng: np.random.Generator, r: Range) -> float:
    # Always one draw, so the stream position does not depend on the range width.
    u = rng.random()
    if r.hi == r.lo:
        return r.lo
    return r.lo + (r.hi - r.lo) * u


def normal_from_95ci(r: Range) -> tuple[float, float]:
    """Mean and sd of the normal whose central 95% interval is ``r``."""
    return (r.lo + r.hi) / 2.0, (r.hi - r.lo) / (2.0 * Z95)


def sample_abc_parameter(rng: np.random.Generator, r: Range, clamp_lo: float, clamp_hi: float) -> float:
    mean, sd = normal_from_95ci(r)
    return sample_truncated_normal(rng, mean, sd, clamp_lo, clamp_hi)


def sample_abc_parameter_array(
    rng: np.random.Generator, n: int, r: Range, clamp_lo: float, clamp_hi: float
) -> np.ndarray:
    mean, sd = normal_from_95ci(r)
    return sample_truncated_normal_array(rng, n, mean, sd, clamp_lo, clamp_hi)


def sample_range(rng: np.random.Generator, r: Range, policy: str, clamp_lo: float, clamp_hi: float) -> float:
    """One value from ``r`` under a sampling policy (``normal95`` or ``uniform``)."""
    if policy == "uniform":
        return min(max(sample_uniform_range(rng, r), clamp_lo), clamp_hi)
    return sample_abc_parameter(rng, r, clamp_lo, clamp_hi)


def sample_range_array(
    rng: np.random.Generator, n: int, r: Range, policy: str, clamp_lo: float, clamp_hi: float
) -> np.ndarray:
    if policy == "uniform":
        u = rng.random(n)
        vals = np.full(n, r.lo) if r.hi == r.lo else r.lo + (r.hi - r.lo) * u
        return np.clip(vals, clamp_lo, clamp_hi)
    return sample_abc_parameter_array(rng, n, r, clamp_lo, clamp_hi)
