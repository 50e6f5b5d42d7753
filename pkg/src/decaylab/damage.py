"""Continuous damage functions: environment -> condition lost per year.

Two kinds are provided.  ``linear_rate`` removes a fixed number of
condition units every year.  ``cellulose_hydrolysis`` follows Ekenstam
chain-scission kinetics,

    1/DP(t) - 1/DP0 = kc * t,

and maps the degree of polymerisation linearly onto condition so that
``DP0`` is 100 and ``DP_threshold`` is 0.  The rate constant comes from
an Arrhenius-type dose-response whose coefficients are supplied by the
scenario (see :meth:`CelluloseParams.rate_constant`); nothing numeric
about the chemistry is hard-coded here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .domain import CONDITION_MAX, CONDITION_MIN, ContinuousProcessSpec

#: Molar gas constant, J / (mol K).
GAS_CONSTANT = 8.314462618
KELVIN_OFFSET = 273.15


@dataclass(frozen=True)
class CelluloseParams:
    DP0: float
    DP_threshold: float
    T: float = float("nan")
    RH: float = float("nan")
    pH: float = float("nan")
    kc: float | None = None
    rate_coefficients: Mapping[str, float] = field(default_factory=dict)

    def rate_constant(self) -> float:
        """Chain-scission rate constant ``kc`` in 1/year.

        Uses the fixed ``kc`` when one is given, otherwise

            ln kc = ln_A - Ea / (R * (T + 273.15)) + b_RH * RH + b_pH * pH

        with ``ln_A``, ``Ea`` (J/mol), ``b_RH`` and ``b_pH`` taken from
        ``rate_coefficients`` (missing slope terms default to 0).
        """
        if self.kc is not None:
            kc = float(self.kc)
        else:
            c = self.rate_coefficients
            try:
                ln_a = c["ln_A"]
                ea = c["Ea"]
            except KeyError as exc:
                raise ValueError(f"cellulose rate coefficients missing {exc.args[0]!r}") from None
            ln_k = (
                ln_a
                - ea / (GAS_CONSTANT * (self.T + KELVIN_OFFSET))
                + c.get("b_RH", 0.0) * self.RH
                + c.get("b_pH", 0.0) * self.pH
            )
            kc = math.exp(ln_k)
        if not kc >= 0:
            raise ValueError(f"cellulose rate constant must be >= 0, got {kc}")
        return kc

    @classmethod
    def from_spec(cls, spec: ContinuousProcessSpec) -> "CelluloseParams":
        p = dict(spec.params)
        return cls(
            DP0=p["DP0"],
            DP_threshold=p["DP_threshold"],
            T=p.get("T", float("nan")),
            RH=p.get("RH", float("nan")),
            pH=p.get("pH", float("nan")),
            kc=p.get("kc"),
            rate_coefficients=dict(spec.coefficients),
        )


def cellulose_dp_at(params: CelluloseParams, t: float, kc: float | None = None) -> float:
    """Degree of polymerisation after ``t`` years."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if kc is None:
        kc = params.rate_constant()
    elif kc < 0:
        raise ValueError(f"kc must be >= 0, got {kc}")
    return 1.0 / (1.0 / params.DP0 + kc * t)


def condition_from_dp(params: CelluloseParams, dp):
    """Map DP onto condition: DP0 -> 100, DP_threshold -> 0, clamped."""
    c = 100.0 * (dp - params.DP_threshold) / (params.DP0 - params.DP_threshold)
    return np.clip(c, CONDITION_MIN, CONDITION_MAX) if isinstance(c, np.ndarray) else min(max(c, CONDITION_MIN), CONDITION_MAX)


def dp_from_condition(params: CelluloseParams, condition):
    return params.DP_threshold + condition / 100.0 * (params.DP0 - params.DP_threshold)


class DamageFunction:
    """Per-year condition loss for one continuous process."""

    kind = ""

    def annual_loss(self, condition: float, year: int) -> float:
        raise NotImplementedError

    def annual_losses(self, conditions: np.ndarray, year: int) -> np.ndarray:
        return np.array([self.annual_loss(c, year) for c in conditions])


class LinearDamage(DamageFunction):
    kind = "linear_rate"

    def __init__(self, rate: float):
        if rate < 0:
            raise ValueError(f"linear rate must be >= 0, got {rate}")
        self.rate = float(rate)

    def annual_loss(self, condition, year):
        return self.rate

    def annual_losses(self, conditions, year):
        return np.full(conditions.shape, self.rate)


class CelluloseDamage(DamageFunction):
    """Ekenstam kinetics.

    With a shared trajectory every object loses the same amount in a given
    year, read off the population-level DP curve.  With ``per_agent`` each
    object's current condition is converted back to a DP and advanced one
    year, so objects that started in different states age differently.
    """

    kind = "cellulose_hydrolysis"

    def __init__(self, params: CelluloseParams, per_agent: bool = False):
        self.params = params
        self.kc = params.rate_constant()
        self.per_agent = per_agent

    def condition_at(self, t: float) -> float:
        return condition_from_dp(self.params, cellulose_dp_at(self.params, t, self.kc))

    def annual_loss(self, condition, year):
        if self.per_agent:
            dp = dp_from_condition(self.params, condition)
            dp_next = 1.0 / (1.0 / dp + self.kc) if dp > 0 else dp
            return max(condition - condition_from_dp(self.params, dp_next), 0.0)
        return self.condition_at(year) - self.condition_at(year + 1)

    def annual_losses(self, conditions, year):
        if self.per_agent:
            dp = dp_from_condition(self.params, conditions)
            dp_next = 1.0 / (1.0 / dp + self.kc)
            return np.maximum(conditions - condition_from_dp(self.params, dp_next), 0.0)
        return np.full(conditions.shape, self.annual_loss(0.0, year))


def build_damage(spec: ContinuousProcessSpec) -> DamageFunction:
    if spec.kind == "linear_rate":
        return LinearDamage(spec.params["rate"])
    if spec.kind == "cellulose_hydrolysis":
        return CelluloseDamage(CelluloseParams.from_spec(spec), per_agent=spec.per_agent)
    raise ValueError(f"unknown continuous process kind {spec.kind!r}")


def annual_loss(dfi: DamageFunction, condition: float, year: int) -> float:
    return dfi.annual_loss(condition, year)


def agent_slice(spec: ContinuousProcessSpec, num_agents: int) -> slice:
    """Agents a process applies to, as an index slice."""
    if spec.agents is not None:
        return slice(*spec.agents)
    if spec.agent_fraction is not None:
        return slice(0, int(math.floor(spec.agent_fraction * num_agents + 0.5)))
    return slice(0, num_agents)
