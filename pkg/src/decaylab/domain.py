"""Core data types and scenario configuration.

Conditions live on a 0-100 scale everywhere (100 = pristine, 0 = the
operational threshold at which an object drops out of the managed
collection).  A 1 -> 0 "absolute condition" is the same quantity divided
by 100.

Configuration files are TOML or JSON.  See ``decaylab schema`` for the
documented layout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

import tomli_w

CONDITION_MIN = 0.0
CONDITION_MAX = 100.0

SAMPLING_POLICIES = ("normal95", "uniform")
CONTINUOUS_KINDS = ("linear_rate", "cellulose_hydrolysis")


class ConfigError(ValueError):
    """Raised when a configuration document is structurally malformed."""


@dataclass(frozen=True)
class Range:
    lo: float
    hi: float

    @classmethod
    def of(cls, value: Any, path: str = "range") -> "Range":
        if isinstance(value, Range):
            return value
        if isinstance(value, Mapping):
            try:
                return cls(float(value["lo"]), float(value["hi"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: expected {{lo, hi}}, got {value!r}") from exc
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return cls(float(value), float(value))
        try:
            lo, hi = value
            return cls(float(lo), float(hi))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: expected a [lo, hi] pair, got {value!r}") from exc

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_list(self) -> list[float]:
        return [self.lo, self.hi]


@dataclass(frozen=True)
class InitialConditionSpec:
    mean: float
    sd: float
    lower_bound: float = CONDITION_MIN
    upper_bound: float = CONDITION_MAX


@dataclass(frozen=True)
class AdverseEventSpec:
    """ABC-style risk: fraction affected, loss per object, mean time between events.

    The ``*_sampling`` fields pick how a value is drawn from each range:
    ``normal95`` treats the range as a 95% interval of a normal
    distribution (truncated to the physical bounds), ``uniform`` draws
    uniformly within it.
    """

    name: str
    fraction_affected: Range
    condition_loss: Range
    mean_time: Range
    weibull_shape: float = 1.0
    fraction_sampling: str = "normal95"
    impact_sampling: str = "normal95"
    mean_time_sampling: str = "uniform"


@dataclass(frozen=True)
class ContinuousProcessSpec:
    """A continuous damage process.

    ``params`` holds ``rate`` for ``linear_rate``; for
    ``cellulose_hydrolysis`` it holds ``T``, ``RH``, ``pH``, ``DP0``,
    ``DP_threshold`` and optionally a fixed ``kc`` that bypasses the
    coefficient table.  ``agents`` restricts the process to the index
    range ``[start, stop)``; ``agent_fraction`` to the leading fraction of
    the population.
    """

    name: str
    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    coefficients: Mapping[str, float] = field(default_factory=dict)
    agents: tuple[int, int] | None = None
    agent_fraction: float | None = None
    per_agent: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    num_agents: int
    num_years: int
    num_simulations: int
    init: InitialConditionSpec
    adverse_events: tuple[AdverseEventSpec, ...] = ()
    continuous_processes: tuple[ContinuousProcessSpec, ...] = ()
    master_seed: int = 0
    good_condition_threshold: float = 0.0
    lifetime_fraction: float = 0.01
    select_from_all: bool = False

    @property
    def process_names(self) -> list[str]:
        return [p.name for p in self.continuous_processes] + [e.name for e in self.adverse_events]

    def without(self, name: str) -> "ScenarioConfig":
        """Copy of this scenario with the named degradation process removed."""
        if name not in self.process_names:
            raise KeyError(name)
        return replace(
            self,
            adverse_events=tuple(e for e in self.adverse_events if e.name != name),
            continuous_processes=tuple(p for p in self.continuous_processes if p.name != name),
        )

    def with_overrides(self, *, seed: int | None = None, runs: int | None = None) -> "ScenarioConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, master_seed=int(seed))
        if runs is not None:
            cfg = replace(cfg, num_simulations=int(runs))
        return cfg


# ---------------------------------------------------------------------------
# validation


def _finite(x: Any) -> bool:
    try:
        return math.isfinite(float(x))
    except (TypeError, ValueError):
        return False


def _check_range(r: Range, path: str, lo_bound: float | None, hi_bound: float | None) -> list[str]:
    out = []
    if not (_finite(r.lo) and _finite(r.hi)):
        return [f"{path}: bounds must be finite, got ({r.lo}, {r.hi})"]
    if r.lo > r.hi:
        out.append(f"{path}: lo ({r.lo}) must be <= hi ({r.hi})")
    if lo_bound is not None and r.lo < lo_bound:
        out.append(f"{path}.lo must be >= {lo_bound:g}, got {r.lo}")
    if hi_bound is not None and r.hi > hi_bound:
        out.append(f"{path}.hi must be <= {hi_bound:g}, got {r.hi}")
    return out


def _validate_event(ev: AdverseEventSpec, path: str) -> list[str]:
    out = []
    if not ev.name:
        out.append(f"{path}.name: must be non-empty")
    out += _check_range(ev.fraction_affected, f"{path}.fraction_affected", 0.0, 1.0)
    out += _check_range(ev.condition_loss, f"{path}.condition_loss", CONDITION_MIN, CONDITION_MAX)
    out += _check_range(ev.mean_time, f"{path}.mean_time", None, None)
    if _finite(ev.mean_time.lo) and not ev.mean_time.lo > 0:
        out.append(f"{path}.mean_time.lo must be > 0, got {ev.mean_time.lo}")
    if not (_finite(ev.weibull_shape) and ev.weibull_shape > 0):
        out.append(f"{path}.weibull_shape must be > 0, got {ev.weibull_shape}")
    for attr in ("fraction_sampling", "impact_sampling", "mean_time_sampling"):
        value = getattr(ev, attr)
        if value not in SAMPLING_POLICIES:
            out.append(f"{path}.{attr}: unknown policy {value!r} (expected one of {SAMPLING_POLICIES})")
    return out


def _validate_process(p: ContinuousProcessSpec, path: str, num_agents: int) -> list[str]:
    out = []
    if not p.name:
        out.append(f"{path}.name: must be non-empty")
    params = dict(p.params)
    for key, value in params.items():
        if not _finite(value):
            out.append(f"{path}.params.{key}: must be a finite number, got {value!r}")
    if p.kind == "linear_rate":
        if "rate" not in params:
            out.append(f"{path}.params.rate: required for linear_rate")
        elif _finite(params["rate"]) and params["rate"] < 0:
            out.append(f"{path}.params.rate must be >= 0, got {params['rate']}")
    elif p.kind == "cellulose_hydrolysis":
        for key in ("DP0", "DP_threshold"):
            if key not in params:
                out.append(f"{path}.params.{key}: required for cellulose_hydrolysis")
        if "DP0" in params and "DP_threshold" in params and _finite(params["DP0"]) and _finite(params["DP_threshold"]):
            if not params["DP0"] > params["DP_threshold"] > 0:
                out.append(f"{path}.params: need DP0 > DP_threshold > 0, got DP0={params['DP0']}, DP_threshold={params['DP_threshold']}")
        if "kc" in params:
            if _finite(params["kc"]) and params["kc"] < 0:
                out.append(f"{path}.params.kc must be >= 0, got {params['kc']}")
        else:
            for key in ("T", "RH", "pH"):
                if key not in params:
                    out.append(f"{path}.params.{key}: required unless kc is given")
            if not p.coefficients:
                out.append(f"{path}.coefficients: required unless params.kc is given")
        if "RH" in params and _finite(params["RH"]) and not 0 <= params["RH"] <= 100:
            out.append(f"{path}.params.RH must be within [0, 100], got {params['RH']}")
        for key, value in dict(p.coefficients).items():
            if not _finite(value):
                out.append(f"{path}.coefficients.{key}: must be a finite number, got {value!r}")
    else:
        out.append(f"{path}.kind: unknown kind {p.kind!r} (expected one of {CONTINUOUS_KINDS})")
    if p.agents is not None:
        start, stop = p.agents
        if not 0 <= start <= stop <= num_agents:
            out.append(f"{path}.agents: need 0 <= start <= stop <= num_agents, got {list(p.agents)}")
    if p.agent_fraction is not None and not (_finite(p.agent_fraction) and 0 <= p.agent_fraction <= 1):
        out.append(f"{path}.agent_fraction must be within [0, 1], got {p.agent_fraction}")
    if p.agents is not None and p.agent_fraction is not None:
        out.append(f"{path}: agents and agent_fraction are mutually exclusive")
    return out


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """Return every invariant violation in ``cfg`` as ``"path: message"``.

    An empty list means the scenario is valid.  Never raises for a
    structurally well-formed config.
    """
    out: list[str] = []
    for key in ("num_agents", "num_simulations"):
        value = getattr(cfg, key)
        if not isinstance(value, int) or value < 1:
            out.append(f"{key} must be a positive integer, got {value!r}")
    if not isinstance(cfg.num_years, int) or cfg.num_years < 0:
        out.append(f"num_years must be a non-negative integer, got {cfg.num_years!r}")
    if not isinstance(cfg.master_seed, int) or not 0 <= cfg.master_seed < 2**64:
        out.append(f"master_seed must be an unsigned 64-bit integer, got {cfg.master_seed!r}")
    if not _finite(cfg.good_condition_threshold) or not CONDITION_MIN <= cfg.good_condition_threshold < CONDITION_MAX:
        out.append(f"good_condition_threshold must be within [0, 100), got {cfg.good_condition_threshold}")
    if not (_finite(cfg.lifetime_fraction) and 0 < cfg.lifetime_fraction <= 1):
        out.append(f"lifetime_fraction must be within (0, 1], got {cfg.lifetime_fraction}")

    init = cfg.init
    if not all(_finite(v) for v in (init.mean, init.sd, init.lower_bound, init.upper_bound)):
        out.append("init: mean, sd, lower_bound and upper_bound must be finite")
    else:
        if not CONDITION_MIN <= init.lower_bound < init.upper_bound <= CONDITION_MAX:
            out.append(
                f"init: need 0 <= lower_bound < upper_bound <= 100, got lower_bound={init.lower_bound}, upper_bound={init.upper_bound}"
            )
        if init.sd < 0:
            out.append(f"init.sd must be >= 0, got {init.sd}")
        if not init.lower_bound <= init.mean <= init.upper_bound:
            out.append(f"init.mean ({init.mean}) must lie within [lower_bound, upper_bound]")

    seen: set[str] = set()
    for i, ev in enumerate(cfg.adverse_events):
        out += _validate_event(ev, f"adverse_events[{i}]")
        if ev.name in seen:
            out.append(f"adverse_events[{i}].name: duplicate process name {ev.name!r}")
        seen.add(ev.name)
    n = cfg.num_agents if isinstance(cfg.num_agents, int) else 0
    for i, p in enumerate(cfg.continuous_processes):
        out += _validate_process(p, f"continuous_processes[{i}]", n)
        if p.name in seen:
            out.append(f"continuous_processes[{i}].name: duplicate process name {p.name!r}")
        seen.add(p.name)
    return out


# ---------------------------------------------------------------------------
# parsing and serialization

_TOP_KEYS = {
    "num_agents", "num_years", "num_simulations", "master_seed", "seed",
    "good_condition_threshold", "lifetime_fraction", "select_from_all",
    "mean", "sd", "lower_bound", "upper_bound", "init",
    "adverse_events", "continuous_processes", "deg_processes",
}
_EVENT_KEYS = {
    "name", "kind", "fraction_affected", "condition_loss", "mean_time", "weibull_shape",
    "fraction_sampling", "impact_sampling", "mean_time_sampling",
}
_CELLULOSE_PARAM_KEYS = ("T", "RH", "pH", "DP0", "DP_threshold", "kc")


def _require(d: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in d:
        raise ConfigError(f"{path}.{key}: missing required field" if path else f"{key}: missing required field")
    return d[key]


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return int(value)


def _as_float(value: Any, path: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: expected a number, got {value!r}") from exc


def _parse_event(d: Mapping[str, Any], path: str) -> AdverseEventSpec:
    if not isinstance(d, Mapping):
        raise ConfigError(f"{path}: expected a table")
    unknown = set(d) - _EVENT_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")
    return AdverseEventSpec(
        name=str(_require(d, "name", path)),
        fraction_affected=Range.of(_require(d, "fraction_affected", path), f"{path}.fraction_affected"),
        condition_loss=Range.of(_require(d, "condition_loss", path), f"{path}.condition_loss"),
        mean_time=Range.of(_require(d, "mean_time", path), f"{path}.mean_time"),
        weibull_shape=_as_float(d.get("weibull_shape", 1.0), f"{path}.weibull_shape"),
        fraction_sampling=str(d.get("fraction_sampling", "normal95")),
        impact_sampling=str(d.get("impact_sampling", "normal95")),
        mean_time_sampling=str(d.get("mean_time_sampling", "uniform")),
    )


def _load_coefficients(ref: str, base_dir: Path | None, path: str) -> dict[str, float]:
    p = Path(ref)
    if not p.is_absolute() and base_dir is not None:
        p = base_dir / p
    try:
        data = _load_document(p)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read coefficient table {str(p)!r}: {exc}") from exc
    table = data.get("coefficients", data)
    if not isinstance(table, Mapping):
        raise ConfigError(f"{path}: coefficient table must map names to numbers")
    return {str(k): _as_float(v, f"{path}.{k}") for k, v in table.items() if not isinstance(v, Mapping)}


def _parse_process(d: Mapping[str, Any], path: str, base_dir: Path | None) -> ContinuousProcessSpec:
    if not isinstance(d, Mapping):
        raise ConfigError(f"{path}: expected a table")
    kind = str(_require(d, "kind", path))
    params: dict[str, float] = {}
    raw_params = d.get("params", {})
    if not isinstance(raw_params, Mapping):
        raise ConfigError(f"{path}.params: expected a table")
    for k, v in raw_params.items():
        params[str(k)] = _as_float(v, f"{path}.params.{k}")
    # Table-style flat keys (T, RH, pH, DP0, rate) are accepted next to params.
    for k in _CELLULOSE_PARAM_KEYS + ("rate",):
        if k in d:
            params[k] = _as_float(d[k], f"{path}.{k}")

    coefficients: dict[str, float] = {}
    if "coefficients_file" in d:
        coefficients.update(_load_coefficients(str(d["coefficients_file"]), base_dir, f"{path}.coefficients_file"))
    raw_coef = d.get("coefficients", {})
    if not isinstance(raw_coef, Mapping):
        raise ConfigError(f"{path}.coefficients: expected a table")
    for k, v in raw_coef.items():
        coefficients[str(k)] = _as_float(v, f"{path}.coefficients.{k}")

    agents = d.get("agents")
    if agents is not None:
        try:
            start, stop = agents
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}.agents: expected [start, stop]") from exc
        agents = (_as_int(start, f"{path}.agents[0]"), _as_int(stop, f"{path}.agents[1]"))
    frac = d.get("agent_fraction")
    known = {"name", "kind", "params", "coefficients", "coefficients_file", "agents", "agent_fraction", "per_agent", "rate"}
    unknown = set(d) - known - set(_CELLULOSE_PARAM_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {sorted(unknown)}")
    return ContinuousProcessSpec(
        name=str(d.get("name", kind)),
        kind=kind,
        params=params,
        coefficients=coefficients,
        agents=agents,
        agent_fraction=None if frac is None else _as_float(frac, f"{path}.agent_fraction"),
        per_agent=bool(d.get("per_agent", False)),
    )


def parse_config(data: Mapping[str, Any], base_dir: str | Path | None = None) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a decoded TOML/JSON document.

    Raises :class:`ConfigError` for structural problems (missing fields,
    wrong types).  Semantic checks are left to :func:`validate_config`.
    """
    if not isinstance(data, Mapping):
        raise ConfigError("configuration root must be a table/object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level field(s) {sorted(unknown)}")
    base = Path(base_dir) if base_dir is not None else None

    init_src: Mapping[str, Any] = data.get("init", data)
    if not isinstance(init_src, Mapping):
        raise ConfigError("init: expected a table")
    init = InitialConditionSpec(
        mean=_as_float(_require(init_src, "mean", "init" if "init" in data else ""), "mean"),
        sd=_as_float(_require(init_src, "sd", "init" if "init" in data else ""), "sd"),
        lower_bound=_as_float(init_src.get("lower_bound", CONDITION_MIN), "lower_bound"),
        upper_bound=_as_float(init_src.get("upper_bound", CONDITION_MAX), "upper_bound"),
    )

    events = []
    processes = []
    for i, item in enumerate(data.get("adverse_events", [])):
        events.append(_parse_event(item, f"adverse_events[{i}]"))
    for i, item in enumerate(data.get("continuous_processes", [])):
        processes.append(_parse_process(item, f"continuous_processes[{i}]", base))
    # Combined list form, as in the original tool's ``deg_processes`` input.
    for i, item in enumerate(data.get("deg_processes", [])):
        path = f"deg_processes[{i}]"
        if not isinstance(item, Mapping):
            raise ConfigError(f"{path}: expected a table")
        kind = item.get("kind", "adverse_event")
        if kind == "adverse_event":
            events.append(_parse_event(item, path))
        else:
            processes.append(_parse_process(item, path, base))

    seed = data.get("master_seed", data.get("seed", 0))
    return ScenarioConfig(
        num_agents=_as_int(_require(data, "num_agents", ""), "num_agents"),
        num_years=_as_int(_require(data, "num_years", ""), "num_years"),
        num_simulations=_as_int(data.get("num_simulations", 10), "num_simulations"),
        init=init,
        adverse_events=tuple(events),
        continuous_processes=tuple(processes),
        master_seed=_as_int(seed, "master_seed"),
        good_condition_threshold=_as_float(data.get("good_condition_threshold", 0.0), "good_condition_threshold"),
        lifetime_fraction=_as_float(data.get("lifetime_fraction", 0.01), "lifetime_fraction"),
        select_from_all=bool(data.get("select_from_all", False)),
    )


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    """Plain-data form of ``cfg``, the inverse of :func:`parse_config`."""
    out: dict[str, Any] = {
        "num_agents": cfg.num_agents,
        "num_years": cfg.num_years,
        "num_simulations": cfg.num_simulations,
        "master_seed": cfg.master_seed,
        "good_condition_threshold": cfg.good_condition_threshold,
        "lifetime_fraction": cfg.lifetime_fraction,
        "select_from_all": cfg.select_from_all,
        "mean": cfg.init.mean,
        "sd": cfg.init.sd,
        "lower_bound": cfg.init.lower_bound,
        "upper_bound": cfg.init.upper_bound,
        "adverse_events": [
            {
                "name": e.name,
                "fraction_affected": e.fraction_affected.to_list(),
                "condition_loss": e.condition_loss.to_list(),
                "mean_time": e.mean_time.to_list(),
                "weibull_shape": e.weibull_shape,
                "fraction_sampling": e.fraction_sampling,
                "impact_sampling": e.impact_sampling,
                "mean_time_sampling": e.mean_time_sampling,
            }
            for e in cfg.adverse_events
        ],
        "continuous_processes": [],
    }
    for p in cfg.continuous_processes:
        entry: dict[str, Any] = {"name": p.name, "kind": p.kind, "params": dict(p.params), "per_agent": p.per_agent}
        if p.coefficients:
            entry["coefficients"] = dict(p.coefficients)
        if p.agents is not None:
            entry["agents"] = list(p.agents)
        if p.agent_fraction is not None:
            entry["agent_fraction"] = p.agent_fraction
        out["continuous_processes"].append(entry)
    return out


def dumps_config(cfg: ScenarioConfig, fmt: str = "toml") -> str:
    data = config_to_dict(cfg)
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    if fmt == "toml":
        return tomli_w.dumps(data)
    raise ValueError(f"unknown config format {fmt!r}")


def loads_config(text: str, fmt: str = "toml", base_dir: str | Path | None = None) -> ScenarioConfig:
    try:
        data = json.loads(text) if fmt == "json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {fmt} document: {exc}") from exc
    return parse_config(data, base_dir)


def _load_document(path: Path) -> dict[str, Any]:
    text = path.read_text(encoding="utf-8")
    fmt = "json" if path.suffix.lower() == ".json" else "toml"
    try:
        return json.loads(text) if fmt == "json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: cannot parse {fmt} document: {exc}") from exc


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a scenario from a ``.toml`` or ``.json`` file.

    Raises ``OSError`` if the file cannot be read and :class:`ConfigError`
    if it is malformed.
    """
    path = Path(path)
    return parse_config(_load_document(path), base_dir=path.parent)
