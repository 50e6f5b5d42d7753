from __future__ import annotations

from importlib import resources

import numpy as np
import pytest

from decaylab.domain import (
    AdverseEventSpec,
    ContinuousProcessSpec,
    InitialConditionSpec,
    Range,
    ScenarioConfig,
    load_config,
)

DATA = resources.files("decaylab") / "data"


def bundled(name: str) -> ScenarioConfig:
    return load_config(DATA / name)


@pytest.fixture
def table2() -> ScenarioConfig:
    return bundled("paper_table2.toml")


@pytest.fixture
def baseline() -> ScenarioConfig:
    return bundled("ablation_baseline.toml")


FIRE = AdverseEventSpec("fire", Range(0.2, 0.6), Range(100, 100), Range(200, 600))
THEFT = AdverseEventSpec("theft", Range(0.002, 0.006), Range(100, 100), Range(5, 10))
FLOOD = AdverseEventSpec("flooding", Range(0.02, 0.06), Range(20, 50), Range(1, 5))
LEAK = AdverseEventSpec("leaking", Range(0.02, 0.06), Range(0.6, 2), Range(0.02, 0.06))


def small_config(**kw) -> ScenarioConfig:
    base = dict(
        num_agents=50,
        num_years=40,
        num_simulations=3,
        init=InitialConditionSpec(75, 10, 0, 100),
        adverse_events=(),
        continuous_processes=(),
        master_seed=7,
    )
    base.update(kw)
    return ScenarioConfig(**base)


def random_small_config(seed: int) -> ScenarioConfig:
    """A random valid scenario with at most 50 agents, 50 years and 3 events."""
    g = np.random.default_rng(seed)
    n = int(g.integers(1, 51))
    events = []
    for j in range(int(g.integers(0, 4))):
        f_lo = float(g.uniform(0, 0.5))
        loss_lo = float(g.uniform(0, 80))
        mt_lo = float(g.choice([0.05, 0.5, 2.0, 10.0]))
        events.append(
            AdverseEventSpec(
                name=f"event{j}",
                fraction_affected=Range(f_lo, min(1.0, f_lo + float(g.uniform(0, 0.5)))),
                condition_loss=Range(loss_lo, min(100.0, loss_lo + float(g.choice([0.0, g.uniform(0, 40)])))),
                mean_time=Range(mt_lo, mt_lo * float(g.uniform(1, 4))),
                weibull_shape=float(g.choice([1.0, 0.7, 2.0])),
                fraction_sampling=str(g.choice(["normal95", "uniform"])),
                impact_sampling=str(g.choice(["normal95", "uniform"])),
                mean_time_sampling=str(g.choice(["uniform", "normal95"])),
            )
        )
    processes = []
    kind = int(g.integers(0, 4))
    if kind == 1:
        processes.append(ContinuousProcessSpec("wear", "linear_rate", {"rate": float(g.uniform(0, 3))}))
    elif kind == 2:
        processes.append(
            ContinuousProcessSpec(
                "chem", "cellulose_hydrolysis",
                {"DP0": 1000.0, "DP_threshold": 300.0, "kc": float(g.uniform(0, 5e-5))},
                per_agent=bool(g.integers(0, 2)),
                agent_fraction=float(g.uniform(0, 1)),
            )
        )
    elif kind == 3:
        processes.append(
            ContinuousProcessSpec(
                "chem", "cellulose_hydrolysis",
                {"DP0": 900.0, "DP_threshold": 250.0, "T": 25.0, "RH": 60.0, "pH": 5.0},
                coefficients={"ln_A": 40.0, "Ea": 110000.0, "b_RH": 0.02, "b_pH": -0.7},
                agents=(0, n // 2),
            )
        )
        processes.append(ContinuousProcessSpec("wear", "linear_rate", {"rate": 0.5}, agents=(n // 2, n)))
    if g.random() < 0.15:
        # Wide normal in a narrow window: forces the rejection cap and inverse-CDF fallback.
        init = InitialConditionSpec(50.0, 400.0, 49.0, 51.0)
    else:
        lo = float(g.uniform(0, 40))
        hi = float(g.uniform(60, 100))
        init = InitialConditionSpec(float(g.uniform(lo, hi)), float(g.choice([0.0, g.uniform(1, 30)])), lo, hi)
    return ScenarioConfig(
        num_agents=n,
        num_years=int(g.integers(0, 51)),
        num_simulations=1,
        init=init,
        adverse_events=tuple(events),
        continuous_processes=tuple(processes),
        master_seed=int(g.integers(0, 2**63)),
        good_condition_threshold=float(g.choice([0.0, 0.0, 20.0])),
        lifetime_fraction=float(g.choice([0.01, 0.1, 0.5])),
        select_from_all=bool(g.random() < 0.2),
    )


# --- acceptance verdicts ------------------------------------------------------
# Tests marked ``acceptance(number, title)`` get one PASS/FAIL line each in the
# terminal summary, derived from the real test outcome.  Measured values
# attached with ``record_property`` are shown alongside.

_verdicts: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or (report.when != "call" and report.passed):
        return
    number, title = marker.args
    if report.when == "call" or number not in _verdicts:
        verdict = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        detail = ", ".join(f"{k}={v}" for k, v in report.user_properties)
        _verdicts[number] = (verdict, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_verdicts):
        verdict, title, detail = _verdicts[number]
        line = f"{verdict}  criterion {number:>2}: {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
