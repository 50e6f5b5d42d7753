"""Ablation studies, significance tests, histograms and ensemble envelopes."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .domain import ScenarioConfig
from .engine import EnsembleResult, RunResult, run_ensemble


@dataclass(frozen=True)
class WelchResult:
    statistic: float
    df: float
    p_value: float
    degenerate: bool = False


def welch_t_test(a, b) -> WelchResult:
    """Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.

    When both samples have zero variance the test is undefined; the result
    is flagged ``degenerate`` with p = 1 for equal means and p = 0 otherwise.
    Raises ``ValueError`` if either sample has fewer than two values.
    """
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    if len(a) < 2 or len(b) < 2:
        raise ValueError(f"Welch test needs at least two values per sample, got {len(a)} and {len(b)}")
    ma, mb = statistics.fmean(a), statistics.fmean(b)
    sa, sb = statistics.variance(a) / len(a), statistics.variance(b) / len(b)
    se2 = sa + sb
    if se2 == 0:
        if ma == mb:
            return WelchResult(0.0, math.nan, 1.0, degenerate=True)
        return WelchResult(math.copysign(math.inf, ma - mb), math.nan, 0.0, degenerate=True)
    t = (ma - mb) / math.sqrt(se2)
    # Welch-Satterthwaite on the variance shares, which cannot underflow.
    wa, wb = sa / se2, sb / se2
    df = 1.0 / (wa * wa / (len(a) - 1) + wb * wb / (len(b) - 1))
    # P(|T| > |t|) for Student's t with df degrees of freedom.
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return WelchResult(t, df, min(max(p, 0.0), 1.0))


def histogram(values, bin_width: float, lo: float, hi: float) -> list[tuple[float, int]]:
    """Counts in bins ``[start, start + width)`` covering ``[lo, hi]``; the last bin is closed.

    Values outside ``[lo, hi]`` are ignored.
    """
    if not bin_width > 0:
        raise ValueError(f"bin_width must be > 0, got {bin_width}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    nbins = max(1, math.ceil((hi - lo) / bin_width))
    v = np.asarray(values, dtype=float).ravel()
    v = v[(v >= lo) & (v <= hi)]
    idx = np.minimum(np.floor((v - lo) / bin_width).astype(np.int64), nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    return [(lo + i * bin_width, int(c)) for i, c in enumerate(counts)]


@dataclass
class Band:
    years: np.ndarray
    min: np.ndarray
    mean: np.ndarray
    max: np.ndarray


def padded_series(runs: list[RunResult]) -> np.ndarray:
    """Percentage-good series as a (runs, years) array; early-stopped runs hold their last value."""
    if not runs:
        raise ValueError("need at least one run")
    n = max(r.percentage_good.size for r in runs)
    out = np.empty((len(runs), n))
    for i, r in enumerate(runs):
        s = r.percentage_good
        out[i, : s.size] = s
        out[i, s.size:] = s[-1]
    return out


def ensemble_band(runs: list[RunResult]) -> Band:
    m = padded_series(runs)
    return Band(np.arange(m.shape[1]), m.min(axis=0), m.mean(axis=0), m.max(axis=0))


# ---------------------------------------------------------------------------
# ablation


@dataclass
class AblationVariant:
    removed: str
    result: EnsembleResult
    p_value: float | None
    significant: bool
    test: WelchResult | None = None
    note: str = ""


@dataclass
class AblationReport:
    baseline: EnsembleResult
    variants: list[AblationVariant]
    alpha: float

    def variant(self, name: str) -> AblationVariant:
        for v in self.variants:
            if v.removed == name:
                return v
        raise KeyError(name)


def compare_lifetimes(baseline: EnsembleResult, other: EnsembleResult) -> tuple[WelchResult | None, str]:
    a, b = other.lifetimes, baseline.lifetimes
    if len(a) < 2 or len(b) < 2:
        return None, "too few uncensored runs for a test"
    res = welch_t_test(a, b)
    note = "zero variance in both samples" if res.degenerate else ""
    censored = other.censored_run_count + baseline.censored_run_count
    if censored:
        note = (note + "; " if note else "") + f"{censored} censored run(s) excluded"
    return res, note


def run_ablation(cfg: ScenarioConfig, alpha: float = 0.05, threads: int | None = None) -> AblationReport:
    """Baseline ensemble plus one ensemble per removed degradation process.

    Every variant keeps the baseline ``master_seed`` (common random
    numbers).  Significance is a two-sided Welch test on the uncensored
    per-run lifetimes.
    """
    names = cfg.process_names
    if not names:
        raise ValueError("ablation needs at least one degradation process")
    baseline = run_ensemble(cfg, threads)
    variants = []
    for name in names:
        result = run_ensemble(cfg.without(name), threads)
        test, note = compare_lifetimes(baseline, result)
        if test is None and result.censored_run_count == len(result.runs):
            note = "all runs censored: no lifetime within the horizon"
        p = None if test is None else test.p_value
        variants.append(AblationVariant(name, result, p, p is not None and p < alpha, test, note))
    return AblationReport(baseline, variants, alpha)


def _fmt(x, digits: int = 2) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, int):
        return str(x)
    return f"{x:.{digits}f}"


def ablation_rows(report: AblationReport) -> list[tuple[str, str, str, str]]:
    rows = [("All degradation processes", _fmt(report.baseline.average_time), _fmt(report.baseline.sd_time), _fmt(report.baseline.max_time))]
    for v in report.variants:
        label = f"Without {v.removed}" + ("*" if v.significant else "")
        rows.append((label, _fmt(v.result.average_time), _fmt(v.result.sd_time), _fmt(v.result.max_time)))
    return rows


def format_ablation_table(report: AblationReport) -> str:
    header = ("Condition", "Collection Lifetime", "Standard Deviation of Lifetime", "Max Lifetime")
    rows = [header] + ablation_rows(report)
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = []
    for j, r in enumerate(rows):
        cells = [r[0].ljust(widths[0])] + [r[i].rjust(widths[i]) for i in range(1, 4)]
        lines.append("  ".join(cells).rstrip())
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    lines.append("")
    lines.append(f"* significant difference from all degradation processes (two-sided Welch t-test, alpha = {report.alpha:g})")
    return "\n".join(lines) + "\n"
