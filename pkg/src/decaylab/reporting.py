"""Machine-readable outputs: CSV tables and JSON summaries.

CSV files are UTF-8, comma separated, ``.`` decimal point, LF line
endings, one header row.  Floats are written in shortest round-trip form.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import AblationReport, ablation_rows, ensemble_band, histogram
from .domain import ScenarioConfig, config_to_dict
from .engine import EnsembleResult, RunResult

HISTOGRAM_BIN_WIDTH = 5.0


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if x is None else x for x in row])


def write_json(path: Path, data) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensemble_summary(result: EnsembleResult, cfg: ScenarioConfig | None = None) -> dict:
    out = {
        "average_time": result.average_time,
        "sd_time": result.sd_time,
        "max_time": result.max_time,
        "censored_run_count": result.censored_run_count,
        "num_runs": len(result.runs),
        "lifetimes": [r.time_to_lifetime_fraction for r in result.runs],
    }
    if cfg is not None:
        out["config"] = config_to_dict(cfg)
    return out


def run_to_dict(run: RunResult) -> dict:
    return {
        "run_index": run.run_index,
        "time_to_lifetime_fraction": run.time_to_lifetime_fraction,
        "percentage_good": run.percentage_good.tolist(),
        "condition_mass": run.condition_mass.tolist(),
        "events": [
            {
                "year": e.year,
                "event_name": e.event_name,
                "n_affected": e.n_affected,
                "total_condition_loss": e.total_condition_loss,
                "sampled_fraction": e.sampled_fraction,
                "sampled_impact_mean": e.sampled_impact_mean,
            }
            for e in run.event_log
        ],
    }


def write_run_csvs(out: Path, run: RunResult) -> list[Path]:
    series = out / f"run_{run.run_index:03d}.csv"
    write_csv(
        series,
        ("year", "percentage_good", "condition_mass"),
        ((i, float(p), float(m)) for i, (p, m) in enumerate(zip(run.percentage_good, run.condition_mass))),
    )
    events = out / f"events_{run.run_index:03d}.csv"
    write_csv(
        events,
        ("year", "event_name", "n_affected", "total_condition_loss", "sampled_fraction", "sampled_impact_mean"),
        ((e.year, e.event_name, e.n_affected, e.total_condition_loss, e.sampled_fraction, e.sampled_impact_mean) for e in run.event_log),
    )
    return [series, events]


def pooled_histograms(result: EnsembleResult, bin_width: float = HISTOGRAM_BIN_WIDTH):
    initial = np.concatenate([r.initial_conditions for r in result.runs])
    final = np.concatenate([r.final_conditions for r in result.runs])
    return histogram(initial, bin_width, 0.0, 100.0), histogram(final, bin_width, 0.0, 100.0)


def write_histogram_csv(path: Path, hist, bin_width: float = HISTOGRAM_BIN_WIDTH) -> None:
    write_csv(path, ("bin_start", "bin_end", "count"), ((s, s + bin_width, c) for s, c in hist))


def write_run_outputs(out: Path, cfg: ScenarioConfig, result: EnsembleResult, fmt: str = "both") -> list[Path]:
    """Write every artifact of a ``run`` command into ``out``; returns the paths written."""
    written = []
    if fmt in ("json", "both"):
        p = out / "summary.json"
        write_json(p, ensemble_summary(result, cfg))
        written.append(p)
        p = out / "runs.json"
        write_json(p, [run_to_dict(r) for r in result.runs])
        written.append(p)
    if fmt in ("csv", "both"):
        p = out / "summary.csv"
        write_csv(
            p,
            ("run_index", "time_to_lifetime_fraction", "censored"),
            ((r.run_index, r.time_to_lifetime_fraction, int(r.censored)) for r in result.runs),
        )
        written.append(p)
        for run in result.runs:
            written += write_run_csvs(out, run)
    h0, h1 = pooled_histograms(result)
    for name, h in (("histogram_initial.csv", h0), ("histogram_final.csv", h1)):
        write_histogram_csv(out / name, h)
        written.append(out / name)
    band = ensemble_band(result.runs)
    p = out / "band.csv"
    write_csv(p, ("year", "min", "mean", "max"), zip(band.years.tolist(), band.min.tolist(), band.mean.tolist(), band.max.tolist()))
    written.append(p)
    return written


def ablation_to_dict(report: AblationReport) -> dict:
    return {
        "alpha": report.alpha,
        "test": "welch_two_sided",
        "baseline": ensemble_summary(report.baseline),
        "variants": [
            {
                "removed": v.removed,
                "p_value": v.p_value,
                "significant": v.significant,
                "t_statistic": None if v.test is None or not math.isfinite(v.test.statistic) else v.test.statistic,
                "df": None if v.test is None or v.test.degenerate else v.test.df,
                "note": v.note,
                "summary": ensemble_summary(v.result),
            }
            for v in report.variants
        ],
    }


def write_ablation_outputs(out: Path, report: AblationReport, table: str) -> list[Path]:
    paths = [out / "ablation_report.json", out / "table.txt", out / "ablation.csv"]
    write_json(paths[0], ablation_to_dict(report))
    _write_text(paths[1], table)
    write_csv(
        paths[2],
        ("condition", "collection_lifetime", "sd_lifetime", "max_lifetime"),
        ablation_rows(report),
    )
    return paths


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
