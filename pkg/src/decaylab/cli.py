"""Command-line entry point.

    decaylab run      --config scenario.toml --out results/
    decaylab ablate   --config scenario.toml --out ablation/ --alpha 0.05
    decaylab validate --config scenario.toml
    decaylab schema   [--example table2|ablation]

Exit codes: 0 success, 2 invalid configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from importlib import resources
from pathlib import Path

from .domain import ConfigError, ScenarioConfig, load_config, validate_config

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3

EXAMPLES = {
    "table2": "paper_table2.toml",
    "ablation": "ablation_baseline.toml",
    "coefficients": "cellulose_coefficients.toml",
}

SCHEMA = """\
Scenario configuration (TOML or JSON; JSON uses the same keys).

Top level
  num_agents                int > 0     population size
  num_years                 int >= 0    simulation horizon; runs stop early at the lifetime fraction
  num_simulations           int > 0     number of runs (default 10)
  master_seed               uint64      per-run streams derive from (master_seed, run index)
  good_condition_threshold  float       objects count as good while condition > threshold (default 0)
  lifetime_fraction         float       lifetime = first year with % good <= 100 * fraction (default 0.01)
  select_from_all           bool        let events hit objects already at 0 (default false)
  mean, sd                  float       initial condition, normal on the 0-100 scale
  lower_bound, upper_bound  float       truncation bounds of the initial condition

[[adverse_events]]
  name                      str         unique across all processes
  fraction_affected         [lo, hi]    share of the collection hit, within [0, 1]
  condition_loss            [lo, hi]    condition lost per affected object, within [0, 100]
  mean_time                 [lo, hi]    mean years between events, lo > 0
  weibull_shape             float > 0   1 = constant hazard (default)
  fraction_sampling         normal95 | uniform   (default normal95)
  impact_sampling           normal95 | uniform   (default normal95)
  mean_time_sampling        normal95 | uniform   (default uniform)
  normal95 reads [lo, hi] as the 95% interval of a normal, truncated to the physical bounds.

[[continuous_processes]]
  name                      str         unique across all processes
  kind                      linear_rate | cellulose_hydrolysis
  rate                      float >= 0  linear_rate: condition units lost per year
  T, RH, pH                 float       cellulose_hydrolysis: environment (degC, %, -)
  DP0, DP_threshold         float       cellulose_hydrolysis: DP at condition 100 and at condition 0
  kc                        float >= 0  optional fixed rate constant (1/year), bypasses coefficients
  coefficients              table       ln_A, Ea (J/mol), b_RH, b_pH:
                                        ln kc = ln_A - Ea/(R (T + 273.15)) + b_RH RH + b_pH pH
  coefficients_file         path        coefficient table file, relative to the scenario file
  per_agent                 bool        advance each object's own DP instead of a shared curve
  agents                    [start, stop]  apply only to this index range
  agent_fraction            float       apply only to the leading fraction of objects

A combined `deg_processes` list is also accepted; entries with kind = "adverse_event"
(the default) are events, the rest continuous processes.

Example (`decaylab schema --example table2`):
"""


def _example_text(name: str) -> str:
    return resources.files("decaylab").joinpath("data", EXAMPLES[name]).read_text(encoding="utf-8")


def _err(msg: str) -> None:
    print(f"decaylab: {msg}", file=sys.stderr)


def _load(args) -> tuple[ScenarioConfig | None, int]:
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        _err(f"cannot read {args.config}: {exc.strerror or exc}")
        return None, EXIT_IO
    except ConfigError as exc:
        _err(f"invalid configuration: {exc}")
        return None, EXIT_INVALID
    cfg = cfg.with_overrides(seed=getattr(args, "seed", None), runs=getattr(args, "runs", None))
    problems = validate_config(cfg)
    if problems:
        _err(f"invalid configuration {args.config}:")
        for p in problems:
            print(f"  - {p}", file=sys.stderr)
        return None, EXIT_INVALID
    return cfg, EXIT_OK


def _prepare_out(out: Path, force: bool) -> int:
    if out.exists() and not out.is_dir():
        _err(f"output path {out} exists and is not a directory")
        return EXIT_IO
    if out.is_dir() and any(out.iterdir()) and not force:
        _err(f"output directory {out} is not empty (use --force to overwrite)")
        return EXIT_IO
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _err(f"cannot create {out}: {exc}")
        return EXIT_IO
    return EXIT_OK


def _fmt_years(x) -> str:
    return "n/a" if x is None else f"{x:.1f}"


def cmd_run(args) -> int:
    from .engine import run_ensemble
    from .reporting import pooled_histograms, write_run_outputs

    cfg, code = _load(args)
    if cfg is None:
        return code
    out = Path(args.out)
    code = _prepare_out(out, args.force)
    if code:
        return code
    t0 = time.perf_counter()
    result = run_ensemble(cfg, args.threads)
    elapsed = time.perf_counter() - t0
    try:
        written = write_run_outputs(out, cfg, result, args.format)
        if args.plots:
            from .plotting import plot_histograms, plot_time_series

            plot_time_series(result, out / "time_series.png", cfg.lifetime_fraction)
            plot_histograms(*pooled_histograms(result), out / "histograms.png")
            written += [out / "time_series.png", out / "histograms.png"]
    except OSError as exc:
        _err(f"cannot write outputs to {out}: {exc}")
        return EXIT_IO
    print(f"{len(result.runs)} runs, {cfg.num_agents} objects, horizon {cfg.num_years} years ({elapsed:.2f} s)")
    print(f"collection lifetime (time to {100 * cfg.lifetime_fraction:g}% good): "
          f"mean {_fmt_years(result.average_time)}, sd {_fmt_years(result.sd_time)}, max {result.max_time if result.max_time is not None else 'n/a'}")
    if result.censored_run_count:
        print(f"{result.censored_run_count} run(s) censored: threshold not reached within {cfg.num_years} years")
    print(f"wrote {len(written)} files to {out}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    from .analysis import format_ablation_table, run_ablation
    from .reporting import write_ablation_outputs

    cfg, code = _load(args)
    if cfg is None:
        return code
    if not cfg.process_names:
        _err("ablation needs at least one degradation process")
        return EXIT_INVALID
    if not 0 < args.alpha < 1:
        _err(f"--alpha must be within (0, 1), got {args.alpha}")
        return EXIT_INVALID
    out = Path(args.out)
    code = _prepare_out(out, args.force)
    if code:
        return code
    report = run_ablation(cfg, args.alpha, args.threads)
    table = format_ablation_table(report)
    try:
        write_ablation_outputs(out, report, table)
        if args.plots:
            from .plotting import plot_ablation

            plot_ablation(report, out / "ablation.png")
    except OSError as exc:
        _err(f"cannot write outputs to {out}: {exc}")
        return EXIT_IO
    sys.stdout.write(table)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg, code = _load(args)
    if cfg is None:
        return code
    print(f"{args.config}: valid ({len(cfg.adverse_events)} adverse events, {len(cfg.continuous_processes)} continuous processes)")
    return EXIT_OK


def cmd_schema(args) -> int:
    if args.example:
        sys.stdout.write(_example_text(args.example))
    else:
        sys.stdout.write(SCHEMA + "\n" + _example_text("table2"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="decaylab", description="Simulate the decay of a collection of objects.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", required=True, help="scenario file (.toml or .json)")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--seed", type=int, help="override master_seed")
            p.add_argument("--runs", type=int, help="override num_simulations")
            p.add_argument("--threads", type=int, default=None,
                           help="worker processes (default: $DECAYLAB_THREADS or 1)")
            p.add_argument("--force", action="store_true", help="write into a non-empty output directory")
            p.add_argument("--no-plots", dest="plots", action="store_false", help="skip PNG figures")

    p = sub.add_parser("run", help="run an ensemble and write results")
    common(p)
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate", help="remove one process at a time and test the lifetime change")
    common(p)
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("validate", help="check a scenario file")
    common(p, needs_out=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("schema", help="print the configuration schema and an example")
    p.add_argument("--example", choices=sorted(EXAMPLES), help="print only this bundled file")
    p.set_defaults(func=cmd_schema)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
