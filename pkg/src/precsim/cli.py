"""Command-line entry point.

``precsim --config scenarios.yaml --out results`` runs every configured
scenario, writing one delimited report plus a JSON sidecar per scenario, a
combined comparison file against the first scenario, and rendered figures
(disable with ``--no-figures``).  ``precsim --compare A.csv B.csv --out d``
compares two existing reports.  Set PRECSIM_VERBOSITY to quiet, info, or
debug to control logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import ConfigError, Scenario, load_config
from .engine import run_simulation
from .ifp import ConvergenceError
from .population import IngestionError, read_income_file
from .report import (
    ReportError,
    compare_reports,
    read_report,
    write_comparison,
    write_report,
)

log = logging.getLogger("precsim")

VERBOSITY_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO,
                    "debug": logging.DEBUG}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precsim",
        description="Simulate household precarity under repeated algorithmic "
                    "decisions and policy interventions.",
    )
    parser.add_argument("--config", help="YAML scenario configuration file")
    parser.add_argument("--out", required=True, help="output directory for reports")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured master seed")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate configuration and data files, run nothing")
    parser.add_argument("--parallel-scenarios", action="store_true",
                        help="run scenarios concurrently (they share nothing)")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip rendering PNG figures next to the reports")
    parser.add_argument("--compare", nargs=2, metavar=("A", "B"),
                        help="compare two existing report files instead of running")
    return parser


def _setup_logging():
    level = VERBOSITY_LEVELS.get(os.environ.get("PRECSIM_VERBOSITY", "info"), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _run_scenario(scenario: Scenario, out_dir: Path, figures: bool):
    log.info("running scenario %s (digest %s)", scenario.name, scenario.digest)
    result = run_simulation(scenario.sim)
    path = write_report(out_dir, scenario.name, result, scenario.digest)
    log.info("wrote %s", path)
    if figures:
        from . import figures as figmod
        figmod.render_scenario(out_dir / "figures", scenario.name,
                               result.summaries, result.bin_edges)
    return scenario.name, result


def _dry_run(scenarios: list[Scenario]) -> int:
    for scenario in scenarios:
        spec = scenario.sim.population
        if spec.income_file is not None:
            read_income_file(spec.income_file)
        log.info("scenario %s validated (digest %s)", scenario.name, scenario.digest)
    print(f"config ok: {len(scenarios)} scenario(s) validated")
    return 0


def _compare_existing(path_a: str, path_b: str, out_dir: Path) -> int:
    rows_a = read_report(path_a)
    rows_b = read_report(path_b)
    label_a = Path(path_a).stem
    label_b = Path(path_b).stem
    comparison = compare_reports(rows_a, rows_b)
    out = write_comparison(out_dir / f"comparison_{label_a}_vs_{label_b}.csv",
                           comparison, label_a, label_b)
    print(f"wrote {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out)

    try:
        if args.compare:
            return _compare_existing(args.compare[0], args.compare[1], out_dir)

        if not args.config:
            parser.error("--config is required unless --compare is given")
        scenarios = load_config(args.config, seed_override=args.seed)
        if args.dry_run:
            return _dry_run(scenarios)

        out_dir.mkdir(parents=True, exist_ok=True)
        if args.parallel_scenarios and len(scenarios) > 1:
            with ThreadPoolExecutor(max_workers=min(4, len(scenarios))) as pool:
                results = list(pool.map(
                    lambda s: _run_scenario(s, out_dir, not args.no_figures),
                    scenarios,
                ))
        else:
            results = [_run_scenario(s, out_dir, not args.no_figures)
                       for s in scenarios]

        if len(results) > 1:
            base_name, base_result = results[0]
            base_rows = read_report(out_dir / f"{base_name}.csv")
            all_rows = []
            for name, _ in results[1:]:
                rows = read_report(out_dir / f"{name}.csv")
                for row in compare_reports(base_rows, rows):
                    row["scenario_a"], row["scenario_b"] = base_name, name
                    all_rows.append((base_name, name, row))
            _write_combined(out_dir / "comparison.csv", all_rows)
            log.info("wrote %s", out_dir / "comparison.csv")
        if not args.no_figures:
            from . import figures as figmod
            figmod.render_comparison(
                out_dir / "figures",
                {name: result.summaries for name, result in results},
            )
        print(f"completed {len(results)} scenario(s) -> {out_dir}")
        return 0
    except (ConfigError, IngestionError, ReportError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def _write_combined(path: Path, labelled_rows) -> None:
    import csv

    cols = ["scenario_a", "scenario_b", "round", "attribute", "income_class",
            "mean_delta", "median_delta",
            "top_bin_count_a", "top_bin_count_b", "top_bin_delta"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for label_a, label_b, row in labelled_rows:
            writer.writerow([
                label_a, label_b, row["round"], row["attribute"],
                row["income_class"],
                repr(float(row["mean_delta"])), repr(float(row["median_delta"])),
                row["top_bin_count_a"], row["top_bin_count_b"], row["top_bin_delta"],
            ])


if __name__ == "__main__":
    sys.exit(main())
