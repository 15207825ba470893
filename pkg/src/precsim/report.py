"""Delimited report files, metadata sidecars, and report comparison.

One CSV per scenario: a row per (round, attribute, stratum) with count,
mean, median, and the 40 fixed-bin histogram counts.  A JSON sidecar records
the run's provenance (seed, config digest, bin edges) so any report can be
replayed exactly.  Outputs contain no timestamps or absolute paths: equal
configurations produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import HISTOGRAM_BINS, RoundSummary, SimulationResult

HIST_COLUMNS = [f"bin_{i:02d}" for i in range(HISTOGRAM_BINS)]
COLUMNS = ["scenario", "round", "attribute", "income_class",
           "count", "mean", "median"] + HIST_COLUMNS


class ReportError(ValueError):
    """Raised for malformed or incompatible report files."""


def report_path(out_dir: str | Path, scenario: str) -> Path:
    return Path(out_dir) / f"{scenario}.csv"


def meta_path(out_dir: str | Path, scenario: str) -> Path:
    return Path(out_dir) / f"{scenario}.meta.json"


def write_report(out_dir: str | Path, scenario: str, result: SimulationResult,
                 config_digest: str) -> Path:
    """Write the scenario's summary CSV and its metadata sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = report_path(out_dir, scenario)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for s in result.summaries:
            writer.writerow(
                [scenario, s.round, s.attribute, s.stratum, s.count,
                 repr(float(s.mean)), repr(float(s.median))]
                + [str(c) for c in s.hist]
            )
    cfg = result.config
    meta = {
        "scenario": scenario,
        "seed": cfg.seed,
        "config_digest": config_digest,
        "rounds": cfg.rounds,
        "agent_model": cfg.agent_model,
        "households": result.record.n_households,
        "acceptance_quantile": cfg.acceptance_quantile,
        "threshold_income": result.record.threshold,
        "intervention": {
            "kind": cfg.intervention.kind,
            "amount": cfg.intervention.amount,
            "negative_prob_scale": cfg.intervention.negative_prob_scale,
            "start_round": cfg.intervention.start_round,
        },
        "bin_edges": [float(e) for e in result.bin_edges],
    }
    with open(meta_path(out_dir, scenario), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


@dataclass(frozen=True)
class ReportRow:
    scenario: str
    round: int
    attribute: str
    stratum: str
    count: int
    mean: float
    median: float
    hist: tuple[int, ...]

    @property
    def key(self) -> tuple[int, str, str]:
        return (self.round, self.attribute, self.stratum)


def read_report(path: str | Path) -> list[ReportRow]:
    path = Path(path)
    if not path.exists():
        raise ReportError(f"report not found: {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COLUMNS:
            raise ReportError(f"{path}: unexpected columns {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append(ReportRow(
                    scenario=row["scenario"],
                    round=int(row["round"]),
                    attribute=row["attribute"],
                    stratum=row["income_class"],
                    count=int(row["count"]),
                    mean=float(row["mean"]),
                    median=float(row["median"]),
                    hist=tuple(int(row[c]) for c in HIST_COLUMNS),
                ))
            except (KeyError, ValueError):
                raise ReportError(f"{path}:{lineno}: malformed row") from None
    return rows


def top_bin_start(hist: tuple[int, ...], fraction: float = 0.75) -> int:
    """First bin index at which the cumulative count reaches the fraction."""
    total = sum(hist)
    if total == 0:
        return len(hist)
    running = 0
    for i, c in enumerate(hist):
        running += c
        if running >= fraction * total:
            return i + 1
    return len(hist)


def compare_reports(rows_a: list[ReportRow], rows_b: list[ReportRow]) -> list[dict]:
    """Per-stratum deltas (B minus A) of mean, median, and top-tail counts.

    The tail cutoff is the bin where report A's cumulative distribution
    passes three quarters; both reports are counted above that same bin.
    Raises when the two reports cover different strata.
    """
    by_key_a = {r.key: r for r in rows_a}
    by_key_b = {r.key: r for r in rows_b}
    if set(by_key_a) != set(by_key_b):
        missing = set(by_key_a) ^ set(by_key_b)
        raise ReportError(f"reports cover different strata, e.g. {sorted(missing)[:3]}")
    out = []
    for key in sorted(by_key_a):
        a, b = by_key_a[key], by_key_b[key]
        cut = top_bin_start(a.hist)
        out.append({
            "round": key[0],
            "attribute": key[1],
            "income_class": key[2],
            "mean_delta": b.mean - a.mean,
            "median_delta": b.median - a.median,
            "top_bin_count_a": sum(a.hist[cut:]),
            "top_bin_count_b": sum(b.hist[cut:]),
            "top_bin_delta": sum(b.hist[cut:]) - sum(a.hist[cut:]),
        })
    return out


def write_comparison(path: str | Path, comparison: list[dict],
                     label_a: str, label_b: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ["scenario_a", "scenario_b", "round", "attribute", "income_class",
            "mean_delta", "median_delta",
            "top_bin_count_a", "top_bin_count_b", "top_bin_delta"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in comparison:
            writer.writerow([
                label_a, label_b, row["round"], row["attribute"],
                row["income_class"],
                repr(float(row["mean_delta"])), repr(float(row["median_delta"])),
                row["top_bin_count_a"], row["top_bin_count_b"],
                row["top_bin_delta"],
            ])
    return path
