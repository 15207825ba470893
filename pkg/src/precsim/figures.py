"""Figure rendering for scenario reports.

For each scenario and attribute, the per-round precarity histograms are
drawn as stepped lines on a shared round-colored scale, mirroring the
delimited report so the distribution's drift over rounds is visible at a
glance.  A comparison chart overlays the mean index per round for a set of
scenarios.  PNG metadata is pinned so repeated runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import cm

from .engine import ATTRIBUTES, RoundSummary

PNG_METADATA = {"Software": "precsim"}
ATTRIBUTE_LABELS = {
    "income": "income",
    "net_worth": "net worth",
    "health": "health index",
}


def _round_color(round_idx: int, rounds: int):
    return cm.viridis(0.15 + 0.8 * (round_idx - 1) / max(rounds - 1, 1))


def render_scenario(out_dir: str | Path, scenario: str,
                    summaries: list[RoundSummary],
                    bin_edges: np.ndarray) -> list[Path]:
    """One histogram-evolution figure per attribute; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    centers = 0.5 * (np.asarray(bin_edges[:-1]) + np.asarray(bin_edges[1:]))
    rounds = max((s.round for s in summaries), default=0)
    written = []
    for attr in ATTRIBUTES:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for s in summaries:
            if s.attribute != attr or s.stratum != "all":
                continue
            ax.step(centers, s.hist, where="mid",
                    color=_round_color(s.round, rounds),
                    linewidth=1.2, label=f"round {s.round}")
        ax.set_xlabel("precarity index")
        ax.set_ylabel("households")
        ax.set_title(f"{scenario}: {ATTRIBUTE_LABELS[attr]} precarity by round")
        ax.legend(fontsize=7, ncol=2, frameon=False)
        fig.tight_layout()
        path = out_dir / f"{scenario}_{attr}.png"
        fig.savefig(path, dpi=120, metadata=PNG_METADATA)
        plt.close(fig)
        written.append(path)
    return written


def render_comparison(out_dir: str | Path,
                      scenario_summaries: dict[str, list[RoundSummary]]) -> list[Path]:
    """Mean index per round, one line per scenario, one figure per attribute."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for attr in ATTRIBUTES:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for name, summaries in scenario_summaries.items():
            rows = sorted(
                (s for s in summaries if s.attribute == attr and s.stratum == "all"),
                key=lambda s: s.round,
            )
            ax.plot([s.round for s in rows], [s.mean for s in rows],
                    marker="o", markersize=3, linewidth=1.3, label=name)
        ax.set_xlabel("round")
        ax.set_ylabel("mean precarity index")
        ax.set_title(f"mean {ATTRIBUTE_LABELS[attr]} precarity by scenario")
        ax.legend(fontsize=8, frameon=False)
        fig.tight_layout()
        path = out_dir / f"comparison_{attr}.png"
        fig.savefig(path, dpi=120, metadata=PNG_METADATA)
        plt.close(fig)
        written.append(path)
    return written
