"""Bounded-rationality agent: stochastic local asset decisions.

After each classifier outcome a household draws one of four moves from a
per-income-class distribution: stay put, or one of three outcome-specific
actions.  Negative-outcome moves deplete (savings, a health-related asset,
or insurance coverage); positive-outcome moves build (savings, a better
health plan, or plain extra consumption).  Any non-stay move also carries
the income shock for the round.

The default probabilities encode a financial-security gradient: low-income
households rarely escape a negative outcome unscathed but, like high-income
households under a positive outcome, move almost surely; the middle class
sits at even odds either way.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .population import CLASS_NAMES, HIGH, LOW, MIDDLE, Household


class MdpAction(Enum):
    STAY = "stay"
    BURN_SAVINGS = "burn_savings"
    SELL_HEALTH_ASSET = "sell_health_asset"
    DROP_INSURANCE = "drop_insurance"
    SAVE_TO_NET_WORTH = "save_to_net_worth"
    BETTER_HEALTH_PLAN = "better_health_plan"
    CONSUME_MORE = "consume_more"


NEGATIVE_MOVES = (
    MdpAction.BURN_SAVINGS,
    MdpAction.SELL_HEALTH_ASSET,
    MdpAction.DROP_INSURANCE,
)
POSITIVE_MOVES = (
    MdpAction.SAVE_TO_NET_WORTH,
    MdpAction.BETTER_HEALTH_PLAN,
    MdpAction.CONSUME_MORE,
)

# health score change per action, in index points
HEALTH_EFFECT = {
    MdpAction.SELL_HEALTH_ASSET: -1.0,
    MdpAction.DROP_INSURANCE: -2.0,
    MdpAction.BETTER_HEALTH_PLAN: +1.0,
}

ROW_SUM_TOL = 1e-12


def row_actions(positive: bool) -> tuple[MdpAction, ...]:
    """Action order of a probability row: stay first, then the three moves."""
    moves = POSITIVE_MOVES if positive else NEGATIVE_MOVES
    return (MdpAction.STAY,) + moves


@dataclass(frozen=True)
class TransitionTable:
    """Probability rows keyed by (income_class, outcome is positive)."""

    probs: dict[tuple[str, bool], np.ndarray]

    def __post_init__(self):
        for key in ((c, o) for c in CLASS_NAMES for o in (False, True)):
            if key not in self.probs:
                raise ValueError(f"transition table missing row {key}")
        for key, row in self.probs.items():
            row = np.asarray(row, dtype=float)
            if row.shape != (4,):
                raise ValueError(f"row {key} must have 4 entries")
            if (row < 0).any():
                raise ValueError(f"row {key} has negative probabilities")
            if abs(row.sum() - 1.0) > ROW_SUM_TOL:
                raise ValueError(f"row {key} sums to {row.sum()!r}, not 1")
            self.probs[key] = row

    def row(self, income_class: str, positive: bool) -> np.ndarray:
        return self.probs[(income_class, positive)]

    def with_row(self, income_class: str, positive: bool,
                 row: np.ndarray) -> "TransitionTable":
        probs = dict(self.probs)
        probs[(income_class, positive)] = np.asarray(row, dtype=float)
        return TransitionTable(probs)


def default_transition_table() -> TransitionTable:
    """The built-in per-class move distribution.

    The near-certain-move rows use exact ninths (1/9 stay, 8/27 per move) so
    they sum to one; the middle-class rows keep their even stay odds with the
    residual split equally across the three moves.
    """
    low_locked = np.array([1 / 9, 8 / 27, 8 / 27, 8 / 27])
    even = np.array([0.5, 1 / 6, 1 / 6, 1 / 6])
    secure = np.array([0.55, 0.15, 0.15, 0.15])
    return TransitionTable({
        (LOW, False): low_locked,
        (MIDDLE, False): even,
        (HIGH, False): secure,
        (LOW, True): secure.copy(),
        (MIDDLE, True): even.copy(),
        (HIGH, True): low_locked.copy(),
    })


def sample_action(income_class: str, positive: bool, table: TransitionTable,
                  rng: np.random.Generator) -> MdpAction:
    """Draw one move from the household's applicable row."""
    row = table.row(income_class, positive)
    idx = int(np.searchsorted(np.cumsum(row), rng.random(), side="right"))
    idx = min(idx, 3)  # guard the cumulative round-off edge
    return row_actions(positive)[idx]


def apply_action(hh: Household, action: MdpAction, shock_unit: float) -> Household:
    """Mutate the household according to one sampled move.

    ``shock_unit`` is the round's income shock (a tenth of current income);
    every non-stay move applies it first, negative moves deducting and
    positive moves adding.  Savings moves then settle the month's budget:
    burning covers the uncovered liability, saving banks the surplus.
    """
    if action is MdpAction.STAY:
        return hh

    if action in NEGATIVE_MOVES:
        hh.income -= shock_unit
        if action is MdpAction.BURN_SAVINGS:
            hh.net_worth -= max(hh.expenses - hh.income, 0.0)
    else:
        hh.income += shock_unit
        if action is MdpAction.SAVE_TO_NET_WORTH:
            hh.net_worth += max(hh.income - hh.expenses, 0.0)

    effect = HEALTH_EFFECT.get(action)
    if effect is not None:
        hh.health += effect
        hh.health_adjust += effect
    return hh
