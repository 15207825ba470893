"""Decision-maker side: threshold classifier and the two interventions.

The classifier accepts a fixed share of the *initial* population by income
and never updates: the same dollar threshold applies every round, regardless
of what has happened to a household since.  Interventions either add a fixed
monthly stimulus to every household under the threshold, or scale down the
probability of moving to a poorer state after an adverse decision (in the
stochastic-choice table or in the exogenous state process of the optimizing
agent).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import TransitionTable
from .population import Household

NONE, FIXED_STIMULUS, PRECARITY_RESISTANCE = (
    "none", "fixed_stimulus", "precarity_resistance",
)
INTERVENTION_KINDS = (NONE, FIXED_STIMULUS, PRECARITY_RESISTANCE)


@dataclass(frozen=True)
class ClassifierPolicy:
    """Fixed income threshold; ties count as accepted."""

    threshold_income: float
    acceptance_quantile: float = 0.5


@dataclass(frozen=True)
class InterventionConfig:
    kind: str = NONE
    amount: float = 1500.0              # monthly, fixed_stimulus only
    negative_prob_scale: float = 1.0    # precarity_resistance only
    start_round: int = 1

    def __post_init__(self):
        if self.kind not in INTERVENTION_KINDS:
            raise ValueError(f"unknown intervention kind {self.kind!r}")
        if self.amount < 0:
            raise ValueError("stimulus amount must be non-negative")
        if not 0.0 <= self.negative_prob_scale <= 1.0:
            raise ValueError("negative_prob_scale must lie in [0, 1]")
        if self.start_round < 1:
            raise ValueError("start_round must be at least 1")

    def active(self, round_idx: int) -> bool:
        return self.kind != NONE and round_idx >= self.start_round


def calibrate_threshold(incomes, quantile: float) -> float:
    """Quantile point of the initial income distribution (midpoint rule).

    Households at or above the returned value are accepted, so quantile 0
    accepts everyone and quantile 1 only the top earners.
    """
    if not 0.0 <= quantile <= 1.0:
        raise ValueError("quantile must lie in [0, 1]")
    incomes = np.asarray(incomes, dtype=float)
    if incomes.size == 0:
        raise ValueError("cannot calibrate on an empty population")
    return float(np.quantile(incomes, quantile, method="midpoint"))


def classify(hh: Household, policy: ClassifierPolicy) -> bool:
    """True for a positive outcome: current income at or above the threshold."""
    return hh.income >= policy.threshold_income


def apply_stimulus(hh: Household, cfg: InterventionConfig, round_idx: int,
                   threshold: float) -> Household:
    """Add the monthly stimulus when active and the household is under the threshold.

    Called after classification, so the round's outcome is decided on
    pre-stimulus income.
    """
    if cfg.kind == FIXED_STIMULUS and cfg.active(round_idx) and hh.income < threshold:
        hh.income += cfg.amount
    return hh


def apply_resistance(target, scale: float):
    """Scale down the probability of transitions to poorer states.

    For a :class:`TransitionTable`, every move probability in the
    negative-outcome rows is multiplied by ``scale`` and the freed mass moves
    to staying put.  For an exogenous transition matrix, entries leading to
    lower states are scaled and the freed mass lands on the diagonal.  Rows
    stay unit-sum in both cases.
    """
    if not 0.0 <= scale <= 1.0:
        raise ValueError("scale must lie in [0, 1]")
    if isinstance(target, TransitionTable):
        return _resist_table(target, scale)
    return _resist_matrix(np.asarray(target, dtype=float), scale)


def _resist_table(table: TransitionTable, scale: float) -> TransitionTable:
    probs = {}
    for (income_class, positive), row in table.probs.items():
        if positive:
            probs[(income_class, positive)] = row.copy()
        else:
            moves = row[1:] * scale
            probs[(income_class, positive)] = np.concatenate(
                ([row[0] + (row[1:].sum() - moves.sum())], moves)
            )
    return TransitionTable(probs)


def _resist_matrix(matrix: np.ndarray, scale: float) -> np.ndarray:
    out = matrix.copy()
    n = out.shape[0]
    for i in range(n):
        below = out[i, :i]
        freed = below.sum() * (1.0 - scale)
        out[i, :i] = below * scale
        out[i, i] += freed
    return out
