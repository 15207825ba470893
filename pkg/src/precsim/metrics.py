"""Precarity index over categorical state sequences.

A household trajectory is recorded as a sequence of state ranks (0 = most
precarious, ``n_states - 1`` = least precarious).  The index combines three
ingredients:

* the precariousness of the starting state,
* the net decline across the sequence (weighted share of downward minus
  upward transitions),
* the variability of the sequence (geometric mean of normalized state
  entropy and normalized transition count).

All functions here are pure and safe to call concurrently.  The engine uses
the batch variant (:func:`precarity_index_batch`) on whole populations; the
scalar functions define the reference semantics.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StateSequence:
    """Ordered state ranks for one household attribute.

    ``states`` holds integers in ``[0, n_states - 1]``; rank 0 is the most
    precarious state.  Sequences must be non-empty and ``n_states >= 2``.
    """

    states: tuple[int, ...]
    n_states: int

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(int(s) for s in self.states))
        if self.n_states < 2:
            raise ValueError(f"state space must have at least 2 states, got {self.n_states}")
        if len(self.states) == 0:
            raise ValueError("state sequence must be non-empty")
        for s in self.states:
            if not 0 <= s < self.n_states:
                raise ValueError(f"state rank {s} outside [0, {self.n_states - 1}]")

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class PrecarityParams:
    """Constants of the index: mixing weight and the two exponents."""

    start_weight: float = 0.2
    variability_exp: float = 1.0
    decline_exp: float = 1.2

    def __post_init__(self):
        if not 0.0 <= self.start_weight <= 1.0:
            raise ValueError("start_weight must lie in [0, 1]")
        if self.variability_exp <= 0 or self.decline_exp <= 0:
            raise ValueError("exponents must be positive")

    @property
    def index_max(self) -> float:
        """Analytic upper bound of the index for these constants."""
        return self.start_weight + (1.0 - self.start_weight) * 2.0 ** self.decline_exp


@dataclass(frozen=True)
class SequenceStats:
    """All constituent statistics of the index for one sequence."""

    neg_share: float
    pos_share: float
    net_decline: float
    entropy_norm: float
    transition_rate: float
    variability: float
    start_precariousness: float


def start_precariousness(seq: StateSequence) -> float:
    """Precariousness of the starting state, 1 at the worst rank, 0 at the best."""
    return (seq.n_states - 1 - seq.states[0]) / (seq.n_states - 1)


def transition_shares(seq: StateSequence) -> tuple[float, float, float]:
    """Weighted shares of downward and upward transitions.

    Each consecutive pair is weighted by ``1 + hops`` where hops is the rank
    distance of the destination state from the highest rank visited anywhere
    in the sequence, so falls toward the bottom count more.  Same-state pairs
    contribute their weight to the denominator only.

    Returns ``(neg_share, pos_share, net_decline)``; all zero for sequences
    shorter than 2.
    """
    states = seq.states
    if len(states) < 2:
        return 0.0, 0.0, 0.0
    best = max(states)
    neg = pos = total = 0.0
    for prev, cur in zip(states, states[1:]):
        weight = 1.0 + (best - cur)
        total += weight
        if cur < prev:
            neg += weight
        elif cur > prev:
            pos += weight
    return neg / total, pos / total, (neg - pos) / total


def variability(seq: StateSequence) -> tuple[float, float, float]:
    """Normalized entropy, normalized transition count, and their geometric mean.

    Entropy is over the frequency distribution of visited states (natural
    log; the base cancels against the ``log n_states`` normalizer).  Raises
    for sequences shorter than 2, where the transition count is undefined.
    """
    states = seq.states
    if len(states) < 2:
        raise ValueError("variability needs at least 2 states")
    length = len(states)
    entropy = 0.0
    for count in Counter(states).values():
        freq = count / length
        entropy -= freq * math.log(freq)
    entropy_norm = entropy / math.log(seq.n_states)
    transitions = sum(1 for prev, cur in zip(states, states[1:]) if cur != prev)
    transition_rate = transitions / (length - 1)
    return entropy_norm, transition_rate, math.sqrt(entropy_norm * transition_rate)


def sequence_stats(seq: StateSequence) -> SequenceStats:
    """Bundle of every constituent statistic for one sequence."""
    neg, pos, net = transition_shares(seq)
    if len(seq) >= 2:
        entropy_norm, transition_rate, var = variability(seq)
    else:
        entropy_norm = transition_rate = var = 0.0
    return SequenceStats(
        neg_share=neg,
        pos_share=pos,
        net_decline=net,
        entropy_norm=entropy_norm,
        transition_rate=transition_rate,
        variability=var,
        start_precariousness=start_precariousness(seq),
    )


def precarity_index(seq: StateSequence, params: PrecarityParams = PrecarityParams()) -> float:
    """Precarity of one sequence.

    ``start_weight * start_precariousness`` plus the dynamic term
    ``(1 - start_weight) * variability**a * (1 + net_decline)**b``.  For a
    length-1 sequence no dynamics are observable and the index reduces to the
    starting term.
    """
    start = start_precariousness(seq)
    if len(seq) < 2:
        return params.start_weight * start
    _, _, net = transition_shares(seq)
    _, _, var = variability(seq)
    dynamic = var ** params.variability_exp * (1.0 + net) ** params.decline_exp
    return params.start_weight * start + (1.0 - params.start_weight) * dynamic


def precarity_index_batch(
    states: np.ndarray, n_states: int, params: PrecarityParams = PrecarityParams()
) -> np.ndarray:
    """Vectorized :func:`precarity_index` over equal-length sequences.

    ``states`` is an ``(n_sequences, length)`` integer array.  Matches the
    scalar function to float round-off; the engine relies on this for whole
    populations every round.
    """
    states = np.asarray(states)
    if states.ndim != 2 or states.shape[1] < 1:
        raise ValueError("expected a (n_sequences, length) array")
    n, length = states.shape
    start = (n_states - 1 - states[:, 0]) / (n_states - 1)
    if length < 2:
        return params.start_weight * start

    diffs = np.diff(states, axis=1)
    best = states.max(axis=1, keepdims=True)
    weights = 1.0 + (best - states[:, 1:])
    total = weights.sum(axis=1)
    neg = np.where(diffs < 0, weights, 0.0).sum(axis=1)
    pos = np.where(diffs > 0, weights, 0.0).sum(axis=1)
    net = (neg - pos) / total

    counts = np.zeros((n, n_states))
    np.add.at(counts, (np.arange(n)[:, None], states), 1.0)
    freqs = counts / length
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(freqs > 0, freqs * np.log(freqs), 0.0)
    entropy_norm = -terms.sum(axis=1) / math.log(n_states)
    transition_rate = (diffs != 0).sum(axis=1) / (length - 1)
    var = np.sqrt(entropy_norm * transition_rate)

    dynamic = var ** params.variability_exp * (1.0 + net) ** params.decline_exp
    return params.start_weight * start + (1.0 - params.start_weight) * dynamic
