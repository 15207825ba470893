"""Tests for the sequence precarity index.

``oracle_precarity`` below is an independent brute-force implementation kept
deliberately free of the package's code paths; exhaustive equivalence against
it is the primary correctness check.
"""

import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from precsim.metrics import (
    PrecarityParams,
    StateSequence,
    precarity_index,
    precarity_index_batch,
    sequence_stats,
    start_precariousness,
    transition_shares,
    variability,
)


def oracle_precarity(states, n_states, lam=0.2, alpha=1.0, gamma=1.2):
    """Brute-force reference: recomputes every term from first principles."""
    r = (n_states - 1 - states[0]) / (n_states - 1)
    if len(states) == 1:
        return lam * r
    best = max(states)
    pairs = list(zip(states[:-1], states[1:]))
    total = sum(1 + (best - b) for (_, b) in pairs)
    q_neg = sum(1 + (best - b) for (a, b) in pairs if b < a) / total
    q_pos = sum(1 + (best - b) for (a, b) in pairs if b > a) / total
    q = q_neg - q_pos
    length = len(states)
    h = -sum((c / length) * math.log(c / length) for c in Counter(states).values())
    h_norm = h / math.log(n_states)
    t_norm = sum(1 for (a, b) in pairs if a != b) / (length - 1)
    c = math.sqrt(h_norm * t_norm)
    return lam * r + (1 - lam) * (c ** alpha) * (1 + q) ** gamma


def seq(states, n_states=10):
    return StateSequence(tuple(states), n_states)


class TestStartPrecariousness:
    def test_best_state_is_zero(self):
        assert start_precariousness(seq((9, 3, 4))) == 0.0

    def test_worst_state_is_one(self):
        assert start_precariousness(seq((0, 5))) == 1.0

    def test_interior_state(self):
        # rank 5 of 10: (9 - 5) / 9
        assert start_precariousness(seq((5, 1))) == pytest.approx(4 / 9, abs=1e-15)

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            StateSequence((), 10)

    def test_out_of_range_rank_rejected(self):
        with pytest.raises(ValueError):
            StateSequence((10,), 10)
        with pytest.raises(ValueError):
            StateSequence((-1,), 10)


class TestTransitionShares:
    def test_monotone_increasing_is_pure_improvement(self):
        neg, pos, net = transition_shares(seq((1, 3, 5, 8)))
        assert neg == 0.0
        assert pos == 1.0
        assert net == -1.0

    def test_constant_sequence_has_no_shares(self):
        assert transition_shares(seq((5, 5, 5))) == (0.0, 0.0, 0.0)

    def test_weighted_shares_match_oracle(self):
        # (3,1,2): drop 3->1 carries weight 3, rise 1->2 weight 2
        neg, pos, net = transition_shares(seq((3, 1, 2)))
        assert neg == pytest.approx(0.6, abs=1e-12)
        assert pos == pytest.approx(0.4, abs=1e-12)
        assert net == pytest.approx(0.2, abs=1e-12)

    def test_length_one_returns_zeros(self):
        assert transition_shares(seq((4,))) == (0.0, 0.0, 0.0)

    @given(st.lists(st.integers(0, 9), min_size=2, max_size=30))
    def test_shares_bounded(self, states):
        neg, pos, net = transition_shares(seq(states))
        assert 0.0 <= neg <= 1.0
        assert 0.0 <= pos <= 1.0
        assert neg + pos <= 1.0 + 1e-12
        assert -1.0 <= net <= 1.0


class TestVariability:
    def test_block_sequence_transition_rate(self):
        # one change in seven steps
        _, t_rate, _ = variability(seq((1, 1, 1, 1, 0, 0, 0, 0), n_states=2))
        assert t_rate == 1 / 7

    def test_alternating_sequence_transition_rate(self):
        h_a, t_a, _ = variability(seq((1, 0, 1, 0, 1, 0, 1, 0), n_states=2))
        h_b, _, _ = variability(seq((1, 1, 1, 1, 0, 0, 0, 0), n_states=2))
        assert t_a == 1.0
        assert h_a == h_b  # same visit frequencies, exactly

    def test_constant_sequence_is_zero(self):
        assert variability(seq((4, 4, 4, 4))) == (0.0, 0.0, 0.0)

    def test_length_one_rejected(self):
        with pytest.raises(ValueError):
            variability(seq((3,)))

    @given(st.lists(st.integers(0, 9), min_size=2, max_size=30))
    def test_permutation_preserves_entropy_only(self, states):
        rng = np.random.default_rng(0)
        shuffled = list(states)
        rng.shuffle(shuffled)
        h_orig, _, _ = variability(seq(states))
        h_perm, _, _ = variability(seq(shuffled))
        assert h_perm == pytest.approx(h_orig, abs=1e-12)


class TestPrecarityIndex:
    def test_pure_improvement_reduces_to_start_term(self):
        p = precarity_index(seq((2, 4, 6, 9)))
        assert p == pytest.approx(0.2 * start_precariousness(seq((2,))), abs=1e-12)

    def test_constant_at_best_state_is_zero(self):
        assert precarity_index(seq((9, 9, 9))) == 0.0

    def test_derived_example_value(self):
        # frozen from oracle_precarity((3, 1, 2, 2), 10)
        assert precarity_index(seq((3, 1, 2, 2))) == pytest.approx(
            0.6485444314339742, abs=1e-12
        )

    def test_length_one_is_start_term_only(self):
        p = precarity_index(seq((3,)))
        assert p == pytest.approx(0.2 * (6 / 9), abs=1e-15)

    def test_exhaustive_oracle_equivalence(self):
        # every sequence of length <= 6 over 3 states
        params = PrecarityParams()
        for length in range(1, 7):
            for states in itertools.product(range(3), repeat=length):
                got = precarity_index(StateSequence(states, 3), params)
                want = oracle_precarity(states, 3)
                assert got == pytest.approx(want, abs=1e-12), states

    @given(st.lists(st.integers(0, 9), min_size=1, max_size=30))
    def test_index_within_analytic_bounds(self, states):
        params = PrecarityParams()
        p = precarity_index(seq(states), params)
        assert 0.0 <= p <= params.index_max + 1e-12

    @given(st.lists(st.integers(0, 9), min_size=2, max_size=20))
    def test_appending_final_state_never_raises_counts(self, states):
        base = seq(states)
        extended = seq(list(states) + [states[-1]])
        _, t_base, _ = variability(base)
        _, t_ext, _ = variability(extended)
        assert t_ext * (len(extended) - 1) <= t_base * (len(base) - 1) + 1e-12
        neg_b, _, _ = transition_shares(base)
        neg_e, _, _ = transition_shares(extended)
        # compare numerators: total weight times share
        w_b = neg_b * _total_weight(states)
        w_e = neg_e * _total_weight(list(states) + [states[-1]])
        assert w_e <= w_b + 1e-12

    def test_ordering_monotone_in_net_decline(self):
        # same start, same visit frequencies and transition count, so identical
        # variability; the downward alternation has the larger net decline
        a = seq((5, 4, 5, 4, 5, 4))
        b = seq((5, 6, 5, 6, 5, 6))
        va = variability(a)
        vb = variability(b)
        assert va == pytest.approx(vb, abs=1e-15)
        _, _, net_a = transition_shares(a)
        _, _, net_b = transition_shares(b)
        assert net_a > net_b
        for gamma in (0.5, 1.2, 3.0):
            params = PrecarityParams(decline_exp=gamma)
            assert precarity_index(a, params) > precarity_index(b, params)

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            PrecarityParams(start_weight=1.5)
        with pytest.raises(ValueError):
            PrecarityParams(variability_exp=0.0)
        with pytest.raises(ValueError):
            PrecarityParams(decline_exp=-1.0)


def _total_weight(states):
    best = max(states)
    return sum(1 + (best - b) for b in states[1:])


class TestBatch:
    @pytest.mark.parametrize("length", [1, 2, 3, 6])
    def test_batch_matches_scalar(self, length):
        rng = np.random.default_rng(7)
        block = rng.integers(0, 10, size=(40, length))
        got = precarity_index_batch(block, 10)
        for row, p in zip(block, got):
            assert p == pytest.approx(precarity_index(seq(row)), abs=1e-12)

    def test_batch_exhaustive_small_space(self):
        states = np.array(list(itertools.product(range(3), repeat=4)))
        got = precarity_index_batch(states, 3)
        want = [oracle_precarity(tuple(row), 3) for row in states]
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_stats_bundle_consistent(self):
        s = seq((3, 1, 2, 2))
        stats = sequence_stats(s)
        assert stats.net_decline == pytest.approx(1 / 7, abs=1e-12)
        assert stats.variability == pytest.approx(
            math.sqrt(stats.entropy_norm * stats.transition_rate), abs=1e-15
        )
        assert stats.start_precariousness == start_precariousness(s)
