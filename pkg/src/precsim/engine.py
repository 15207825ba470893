"""Round loop: classify, shock, agent behavior, health update, re-rank, record.

Each round every household is classified on current income, receives any
active intervention, acts under its agent model (stochastic local choice or
one month of optimal consumption), and has its health recomputed against its
income decile's mean.  Deciles are then re-assigned population-wide, one
state appended per attribute, and the precarity index recomputed on every
prefix, so round-k precarity always equals the index of the first k+1
recorded states.

Randomness is split into one independent stream per household, spawned
deterministically from the master seed; processing order therefore cannot
change results, which is what makes parallel execution across households
equivalent to the sequential loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .ifp import IFPSettings, build_model, solve_policy, step_month
from .mdp import (
    MdpAction,
    TransitionTable,
    apply_action,
    default_transition_table,
    sample_action,
)
from .metrics import PrecarityParams, precarity_index_batch
from .policy import (
    FIXED_STIMULUS,
    PRECARITY_RESISTANCE,
    ClassifierPolicy,
    InterventionConfig,
    apply_resistance,
    apply_stimulus,
    calibrate_threshold,
    classify,
)
from .population import (
    CLASS_NAMES,
    N_DECILES,
    HealthModel,
    Household,
    PopulationSpec,
    build_population,
    decile_of,
    update_health,
)

log = logging.getLogger(__name__)

ATTRIBUTES = ("income", "net_worth", "health")
STRATA = ("all",) + CLASS_NAMES

MDP, IFP = "mdp", "ifp"
SHOCK_FRACTION = 0.1   # income shock per decision, as a share of current income
HISTOGRAM_BINS = 40


class EngineError(RuntimeError):
    """A household failed mid-run; message carries its id and the round."""


@dataclass
class SimulationConfig:
    rounds: int = 10
    agent_model: str = MDP
    seed: int = 0
    population: PopulationSpec = field(default_factory=PopulationSpec)
    health: HealthModel = field(default_factory=HealthModel)
    precarity: PrecarityParams = field(default_factory=PrecarityParams)
    acceptance_quantile: float = 0.5
    intervention: InterventionConfig = field(default_factory=InterventionConfig)
    mdp_table: TransitionTable | None = None
    ifp: IFPSettings = field(default_factory=IFPSettings)

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be non-negative")
        if self.agent_model not in (MDP, IFP):
            raise ValueError(f"unknown agent model {self.agent_model!r}")
        if not 0.0 <= self.acceptance_quantile <= 1.0:
            raise ValueError("acceptance_quantile must lie in [0, 1]")


@dataclass
class TrajectoryRecord:
    """Everything recorded over one run.

    ``states[attr]`` is an (n, rounds+1) integer array of decile states,
    column 0 being the initial assignment; ``precarity[attr]`` is a
    (rounds+1, n) float array whose row k is the index over the first k+1
    states (row 0 is the starting term alone).
    """

    states: dict[str, np.ndarray]
    precarity: dict[str, np.ndarray]
    outcomes: np.ndarray          # (n, rounds) bool, True = positive decision
    income_class: np.ndarray      # (n,) class label per household
    threshold: float
    insolvent: np.ndarray         # (n,) bool, IFP households that went under
    households: list[Household]

    @property
    def n_households(self) -> int:
        return len(self.households)

    @property
    def rounds(self) -> int:
        return self.outcomes.shape[1]

    def stratum_mask(self, stratum: str) -> np.ndarray:
        if stratum == "all":
            return np.ones(self.n_households, dtype=bool)
        if stratum not in CLASS_NAMES:
            raise ValueError(f"unknown stratum {stratum!r}")
        return self.income_class == stratum


@dataclass(frozen=True)
class RoundSummary:
    """Distribution snapshot for one (round, attribute, stratum) cell."""

    round: int
    attribute: str
    stratum: str
    count: int
    mean: float
    median: float
    hist: tuple[int, ...]


@dataclass
class SimulationResult:
    record: TrajectoryRecord
    summaries: list[RoundSummary]
    bin_edges: np.ndarray
    config: SimulationConfig


def _spawn_streams(seed: int):
    """Population stream plus a parent sequence for per-household streams."""
    pop_seq, agents_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(pop_seq), agents_seq


def _decile_mean_incomes(incomes: np.ndarray, deciles: np.ndarray) -> np.ndarray:
    means = np.zeros(N_DECILES)
    for d in range(N_DECILES):
        mask = deciles == d
        if mask.any():
            means[d] = incomes[mask].mean()
    return means


def _check_finite(households: list[Household], round_idx: int):
    for hh in households:
        for name in ("income", "net_worth", "health"):
            if not np.isfinite(getattr(hh, name)):
                raise EngineError(
                    f"household {hh.id} produced non-finite {name} in round {round_idx}"
                )


def run_simulation(cfg: SimulationConfig,
                   household_order: np.ndarray | None = None) -> SimulationResult:
    """Execute a full scenario and summarize it per round.

    ``household_order`` only changes the processing order inside each round;
    results are identical for any permutation because every household draws
    from its own random stream.
    """
    pop_rng, agents_seq = _spawn_streams(cfg.seed)
    households = build_population(cfg.population, pop_rng, cfg.health)
    n = len(households)
    agent_rngs = [np.random.default_rng(s) for s in agents_seq.spawn(n)]

    threshold = calibrate_threshold([h.income for h in households],
                                    cfg.acceptance_quantile)
    classifier = ClassifierPolicy(threshold, cfg.acceptance_quantile)
    log.info("calibrated threshold %.2f (quantile %.2f) over %d households",
             threshold, cfg.acceptance_quantile, n)

    resisting = cfg.intervention.kind == PRECARITY_RESISTANCE
    base_table = cfg.mdp_table if cfg.mdp_table is not None else default_transition_table()
    tables = {False: base_table}
    tables[True] = (apply_resistance(base_table, cfg.intervention.negative_prob_scale)
                    if resisting else base_table)

    ifp_state = None
    if cfg.agent_model == IFP:
        incomes0 = np.array([h.income for h in households])
        deciles0 = decile_of(incomes0)
        model = build_model(incomes0, deciles0, cfg.ifp, classifier)
        z_matrix = {False: model.P}
        z_matrix[True] = (apply_resistance(model.P, cfg.intervention.negative_prob_scale)
                          if resisting else model.P)
        if resisting:
            # the policy conditions on the regime in force from start_round on
            model = build_model(incomes0, deciles0, cfg.ifp, classifier,
                                z_process=z_matrix[True])
        policy, distance = solve_policy(model, cfg.ifp.tol, cfg.ifp.max_iter)
        log.info("consumption policy converged to %.3e", distance)
        ifp_state = {
            "model": model,
            "policy": policy,
            "z": deciles0.copy(),
            "matrices": z_matrix,
            "gross": float(np.exp(cfg.ifp.b_r)),
        }

    rounds = cfg.rounds
    states = {attr: np.zeros((n, rounds + 1), dtype=np.int64) for attr in ATTRIBUTES}
    precarity = {attr: np.zeros((rounds + 1, n)) for attr in ATTRIBUTES}
    outcomes = np.zeros((n, rounds), dtype=bool)
    insolvent = np.zeros(n, dtype=bool)

    _record_states(households, states, column=0)
    for attr in ATTRIBUTES:
        precarity[attr][0] = precarity_index_batch(
            states[attr][:, :1], N_DECILES, cfg.precarity
        )

    order = np.arange(n) if household_order is None else np.asarray(household_order)
    if sorted(order.tolist()) != list(range(n)):
        raise ValueError("household_order must be a permutation of all households")

    for round_idx in range(1, rounds + 1):
        _run_round(cfg, round_idx, households, order, agent_rngs, classifier,
                   tables, ifp_state, states, outcomes, insolvent)
        _check_finite(households, round_idx)
        _record_states(households, states, column=round_idx)
        for attr in ATTRIBUTES:
            precarity[attr][round_idx] = precarity_index_batch(
                states[attr][:, : round_idx + 1], N_DECILES, cfg.precarity
            )

    record = TrajectoryRecord(
        states=states,
        precarity=precarity,
        outcomes=outcomes,
        income_class=np.array([h.income_class for h in households]),
        threshold=threshold,
        insolvent=insolvent,
        households=households,
    )
    edges = histogram_edges(cfg.precarity)
    return SimulationResult(
        record=record,
        summaries=summarize(record, edges),
        bin_edges=edges,
        config=cfg,
    )


def _run_round(cfg, round_idx, households, order, agent_rngs, classifier,
               tables, ifp_state, states, outcomes, insolvent):
    n = len(households)
    pre_incomes = np.array([h.income for h in households])
    pre_deciles = states["income"][:, round_idx - 1]
    group_means = _decile_mean_incomes(pre_incomes, pre_deciles)

    resist_active = (cfg.intervention.kind == PRECARITY_RESISTANCE
                     and cfg.intervention.active(round_idx))
    table = tables[resist_active]
    if ifp_state is not None:
        z_matrix = ifp_state["matrices"][resist_active]

    for i in order:
        hh = households[i]
        rng = agent_rngs[i]
        positive = classify(hh, classifier)
        outcomes[i, round_idx - 1] = positive
        apply_stimulus(hh, cfg.intervention, round_idx, classifier.threshold_income)

        if cfg.agent_model == MDP:
            shock_unit = SHOCK_FRACTION * hh.income
            action = sample_action(hh.income_class, positive, table, rng)
            apply_action(hh, action, shock_unit)
            if action is MdpAction.STAY:
                # the month still passes: earnings less basic expenditures
                # settle into net worth; the six moves each settle their own
                # budget through the action itself
                hh.net_worth += hh.income - hh.expenses
        else:
            z = int(ifp_state["z"][i])
            draw = rng.random()
            target = z + 1 if positive else z - 1
            if 0 <= target < N_DECILES:
                row = z_matrix[z]
                move_mass = row[target] + row[z]
                move_prob = row[target] / move_mass if move_mass > 0 else 0.0
                if draw < move_prob:
                    ifp_state["z"][i] = target
                    hh.income *= (1.0 + SHOCK_FRACTION) if positive else (1.0 - SHOCK_FRACTION)
            _, a_next, broke = step_month(
                hh.net_worth, int(ifp_state["z"][i]), hh.income,
                ifp_state["policy"], ifp_state["gross"], hh.expenses,
            )
            hh.net_worth = a_next
            insolvent[i] = insolvent[i] or broke

        group_mean = group_means[pre_deciles[i]]
        hh.health = update_health(hh, group_mean, cfg.health) + hh.health_adjust


def _record_states(households, states, column):
    states["income"][:, column] = decile_of(np.array([h.income for h in households]))
    states["net_worth"][:, column] = decile_of(np.array([h.net_worth for h in households]))
    states["health"][:, column] = decile_of(np.array([h.health for h in households]))


def histogram_edges(params: PrecarityParams) -> np.ndarray:
    """Fixed equal-width bins over the analytic index range."""
    return np.linspace(0.0, params.index_max, HISTOGRAM_BINS + 1)


def summarize(record: TrajectoryRecord, bin_edges: np.ndarray) -> list[RoundSummary]:
    """Per-round distribution summaries for every attribute and stratum."""
    summaries = []
    for round_idx in range(1, record.rounds + 1):
        for attr in ATTRIBUTES:
            values = record.precarity[attr][round_idx]
            for stratum in STRATA:
                mask = record.stratum_mask(stratum)
                subset = values[mask]
                hist, _ = np.histogram(
                    np.clip(subset, bin_edges[0], bin_edges[-1]), bins=bin_edges
                )
                summaries.append(RoundSummary(
                    round=round_idx,
                    attribute=attr,
                    stratum=stratum,
                    count=int(mask.sum()),
                    mean=float(subset.mean()),
                    median=float(np.median(subset)),
                    hist=tuple(int(c) for c in hist),
                ))
    return summaries
