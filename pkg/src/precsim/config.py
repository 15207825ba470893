"""Scenario configuration: YAML parsing, validation, and digests.

A config file defines one shared population and simulation setup plus a
list of scenarios (name + optional overrides for the agent model, the
classifier quantile, the seed, and the intervention).  A list of classifier
quantiles expands into one scenario per quantile so threshold sweeps run as
independent scenarios.  Every resolved scenario gets a content digest that
is recorded in the report sidecars, making exact replay checkable.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass

import yaml

from .engine import IFP, MDP, SimulationConfig
from .ifp import IFPSettings
from .mdp import TransitionTable, default_transition_table, row_actions
from .metrics import PrecarityParams
from .policy import INTERVENTION_KINDS, InterventionConfig
from .population import (
    CLASS_NAMES,
    HealthModel,
    PopulationSpec,
    SyntheticIncome,
    read_expenditure_table,
    read_networth_table,
)

NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


class ConfigError(ValueError):
    """Raised with the offending key path for malformed configuration."""


@dataclass(frozen=True)
class Scenario:
    name: str
    sim: SimulationConfig
    digest: str


def _require(mapping, key, path):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return mapping.get(key)


def _typed(value, types, path, default=None):
    if value is None:
        return default
    if not isinstance(value, types):
        raise ConfigError(f"{path}: unexpected value {value!r}")
    return value


def load_config(path: str, seed_override: int | None = None) -> list[Scenario]:
    """Parse and validate a YAML scenario file into runnable scenarios."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"{path}: invalid YAML: {err}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return _build_scenarios(raw, seed_override)


def _build_scenarios(raw: dict, seed_override: int | None) -> list[Scenario]:
    known = {"population", "health", "precarity", "simulation", "classifier",
             "ifp", "mdp_table", "scenarios"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    population = _parse_population(raw.get("population") or {})
    health = _parse_section(raw.get("health") or {}, HealthModel, "health")
    precarity = _parse_section(raw.get("precarity") or {}, PrecarityParams, "precarity")
    ifp = _parse_section(raw.get("ifp") or {}, IFPSettings, "ifp")
    table = _parse_mdp_table(raw.get("mdp_table"))

    sim_raw = raw.get("simulation") or {}
    rounds = _typed(sim_raw.get("rounds"), int, "simulation.rounds", 10)
    seed = _typed(sim_raw.get("seed"), int, "simulation.seed", 0)
    agent_model = _typed(sim_raw.get("agent_model"), str, "simulation.agent_model", MDP)
    if seed_override is not None:
        seed = seed_override
    if rounds < 1:
        raise ConfigError("simulation.rounds: must be at least 1")
    if agent_model not in (MDP, IFP):
        raise ConfigError(f"simulation.agent_model: unknown model {agent_model!r}")

    classifier = raw.get("classifier") or {}
    quantiles = classifier.get("acceptance_quantile", 0.5)
    if isinstance(quantiles, (int, float)):
        quantiles = [float(quantiles)]
    elif isinstance(quantiles, list) and all(isinstance(q, (int, float)) for q in quantiles):
        quantiles = [float(q) for q in quantiles]
    else:
        raise ConfigError("classifier.acceptance_quantile: number or list of numbers")
    for q in quantiles:
        if not 0.0 <= q <= 1.0:
            raise ConfigError(f"classifier.acceptance_quantile: {q} outside [0, 1]")

    scenario_raws = raw.get("scenarios") or [{"name": "baseline"}]
    if not isinstance(scenario_raws, list) or not scenario_raws:
        raise ConfigError("scenarios: expected a non-empty list")

    scenarios = []
    for idx, sc in enumerate(scenario_raws):
        if not isinstance(sc, dict):
            raise ConfigError(f"scenarios[{idx}]: expected a mapping")
        name = sc.get("name")
        if not isinstance(name, str) or not NAME_RE.match(name):
            raise ConfigError(f"scenarios[{idx}].name: missing or not filename-safe")
        sc_model = _typed(sc.get("agent_model"), str, f"scenarios[{idx}].agent_model",
                          agent_model)
        sc_seed = _typed(sc.get("seed"), int, f"scenarios[{idx}].seed", seed)
        if seed_override is not None:
            sc_seed = seed_override
        intervention = _parse_intervention(sc.get("intervention"),
                                           f"scenarios[{idx}].intervention")
        sc_quantiles = quantiles
        if "acceptance_quantile" in sc:
            sc_quantiles = [float(sc["acceptance_quantile"])]
        for q in sc_quantiles:
            suffix = f"_q{q:g}" if len(sc_quantiles) > 1 else ""
            try:
                sim = SimulationConfig(
                    rounds=rounds,
                    agent_model=sc_model,
                    seed=sc_seed,
                    population=population,
                    health=health,
                    precarity=precarity,
                    acceptance_quantile=q,
                    intervention=intervention,
                    mdp_table=table,
                    ifp=ifp,
                )
            except ValueError as err:
                raise ConfigError(f"scenarios[{idx}]: {err}") from None
            full_name = f"{name}{suffix}"
            scenarios.append(Scenario(full_name, sim, _digest(full_name, sim)))

    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate scenario names: {sorted(names)}")
    return scenarios


def _parse_population(raw: dict) -> PopulationSpec:
    known = {"n", "income", "income_file", "networth_table", "networth_sigma",
             "expenditure_table", "class_cutoffs"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"population: unknown keys {sorted(unknown)}")
    kwargs = {}
    if "n" in raw:
        kwargs["n"] = _typed(raw["n"], int, "population.n")
    if "income" in raw:
        inc = raw["income"] or {}
        bad = set(inc) - {"median", "sigma"}
        if bad:
            raise ConfigError(f"population.income: unknown keys {sorted(bad)}")
        kwargs["income"] = SyntheticIncome(
            median=float(inc.get("median", 5300.0)),
            sigma=float(inc.get("sigma", 0.9)),
        )
    if raw.get("income_file") is not None:
        kwargs["income_file"] = str(raw["income_file"])
        kwargs.setdefault("n", None)
    if raw.get("networth_table") is not None:
        kwargs["networth_table"] = read_networth_table(raw["networth_table"])
    if "networth_sigma" in raw:
        kwargs["networth_sigma"] = float(raw["networth_sigma"])
    if raw.get("expenditure_table") is not None:
        kwargs["expenditure_table"] = read_expenditure_table(raw["expenditure_table"])
    if "class_cutoffs" in raw:
        cuts = raw["class_cutoffs"]
        if not isinstance(cuts, list) or len(cuts) != 3:
            raise ConfigError("population.class_cutoffs: expected three fractions")
        kwargs["class_cutoffs"] = tuple(float(c) for c in cuts)
    try:
        return PopulationSpec(**kwargs)
    except ValueError as err:
        raise ConfigError(f"population: {err}") from None


def _parse_section(raw: dict, cls, path: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping")
    fields = {f for f in cls.__dataclass_fields__}
    unknown = set(raw) - fields
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        return cls(**{k: type(cls.__dataclass_fields__[k].default)(v)
                      for k, v in raw.items()})
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{path}: {err}") from None


def _parse_intervention(raw, path: str) -> InterventionConfig:
    if raw is None:
        return InterventionConfig()
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping")
    kind = raw.get("kind", "none")
    if kind not in INTERVENTION_KINDS:
        raise ConfigError(f"{path}.kind: unknown kind {kind!r}")
    kwargs = {"kind": kind}
    if "amount" in raw:
        kwargs["amount"] = float(raw["amount"])
    if "negative_prob_scale" in raw:
        kwargs["negative_prob_scale"] = float(raw["negative_prob_scale"])
    if "start_round" in raw:
        kwargs["start_round"] = int(raw["start_round"])
    bad = set(raw) - {"kind", "amount", "negative_prob_scale", "start_round"}
    if bad:
        raise ConfigError(f"{path}: unknown keys {sorted(bad)}")
    try:
        return InterventionConfig(**kwargs)
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None


def _parse_mdp_table(raw) -> TransitionTable | None:
    """Row overrides keyed ``<class>.<outcome>.<action>``; full rows only."""
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError("mdp_table: expected a mapping of entries to probabilities")
    table = default_transition_table()
    touched: dict[tuple[str, bool], dict[str, float]] = {}
    for key, value in raw.items():
        parts = str(key).split(".")
        if len(parts) != 3:
            raise ConfigError(f"mdp_table.{key}: expected <class>.<outcome>.<action>")
        cls, outcome, action = parts
        if cls not in CLASS_NAMES:
            raise ConfigError(f"mdp_table.{key}: unknown class {cls!r}")
        if outcome not in ("negative", "positive"):
            raise ConfigError(f"mdp_table.{key}: unknown outcome {outcome!r}")
        positive = outcome == "positive"
        valid = {a.value for a in row_actions(positive)}
        if action not in valid:
            raise ConfigError(f"mdp_table.{key}: action must be one of {sorted(valid)}")
        touched.setdefault((cls, positive), {})[action] = float(value)
    for (cls, positive), entries in touched.items():
        actions = row_actions(positive)
        if set(entries) != {a.value for a in actions}:
            raise ConfigError(
                f"mdp_table: row {cls}.{'positive' if positive else 'negative'} "
                "must specify all four actions"
            )
        row = [entries[a.value] for a in actions]
        try:
            table = table.with_row(cls, positive, row)
        except ValueError as err:
            raise ConfigError(f"mdp_table: {err}") from None
    return table


def _digest(name: str, sim: SimulationConfig) -> str:
    """Content hash of everything that determines the scenario's output."""
    payload = {
        "name": name,
        "rounds": sim.rounds,
        "agent_model": sim.agent_model,
        "seed": sim.seed,
        "acceptance_quantile": sim.acceptance_quantile,
        "population": {
            "n": sim.population.n,
            "income_median": sim.population.income.median,
            "income_sigma": sim.population.income.sigma,
            "income_file": sim.population.income_file,
            "networth_table": list(map(list, sim.population.networth_table)),
            "networth_sigma": sim.population.networth_sigma,
            "expenditure_table": list(sim.population.expenditure_table),
            "class_cutoffs": list(sim.population.class_cutoffs),
        },
        "health": [sim.health.h_bar, sim.health.eta, sim.health.sigma_h],
        "precarity": [sim.precarity.start_weight, sim.precarity.variability_exp,
                      sim.precarity.decline_exp],
        "intervention": [sim.intervention.kind, sim.intervention.amount,
                         sim.intervention.negative_prob_scale,
                         sim.intervention.start_round],
        "ifp": [sim.ifp.beta, sim.ifp.gamma_c, sim.ifp.a_r, sim.ifp.b_r,
                sim.ifp.grid_points, sim.ifp.grid_max_income_factor,
                sim.ifp.tol, sim.ifp.max_iter, sim.ifp.z_move_prob],
        "mdp_table": None if sim.mdp_table is None else {
            f"{cls}.{'positive' if pos else 'negative'}": list(row)
            for (cls, pos), row in sorted(sim.mdp_table.probs.items())
        },
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
