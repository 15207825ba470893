"""Household population: construction, decile states, and the health update.

A population is a list of :class:`Household` records.  Incomes come either
from a synthetic log-normal draw or from a user-supplied delimited file; net
worth and basic monthly expenditures are assigned from percentile/decile
lookup tables (built-in defaults below, overridable from files).  Income
classes split the ranked population into low / middle / high groups.

Decile states are population-relative: for each attribute, households are
ranked and bucketed into ten equal-frequency bins.  Households with equal
attribute values share the bin of their first member in the stable ordering,
so a degenerate attribute puts everyone in decile 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LOW, MIDDLE, HIGH = "low", "middle", "high"
CLASS_NAMES = (LOW, MIDDLE, HIGH)

N_DECILES = 10

# Net worth by income percentile, shaped like US survey medians-by-income
# (renter-heavy lower half, strongly right-skewed top; dollars).
DEFAULT_NETWORTH_TABLE = (
    (0.0, 0.0),
    (10.0, 600.0),
    (25.0, 8_000.0),
    (40.0, 28_000.0),
    (50.0, 60_000.0),
    (75.0, 250_000.0),
    (90.0, 800_000.0),
    (99.0, 6_000_000.0),
    (100.0, 12_000_000.0),
)

# Basic monthly expenditures by income decile.  The curve is much flatter
# than income (necessities dominate low budgets): the bottom deciles spend
# more than they earn while upper deciles run large surpluses.
DEFAULT_EXPENDITURE_TABLE = (
    3000.0, 3300.0, 3600.0, 3900.0, 4100.0,
    4300.0, 4500.0, 4800.0, 5200.0, 6000.0,
)


class IngestionError(ValueError):
    """Raised for malformed or missing population data files."""


@dataclass(slots=True)
class Household:
    """Mutable agent record.

    ``health_adjust`` accumulates the score adjustments from asset and
    insurance decisions so they persist across the per-round health
    recomputation.
    """

    id: int
    income: float          # monthly
    net_worth: float
    health: float
    expenses: float        # basic monthly expenditures
    income_class: str
    health_adjust: float = 0.0


@dataclass(frozen=True)
class DecileState:
    income_decile: int
    networth_decile: int
    health_decile: int


@dataclass(frozen=True)
class HealthModel:
    """Constants of the relative-income health formula."""

    h_bar: float = 2.5
    eta: float = 1.0
    sigma_h: float = 1e-20

    def __post_init__(self):
        if self.eta <= 0 or self.sigma_h <= 0:
            raise ValueError("eta and sigma_h must be positive")


@dataclass(frozen=True)
class SyntheticIncome:
    """Log-normal monthly income draw, parameterized by median and log-sd."""

    median: float = 5300.0
    sigma: float = 0.9


@dataclass(frozen=True)
class PopulationSpec:
    n: int | None = 10_000      # None: file source defines the size
    income: SyntheticIncome = field(default_factory=SyntheticIncome)
    income_file: str | None = None            # overrides the synthetic draw
    networth_table: tuple[tuple[float, float], ...] = DEFAULT_NETWORTH_TABLE
    networth_sigma: float = 1.5   # log-normal dispersion around the lookup; 0 = exact
    expenditure_table: tuple[float, ...] = DEFAULT_EXPENDITURE_TABLE
    class_cutoffs: tuple[float, float, float] = (0.29, 0.52, 0.19)

    def __post_init__(self):
        if abs(sum(self.class_cutoffs) - 1.0) > 1e-9:
            raise ValueError(f"class cutoffs must sum to 1, got {self.class_cutoffs}")
        if len(self.expenditure_table) != N_DECILES:
            raise ValueError("expenditure table needs one entry per income decile")


def read_income_file(path: str | Path) -> np.ndarray:
    """Read monthly incomes from a delimited file with an ``income`` column."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"income file not found: {path}")
    incomes = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "income" not in reader.fieldnames:
            raise IngestionError(f"{path}: missing required 'income' column")
        for lineno, row in enumerate(reader, start=2):
            raw = (row.get("income") or "").strip()
            try:
                value = float(raw)
            except ValueError:
                raise IngestionError(f"{path}:{lineno}: bad income value {raw!r}") from None
            if value < 0:
                raise IngestionError(f"{path}:{lineno}: negative income {value}")
            incomes.append(value)
    if not incomes:
        raise IngestionError(f"{path}: no data rows")
    return np.asarray(incomes)


def read_networth_table(path: str | Path) -> tuple[tuple[float, float], ...]:
    """Read (percentile, net_worth) rows; percentiles must be increasing in [0, 100]."""
    rows = _read_two_columns(path, "percentile", "net_worth")
    pcts = [p for p, _ in rows]
    if any(not 0.0 <= p <= 100.0 for p in pcts) or sorted(pcts) != pcts:
        raise IngestionError(f"{path}: percentiles must be increasing within [0, 100]")
    return tuple(rows)


def read_expenditure_table(path: str | Path) -> tuple[float, ...]:
    """Read (income_decile, monthly_expenses) rows covering deciles 0..9."""
    rows = _read_two_columns(path, "income_decile", "monthly_expenses")
    by_decile = {int(d): v for d, v in rows}
    missing = set(range(N_DECILES)) - set(by_decile)
    if missing:
        raise IngestionError(f"{path}: missing deciles {sorted(missing)}")
    return tuple(by_decile[d] for d in range(N_DECILES))


def _read_two_columns(path, col_a, col_b):
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"table file not found: {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {col_a, col_b} <= set(reader.fieldnames):
            raise IngestionError(f"{path}: expected columns {col_a!r} and {col_b!r}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((float(row[col_a]), float(row[col_b])))
            except (TypeError, ValueError):
                raise IngestionError(f"{path}:{lineno}: malformed row {row!r}") from None
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    return rows


def stable_ranks(values: np.ndarray) -> np.ndarray:
    """Rank positions with ties sharing the rank of their first member.

    Sorting is stable in household order, so repeated calls on the same
    population are deterministic.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    is_new = np.empty(n, dtype=bool)
    is_new[0] = True
    is_new[1:] = sorted_vals[1:] != sorted_vals[:-1]
    run_start = np.maximum.accumulate(np.where(is_new, np.arange(n), 0))
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = run_start
    return ranks


def decile_of(values: np.ndarray) -> np.ndarray:
    """Equal-frequency decile (0 = lowest values) per element."""
    n = len(values)
    return (stable_ranks(values) * N_DECILES) // n


def assign_deciles(households: list[Household]) -> list[DecileState]:
    """Population-relative decile state for every household."""
    if not households:
        raise ValueError("population is empty")
    inc = decile_of(np.array([h.income for h in households]))
    net = decile_of(np.array([h.net_worth for h in households]))
    hea = decile_of(np.array([h.health for h in households]))
    return [DecileState(int(i), int(w), int(h)) for i, w, h in zip(inc, net, hea)]


def assign_income_classes(incomes: np.ndarray, cutoffs) -> list[str]:
    """Rank-based class labels; exact counts follow the cutoff fractions."""
    n = len(incomes)
    b1 = int(round(cutoffs[0] * n))
    b2 = int(round((cutoffs[0] + cutoffs[1]) * n))
    # positional order (not shared tie ranks) keeps the class counts exact
    order = np.argsort(incomes, kind="stable")
    position = np.empty(n, dtype=np.int64)
    position[order] = np.arange(n)
    labels = []
    for pos in position:
        if pos < b1:
            labels.append(LOW)
        elif pos < b2:
            labels.append(MIDDLE)
        else:
            labels.append(HIGH)
    return labels


def build_population(spec: PopulationSpec, rng: np.random.Generator,
                     health: HealthModel = HealthModel()) -> list[Household]:
    """Construct the initial population.

    Incomes are drawn (or read), net worth interpolated from the percentile
    table at each household's income percentile (dispersed log-normally
    around that median when ``networth_sigma`` is positive, since households
    at the same income hold very different wealth), expenses taken from the
    income-decile expenditure table, health started at the population mean.
    """
    if spec.income_file is not None:
        incomes = read_income_file(spec.income_file)
        if spec.n is not None and spec.n != len(incomes):
            raise IngestionError(
                f"income file has {len(incomes)} rows but spec.n = {spec.n}"
            )
    else:
        if spec.n is None or spec.n <= 0:
            raise ValueError("population size must be positive")
        mu = np.log(spec.income.median)
        incomes = rng.lognormal(mean=mu, sigma=spec.income.sigma, size=spec.n)

    n = len(incomes)
    ranks = stable_ranks(incomes)
    percentiles = 100.0 * (ranks + 0.5) / n
    table_pcts = np.array([p for p, _ in spec.networth_table])
    table_vals = np.array([v for _, v in spec.networth_table])
    net_worths = np.interp(percentiles, table_pcts, table_vals)
    if spec.networth_sigma > 0:
        scatter = rng.lognormal(mean=0.0, sigma=spec.networth_sigma, size=n)
        net_worths = net_worths * scatter

    deciles = decile_of(incomes)
    expenses = np.array(spec.expenditure_table)[deciles]
    classes = assign_income_classes(incomes, spec.class_cutoffs)

    return [
        Household(
            id=i,
            income=float(incomes[i]),
            net_worth=float(net_worths[i]),
            health=health.h_bar,
            expenses=float(expenses[i]),
            income_class=classes[i],
        )
        for i in range(n)
    ]


def update_health(hh: Household, group_mean_income: float, model: HealthModel) -> float:
    """Health implied by income relative to the household's reference group.

    Positive and concave in the deviation: the linear gain dominates near the
    group mean, the quadratic penalty far from it.
    """
    dev = hh.income - group_mean_income
    return model.h_bar + model.eta * dev - model.sigma_h * dev * dev
