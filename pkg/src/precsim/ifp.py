"""Infinite-horizon consumption-savings solver (endogenous grid method).

The optimizing agent maximizes expected discounted CRRA utility of
consumption subject to the budget identity

    a' = R' (a - c) + Y',    0 <= c <= a,

where labor income Y' follows a finite exogenous Markov state process and
the gross return R' is either deterministic (the default, R = 1) or
log-normal.  The optimality condition equates current marginal utility with
the larger of the discounted expected future marginal utility and the
marginal utility of consuming all assets.

Solving iterates the endogenous grid step: on a fixed savings grid, invert
the marginal-utility expectation to get consumption, recover the asset grid
point as consumption plus savings, and re-interpolate.  Below the smallest
endogenous asset point the household consumes everything, consistent with
the origin-anchored solution c(0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .policy import ClassifierPolicy

GH_NODES = 5  # Gauss-Hermite nodes for the log-normal return expectation


class ConvergenceError(RuntimeError):
    """Policy iteration failed to reach tolerance; carries the last distance."""

    def __init__(self, message: str, distance: float):
        super().__init__(message)
        self.distance = distance


def crra_utility(c, gamma_c: float):
    """CRRA utility c**(1 - g) / (1 - g); undefined at non-positive c."""
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise ValueError("utility undefined for non-positive consumption")
    if gamma_c == 1.0:
        return np.log(c)
    return c ** (1.0 - gamma_c) / (1.0 - gamma_c)


def crra_marginal(c, gamma_c: float):
    """Marginal utility c**(-g)."""
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise ValueError("marginal utility undefined for non-positive consumption")
    return c ** (-gamma_c)


def crra_marginal_inverse(m, gamma_c: float):
    """Inverse of the marginal utility: m**(-1/g)."""
    m = np.asarray(m, dtype=float)
    if np.any(m <= 0):
        raise ValueError("inverse marginal utility undefined for non-positive values")
    return m ** (-1.0 / gamma_c)


def savings_grid(n_points: int, max_value: float, min_positive: float | None = None) -> np.ndarray:
    """Zero plus geometrically spaced savings points up to ``max_value``."""
    if n_points < 3 or max_value <= 0:
        raise ValueError("need at least 3 grid points and a positive extent")
    if min_positive is None:
        min_positive = max_value * 1e-4
    return np.concatenate(([0.0], np.geomspace(min_positive, max_value, n_points - 1)))


@dataclass(frozen=True)
class IFPModel:
    """Primitives of the consumption-savings problem."""

    P: np.ndarray                 # (nz, nz) exogenous state transition matrix
    incomes: np.ndarray           # (nz,) labor income per exogenous state
    grid: np.ndarray              # increasing savings grid starting at 0
    beta: float = 0.96
    gamma_c: float = 2.0
    a_r: float = 0.0              # return volatility; 0 means deterministic
    b_r: float = 0.0              # log of the deterministic return component

    def __post_init__(self):
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float))
        object.__setattr__(self, "incomes", np.asarray(self.incomes, dtype=float))
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.gamma_c <= 0:
            raise ValueError("gamma_c must be positive")
        nz = len(self.incomes)
        if self.P.shape != (nz, nz):
            raise ValueError("transition matrix shape does not match the state count")
        if np.any(self.P < 0) or np.any(np.abs(self.P.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("transition matrix rows must be stochastic")
        if self.grid[0] != 0.0 or np.any(np.diff(self.grid) <= 0):
            raise ValueError("savings grid must start at 0 and strictly increase")

    @property
    def n_states(self) -> int:
        return len(self.incomes)

    def return_quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for the gross-return expectation.

        Deterministic exp(b_r) when a_r is zero, otherwise a Gauss-Hermite
        rule for the log-normal draw.
        """
        if self.a_r == 0.0:
            return np.array([np.exp(self.b_r)]), np.array([1.0])
        x, w = np.polynomial.hermite.hermgauss(GH_NODES)
        returns = np.exp(self.a_r * np.sqrt(2.0) * x + self.b_r)
        return returns, w / np.sqrt(np.pi)


@dataclass(frozen=True)
class ConsumptionPolicy:
    """Piecewise-linear consumption rule per exogenous state.

    ``assets[z]`` holds the endogenous asset points for state z and
    ``consumption[z]`` the consumption chosen there.  Below the first point
    the household consumes all assets; beyond the last the final segment is
    extended linearly.
    """

    assets: np.ndarray        # (nz, ns)
    consumption: np.ndarray   # (nz, ns)

    def evaluate(self, a, z: int) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        grid = self.assets[z]
        cons = self.consumption[z]
        out = np.interp(a, grid, cons)
        below = a <= grid[0]
        if below.any():
            out = np.where(below, a, out)
        above = a > grid[-1]
        if above.any():
            slope = (cons[-1] - cons[-2]) / (grid[-1] - grid[-2])
            out = np.where(above, cons[-1] + slope * (a - grid[-1]), out)
        return out

    def __call__(self, a: float, z: int) -> float:
        return float(self.evaluate(np.asarray([a]), z)[0])


def consume_all_policy(model: IFPModel) -> ConsumptionPolicy:
    """The zero-patience rule c(a) = a, the standard starting iterate."""
    grid = np.tile(model.grid, (model.n_states, 1))
    return ConsumptionPolicy(assets=grid, consumption=grid.copy())


def egm_step(policy: ConsumptionPolicy, model: IFPModel) -> ConsumptionPolicy:
    """One endogenous-grid update of the consumption rule.

    For every savings point and current state, take the expectation of
    next-period marginal utility over states and returns, invert it through
    the marginal utility, and anchor the new asset grid at consumption plus
    savings.
    """
    s = model.grid
    nz, ns = model.n_states, len(s)
    returns, weights = model.return_quadrature()

    expectation = np.zeros((nz, ns))
    for z_next in range(nz):
        y = model.incomes[z_next]
        inner = np.zeros(ns)
        for gross, w in zip(returns, weights):
            c_next = policy.evaluate(gross * s + y, z_next)
            if np.any(c_next <= 0) or not np.all(np.isfinite(c_next)):
                raise FloatingPointError(
                    "next-period consumption is not positive; income at state "
                    f"{z_next} may be degenerate"
                )
            inner += w * gross * crra_marginal(c_next, model.gamma_c)
        expectation += np.outer(model.P[:, z_next], inner)

    if np.any(expectation <= 0) or not np.all(np.isfinite(expectation)):
        raise FloatingPointError("marginal-utility expectation underflowed")
    consumption = crra_marginal_inverse(model.beta * expectation, model.gamma_c)
    assets = consumption + s[None, :]
    return ConsumptionPolicy(assets=assets, consumption=consumption)


def solve_policy(
    model: IFPModel,
    tol: float = 1e-6,
    max_iter: int = 5000,
    history: list[float] | None = None,
) -> tuple[ConsumptionPolicy, float]:
    """Iterate :func:`egm_step` to a fixed point.

    Returns the converged policy and the final sup-norm distance between
    successive consumption grids.  ``history`` collects the distance of every
    iteration when a list is supplied.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    policy = consume_all_policy(model)
    distance = np.inf
    for _ in range(max_iter):
        updated = egm_step(policy, model)
        distance = float(np.max(np.abs(updated.consumption - policy.consumption)))
        if history is not None:
            history.append(distance)
        policy = updated
        if distance < tol:
            return policy, distance
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (distance {distance:.3e})",
        distance,
    )


@dataclass
class PathResult:
    """One simulated consumption-asset path."""

    consumption: np.ndarray   # (T,)
    assets: np.ndarray        # (T + 1,) including the initial assets
    insolvent: bool


def step_month(
    a: float,
    z: int,
    income: float,
    policy: ConsumptionPolicy,
    gross_return: float,
    expense_floor: float,
) -> tuple[float, float, bool]:
    """One month of consumption: returns (consumed, next assets, insolvent).

    Consumption follows the policy, floored at the expense level when assets
    cover it and always capped by assets; a household that cannot cover the
    floor consumes whatever it has and is flagged insolvent.  ``income`` is
    received at the end of the month.
    """
    if a < expense_floor:
        c = max(a, 0.0)
        insolvent = True
    else:
        c = policy(a, z)
        c = min(max(c, expense_floor), a)
        insolvent = False
    return c, gross_return * (a - c) + income, insolvent


def simulate_path(
    a0: float,
    policy: ConsumptionPolicy,
    z_path: np.ndarray,
    model: IFPModel,
    incomes: np.ndarray | None = None,
    expense_floor: float = 0.0,
    returns: np.ndarray | None = None,
) -> PathResult:
    """Run the consumption rule along a realized state path.

    ``incomes[t]`` is the labor income received at the end of month ``t``
    (defaults to the model's income for the realized state) and ``returns[t]``
    the gross return over the month (defaults to the deterministic component,
    so stochastic-return paths must pass realized draws).  Consumption is
    floored at the expense level whenever assets cover it, and always capped
    by assets on hand; a household entering a month unable to cover the
    floor, or with negative assets, is flagged insolvent.  The path depends
    only on the arguments, never on hidden randomness.
    """
    z_path = np.asarray(z_path, dtype=int)
    T = len(z_path)
    if incomes is None:
        incomes = model.incomes[z_path]
    incomes = np.asarray(incomes, dtype=float)
    if returns is None:
        returns = np.full(T, np.exp(model.b_r))
    returns = np.asarray(returns, dtype=float)
    if len(incomes) != T or len(returns) != T:
        raise ValueError("incomes and returns must match the state path length")

    consumption = np.zeros(T)
    assets = np.zeros(T + 1)
    assets[0] = a0
    insolvent = False
    for t in range(T):
        c, a_next, broke = step_month(
            assets[t], int(z_path[t]), incomes[t], policy, returns[t], expense_floor
        )
        consumption[t] = c
        assets[t + 1] = a_next
        insolvent = insolvent or broke
    return PathResult(consumption=consumption, assets=assets, insolvent=insolvent)


def default_z_process(
    n_states: int = 10,
    acceptance_quantile: float = 0.5,
    move_prob: float = 0.5,
) -> np.ndarray:
    """Exogenous state process implied by the threshold classifier.

    States are income deciles.  The share of a decile sitting above the
    acceptance threshold steps up by one state with probability ``move_prob``
    and the rest steps down, with the remainder staying put; boundary mass
    folds back into staying.
    """
    if not 0.0 <= move_prob <= 1.0:
        raise ValueError("move_prob must lie in [0, 1]")
    P = np.zeros((n_states, n_states))
    for z in range(n_states):
        accepted = np.clip(z + 1 - n_states * acceptance_quantile, 0.0, 1.0)
        up = move_prob * accepted if z + 1 < n_states else 0.0
        down = move_prob * (1.0 - accepted) if z > 0 else 0.0
        if z + 1 < n_states:
            P[z, z + 1] = up
        if z > 0:
            P[z, z - 1] = down
        P[z, z] = 1.0 - up - down
    return P


@dataclass(frozen=True)
class IFPSettings:
    """User-facing solver constants; the full model is built per run."""

    beta: float = 0.96
    gamma_c: float = 2.0
    a_r: float = 0.0
    b_r: float = 0.0
    grid_points: int = 100
    grid_max_income_factor: float = 20.0   # times median annual income
    tol: float = 1e-6
    max_iter: int = 5000
    z_move_prob: float = 0.5


def build_model(
    incomes: np.ndarray,
    income_deciles: np.ndarray,
    settings: IFPSettings,
    classifier: ClassifierPolicy,
    z_process: np.ndarray | None = None,
) -> IFPModel:
    """Assemble the solver model from a concrete population.

    Exogenous states are the ten income deciles; each state's labor income is
    the mean income of its decile and the state process follows the
    classifier's acceptance pattern unless an adjusted matrix is supplied.
    """
    incomes = np.asarray(incomes, dtype=float)
    n_states = 10
    state_income = np.array([
        incomes[income_deciles == z].mean() if np.any(income_deciles == z) else np.nan
        for z in range(n_states)
    ])
    # degenerate populations can leave deciles empty; carry the previous level
    for z in range(n_states):
        if np.isnan(state_income[z]):
            state_income[z] = state_income[z - 1] if z > 0 else incomes.mean()
    if z_process is None:
        z_process = default_z_process(
            n_states, classifier.acceptance_quantile, settings.z_move_prob
        )
    grid_max = settings.grid_max_income_factor * float(np.median(incomes)) * 12.0
    return IFPModel(
        P=z_process,
        incomes=state_income,
        grid=savings_grid(settings.grid_points, grid_max),
        beta=settings.beta,
        gamma_c=settings.gamma_c,
        a_r=settings.a_r,
        b_r=settings.b_r,
    )


def policy_table(policy: ConsumptionPolicy) -> list[tuple[int, float, float]]:
    """Flatten a policy to (state, asset, consumption) rows for inspection."""
    rows = []
    for z in range(policy.assets.shape[0]):
        for a, c in zip(policy.assets[z], policy.consumption[z]):
            rows.append((z, float(a), float(c)))
    return rows
