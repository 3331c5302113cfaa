"""Economic primitives of the hidden-action model.

The principal is risk neutral, the agent has exponential (CARA) utility of
compensation and quadratic effort cost. Compensation is a linear share of the
outcome, and the outcome is effort plus an additive environment shock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import ROOT_TOL, bisect_root, first_sign_change, grid_argmax

UNBOUNDED = math.inf

# Slack allowed when checking that a target action can be incited at p <= 1.
ACTION_TOL = 1e-8


class ContractError(ValueError):
    """A premium outside [0, 1] was supplied."""


class UninducibleActionError(ValueError):
    """No premium in [0, 1] incites the requested action."""


class InfeasibleContractError(RuntimeError):
    """No linear contract satisfies the agent's participation constraint."""


def _check_memory(name: str, value) -> None:
    if value == UNBOUNDED:
        return
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"{name} must be a positive integer or inf, got {value!r}")


@dataclass(frozen=True)
class ModelParams:
    """Constants of one simulated scenario.

    ``memory_principal`` and ``memory_agent`` are period counts, or
    ``UNBOUNDED`` (``math.inf``) for perfect recall. ``prior_theta`` is the
    expectation both parties use before any observation exists.
    """

    eta: float = 0.5
    mu: float = 0.0
    sigma: float = 0.0
    reservation_utility: float = 0.0
    memory_principal: int | float = UNBOUNDED
    memory_agent: int | float = UNBOUNDED
    periods: int = 20
    candidates_per_period: int = 2
    prior_theta: float = 0.0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta!r}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma!r}")
        if self.periods < 1:
            raise ValueError(f"periods must be >= 1, got {self.periods!r}")
        if self.candidates_per_period < 1:
            raise ValueError(f"candidates_per_period must be >= 1, got {self.candidates_per_period!r}")
        _check_memory("memory_principal", self.memory_principal)
        _check_memory("memory_agent", self.memory_agent)


@dataclass(frozen=True)
class ActionSpace:
    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper):
            raise ValueError(f"invalid action space [{self.lower!r}, {self.upper!r}]")

    def clamp(self, a: float) -> float:
        return min(max(a, self.lower), self.upper)

    def __contains__(self, a: float) -> bool:
        return self.lower <= a <= self.upper


UNRESTRICTED = ActionSpace(0.0, math.inf)


@dataclass(frozen=True)
class Contract:
    """Terms offered in one period.

    ``space`` is the feasible action space the principal computed when pricing
    the contract; the agent optimizes inside it.
    """

    premium: float
    induced_action: float
    space: ActionSpace

    def __post_init__(self):
        if not (0.0 <= self.premium <= 1.0):
            raise ContractError(f"premium must lie in [0, 1], got {self.premium!r}")


@dataclass(frozen=True)
class BenchmarkSolution:
    optimal_action: float
    optimal_premium: float
    optimal_outcome: float
    principal_utility: float
    agent_utility: float


def _check_premium(p: float) -> None:
    if not (0.0 <= p <= 1.0):
        raise ContractError(f"premium must lie in [0, 1], got {p!r}")


def compensation(x: float, p: float) -> float:
    _check_premium(p)
    return x * p


def principal_utility(x: float, s: float) -> float:
    return x - s


def agent_utility(s: float, a: float, eta: float) -> float:
    """Exponential utility of compensation minus quadratic effort cost."""
    return -math.expm1(-eta * s) / eta - 0.5 * a * a


def outcome(a: float, theta: float) -> float:
    return a + theta


def agent_best_response(p: float, theta_hat: float, eta: float,
                        space: ActionSpace = UNRESTRICTED) -> float:
    """Effort maximizing the agent's utility at the expected outcome.

    The objective ``V(p * (a + theta_hat)) - a**2 / 2`` is strictly concave in
    ``a``, so the optimum is the root of ``p * exp(-eta*p*(a+theta_hat)) - a``
    when that root lies inside ``space`` and the nearer bound otherwise.
    """
    _check_premium(p)

    def foc(a):
        return p * math.exp(-eta * p * (a + theta_hat)) - a

    lo = space.lower
    if foc(lo) <= 0.0:
        return lo
    # any root satisfies a <= p * exp(-eta*p*theta_hat) since a >= 0
    hi = min(space.upper, max(lo, p * math.exp(-eta * p * theta_hat)))
    if foc(hi) >= 0.0:
        return hi
    return bisect_root(foc, lo, hi)


def premium_for_action(a_target: float, theta_hat: float, eta: float,
                       space: ActionSpace = UNRESTRICTED) -> float:
    """Smallest premium whose best response is ``a_target``.

    Inverts the agent's stationarity condition ``p * exp(-k*p) = a`` with
    ``k = eta * (a + theta_hat)``. The left side increases in ``p`` up to
    ``p = 1/k``, which bounds the bisection bracket.

    Raises:
        UninducibleActionError: if no premium in [0, 1] reaches ``a_target``.
    """
    if a_target <= space.lower:
        return 0.0
    k = eta * (a_target + theta_hat)
    p_hi = 1.0 if k <= 1.0 else 1.0 / k

    def gap(p):
        return p * math.exp(-k * p) - a_target

    top = gap(p_hi)
    if top < -ACTION_TOL:
        raise UninducibleActionError(
            f"action {a_target!r} cannot be incited with theta_hat={theta_hat!r}, eta={eta!r}")
    if top <= 0.0:
        return p_hi
    return min(1.0, bisect_root(gap, 0.0, p_hi))


def participation_slack(a: float, theta_hat: float, eta: float,
                        reservation_utility: float) -> float:
    """Agent's expected utility minus reservation utility when ``a`` is incited
    at its incentive-compatible premium."""
    p = premium_for_action(a, theta_hat, eta)
    return agent_utility(p * (a + theta_hat), a, eta) - reservation_utility


def feasible_action_space(theta_hat: float, params: ModelParams) -> ActionSpace:
    """Action range the principal can target given her expectation.

    The upper bound is the best response at full share. The lower bound comes
    from participation: along the incentive-compatible contract curve the
    agent's utility falls while ``a + theta_hat < 0`` and rises after, so the
    participating actions that include the upper bound form an interval
    ``[lower, upper]``. If even the upper bound fails participation the space
    collapses to ``[0, 0]``.
    """
    eta = params.eta
    upper = agent_best_response(1.0, theta_hat, eta)

    def slack(a):
        return participation_slack(a, theta_hat, eta, params.reservation_utility)

    if not slack(upper) >= 0.0:
        return ActionSpace(0.0, 0.0)
    trough = min(max(-theta_hat, 0.0), upper)
    if slack(trough) >= 0.0:
        return ActionSpace(0.0, upper)
    lower = bisect_root(slack, trough, upper)
    while slack(lower) < 0.0 and lower < upper:
        lower = min(upper, math.nextafter(lower, math.inf) + ROOT_TOL)
    return ActionSpace(lower, upper)


def _best_response_slope(p: float, a: float, theta: float, eta: float) -> float:
    # implicit derivative of a = p * exp(-eta*p*(a+theta)) with respect to p
    if p == 0.0:
        return 1.0
    return (a / p) * (1.0 - eta * p * (a + theta)) / (1.0 + eta * p * a)


def solve_second_best_benchmark(params: ModelParams) -> BenchmarkSolution:
    """Optimal linear contract when effort is hidden and theta equals its mean.

    The principal maximizes ``(1 - p) * (a(p) + mu)`` over ``p`` in [0, 1],
    where ``a(p)`` is the agent's best response and the agent must obtain at
    least the reservation utility.

    Raises:
        InfeasibleContractError: if participation fails for every premium.
    """
    eta, mu, reservation = params.eta, params.mu, params.reservation_utility
    upper = agent_best_response(1.0, mu, eta)
    space = ActionSpace(0.0, upper)

    def action(p):
        return agent_best_response(p, mu, eta, space)

    def objective(p):
        return (1.0 - p) * (action(p) + mu)

    def stationarity(p):
        a = action(p)
        return -(a + mu) + (1.0 - p) * _best_response_slope(p, a, mu, eta)

    def agent_slack(p):
        a = action(p)
        return agent_utility(p * (a + mu), a, eta) - reservation

    cell = first_sign_change(stationarity, 0.0, 1.0)
    if cell is not None:
        p_star = bisect_root(stationarity, *cell)
    else:
        p_star = grid_argmax(objective, 0.0, 1.0)

    if not agent_slack(p_star) >= 0.0:
        if not agent_slack(1.0) >= 0.0:
            raise InfeasibleContractError(
                f"no premium in [0, 1] meets reservation utility {reservation!r}")
        # agent utility rises with p on the best-response curve
        p_star = bisect_root(agent_slack, p_star, 1.0, tol=ROOT_TOL)
        if agent_slack(p_star) < 0.0:
            p_star = min(1.0, p_star + ROOT_TOL)

    a_star = action(p_star)
    x_star = outcome(a_star, mu)
    s_star = compensation(x_star, p_star)
    return BenchmarkSolution(
        optimal_action=a_star,
        optimal_premium=p_star,
        optimal_outcome=x_star,
        principal_utility=principal_utility(x_star, s_star),
        agent_utility=agent_utility(s_star, a_star, eta),
    )
