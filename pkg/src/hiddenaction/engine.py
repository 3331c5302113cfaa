"""Period, path and scenario simulation of the agentized hidden-action model.

One period runs: principal expectation, feasible space, candidate discovery,
contract selection, agent expectation, acceptance and effort, environment
draw, memory updates, realized utilities.

Every path owns two random streams derived from ``(base_seed, path_index)``:
one for environment draws and one for the principal's search. Each period
consumes a fixed number of variates from each stream, so scenarios that
differ only in memory or in sigma see the same underlying normals.
"""

from __future__ import annotations

from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .memory import MemoryBuffer, NoHistoryError, estimate_theta_principal
from .model import (
    ACTION_TOL,
    ActionSpace,
    Contract,
    ModelParams,
    agent_best_response,
    agent_utility,
    compensation,
    feasible_action_space,
    premium_for_action,
    principal_utility,
)

ENVIRONMENT_STREAM = 0
SEARCH_STREAM = 1


@dataclass(frozen=True, slots=True)
class PeriodRecord:
    t: int
    theta_hat_principal: float
    theta_hat_agent: float
    candidates: tuple[float, ...]
    scores: tuple[float, ...]
    contract: Contract
    accepted: bool
    action_agent: float
    theta: float
    x: float
    compensation: float
    utility_principal: float
    utility_agent: float
    theta_estimate_principal: float | None


@dataclass(frozen=True)
class PathResult:
    seed: tuple[int, ...]
    records: tuple[PeriodRecord, ...]
    params: ModelParams


@dataclass
class PathState:
    memory_principal: MemoryBuffer
    memory_agent: MemoryBuffer
    environment_rng: np.random.Generator
    search_rng: np.random.Generator
    status_quo: float | None = None

    @classmethod
    def fresh(cls, params: ModelParams, seed) -> "PathState":
        env, search = make_streams(seed)
        return cls(
            memory_principal=MemoryBuffer(params.memory_principal),
            memory_agent=MemoryBuffer(params.memory_agent),
            environment_rng=env,
            search_rng=search,
        )


def _entropy(seed) -> list[int]:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def make_streams(seed) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (environment, search) generators for one path seed."""
    entropy = _entropy(seed)
    return tuple(
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=(tag,))))
        for tag in (ENVIRONMENT_STREAM, SEARCH_STREAM)
    )


def path_seed(base_seed: int, index: int) -> tuple[int, int]:
    return (int(base_seed), int(index))


def draw_environment(rng: np.random.Generator, mu: float, sigma: float) -> float:
    # always consume exactly one normal so streams stay aligned across sigmas
    z = float(rng.standard_normal())
    if sigma == 0.0:
        return mu
    return mu + sigma * z


def discover_candidates(space: ActionSpace, status_quo: float, n: int,
                        rng: np.random.Generator) -> list[float]:
    """Status quo (clamped into ``space``) followed by ``n`` uniform draws."""
    width = space.upper - space.lower
    draws = rng.random(n)
    return [space.clamp(status_quo)] + [space.clamp(space.lower + float(u) * width) for u in draws]


def score_candidates(candidates: Sequence[float], theta_hat: float,
                     params: ModelParams) -> list[tuple[float, float]]:
    """(premium, principal's expected utility) for each candidate action."""
    out = []
    for a in candidates:
        p = premium_for_action(a, theta_hat, params.eta)
        out.append((p, (1.0 - p) * (a + theta_hat)))
    return out


def principal_select(candidates: Sequence[float], theta_hat: float, params: ModelParams,
                     space: ActionSpace | None = None) -> Contract:
    """Contract for the best-scoring candidate.

    ``candidates[0]`` is the status quo and wins every tie it takes part in;
    remaining ties go to the smallest action.
    """
    if not candidates:
        raise ValueError("principal_select needs at least one candidate")
    if space is None:
        space = ActionSpace(min(candidates), max(candidates))
    return _select(candidates, score_candidates(candidates, theta_hat, params), space)


def _select(candidates, scored, space) -> Contract:
    best = min(range(len(candidates)),
               key=lambda i: (-scored[i][1], i != 0, candidates[i]))
    return Contract(premium=scored[best][0], induced_action=candidates[best], space=space)


def agent_decide(contract: Contract, theta_hat_agent: float,
                 params: ModelParams) -> tuple[bool, float]:
    """Agent's participation decision and effort.

    When the recommended action is itself a best response within solver
    tolerance the agent takes it, so shared beliefs reproduce the induced
    action exactly. A rejected contract yields effort 0.
    """
    a = agent_best_response(contract.premium, theta_hat_agent, params.eta, contract.space)
    if abs(a - contract.induced_action) <= ACTION_TOL:
        a = contract.induced_action
    u = agent_utility(contract.premium * (a + theta_hat_agent), a, params.eta)
    if u >= params.reservation_utility:
        return True, a
    return False, 0.0


def _expectation(buffer: MemoryBuffer, prior: float) -> float:
    try:
        return buffer.expected_theta()
    except NoHistoryError:
        return prior


def run_period(state: PathState, t: int, params: ModelParams) -> PeriodRecord:
    theta_hat_p = _expectation(state.memory_principal, params.prior_theta)
    space = feasible_action_space(theta_hat_p, params)

    if state.status_quo is None:
        state.status_quo = space.lower + float(state.search_rng.random()) * (space.upper - space.lower)
    candidates = discover_candidates(space, state.status_quo, params.candidates_per_period,
                                     state.search_rng)
    scored = score_candidates(candidates, theta_hat_p, params)
    contract = _select(candidates, scored, space)

    theta_hat_a = _expectation(state.memory_agent, params.prior_theta)
    accepted, a = agent_decide(contract, theta_hat_a, params)

    theta = draw_environment(state.environment_rng, params.mu, params.sigma)
    if accepted:
        x_exact = Fraction(a) + Fraction(theta)
        x = a + theta
        s = compensation(x, contract.premium)
        u_p = principal_utility(x, s)
        u_a = agent_utility(s, a, params.eta)
        estimate = estimate_theta_principal(x_exact, contract.induced_action)
        state.memory_agent.remember(theta)
        state.memory_principal.remember(estimate)
        state.status_quo = contract.induced_action
    else:
        x = s = u_p = u_a = 0.0
        estimate = None

    return PeriodRecord(
        t=t,
        theta_hat_principal=theta_hat_p,
        theta_hat_agent=theta_hat_a,
        candidates=tuple(candidates),
        scores=tuple(sc for _, sc in scored),
        contract=contract,
        accepted=accepted,
        action_agent=a,
        theta=theta,
        x=x,
        compensation=s,
        utility_principal=u_p,
        utility_agent=u_a,
        theta_estimate_principal=estimate,
    )


def run_path(params: ModelParams, seed) -> PathResult:
    """Simulate ``params.periods`` periods from a fresh state.

    ``seed`` is an int or a tuple of ints; the result depends on nothing else.
    """
    state = PathState.fresh(params, seed)
    records = tuple(run_period(state, t, params) for t in range(1, params.periods + 1))
    return PathResult(seed=tuple(_entropy(seed)), records=records, params=params)


def _run_chunk(params: ModelParams, seeds: list[tuple[int, int]]) -> list[PathResult]:
    return [run_path(params, s) for s in seeds]


def _chunks(items: list, n: int) -> list[list]:
    size = max(1, -(-len(items) // n))
    return [items[i:i + size] for i in range(0, len(items), size)]


def run_scenario(params: ModelParams, replications: int, base_seed: int,
                 workers: int = 1, executor: Executor | None = None) -> list[PathResult]:
    """Run ``replications`` paths; the result is ordered by path index.

    Paths are distributed over ``executor`` (or a fresh process pool when
    ``workers > 1``); the output does not depend on how they are split.
    """
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications!r}")
    seeds = [path_seed(base_seed, i) for i in range(replications)]
    if executor is None and workers <= 1:
        return _run_chunk(params, seeds)

    own = executor is None
    pool = ProcessPoolExecutor(max_workers=workers) if own else executor
    try:
        n_chunks = 4 * (workers if own else max(1, getattr(pool, "_max_workers", 1)))
        futures = [pool.submit(_run_chunk, params, chunk) for chunk in _chunks(seeds, n_chunks)]
        return [path for fut in futures for path in fut.result()]
    finally:
        if own:
            pool.shutdown()
