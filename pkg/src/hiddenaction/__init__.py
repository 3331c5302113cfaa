"""Agent-based hidden-action model with memory-limited learning."""

from .engine import PathResult, PeriodRecord, run_path, run_scenario
from .experiment import ExperimentConfig, execute, run_experiment
from .memory import MemoryBuffer, estimate_theta_principal
from .model import (
    UNBOUNDED,
    ActionSpace,
    BenchmarkSolution,
    Contract,
    ModelParams,
    agent_best_response,
    agent_utility,
    feasible_action_space,
    premium_for_action,
    solve_second_best_benchmark,
)
from .stats import ScenarioResult, compare_scenarios, mean_ci

__version__ = "0.1.0"
