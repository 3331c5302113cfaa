import pytest

from hiddenaction.engine import run_path
from hiddenaction.experiment import ExperimentConfig, execute, write_outputs
from hiddenaction.model import UNBOUNDED, ModelParams, solve_second_best_benchmark

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the terminal summary prints them all."""

    def record(label, passed: bool, detail: str) -> bool:
        name = f"criterion {label}" if isinstance(label, int) else label
        ACCEPTANCE_LINES.append(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def benchmark():
    return solve_second_best_benchmark(ModelParams())


@pytest.fixture(scope="session")
def default_experiment(tmp_path_factory):
    """The full default grid (12 scenarios x 700 paths x 20 periods), also written to disk."""
    out = tmp_path_factory.mktemp("default_run")
    result = execute(ExperimentConfig(output_dir=str(out)))
    write_outputs(result, out)
    return result


MEMORY_COMBOS = [(3, 3), (3, UNBOUNDED), (UNBOUNDED, 3), (UNBOUNDED, UNBOUNDED)]
SIGMA_MULTS = [0.05, 0.25, 0.45]


@pytest.fixture(scope="session")
def fuzz_paths(benchmark):
    """1000 seeded default-length paths cycling through all 12 scenario cells."""
    x_star = benchmark.optimal_outcome
    paths = []
    for seed in range(1000):
        mp, ma = MEMORY_COMBOS[seed % 4]
        sm = SIGMA_MULTS[(seed // 4) % 3]
        params = ModelParams(sigma=sm * x_star, memory_principal=mp, memory_agent=ma)
        paths.append(run_path(params, (99, seed)))
    return paths
