"""Scenario-grid orchestration and flat-file outputs."""

from __future__ import annotations

import csv
import fnmatch
import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

from .engine import PathResult, run_scenario
from .model import UNBOUNDED, BenchmarkSolution, ModelParams, solve_second_best_benchmark
from .stats import ScenarioResult, aggregate, compare_scenarios, A_ABOVE, B_ABOVE

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["scenario_id", "m_P", "m_A", "sigma_mult", "sigma_abs", "t",
                   "mean_UA", "ua_ci_lo", "ua_ci_hi", "mean_UP", "up_ci_lo", "up_ci_hi", "n_paths"]
BENCHMARK_COLUMNS = ["a_star", "p_star", "x_star", "up_star", "ua_star"]
VERDICT_COLUMNS = ["claim_id", "scenario_a", "scenario_b", "measure",
                   "periods_a_above", "periods_b_above", "periods_tied"]
RAW_COLUMNS = ["scenario_id", "path", "t", "theta_hat_P", "theta_hat_A", "a_tilde", "p",
               "accepted", "a", "theta", "x", "s", "UP", "UA", "theta_estimate"]
PLOT_COLUMNS = ["m_P", "m_A", "sigma_mult", "t", "mean", "ci_lo", "ci_hi", "n_paths"]
PLOT_FILES = {"UA": "fig_agent_utility.csv", "UP": "fig_principal_utility.csv"}
INCOMPLETE_MARKER = "INCOMPLETE"

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    pass


class MissingCellsError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    memory_principal_levels: tuple = (3, UNBOUNDED)
    memory_agent_levels: tuple = (3, UNBOUNDED)
    sigma_multipliers: tuple = (0.05, 0.25, 0.45)
    mu: float = 0.0
    eta: float = 0.5
    reservation_utility: float = 0.0
    periods: int = 20
    replications: int = 700
    candidates_per_period: int = 2
    base_seed: int = 20210
    output_dir: str = "results"
    emit_raw: bool = False

    def __post_init__(self):
        for name in ("memory_principal_levels", "memory_agent_levels", "sigma_multipliers"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        for m in itertools.chain(self.memory_principal_levels, self.memory_agent_levels):
            if m != UNBOUNDED and (not isinstance(m, int) or isinstance(m, bool) or m < 1):
                raise ConfigError(f"memory levels must be positive integers or inf, got {m!r}")
        if any(not s >= 0 for s in self.sigma_multipliers):
            raise ConfigError("sigma multipliers must be non-negative")
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta!r}")
        if self.periods < 1 or self.replications < 1 or self.candidates_per_period < 1:
            raise ConfigError("periods, replications and candidates_per_period must be >= 1")


# --- config file -----------------------------------------------------------

def _fmt_memory(m) -> str:
    return "inf" if m == UNBOUNDED else str(m)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _parse_memory(text: str):
    text = text.strip()
    if text.lower() in ("inf", "infinity", "∞"):
        return UNBOUNDED
    return int(text)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _split(text: str) -> list[str]:
    return [part for part in (p.strip() for p in text.split(",")) if part]


_PARSERS = {
    "memory_principal_levels": lambda v: tuple(_parse_memory(x) for x in _split(v)),
    "memory_agent_levels": lambda v: tuple(_parse_memory(x) for x in _split(v)),
    "sigma_multipliers": lambda v: tuple(float(x) for x in _split(v)),
    "mu": float,
    "eta": float,
    "reservation_utility": float,
    "periods": int,
    "replications": int,
    "candidates_per_period": int,
    "base_seed": int,
    "output_dir": str.strip,
    "emit_raw": _parse_bool,
}

_FORMATTERS = {
    "memory_principal_levels": lambda v: ", ".join(_fmt_memory(m) for m in v),
    "memory_agent_levels": lambda v: ", ".join(_fmt_memory(m) for m in v),
    "sigma_multipliers": lambda v: ", ".join(_fmt_float(s) for s in v),
    "mu": _fmt_float,
    "eta": _fmt_float,
    "reservation_utility": _fmt_float,
    "emit_raw": lambda v: "true" if v else "false",
}


def parse_config(text: str) -> ExperimentConfig:
    """Read ``key = value`` lines; ``#`` starts a comment. Missing keys take
    their defaults, unknown keys are an error."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return ExperimentConfig(**values)


def serialize_config(config: ExperimentConfig) -> str:
    lines = ["# hiddenaction experiment configuration"]
    for f in fields(config):
        value = getattr(config, f.name)
        lines.append(f"{f.name} = {_FORMATTERS.get(f.name, str)(value)}")
    return "\n".join(lines) + "\n"


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# --- scenario grid -----------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    memory_principal: int | float
    memory_agent: int | float
    sigma_mult: float

    @property
    def scenario_id(self) -> str:
        return (f"P{_fmt_memory(self.memory_principal)}-A{_fmt_memory(self.memory_agent)}"
                f"-s{_fmt_float(self.sigma_mult)}")


def enumerate_scenarios(config: ExperimentConfig,
                        patterns: Sequence[str] | None = None) -> list[Scenario]:
    """Scenario grid in lexicographic (m_P, m_A, sigma multiplier) order,
    optionally restricted to ids matching any of the glob ``patterns``."""
    grid = [Scenario(mp, ma, s) for mp, ma, s in itertools.product(
        sorted(set(config.memory_principal_levels)),
        sorted(set(config.memory_agent_levels)),
        sorted(set(config.sigma_multipliers)))]
    if patterns:
        grid = [sc for sc in grid if any(fnmatch.fnmatchcase(sc.scenario_id, pat) for pat in patterns)]
    return grid


def resolve_sigmas(config: ExperimentConfig, benchmark: BenchmarkSolution) -> list[float]:
    x_star = benchmark.optimal_outcome
    if not x_star > 0:
        raise ValueError(f"benchmark outcome x* = {x_star!r} is not positive; model is degenerate")
    return [m * x_star for m in config.sigma_multipliers]


def benchmark_params(config: ExperimentConfig) -> ModelParams:
    return ModelParams(eta=config.eta, mu=config.mu,
                       reservation_utility=config.reservation_utility)


def scenario_params(config: ExperimentConfig, scenario: Scenario, x_star: float) -> ModelParams:
    return ModelParams(
        eta=config.eta,
        mu=config.mu,
        sigma=scenario.sigma_mult * x_star,
        reservation_utility=config.reservation_utility,
        memory_principal=scenario.memory_principal,
        memory_agent=scenario.memory_agent,
        periods=config.periods,
        candidates_per_period=config.candidates_per_period,
    )


# --- verdicts ----------------------------------------------------------------

def _pairs_differing_in(results: dict[Scenario, ScenarioResult], attr: str):
    scs = list(results)
    for a, b in itertools.combinations(scs, 2):
        others = [n for n in ("memory_principal", "memory_agent", "sigma_mult") if n != attr]
        if all(getattr(a, n) == getattr(b, n) for n in others) and getattr(a, attr) != getattr(b, attr):
            yield (a, b) if getattr(a, attr) < getattr(b, attr) else (b, a)


def claim_pairs(results: dict[Scenario, ScenarioResult]):
    """(claim_id, scenario_a, scenario_b, measure) for the comparative findings.

    Within each pair ``a`` holds the smaller value of the varied factor.
    """
    for a, b in _pairs_differing_in(results, "sigma_mult"):
        yield "sigma_lowers_agent_utility", a, b, "UA"
    for a, b in _pairs_differing_in(results, "memory_principal"):
        yield "principal_memory_raises_agent_utility", a, b, "UA"
    for a, b in _pairs_differing_in(results, "memory_agent"):
        yield "agent_memory_no_effect_on_agent", a, b, "UA"
    for a, b in itertools.combinations(list(results), 2):
        yield "principal_utility_insensitive", a, b, "UP"


def verdict_rows(results: dict[Scenario, ScenarioResult]) -> list[dict]:
    rows = []
    for claim, a, b, measure in claim_pairs(results):
        verdicts = compare_scenarios(results[a], results[b], measure)
        rows.append({
            "claim_id": claim,
            "scenario_a": a.scenario_id,
            "scenario_b": b.scenario_id,
            "measure": measure,
            "periods_a_above": verdicts.count(A_ABOVE),
            "periods_b_above": verdicts.count(B_ABOVE),
            "periods_tied": len(verdicts) - verdicts.count(A_ABOVE) - verdicts.count(B_ABOVE),
        })
    return rows


# --- running -----------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: ExperimentConfig
    benchmark: BenchmarkSolution
    scenarios: dict[Scenario, ScenarioResult]
    paths: dict[Scenario, list[PathResult]] = field(default_factory=dict)

    def by_id(self, scenario_id: str) -> ScenarioResult:
        for sc, res in self.scenarios.items():
            if sc.scenario_id == scenario_id:
                return res
        raise KeyError(scenario_id)


def execute(config: ExperimentConfig, workers: int = 1, patterns: Sequence[str] | None = None,
            keep_paths: bool = False) -> ExperimentResult:
    """Solve the benchmark, run every selected scenario and aggregate it."""
    benchmark = solve_second_best_benchmark(benchmark_params(config))
    x_star = benchmark.optimal_outcome
    resolve_sigmas(config, benchmark)
    scenarios = enumerate_scenarios(config, patterns)
    if not scenarios:
        raise ConfigError(f"no scenario matches {list(patterns or [])!r}")

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    results, kept = {}, {}
    try:
        for sc in scenarios:
            params = scenario_params(config, sc, x_star)
            logger.info("running %s (sigma=%.6g, R=%d)", sc.scenario_id, params.sigma, config.replications)
            paths = run_scenario(params, config.replications, config.base_seed,
                                 workers=workers, executor=pool)
            results[sc] = aggregate(paths, sc.scenario_id, sc.sigma_mult)
            if keep_paths or config.emit_raw:
                kept[sc] = paths
    finally:
        if pool is not None:
            pool.shutdown()
    return ExperimentResult(config=config, benchmark=benchmark, scenarios=results, paths=kept)


# --- writers -----------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if value is None:
        return ""
    if isinstance(value, float):
        return "inf" if value == math.inf else repr(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
    return path


def summary_rows(results: dict[Scenario, ScenarioResult]) -> list[dict]:
    rows = []
    for sc, res in results.items():
        for i in range(res.periods):
            rows.append({
                "scenario_id": sc.scenario_id,
                "m_P": _fmt_memory(sc.memory_principal),
                "m_A": _fmt_memory(sc.memory_agent),
                "sigma_mult": float(sc.sigma_mult),
                "sigma_abs": float(res.sigma_abs),
                "t": i + 1,
                "mean_UA": res.mean_ua[i], "ua_ci_lo": res.ua_lo[i], "ua_ci_hi": res.ua_hi[i],
                "mean_UP": res.mean_up[i], "up_ci_lo": res.up_lo[i], "up_ci_hi": res.up_hi[i],
                "n_paths": res.n_paths,
            })
    return rows


def raw_rows(paths: dict[Scenario, list[PathResult]]):
    for sc, path_list in paths.items():
        for path in path_list:
            for r in path.records:
                yield {
                    "scenario_id": sc.scenario_id, "path": path.seed[-1], "t": r.t,
                    "theta_hat_P": r.theta_hat_principal, "theta_hat_A": r.theta_hat_agent,
                    "a_tilde": r.contract.induced_action, "p": r.contract.premium,
                    "accepted": r.accepted, "a": r.action_agent, "theta": r.theta, "x": r.x,
                    "s": r.compensation, "UP": r.utility_principal, "UA": r.utility_agent,
                    "theta_estimate": r.theta_estimate_principal,
                }


def emit_plot_data(summary: Sequence[dict], out: str | os.PathLike) -> list[Path]:
    """Write one long-format file per utility measure for the 2x2 figure grid.

    Raises:
        MissingCellsError: if some scenario lacks periods that others have.
    """
    if not summary:
        raise MissingCellsError("summary is empty")
    out = Path(out)
    cells: dict[tuple, set] = {}
    for row in summary:
        cells.setdefault((row["m_P"], row["m_A"], row["sigma_mult"]), set()).add(row["t"])
    all_t = set().union(*cells.values())
    missing = [(key, t) for key, ts in cells.items() for t in sorted(all_t - ts)]
    if missing:
        raise MissingCellsError(f"summary lacks {len(missing)} cells, e.g. {missing[:5]}")

    written = []
    cols = {"UA": ("mean_UA", "ua_ci_lo", "ua_ci_hi"), "UP": ("mean_UP", "up_ci_lo", "up_ci_hi")}
    for measure, filename in PLOT_FILES.items():
        mean_c, lo_c, hi_c = cols[measure]
        rows = ({"m_P": r["m_P"], "m_A": r["m_A"], "sigma_mult": r["sigma_mult"], "t": r["t"],
                 "mean": r[mean_c], "ci_lo": r[lo_c], "ci_hi": r[hi_c], "n_paths": r["n_paths"]}
                for r in summary)
        written.append(write_csv(out / filename, PLOT_COLUMNS, rows))
    return written


def write_outputs(result: ExperimentResult, out: str | os.PathLike) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    b = result.benchmark
    summary = summary_rows(result.scenarios)
    written = [
        write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary),
        write_csv(out / "benchmark.csv", BENCHMARK_COLUMNS, [{
            "a_star": b.optimal_action, "p_star": b.optimal_premium, "x_star": b.optimal_outcome,
            "up_star": b.principal_utility, "ua_star": b.agent_utility}]),
        write_csv(out / "verdicts.csv", VERDICT_COLUMNS, verdict_rows(result.scenarios)),
    ]
    if result.config.emit_raw:
        written.append(write_csv(out / "raw.csv", RAW_COLUMNS, raw_rows(result.paths)))
    written.extend(emit_plot_data(summary, out))
    return written


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   patterns: Sequence[str] | None = None) -> int:
    """Run the experiment end to end and return a process exit status.

    On an I/O or runtime failure an ``INCOMPLETE`` marker is left in the
    output directory next to whatever was written.
    """
    out = Path(config.output_dir)
    try:
        result = execute(config, workers=workers, patterns=patterns)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        logger.error("experiment failed: %s", exc)
        _mark_incomplete(out, exc)
        return EXIT_RUNTIME
    try:
        marker = out / INCOMPLETE_MARKER
        write_outputs(result, out)
        if marker.exists():
            marker.unlink()
    except (OSError, MissingCellsError) as exc:
        logger.error("writing outputs failed: %s", exc)
        _mark_incomplete(out, exc)
        return EXIT_RUNTIME
    return EXIT_OK


def _mark_incomplete(out: Path, exc: BaseException) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / INCOMPLETE_MARKER).write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
    except OSError:
        pass
