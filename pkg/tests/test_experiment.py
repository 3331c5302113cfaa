import csv
import dataclasses
import math

import pytest
from hypothesis import given, strategies as st

from hiddenaction import cli
from hiddenaction.experiment import (
    BENCHMARK_COLUMNS,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    INCOMPLETE_MARKER,
    PLOT_COLUMNS,
    RAW_COLUMNS,
    SUMMARY_COLUMNS,
    VERDICT_COLUMNS,
    ConfigError,
    ExperimentConfig,
    MissingCellsError,
    emit_plot_data,
    enumerate_scenarios,
    parse_config,
    resolve_sigmas,
    run_experiment,
    serialize_config,
)
from hiddenaction.model import UNBOUNDED, BenchmarkSolution


def read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def small(tmp_path, **kw):
    base = dict(replications=4, periods=3, output_dir=str(tmp_path / "out"))
    base.update(kw)
    return ExperimentConfig(**base)


# --- config ---------------------------------------------------------------------------

def test_defaults_match_published_design():
    c = ExperimentConfig()
    assert c.memory_principal_levels == (3, UNBOUNDED)
    assert c.memory_agent_levels == (3, UNBOUNDED)
    assert c.sigma_multipliers == (0.05, 0.25, 0.45)
    assert (c.mu, c.eta, c.periods, c.replications) == (0.0, 0.5, 20, 700)
    assert len(enumerate_scenarios(c)) == 12


def test_config_round_trip_default():
    c = ExperimentConfig()
    assert parse_config(serialize_config(c)) == c
    assert "memory_principal_levels = 3, inf" in serialize_config(c)


memory = st.one_of(st.integers(1, 50), st.just(UNBOUNDED))


@given(mp=st.lists(memory, min_size=1, max_size=3), ma=st.lists(memory, min_size=1, max_size=3),
       sig=st.lists(st.floats(0, 2), min_size=1, max_size=3), mu=st.floats(-1, 1),
       eta=st.floats(0.01, 5), seed=st.integers(0, 2**32), raw=st.booleans())
def test_config_round_trip(mp, ma, sig, mu, eta, seed, raw):
    c = ExperimentConfig(memory_principal_levels=tuple(mp), memory_agent_levels=tuple(ma),
                         sigma_multipliers=tuple(sig), mu=mu, eta=eta, base_seed=seed, emit_raw=raw)
    assert parse_config(serialize_config(c)) == c


def test_config_comments_and_partial_keys():
    c = parse_config("# comment\nreplications = 10  # trailing\n\nmemory_agent_levels = inf\n")
    assert c.replications == 10
    assert c.memory_agent_levels == (UNBOUNDED,)
    assert c.periods == 20


@pytest.mark.parametrize("text", ["nonsense", "colour = blue", "periods = x", "memory_agent_levels = 0",
                                  "sigma_multipliers =", "emit_raw = maybe"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_scenario_order_is_lexicographic():
    ids = [s.scenario_id for s in enumerate_scenarios(ExperimentConfig())]
    assert ids[:3] == ["P3-A3-s0.05", "P3-A3-s0.25", "P3-A3-s0.45"]
    assert ids[3] == "P3-Ainf-s0.05"
    assert ids[-1] == "Pinf-Ainf-s0.45"
    assert [s.scenario_id for s in enumerate_scenarios(ExperimentConfig(), ["Pinf-A3-*"])] == \
        ["Pinf-A3-s0.05", "Pinf-A3-s0.25", "Pinf-A3-s0.45"]


def test_resolve_sigmas(benchmark):
    c = ExperimentConfig(sigma_multipliers=(0.0, 1.0, 0.45))
    sig = resolve_sigmas(c, benchmark)
    assert sig[0] == 0.0
    assert sig[1] == benchmark.optimal_outcome
    assert sig[2] == pytest.approx(0.1857, abs=1e-4)
    with pytest.raises(ValueError):
        resolve_sigmas(c, BenchmarkSolution(0.0, 0.0, 0.0, 0.0, 0.0))


# --- end-to-end runs ----------------------------------------------------------------------

def test_minimal_run(tmp_path):
    c = small(tmp_path, replications=1, periods=1, memory_principal_levels=(3,),
              memory_agent_levels=(3,), sigma_multipliers=(0.25,))
    assert run_experiment(c) == EXIT_OK
    rows = read(tmp_path / "out" / "summary.csv")
    assert rows[0] == SUMMARY_COLUMNS
    assert len(rows) == 2
    row = dict(zip(rows[0], rows[1]))
    assert row["n_paths"] == "1"
    assert row["ua_ci_lo"] == "nan" and row["up_ci_hi"] == "nan"


def test_output_schemas(tmp_path):
    c = small(tmp_path, emit_raw=True)
    assert run_experiment(c) == EXIT_OK
    out = tmp_path / "out"
    assert read(out / "summary.csv")[0] == SUMMARY_COLUMNS
    assert len(read(out / "summary.csv")) == 1 + 12 * 3
    assert read(out / "benchmark.csv")[0] == BENCHMARK_COLUMNS
    assert len(read(out / "benchmark.csv")) == 2
    assert read(out / "verdicts.csv")[0] == VERDICT_COLUMNS
    raw = read(out / "raw.csv")
    assert raw[0] == RAW_COLUMNS
    assert len(raw) == 1 + 12 * 4 * 3
    for name in ("fig_agent_utility.csv", "fig_principal_utility.csv"):
        fig = read(out / name)
        assert fig[0] == PLOT_COLUMNS
        assert len(fig) == 1 + 12 * 3
    assert not (out / INCOMPLETE_MARKER).exists()
    text = (out / "summary.csv").read_bytes()
    assert b"\r\n" not in text


def test_verdict_claims_cover_the_grid(tmp_path):
    assert run_experiment(small(tmp_path)) == EXIT_OK
    rows = read(tmp_path / "out" / "verdicts.csv")[1:]
    claims = [r[0] for r in rows]
    assert claims.count("sigma_lowers_agent_utility") == 4 * 3
    assert claims.count("principal_memory_raises_agent_utility") == 6
    assert claims.count("agent_memory_no_effect_on_agent") == 6
    assert claims.count("principal_utility_insensitive") == 66
    for r in rows:
        assert int(r[4]) + int(r[5]) + int(r[6]) == 3


def test_single_scenario_plot_files(tmp_path):
    c = small(tmp_path, periods=20)
    assert run_experiment(c, patterns=["P3-Ainf-s0.25"]) == EXIT_OK
    fig = read(tmp_path / "out" / "fig_agent_utility.csv")
    assert len(fig) == 21
    assert {tuple(r[:3]) for r in fig[1:]} == {("3", "inf", "0.25")}


def test_repeat_runs_are_byte_identical(tmp_path):
    a = small(tmp_path, output_dir=str(tmp_path / "a"), emit_raw=True)
    b = dataclasses.replace(a, output_dir=str(tmp_path / "b"))
    assert run_experiment(a) == EXIT_OK
    assert run_experiment(b, workers=2) == EXIT_OK
    for name in ("summary.csv", "benchmark.csv", "verdicts.csv", "raw.csv",
                 "fig_agent_utility.csv", "fig_principal_utility.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_emit_plot_data_reports_missing_cells(tmp_path):
    rows = [{"m_P": "3", "m_A": "3", "sigma_mult": 0.05, "t": t, "mean_UA": 0.0, "ua_ci_lo": 0.0,
             "ua_ci_hi": 0.0, "mean_UP": 0.0, "up_ci_lo": 0.0, "up_ci_hi": 0.0, "n_paths": 2}
            for t in (1, 2)]
    rows.append(dict(rows[0], m_A="inf"))
    with pytest.raises(MissingCellsError):
        emit_plot_data(rows, tmp_path)


def test_io_failure_leaves_marker(tmp_path):
    blocker = tmp_path / "out"
    blocker.mkdir()
    (blocker / "summary.csv").mkdir()  # a directory where a file must go
    assert run_experiment(small(tmp_path)) == EXIT_RUNTIME
    assert (blocker / INCOMPLETE_MARKER).exists()


def test_unmatched_filter_is_config_error(tmp_path):
    assert run_experiment(small(tmp_path), patterns=["nope"]) == EXIT_CONFIG


# --- command line -----------------------------------------------------------------------------

def test_cli_benchmark(capsys):
    assert cli.main(["benchmark"]) == EXIT_OK
    out = capsys.readouterr().out
    pairs = [line.split("=") for line in out.strip().splitlines()]
    values = {k.strip(): float(v) for k, v in pairs}
    assert list(values) == BENCHMARK_COLUMNS
    assert values["p_star"] == pytest.approx(0.4532, abs=1e-4)


def test_cli_run_with_config_and_overrides(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(serialize_config(ExperimentConfig(periods=2, replications=3)))
    out = tmp_path / "cli_out"
    code = cli.main(["run", "--config", str(cfg), "--seed", "5", "--replications", "2",
                     "--scenario", "P3-A3-*", "--output", str(out), "--raw"])
    assert code == EXIT_OK
    summary = read(out / "summary.csv")
    assert len(summary) == 1 + 3 * 2
    assert {r[-1] for r in summary[1:]} == {"2"}
    assert (out / "raw.csv").exists()


def test_cli_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("periods = -3\n")
    assert cli.main(["run", "--config", str(cfg)]) == EXIT_CONFIG
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_cli_prints_default_config(capsys):
    assert cli.main(["config"]) == EXIT_OK
    assert parse_config(capsys.readouterr().out) == ExperimentConfig()
