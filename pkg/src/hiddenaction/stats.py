"""Cross-path aggregation: per-period means, normal confidence bands,
coefficient-of-variation stability and CI-disjointness verdicts.

Sums use ``math.fsum`` (correctly rounded), which makes every statistic here
independent of the order in which paths are supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Sequence

A_ABOVE = "a_above"
B_ABOVE = "b_above"
INDISTINGUISHABLE = "indistinguishable"

DEFAULT_LEVEL = 0.99
COV_STEP = 100


class InsufficientSamplesError(ValueError):
    pass


class UndefinedCoVError(ValueError):
    pass


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def _sd(xs: Sequence[float], mean: float) -> float:
    return math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / (len(xs) - 1))


def critical_value(level: float) -> float:
    """Two-sided standard normal quantile, e.g. 2.5758 for 0.99."""
    if not 0.0 <= level < 1.0:
        raise ValueError(f"confidence level must lie in [0, 1), got {level!r}")
    return NormalDist().inv_cdf(0.5 + level / 2.0)


def mean_ci(samples: Sequence[float], level: float = DEFAULT_LEVEL) -> tuple[float, float, float]:
    """(mean, lower, upper) using the normal critical value and the n-1 sd."""
    n = len(samples)
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 samples for a CI, got {n}")
    m = _mean(samples)
    half = critical_value(level) * _sd(samples, m) / math.sqrt(n)
    return m, m - half, m + half


def coefficient_of_variation(samples: Sequence[float]) -> float:
    n = len(samples)
    if n < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {n}")
    m = _mean(samples)
    if abs(m) < 1e-12:
        raise UndefinedCoVError("coefficient of variation undefined for zero mean")
    return _sd(samples, m) / abs(m)


def stability_trace(per_path_values: Sequence[float], step: int = COV_STEP) -> list[float]:
    """CoV over the first ``k * step`` values for k = 1, 2, ..."""
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step!r}")
    n = len(per_path_values)
    return [coefficient_of_variation(per_path_values[:k]) for k in range(step, n + 1, step)]


@dataclass
class ScenarioResult:
    """Per-period cross-path summary of one scenario.

    CI bounds are NaN when fewer than two paths were aggregated.
    """

    scenario_id: str
    memory_principal: int | float
    memory_agent: int | float
    sigma_mult: float
    sigma_abs: float
    n_paths: int
    mean_ua: list[float]
    ua_lo: list[float]
    ua_hi: list[float]
    mean_up: list[float]
    up_lo: list[float]
    up_hi: list[float]
    cov_trace: list[float] = field(default_factory=list)
    rejections: int = 0

    @property
    def periods(self) -> int:
        return len(self.mean_ua)

    def band(self, measure: str) -> tuple[list[float], list[float], list[float]]:
        if measure == "UA":
            return self.mean_ua, self.ua_lo, self.ua_hi
        if measure == "UP":
            return self.mean_up, self.up_lo, self.up_hi
        raise ValueError(f"unknown measure {measure!r}; expected 'UA' or 'UP'")


def _band(values: Sequence[float], level: float) -> tuple[float, float, float]:
    if len(values) < 2:
        return _mean(values), math.nan, math.nan
    return mean_ci(values, level)


def aggregate(paths, scenario_id: str = "", sigma_mult: float = math.nan,
              level: float = DEFAULT_LEVEL, cov_step: int = COV_STEP) -> ScenarioResult:
    """Summarize a collection of ``PathResult`` objects from one scenario."""
    paths = sorted(paths, key=lambda p: p.seed)
    if not paths:
        raise InsufficientSamplesError("no paths to aggregate")
    params = paths[0].params
    T = len(paths[0].records)
    cols = {"UA": [[] for _ in range(T)], "UP": [[] for _ in range(T)]}
    rejections = 0
    for path in paths:
        if len(path.records) != T:
            raise ValueError("paths of unequal length cannot be aggregated")
        for i, rec in enumerate(path.records):
            cols["UA"][i].append(rec.utility_agent)
            cols["UP"][i].append(rec.utility_principal)
            rejections += not rec.accepted

    ua = [_band(v, level) for v in cols["UA"]]
    up = [_band(v, level) for v in cols["UP"]]
    try:
        trace = stability_trace(cols["UA"][-1], cov_step) if len(paths) >= max(cov_step, 2) else []
    except UndefinedCoVError:
        trace = []
    return ScenarioResult(
        scenario_id=scenario_id,
        memory_principal=params.memory_principal,
        memory_agent=params.memory_agent,
        sigma_mult=sigma_mult,
        sigma_abs=params.sigma,
        n_paths=len(paths),
        mean_ua=[b[0] for b in ua], ua_lo=[b[1] for b in ua], ua_hi=[b[2] for b in ua],
        mean_up=[b[0] for b in up], up_lo=[b[1] for b in up], up_hi=[b[2] for b in up],
        cov_trace=trace,
        rejections=rejections,
    )


def compare_intervals(a: tuple[float, float], b: tuple[float, float]) -> str:
    """Verdict for two (lower, upper) intervals; touching counts as overlap."""
    if a[0] > b[1]:
        return A_ABOVE
    if b[0] > a[1]:
        return B_ABOVE
    return INDISTINGUISHABLE


def compare_scenarios(a: ScenarioResult, b: ScenarioResult, measure: str) -> list[str]:
    """Per-period verdicts from 99% band disjointness on ``measure`` ('UA'/'UP')."""
    if a.periods != b.periods:
        raise ValueError(f"period counts differ: {a.periods} vs {b.periods}")
    _, a_lo, a_hi = a.band(measure)
    _, b_lo, b_hi = b.band(measure)
    return [compare_intervals((a_lo[i], a_hi[i]), (b_lo[i], b_hi[i])) for i in range(a.periods)]
