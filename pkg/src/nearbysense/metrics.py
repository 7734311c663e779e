"""Campaign metrics: per-experiment proportions, cross-experiment
consistency, population-normalized concentration, summary statistics,
business regression, and language-assimilation distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateDataError, InvalidInputError, UndefinedFitError
from .labeling import LanguageUse


def proportions(x: np.ndarray) -> np.ndarray:
    """Row-normalize an (experiments x cities) count matrix.

    p[i, j] is city j's share of experiment i's observed target users;
    every row sums to 1.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InvalidInputError(f"expected a 2-D count matrix, got shape {x.shape}")
    if (x < 0).any():
        raise InvalidInputError("counts must be nonnegative")
    row_sums = x.sum(axis=1)
    zero_rows = np.flatnonzero(row_sums == 0)
    if zero_rows.size:
        raise DegenerateDataError(
            f"experiment rows {zero_rows.tolist()} have zero total count"
        )
    return x / row_sums[:, np.newaxis]


@dataclass(frozen=True)
class ConsistencyRow:
    city_id: str
    mean_p: float
    min_p: float
    max_p: float
    range_p: float
    cv: float  # population std / mean; 0 when the mean is 0


def consistency_report(
    p: np.ndarray, city_ids: Sequence[str] | None = None
) -> list[ConsistencyRow]:
    """Per-city spread of proportions over experiments.

    Rows come back in ascending mean-proportion order, matching the
    convention of plotting cities from least to most observed.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] < 2:
        raise InvalidInputError("consistency needs >= 2 experiment rows")
    n_cities = p.shape[1]
    ids = list(city_ids) if city_ids is not None else [str(j) for j in range(n_cities)]
    if len(ids) != n_cities:
        raise InvalidInputError("city_ids length does not match matrix width")

    rows = []
    for j, cid in enumerate(ids):
        col = p[:, j]
        mean = float(col.mean())
        std = float(col.std())  # population std (ddof=0)
        rows.append(
            ConsistencyRow(
                city_id=cid,
                mean_p=mean,
                min_p=float(col.min()),
                max_p=float(col.max()),
                range_p=float(col.max() - col.min()),
                cv=(std / mean) if mean > 0 else 0.0,
            )
        )
    rows.sort(key=lambda r: (r.mean_p, r.city_id))
    return rows


@dataclass(frozen=True)
class ConcentrationRow:
    city_id: str
    concentration: float  # x_j / s_j
    normalized: float  # concentration / smallest positive concentration
    log10_normalized: float


@dataclass(frozen=True)
class ConcentrationReport:
    rows: tuple[ConcentrationRow, ...]  # ascending by normalized value
    excluded: tuple[str, ...]  # cities with x_j = 0, left out of normalization
    top_more_than_twice_second: bool


def concentration(
    x: Sequence[float], s: Sequence[float], city_ids: Sequence[str]
) -> ConcentrationReport:
    """Per-capita concentrations normalized so the smallest positive is 1.

    Cities with x_j = 0 cannot participate in the normalization and are
    excluded (flagged). The report also flags when the top city is more
    than twice as concentrated as the runner-up.
    """
    if not (len(x) == len(s) == len(city_ids)):
        raise InvalidInputError("x, s, city_ids must have equal length")
    if any(v <= 0 for v in s):
        raise InvalidInputError("every city population s_j must be > 0")
    if any(v < 0 for v in x):
        raise InvalidInputError("counts must be nonnegative")

    included = [(cid, xi / si) for cid, xi, si in zip(city_ids, x, s) if xi > 0]
    excluded = tuple(cid for cid, xi in zip(city_ids, x) if xi == 0)
    if not included:
        raise DegenerateDataError("all cities have x_j = 0")

    c_min = min(c for _, c in included)
    rows = [
        ConcentrationRow(
            city_id=cid,
            concentration=c,
            normalized=c / c_min,
            log10_normalized=math.log10(c / c_min),
        )
        for cid, c in included
    ]
    rows.sort(key=lambda r: (r.normalized, r.city_id))
    top_flag = len(rows) >= 2 and rows[-1].normalized > 2.0 * rows[-2].normalized
    return ConcentrationReport(
        rows=tuple(rows), excluded=excluded, top_more_than_twice_second=top_flag
    )


@dataclass(frozen=True)
class SummaryStats:
    max_value: float
    max_city: str
    min_value: float
    min_city: str
    mean: float
    median: float


def summary_stats(counts: Sequence[float], city_ids: Sequence[str]) -> SummaryStats:
    """Max/min (with owning city), mean, and midpoint median over cities."""
    if not counts:
        raise InvalidInputError("summary needs at least one city")
    if len(counts) != len(city_ids):
        raise InvalidInputError("counts and city_ids must have equal length")
    values = [float(v) for v in counts]
    imax = max(range(len(values)), key=lambda i: (values[i], -i))
    imin = min(range(len(values)), key=lambda i: (values[i], i))
    ordered = sorted(values)
    n = len(ordered)
    if n % 2:
        median = ordered[n // 2]
    else:
        median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
    return SummaryStats(
        max_value=values[imax],
        max_city=city_ids[imax],
        min_value=values[imin],
        min_city=city_ids[imin],
        mean=sum(values) / n,
        median=median,
    )


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def regress(points: Sequence[tuple[float, float]]) -> RegressionFit:
    """Ordinary least squares of y on x, with r^2 = 1 - SS_res/SS_tot.

    When SS_tot is 0 (constant y) the zero-slope line fits exactly and
    r^2 is reported as 1.
    """
    if len(points) < 2:
        raise UndefinedFitError(f"regression needs >= 2 points, got {len(points)}")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    x_mean = xs.mean()
    y_mean = ys.mean()
    sxx = float(((xs - x_mean) ** 2).sum())
    if sxx == 0.0:
        raise UndefinedFitError("x values have zero variance")
    sxy = float(((xs - x_mean) * (ys - y_mean)).sum())
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    residuals = ys - (slope * xs + intercept)
    ss_res = float((residuals**2).sum())
    ss_tot = float(((ys - y_mean) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RegressionFit(
        slope=slope, intercept=intercept, r_squared=r_squared, n_points=len(points)
    )


@dataclass(frozen=True)
class AssimilationRow:
    city_id: str
    n_users: int
    frac_local: float
    frac_english: float
    frac_target_only: float  # target script and neither local nor English


@dataclass(frozen=True)
class AssimilationReport:
    english_main: tuple[AssimilationRow, ...]
    other: tuple[AssimilationRow, ...]
    excluded: tuple[str, ...]  # cities with no labeled target users


def assimilation_distribution(
    usage_by_city: Mapping[str, Sequence[LanguageUse]],
    english_main: Mapping[str, bool],
) -> AssimilationReport:
    """Language-usage fractions of labeled target users, split into
    English-main and non-English-main city sections."""
    en_rows = []
    other_rows = []
    excluded = []
    for city_id in sorted(usage_by_city):
        uses = usage_by_city[city_id]
        if not uses:
            excluded.append(city_id)
            continue
        n = len(uses)
        row = AssimilationRow(
            city_id=city_id,
            n_users=n,
            frac_local=sum(1 for u in uses if u.uses_local) / n,
            frac_english=sum(1 for u in uses if u.uses_english) / n,
            frac_target_only=sum(
                1 for u in uses if u.uses_target and not u.uses_local and not u.uses_english
            )
            / n,
        )
        if english_main.get(city_id, False):
            en_rows.append(row)
        else:
            other_rows.append(row)
    return AssimilationReport(
        english_main=tuple(en_rows), other=tuple(other_rows), excluded=tuple(excluded)
    )
