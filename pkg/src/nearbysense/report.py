"""Report bundle emission: per-city CSV tables, a JSON summary, and
plot-data files for the consistency / user-count / concentration /
business-regression / language figures.

Output is byte-identical across runs for identical inputs: no wall-clock
timestamps, sorted JSON keys, fixed float formatting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .campaign import ProbeSession
from .config import CityConfig
from .errors import DegenerateDataError, UndefinedFitError
from .labeling import Label, classify_language_use
from .metrics import (
    AssimilationReport,
    ConcentrationReport,
    assimilation_distribution,
    concentration,
    consistency_report,
    proportions,
    regress,
    summary_stats,
)
from .places import CensusResult
from .store import ObservationStore


@dataclass(frozen=True)
class CityMetrics:
    """Everything the tables need for one city."""

    city_id: str
    name: str
    x: int  # distinct target users across experiments
    y: int  # distinct users across experiments
    s: int  # city population
    b: int | None  # censused businesses, None without census
    concentration: float | None
    normalized: float | None
    frac_local: float | None
    frac_english: float | None
    frac_target_only: float | None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _csv_line(*cells) -> str:
    return ",".join(_fmt(c) for c in cells)


@dataclass
class ReportBundle:
    out_dir: Path
    files: dict[str, Path]
    summary: dict


def compute_city_metrics(
    store: ObservationStore,
    cities: Sequence[CityConfig],
    census_by_city: Mapping[str, CensusResult] | None = None,
) -> list[CityMetrics]:
    census_by_city = census_by_city or {}
    xs = {c.city_id: store.x_j(c.city_id) for c in cities}
    conc_report = None
    if any(v > 0 for v in xs.values()):
        conc_report = concentration(
            [xs[c.city_id] for c in cities],
            [c.population for c in cities],
            [c.city_id for c in cities],
        )
    conc_rows = {r.city_id: r for r in conc_report.rows} if conc_report else {}

    assim = _assimilation(store, cities)
    assim_rows = {r.city_id: r for r in assim.english_main + assim.other}

    out = []
    for city in cities:
        census = census_by_city.get(city.city_id)
        conc = conc_rows.get(city.city_id)
        arow = assim_rows.get(city.city_id)
        out.append(
            CityMetrics(
                city_id=city.city_id,
                name=city.name,
                x=xs[city.city_id],
                y=store.y_j(city.city_id),
                s=city.population,
                b=census.b if census is not None else None,
                concentration=conc.concentration if conc else None,
                normalized=conc.normalized if conc else None,
                frac_local=arow.frac_local if arow else None,
                frac_english=arow.frac_english if arow else None,
                frac_target_only=arow.frac_target_only if arow else None,
            )
        )
    return out


def _assimilation(
    store: ObservationStore, cities: Sequence[CityConfig]
) -> AssimilationReport:
    usage = {}
    english_main = {}
    for city in cities:
        uses = []
        for user in store.iter_users(city.city_id):
            if store.label_of(city.city_id, user.handle) is Label.TARGET:
                uses.append(classify_language_use(user.texts, city.local_language))
        usage[city.city_id] = uses
        english_main[city.city_id] = city.english_main
    return assimilation_distribution(usage, english_main)


def emit_report(
    store: ObservationStore,
    cities: Sequence[CityConfig],
    out_dir: str | Path,
    census_results: Sequence[CensusResult] | None = None,
    sessions: Sequence[ProbeSession] | None = None,
    seed: int | None = None,
    radius_cap_m: float = 2000.0,
) -> ReportBundle:
    """Write the full report bundle into ``out_dir``.

    Raises DegenerateDataError("no observations") on an empty store before
    creating any file; all file content is built in memory first so a
    failing write never leaves a partially written summary.
    """
    if store.total_distinct_users() == 0:
        raise DegenerateDataError("no observations")

    known = {c.city_id for c in cities}
    stray = [cid for cid in store.city_ids() if cid not in known]
    if stray:
        raise DegenerateDataError(f"store has cities missing from config: {stray}")

    out_dir = Path(out_dir)
    census_by_city = {r.city_id: r for r in census_results} if census_results else {}
    city_ids = [c.city_id for c in cities]
    experiments = store.experiments()

    x_mat, y_mat, _, _ = store.count_matrices(city_ids, experiments)

    p = None
    consistency = None
    proportions_note = None
    if len(experiments) >= 2:
        try:
            p = proportions(x_mat)
            consistency = consistency_report(p, city_ids)
        except DegenerateDataError as e:
            proportions_note = str(e)
    else:
        proportions_note = "fewer than 2 experiments"

    metrics_rows = compute_city_metrics(store, cities, census_by_city)
    by_id = {m.city_id: m for m in metrics_rows}

    conc_report: ConcentrationReport | None = None
    if any(m.x > 0 for m in metrics_rows):
        conc_report = concentration(
            [m.x for m in metrics_rows], [m.s for m in metrics_rows], city_ids
        )

    y_stats = summary_stats([m.y for m in metrics_rows], [m.name for m in metrics_rows])
    x_stats = summary_stats([m.x for m in metrics_rows], [m.name for m in metrics_rows])

    fit = None
    fit_note = None
    if census_by_city:
        points = [(m.x, m.b) for m in metrics_rows if m.b is not None]
        try:
            fit = regress(points)
        except UndefinedFitError as e:
            fit_note = str(e)
    else:
        fit_note = "no census results"

    assim = _assimilation(store, cities)

    failed = [
        {"city_id": s.city_id, "experiment": s.experiment, "error": s.error or ""}
        for s in (sessions or [])
        if s.failed
    ]
    partial_census = sorted(
        cid for cid, r in census_by_city.items() if not r.comprehensive
    )

    files: dict[str, str] = {}

    header = "city_id,name,x_j,y_j,s_j,b_j,c_j,n_j,frac_local,frac_english,frac_target_only"
    lines = [header]
    for m in metrics_rows:
        lines.append(
            _csv_line(
                m.city_id, m.name, m.x, m.y, m.s, m.b, m.concentration,
                m.normalized, m.frac_local, m.frac_english, m.frac_target_only,
            )
        )
    files["cities.csv"] = "\n".join(lines) + "\n"

    lines = ["experiment,city_id,x_ij,y_ij,p_ij"]
    for i, exp in enumerate(experiments):
        for j, cid in enumerate(city_ids):
            p_val = p[i, j] if p is not None else None
            lines.append(_csv_line(exp, cid, int(x_mat[i, j]), int(y_mat[i, j]), p_val))
    files["proportions.csv"] = "\n".join(lines) + "\n"

    if consistency is not None:
        lines = ["city_id,mean_p,min_p,max_p,range_p,cv"]
        for row in consistency:
            lines.append(
                _csv_line(row.city_id, row.mean_p, row.min_p, row.max_p, row.range_p, row.cv)
            )
        files["plot_consistency.csv"] = "\n".join(lines) + "\n"

    ordered_by_x = sorted(metrics_rows, key=lambda m: (m.x, m.city_id))
    lines = ["city_id,x_j,y_j"]
    lines.extend(_csv_line(m.city_id, m.x, m.y) for m in ordered_by_x)
    files["plot_users.csv"] = "\n".join(lines) + "\n"

    if conc_report is not None:
        lines = ["city_id,c_j,n_j,log10_n_j"]
        for row in conc_report.rows:
            lines.append(
                _csv_line(row.city_id, row.concentration, row.normalized, row.log10_normalized)
            )
        files["plot_concentration.csv"] = "\n".join(lines) + "\n"

    if census_by_city:
        lines = ["city_id,x_j,b_j"]
        lines.extend(
            _csv_line(m.city_id, m.x, m.b) for m in metrics_rows if m.b is not None
        )
        files["plot_users_vs_businesses.csv"] = "\n".join(lines) + "\n"

    for name, rows in (
        ("plot_language_english_main.csv", assim.english_main),
        ("plot_language_other.csv", assim.other),
    ):
        lines = ["city_id,n_users,frac_local,frac_english,frac_target_only"]
        lines.extend(
            _csv_line(r.city_id, r.n_users, r.frac_local, r.frac_english, r.frac_target_only)
            for r in rows
        )
        files[name] = "\n".join(lines) + "\n"

    def stats_dict(stats) -> dict:
        return {
            "max": stats.max_value, "max_city": stats.max_city,
            "min": stats.min_value, "min_city": stats.min_city,
            "mean": stats.mean, "median": stats.median,
        }

    summary = {
        "totals": {
            "distinct_users": store.total_distinct_users(),
            "labeled_target_users": store.total_labeled_target(),
            "duplicates_collapsed": store.duplicates,
            "dropped_over_radius_cap": store.dropped_over_cap,
        },
        "user_stats": stats_dict(y_stats),
        "target_user_stats": stats_dict(x_stats),
        "consistency": (
            [
                {
                    "city_id": r.city_id, "mean_p": r.mean_p, "min_p": r.min_p,
                    "max_p": r.max_p, "range_p": r.range_p, "cv": r.cv,
                }
                for r in consistency
            ]
            if consistency is not None
            else None
        ),
        "proportions_note": proportions_note,
        "concentration": (
            {
                "excluded": list(conc_report.excluded),
                "top_more_than_twice_second": conc_report.top_more_than_twice_second,
            }
            if conc_report is not None
            else None
        ),
        "regression": (
            {
                "slope": fit.slope, "intercept": fit.intercept,
                "r_squared": fit.r_squared, "n_points": fit.n_points,
            }
            if fit is not None
            else None
        ),
        "regression_note": fit_note,
        "assimilation_excluded": list(assim.excluded),
        "failures": {"failed_sessions": failed, "partial_census": partial_census},
        "parameters": {
            "seed": seed,
            "radius_cap_m": radius_cap_m,
            "experiments": experiments,
            "cities": city_ids,
        },
    }
    files["summary.json"] = json.dumps(summary, ensure_ascii=False, sort_keys=True, indent=1) + "\n"

    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, content in sorted(files.items()):
        path = out_dir / name
        path.write_text(content, encoding="utf-8")
        paths[name] = path
    return ReportBundle(out_dir=out_dir, files=paths, summary=summary)
