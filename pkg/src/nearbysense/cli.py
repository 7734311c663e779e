"""Command-line pipeline: gen-population -> probe -> ingest -> label ->
census -> analyze -> report.

Steps communicate through the campaign workspace directory:

    populations/<city>.json     gen-population
    snapshots/<city>_exp<i>.txt probe
    sessions.json               probe (collection metadata, incl. failures)
    observations.jsonl          ingest
    labels.jsonl                label
    census.csv / census.json    census
    metrics.json                analyze

Failures exit nonzero with one JSON object on stderr:
    {"error": "<code>", "message": "..."}
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import report as report_mod
from .campaign import SimulatorTransport, build_schedule, run_campaign
from .config import CampaignConfig, load_campaign_config
from .errors import ConfigError, NearbySenseError
from .labeling import LabelRecord, import_annotations, parse_label
from .places import (
    MockPlacesClient,
    build_query_matrix,
    execute_census,
    load_census_json,
    load_place_dataset,
    write_census_csv,
    write_census_json,
)
from .population import generate_population, load_population, save_population
from .snapshot import parse_snapshot_text
from .store import (
    ObservationStore,
    apply_auto_labels,
    labels_from_jsonl,
    labels_to_jsonl,
)


def _fail(err: NearbySenseError | OSError) -> None:
    code = getattr(err, "code", "io-error")
    click.echo(json.dumps({"error": code, "message": str(err)}), err=True)
    sys.exit(1)


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NearbySenseError as e:
            _fail(e)
        except OSError as e:
            _fail(e)

    return wrapper


class State:
    def __init__(self, config_path, seed, radius_cap):
        self.config_path = config_path
        self.seed = seed
        self.radius_cap = radius_cap
        self._config: CampaignConfig | None = None

    @property
    def config(self) -> CampaignConfig:
        if self._config is None:
            if self.config_path is None:
                raise ConfigError("this command needs --config <file>")
            self._config = load_campaign_config(
                self.config_path, seed_override=self.seed,
                radius_cap_override=self.radius_cap,
            )
        return self._config

    def radius_cap_m(self) -> float:
        if self.radius_cap is not None:
            return float(self.radius_cap)
        if self.config_path is not None:
            return self.config.radius_cap_m
        return 2000.0


@click.group()
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              default=None, help="Campaign config JSON file.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--radius-cap", type=float, default=None,
              help="Override the ingest radius cap in meters.")
@click.pass_context
def main(ctx, config_path, seed, radius_cap):
    """Proximity-service probing and diaspora measurement pipeline."""
    ctx.obj = State(config_path, seed, radius_cap)


def _workspace(state: State) -> Path:
    ws = state.config.workspace
    ws.mkdir(parents=True, exist_ok=True)
    return ws


@main.command("gen-population")
@click.pass_obj
@cli_errors
def gen_population_cmd(state: State):
    """Generate every city's synthetic population into the workspace."""
    cfg = state.config
    out = _workspace(state) / "populations"
    out.mkdir(exist_ok=True)
    total = 0
    for city in cfg.cities:
        spec = cfg.population_specs[city.city_id]
        pop = generate_population(city, spec, seed=cfg.seed + hash_city(city.city_id))
        save_population(pop, out / f"{city.city_id}.json")
        total += len(pop)
    click.echo(f"generated {total} users across {len(cfg.cities)} cities -> {out}")


def hash_city(city_id: str) -> int:
    """Stable small per-city seed offset (not Python's salted hash)."""
    h = 0
    for ch in city_id:
        h = (h * 131 + ord(ch)) % 1_000_003
    return h


@main.command("probe")
@click.pass_obj
@cli_errors
def probe_cmd(state: State):
    """Run the spoofed-origin campaign against the simulator transport."""
    cfg = state.config
    ws = _workspace(state)
    pop_dir = ws / "populations"
    populations = {}
    for city in cfg.cities:
        path = pop_dir / f"{city.city_id}.json"
        if not path.exists():
            raise ConfigError(f"missing population file {path}; run gen-population first")
        populations[city.city_id] = load_population(path)

    schedule = build_schedule(cfg.cities, cfg.first_saturday, cfg.weeks, cfg.local_time)
    transport = SimulatorTransport(
        populations,
        recency_ttl_s=cfg.recency_ttl_s,
        max_radius_m=cfg.max_radius_m,
        page_size=cfg.page_size,
    )
    result = run_campaign(
        cfg.cities, schedule, transport,
        rate_limit_s=cfg.rate_limit_s, retries=cfg.retries,
    )

    snap_dir = ws / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    meta = []
    for session in result.sessions:
        if not session.failed:
            path = snap_dir / f"{session.city_id}_exp{session.experiment}.txt"
            path.write_text(session.raw_text, encoding="utf-8")
        meta.append(
            {
                "city_id": session.city_id,
                "experiment": session.experiment,
                "scheduled_utc": session.scheduled_utc.isoformat(),
                "failed": session.failed,
                "error": session.error,
                "parsed_records": session.parsed_records,
            }
        )
    (ws / "sessions.json").write_text(
        json.dumps(meta, ensure_ascii=False, sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )
    n_failed = len(result.failed_sessions)
    click.echo(
        f"probed {len(result.sessions)} sessions ({n_failed} failed) -> {snap_dir}"
    )


@main.command("ingest")
@click.argument("snapshots", nargs=-1, type=click.Path(path_type=Path))
@click.pass_obj
@cli_errors
def ingest_cmd(state: State, snapshots):
    """Parse snapshot files and build the deduplicated observation store.

    With no arguments, ingests every workspace snapshot.
    """
    if not snapshots:
        snapshots = sorted((_workspace(state) / "snapshots").glob("*.txt"))
        if not snapshots:
            raise ConfigError("no snapshot files given and none found in the workspace")
    store = ObservationStore()
    cap = state.radius_cap_m()
    warnings = 0
    for path in snapshots:
        parsed = parse_snapshot_text(Path(path).read_text(encoding="utf-8"))
        warnings += len(parsed.warnings)
        store.ingest(parsed.records, radius_cap_m=cap)
    out = _workspace(state) / "observations.jsonl"
    store.save(out)
    click.echo(
        f"ingested {store.total_distinct_users()} distinct users "
        f"({store.duplicates} duplicates collapsed, "
        f"{store.dropped_over_cap} dropped over {cap:g} m cap, "
        f"{warnings} parse warnings) -> {out}"
    )


def _load_store(state: State) -> ObservationStore:
    path = _workspace(state) / "observations.jsonl"
    if not path.exists():
        raise ConfigError(f"missing {path}; run ingest first")
    store = ObservationStore.load(path, radius_cap_m=state.radius_cap_m())
    labels_path = _workspace(state) / "labels.jsonl"
    if labels_path.exists():
        for rec in labels_from_jsonl(labels_path.read_text(encoding="utf-8")).values():
            store.attach_label(rec)
    return store


@main.command("label")
@click.option("--auto", "mode", flag_value="auto", help="Observed-script labeler.")
@click.option("--import", "import_csv", type=click.Path(path_type=Path),
              default=None, help="Annotation CSV (user_key,annotator_id,label).")
@click.option("--interactive", "mode", flag_value="interactive",
              help="Prompt for a label per unlabeled user.")
@click.pass_obj
@cli_errors
def label_cmd(state: State, mode, import_csv):
    """Attach ethnicity labels (precedence: manual-voted > imported > auto)."""
    store = _load_store(state)
    if import_csv is not None:
        imported = import_annotations(Path(import_csv).read_text(encoding="utf-8"))
        kept = sum(store.attach_label(rec) for rec in imported.values())
        click.echo(f"imported {len(imported)} labels ({kept} kept)")
    elif mode == "auto":
        kept = apply_auto_labels(store)
        click.echo(f"auto-labeled {kept} users")
    elif mode == "interactive":
        pending = store.unlabeled_users()
        for user in pending:
            preview = " | ".join(user.texts[:4])[:100]
            answer = click.prompt(
                f"{user.key} [{preview}] label (t=target-ethnic / o=other)",
                type=click.Choice(["t", "o"], case_sensitive=False),
            )
            store.attach_label(
                LabelRecord(user_key=user.key, source="imported", label=parse_label(answer))
            )
        click.echo(f"labeled {len(pending)} users interactively")
    else:
        raise ConfigError("choose one of --auto, --import <csv>, --interactive")
    out = _workspace(state) / "labels.jsonl"
    out.write_text(labels_to_jsonl(store.labels()), encoding="utf-8")
    click.echo(f"labels -> {out}")


@main.command("census")
@click.pass_obj
@cli_errors
def census_cmd(state: State):
    """Run the keyword x place-type census for every city."""
    cfg = state.config
    if cfg.census is None:
        raise ConfigError("config has no census section")
    dataset = load_place_dataset(cfg.census.dataset)
    client = MockPlacesClient(
        dataset, page_size=cfg.census.page_size, rate_limit_s=cfg.census.rate_limit_s
    )
    results = []
    for city in cfg.cities:
        specs = build_query_matrix(
            city.city_hall, cfg.census.keywords, cfg.census.place_types,
            radius_m=cfg.census.radius_m,
        )
        results.append(execute_census(client, specs, city_id=city.city_id))
    ws = _workspace(state)
    write_census_csv(results, ws / "census.csv")
    write_census_json(results, ws / "census.json")
    total = sum(r.b for r in results)
    click.echo(f"censused {total} businesses across {len(results)} cities -> {ws}")


def _load_census(state: State):
    path = _workspace(state) / "census.json"
    if path.exists():
        return load_census_json(path)
    return None


@main.command("analyze")
@click.pass_obj
@cli_errors
def analyze_cmd(state: State):
    """Compute all campaign metrics and write workspace metrics.json."""
    import tempfile

    cfg = state.config
    store = _load_store(state)
    census = _load_census(state)
    summary_path = _workspace(state) / "metrics.json"
    # analyze only keeps the summary; the full bundle belongs to `report`.
    with tempfile.TemporaryDirectory(dir=_workspace(state)) as tmp:
        bundle = report_mod.emit_report(
            store, cfg.cities, Path(tmp) / "bundle",
            census_results=census, seed=cfg.seed, radius_cap_m=state.radius_cap_m(),
        )
        bundle.files["summary.json"].replace(summary_path)
    totals = bundle.summary["totals"]
    click.echo(
        f"{totals['distinct_users']} distinct users / "
        f"{totals['labeled_target_users']} labeled target -> {summary_path}"
    )


@main.command("report")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.pass_obj
@cli_errors
def report_cmd(state: State, out_dir):
    """Emit the full report bundle (CSV tables, summary JSON, plot data)."""
    cfg = state.config
    store = _load_store(state)
    census = _load_census(state)
    sessions_meta = []
    sessions_path = _workspace(state) / "sessions.json"
    failed_sessions = []
    if sessions_path.exists():
        sessions_meta = json.loads(sessions_path.read_text(encoding="utf-8"))
        from .campaign import ProbeSession
        from datetime import datetime

        for m in sessions_meta:
            if m.get("failed"):
                failed_sessions.append(
                    ProbeSession(
                        city_id=m["city_id"],
                        experiment=m["experiment"],
                        scheduled_utc=datetime.fromisoformat(m["scheduled_utc"]),
                        origin=cfg.city(m["city_id"]).city_hall,
                        failed=True,
                        error=m.get("error"),
                    )
                )
    bundle = report_mod.emit_report(
        store, cfg.cities, out_dir,
        census_results=census, sessions=failed_sessions,
        seed=cfg.seed, radius_cap_m=state.radius_cap_m(),
    )
    click.echo(f"report bundle ({len(bundle.files)} files) -> {bundle.out_dir}")


if __name__ == "__main__":
    main()
