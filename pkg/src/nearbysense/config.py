"""Campaign configuration: city definitions and the JSON config file.

A campaign config file looks like:

    {
      "format": "nearbysense-campaign-v1",
      "workspace": "campaign_out",
      "seed": 20160618,
      "first_saturday": "2016-06-18",
      "weeks": 4,
      "local_time": "15:00",
      "radius_cap_m": 2000,
      "recency_ttl_hours": 72,
      "rate_limit_s": 0.0,
      "page_size": 25,
      "max_radius_m": 4000,
      "retries": 2,
      "population_defaults": {"sigma_m": 400, "activity_window_hours": 48},
      "cities": [
        {"city_id": "prato", "name": "Prato", "lat": 43.8808, "lon": 11.0966,
         "timezone": "Europe/Rome", "population": 191000,
         "local_language": "italian",
         "synthetic": {"target_count": 287, "other_count": 195}}
      ],
      "census": {"dataset": "places.json", "keywords": [...], "place_types": [...]}
    }

Per-city "synthetic" sections are merged over "population_defaults". When a
city omits a population reference_time, it defaults to that city's first
scheduled probe instant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, time
from pathlib import Path
from typing import Mapping
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

from .errors import ConfigError
from .geo import GeoPoint
from .labeling import LanguageSpec, resolve_language
from .population import PopulationSpec

CAMPAIGN_FORMAT = "nearbysense-campaign-v1"


@dataclass(frozen=True)
class CityConfig:
    """One probed city: hall coordinates, zone, census population, locale."""

    city_id: str
    name: str
    city_hall: GeoPoint
    timezone: str
    population: int
    local_language: LanguageSpec

    def __post_init__(self) -> None:
        if not self.city_id or any(ch.isspace() for ch in self.city_id):
            raise ConfigError(f"city_id must be non-empty and space-free: {self.city_id!r}")
        if self.population <= 0:
            raise ConfigError(f"{self.city_id}: population must be > 0, got {self.population}")
        try:
            ZoneInfo(self.timezone)
        except (ZoneInfoNotFoundError, ValueError) as e:
            raise ConfigError(f"{self.city_id}: unresolvable timezone {self.timezone!r}") from e

    @property
    def english_main(self) -> bool:
        return self.local_language.code == "english"

    def zone(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)


@dataclass(frozen=True)
class CensusConfig:
    dataset: Path
    keywords: tuple[str, ...]
    place_types: tuple[str, ...]
    radius_m: float = 2000.0
    page_size: int = 20
    rate_limit_s: float = 0.0

    def __post_init__(self) -> None:
        if not self.keywords or not self.place_types:
            raise ConfigError("census needs non-empty keyword and place-type lists")
        if not self.radius_m > 0:
            raise ConfigError(f"census radius must be > 0, got {self.radius_m}")


@dataclass(frozen=True)
class CampaignConfig:
    cities: tuple[CityConfig, ...]
    first_saturday: date
    weeks: int
    local_time: time
    seed: int
    radius_cap_m: float = 2000.0
    recency_ttl_s: float = 72 * 3600.0
    rate_limit_s: float = 1.0
    page_size: int = 25
    max_radius_m: float = 4000.0
    retries: int = 2
    workspace: Path = Path("campaign_out")
    population_specs: Mapping[str, PopulationSpec] = field(default_factory=dict)
    census: CensusConfig | None = None

    def __post_init__(self) -> None:
        if self.weeks < 1:
            raise ConfigError(f"weeks must be >= 1, got {self.weeks}")
        if self.first_saturday.weekday() != 5:
            raise ConfigError(f"{self.first_saturday} is not a Saturday")
        ids = [c.city_id for c in self.cities]
        if len(ids) != len(set(ids)):
            raise ConfigError("city_ids must be unique within a campaign")
        if not self.cities:
            raise ConfigError("campaign needs at least one city")

    def city(self, city_id: str) -> CityConfig:
        for c in self.cities:
            if c.city_id == city_id:
                return c
        raise ConfigError(f"unknown city {city_id!r}")


def _parse_local_language(value) -> LanguageSpec:
    if isinstance(value, str):
        return resolve_language(value)
    if isinstance(value, Mapping):
        kind = value.get("kind", "latin-words")
        if kind == "latin-words":
            return LanguageSpec(
                code=value["code"], name=value.get("name", value["code"]),
                kind=kind, words=frozenset(w.lower() for w in value["words"]),
                sample_phrases=tuple(value.get("sample_phrases", ())),
            )
        return LanguageSpec(
            code=value["code"], name=value.get("name", value["code"]),
            kind=kind,
            script_ranges=tuple((int(lo, 0) if isinstance(lo, str) else int(lo),
                                 int(hi, 0) if isinstance(hi, str) else int(hi))
                                for lo, hi in value["script_ranges"]),
            sample_phrases=tuple(value.get("sample_phrases", ())),
        )
    raise ConfigError(f"cannot interpret local_language {value!r}")


def _first_probe_epoch(city: CityConfig, first_saturday: date, local_time: time) -> float:
    local = datetime.combine(first_saturday, local_time, tzinfo=city.zone())
    return local.timestamp()


def load_campaign_config(
    path: str | Path,
    seed_override: int | None = None,
    radius_cap_override: float | None = None,
) -> CampaignConfig:
    """Load and validate a campaign config file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {e}") from e
    if doc.get("format") != CAMPAIGN_FORMAT:
        raise ConfigError(f"unexpected config format {doc.get('format')!r}")

    try:
        first_saturday = date.fromisoformat(doc["first_saturday"])
        hh, mm = str(doc.get("local_time", "15:00")).split(":")
        local_time = time(int(hh), int(mm))
        weeks = int(doc.get("weeks", 4))
        seed = int(doc["seed"]) if seed_override is None else int(seed_override)
    except KeyError as e:
        raise ConfigError(f"config missing required field {e}") from e
    except ValueError as e:
        raise ConfigError(f"bad scalar in config: {e}") from e

    cities = []
    for c in doc.get("cities", []):
        try:
            cities.append(
                CityConfig(
                    city_id=c["city_id"],
                    name=c.get("name", c["city_id"]),
                    city_hall=GeoPoint(float(c["lat"]), float(c["lon"])),
                    timezone=c["timezone"],
                    population=int(c["population"]),
                    local_language=_parse_local_language(c.get("local_language", "english")),
                )
            )
        except KeyError as e:
            raise ConfigError(f"city entry missing field {e}: {c}") from e

    defaults = dict(doc.get("population_defaults", {}))
    pop_specs: dict[str, PopulationSpec] = {}
    for c, city in zip(doc.get("cities", []), cities):
        merged = dict(defaults)
        merged.update(c.get("synthetic", {}))
        if "activity_window_hours" in merged:
            merged["activity_window_s"] = float(merged.pop("activity_window_hours")) * 3600.0
        merged.setdefault("target_count", 0)
        merged.setdefault("other_count", 0)
        if "reference_time" not in merged:
            merged["reference_time"] = _first_probe_epoch(city, first_saturday, local_time)
        try:
            pop_specs[city.city_id] = PopulationSpec.from_dict(merged)
        except TypeError as e:
            raise ConfigError(f"{city.city_id}: bad synthetic population spec: {e}") from e

    census = None
    if "census" in doc:
        cdoc = doc["census"]
        dataset = Path(cdoc["dataset"])
        if not dataset.is_absolute():
            dataset = path.parent / dataset
        census = CensusConfig(
            dataset=dataset,
            keywords=tuple(cdoc["keywords"]),
            place_types=tuple(cdoc["place_types"]),
            radius_m=float(cdoc.get("radius_m", 2000.0)),
            page_size=int(cdoc.get("page_size", 20)),
            rate_limit_s=float(cdoc.get("rate_limit_s", 0.0)),
        )

    workspace = Path(doc.get("workspace", "campaign_out"))
    if not workspace.is_absolute():
        workspace = path.parent / workspace

    radius_cap = float(doc.get("radius_cap_m", 2000.0))
    if radius_cap_override is not None:
        radius_cap = float(radius_cap_override)

    return CampaignConfig(
        cities=tuple(cities),
        first_saturday=first_saturday,
        weeks=weeks,
        local_time=local_time,
        seed=seed,
        radius_cap_m=radius_cap,
        recency_ttl_s=float(doc.get("recency_ttl_hours", 72.0)) * 3600.0,
        rate_limit_s=float(doc.get("rate_limit_s", 1.0)),
        page_size=int(doc.get("page_size", 25)),
        max_radius_m=float(doc.get("max_radius_m", 4000.0)),
        retries=int(doc.get("retries", 2)),
        workspace=workspace,
        population_specs=pop_specs,
        census=census,
    )
