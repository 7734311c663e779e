"""Places-style business census: keyword x place-type query matrix, a
paginated mock client, and per-city deduplicated business counts.

Keyword matching is case-insensitive substring over a place's name and
tags; place types match by (case-insensitive) category name, which keeps
matching language-independent. The only bundled client is the in-process
mock over a fixture dataset; a live client is an extension point that just
needs ``search_pages(spec)``.
"""

from __future__ import annotations

import json
import math
import random
import time as time_mod
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Protocol, Sequence

from .errors import ConfigError, InvalidInputError, PlacesClientError
from .geo import GeoPoint, geodesic_distance, METERS_PER_DEG_LAT

DEFAULT_CENSUS_RADIUS_M = 2000.0

# The enumerated defaults; campaigns may extend both lists in config.
DEFAULT_KEYWORDS = ("China", "Chinese", "Hunan", "Sichuan", "Cantonese")
DEFAULT_PLACE_TYPES = (
    "restaurant", "bakery", "cafe", "convenience store",
    "food", "store", "establishment",
)


@dataclass(frozen=True)
class QuerySpec:
    location: GeoPoint
    radius_m: float
    keyword: str
    place_type: str

    def __post_init__(self) -> None:
        if not self.radius_m > 0:
            raise InvalidInputError(f"radius must be > 0, got {self.radius_m}")
        if not self.keyword or not self.place_type:
            raise InvalidInputError("keyword and place_type must be non-empty")


@dataclass(frozen=True)
class PlaceRecord:
    place_id: str
    name: str
    location: GeoPoint
    types: frozenset[str]
    tags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "place_id": self.place_id,
            "name": self.name,
            "lat": self.location.lat,
            "lon": self.location.lon,
            "types": sorted(self.types),
            "tags": list(self.tags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlaceRecord":
        return cls(
            place_id=d["place_id"],
            name=d["name"],
            location=GeoPoint(float(d["lat"]), float(d["lon"])),
            types=frozenset(str(t) for t in d["types"]),
            tags=tuple(d.get("tags", ())),
        )


def load_place_dataset(path: str | Path) -> list[PlaceRecord]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"place dataset not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"place dataset is not valid JSON: {e}") from e
    records = [PlaceRecord.from_dict(d) for d in doc]
    ids = [r.place_id for r in records]
    if len(ids) != len(set(ids)):
        raise InvalidInputError("place_ids must be unique within a dataset")
    return records


def save_place_dataset(records: Sequence[PlaceRecord], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps([r.to_dict() for r in records], ensure_ascii=False,
                   sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )


def _dedupe_keep_order(items: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for item in items:
        key = item.lower()
        if key not in seen:
            seen.add(key)
            out.append(item)
    return out


def build_query_matrix(
    origin: GeoPoint,
    keywords: Sequence[str],
    place_types: Sequence[str],
    radius_m: float = DEFAULT_CENSUS_RADIUS_M,
) -> list[QuerySpec]:
    """Cartesian product of (keyword, type), all sharing origin and radius.

    Inputs are deduplicated (case-insensitively, first spelling wins)
    before the product.
    """
    if not keywords or not place_types:
        raise ConfigError("keyword and place-type lists must be non-empty")
    return [
        QuerySpec(location=origin, radius_m=radius_m, keyword=kw, place_type=pt)
        for kw in _dedupe_keep_order(keywords)
        for pt in _dedupe_keep_order(place_types)
    ]


class PlacesClient(Protocol):
    def search_pages(self, spec: QuerySpec) -> Iterator[list[PlaceRecord]]: ...


def place_matches(place: PlaceRecord, spec: QuerySpec) -> bool:
    kw = spec.keyword.lower()
    if kw not in place.name.lower() and not any(kw in t.lower() for t in place.tags):
        return False
    if spec.place_type.lower() not in {t.lower() for t in place.types}:
        return False
    return geodesic_distance(spec.location, place.location) <= spec.radius_m


class MockPlacesClient:
    """Test double for the external service: searches a fixture dataset.

    Pages are sorted by place_id for determinism. A small delay can be
    configured between pages to model production rate limits. Searches
    never mutate the dataset, so one client is safe to share across
    concurrent per-city censuses.
    """

    def __init__(
        self,
        dataset: Sequence[PlaceRecord],
        page_size: int = 20,
        rate_limit_s: float = 0.0,
        sleep=time_mod.sleep,
    ) -> None:
        if page_size < 1:
            raise InvalidInputError(f"page size must be >= 1, got {page_size}")
        self.dataset = list(dataset)
        self.page_size = page_size
        self.rate_limit_s = rate_limit_s
        self._sleep = sleep

    def search_pages(self, spec: QuerySpec) -> Iterator[list[PlaceRecord]]:
        matches = sorted(
            (p for p in self.dataset if place_matches(p, spec)),
            key=lambda p: p.place_id,
        )
        for i in range(0, len(matches), self.page_size):
            if i and self.rate_limit_s > 0:
                self._sleep(self.rate_limit_s)
            yield matches[i : i + self.page_size]


@dataclass(frozen=True)
class CensusResult:
    """Deduplicated business census for one city."""

    city_id: str
    place_ids: tuple[str, ...]  # sorted, deduplicated
    per_query_hits: tuple[int, ...]  # aligned with the executed specs
    partial_queries: tuple[int, ...] = ()  # indexes of specs marked partial
    comprehensive: bool = True

    @property
    def b(self) -> int:
        return len(self.place_ids)


def execute_census(
    client: PlacesClient,
    specs: Sequence[QuerySpec],
    city_id: str = "",
    retries: int = 2,
) -> CensusResult:
    """Union of all pages of all specs, deduplicated by place_id.

    A spec whose pages keep failing after ``retries`` extra attempts is
    marked partial (keeping any pages already fetched) and the result is
    flagged non-comprehensive.
    """
    if not specs:
        raise ConfigError("census needs at least one query spec")
    ids: set[str] = set()
    hits: list[int] = []
    partial: list[int] = []
    for idx, spec in enumerate(specs):
        fetched: list[PlaceRecord] = []
        ok = False
        for _ in range(retries + 1):
            fetched = []
            try:
                for page in client.search_pages(spec):
                    fetched.extend(page)
                ok = True
                break
            except PlacesClientError:
                continue
        if not ok:
            partial.append(idx)
        hits.append(len(fetched))
        ids.update(p.place_id for p in fetched)
    return CensusResult(
        city_id=city_id,
        place_ids=tuple(sorted(ids)),
        per_query_hits=tuple(hits),
        partial_queries=tuple(partial),
        comprehensive=not partial,
    )


def write_census_csv(results: Sequence[CensusResult], path: str | Path) -> None:
    lines = ["city_id,b_j"]
    lines.extend(f"{r.city_id},{r.b}" for r in results)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_census_json(results: Sequence[CensusResult], path: str | Path) -> None:
    doc = [
        {
            "city_id": r.city_id,
            "b_j": r.b,
            "place_ids": list(r.place_ids),
            "per_query_hits": list(r.per_query_hits),
            "partial_queries": list(r.partial_queries),
            "comprehensive": r.comprehensive,
        }
        for r in results
    ]
    Path(path).write_text(
        json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )


def load_census_json(path: str | Path) -> list[CensusResult]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        CensusResult(
            city_id=d["city_id"],
            place_ids=tuple(d["place_ids"]),
            per_query_hits=tuple(d["per_query_hits"]),
            partial_queries=tuple(d.get("partial_queries", ())),
            comprehensive=bool(d.get("comprehensive", True)),
        )
        for d in doc
    ]


_SYNTH_NAMES_MATCHING = (
    "Golden {kw} Restaurant", "{kw} Garden", "New {kw} Market",
    "{kw} House", "Little {kw} Cafe",
)
_SYNTH_NAMES_OTHER = (
    "Corner Bakery", "Central Books", "Riverside Cafe", "Old Town Bar",
    "Market Hall", "City Flowers",
)


def synthesize_city_places(
    city_id: str,
    center: GeoPoint,
    seed: int,
    matching_count: int = 12,
    other_count: int = 20,
    keywords: Sequence[str] = DEFAULT_KEYWORDS,
    place_types: Sequence[str] = DEFAULT_PLACE_TYPES,
    spread_m: float = 2600.0,
) -> list[PlaceRecord]:
    """Deterministic demo dataset: some keyword-matching places, some not,
    scattered around a city center (a few beyond the census radius)."""
    rng = random.Random(seed)
    records = []
    for n in range(matching_count + other_count):
        is_match = n < matching_count
        dist = rng.uniform(50.0, spread_m)
        bearing = rng.uniform(0.0, 2.0 * math.pi)
        lat = center.lat + (dist * math.cos(bearing)) / METERS_PER_DEG_LAT
        lon = center.lon + (dist * math.sin(bearing)) / (
            METERS_PER_DEG_LAT * math.cos(math.radians(center.lat))
        )
        if is_match:
            kw = rng.choice(list(keywords))
            name = rng.choice(_SYNTH_NAMES_MATCHING).format(kw=kw)
            tags = (kw.lower(),)
        else:
            name = rng.choice(_SYNTH_NAMES_OTHER)
            tags = ()
        types = frozenset({rng.choice(list(place_types)), "establishment"})
        records.append(
            PlaceRecord(
                place_id=f"{city_id}-p{n:03d}",
                name=name,
                location=GeoPoint(lat, lon),
                types=types,
                tags=tags,
            )
        )
    return records
