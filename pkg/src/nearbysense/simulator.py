"""In-process stand-in for a People-Nearby-style backend.

A query returns recently-active users within the radius, nearest first,
with distances quantized to bands. Exact positions and distances are never
exposed on the result type.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geo import DistanceBand, GeoPoint, haversine_m, quantize_band
from .population import Population


@dataclass(frozen=True)
class PublicProfile:
    handle: str
    status: str
    posts: tuple[str, ...]


@dataclass(frozen=True)
class QueryEntry:
    profile: PublicProfile
    band: DistanceBand


@dataclass(frozen=True)
class QueryResult:
    entries: tuple[QueryEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        """Serialized form; deliberately carries no coordinates or distances."""
        return json.dumps(
            [
                {
                    "handle": e.profile.handle,
                    "status": e.profile.status,
                    "posts": list(e.profile.posts),
                    "band_upper_m": e.band.upper_m,
                }
                for e in self.entries
            ],
            ensure_ascii=False,
        )


def nearby_query(
    pop: Population,
    origin: GeoPoint,
    now: float,
    recency_ttl_s: float,
    max_radius_m: float,
    max_results: int | None = None,
) -> QueryResult:
    """Users active in [now - ttl, now] within the radius, banded and ordered.

    Ordering is (true distance ascending, user_id ascending); the tiebreak
    keeps results deterministic. ``max_results``, when set, truncates after
    sorting (the real service's cap is unknown; off by default).
    """
    if not recency_ttl_s > 0:
        raise InvalidInputError(f"recency ttl must be > 0, got {recency_ttl_s}")
    if not max_radius_m >= 100:
        raise InvalidInputError(f"max radius must be >= 100 m, got {max_radius_m}")
    if max_results is not None and max_results < 0:
        raise InvalidInputError(f"max_results must be >= 0, got {max_results}")

    if not pop.users:
        return QueryResult(entries=())

    lats = np.fromiter((u.position.lat for u in pop.users), dtype=float, count=len(pop.users))
    lons = np.fromiter((u.position.lon for u in pop.users), dtype=float, count=len(pop.users))
    active = np.fromiter((u.last_active for u in pop.users), dtype=float, count=len(pop.users))

    dists = haversine_m(lats, lons, origin.lat, origin.lon)
    visible = (active >= now - recency_ttl_s) & (active <= now) & (dists <= max_radius_m)

    picked = sorted(
        ((float(dists[i]), pop.users[i]) for i in np.flatnonzero(visible)),
        key=lambda pair: (pair[0], pair[1].user_id),
    )
    if max_results is not None:
        picked = picked[:max_results]
    entries = tuple(
        QueryEntry(
            profile=PublicProfile(handle=u.handle, status=u.status, posts=u.posts),
            band=quantize_band(d),
        )
        for d, u in picked
    )
    return QueryResult(entries=entries)


def page_results(result: QueryResult, page_size: int) -> list[tuple[QueryEntry, ...]]:
    """Split an ordered result into pages; concatenation equals the input."""
    if not isinstance(page_size, int) or page_size < 1:
        raise InvalidInputError(f"page size must be an int >= 1, got {page_size!r}")
    return [
        result.entries[i : i + page_size]
        for i in range(0, len(result.entries), page_size)
    ]
