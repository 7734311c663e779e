"""Shared independent oracles and small builders for the test suite.

The oracles here are deliberately written from scratch (plain math, plain
loops) so they never share code paths with the package implementation.
"""

from __future__ import annotations

import math

import pytest

from nearbysense.config import CityConfig
from nearbysense.geo import GeoPoint
from nearbysense.labeling import resolve_language

EARTH_R = 6371000.0
M_PER_DEG_LAT = EARTH_R * math.pi / 180.0


def oracle_haversine(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Independent haversine (asin form, unlike the package's atan2 form)."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_R * math.asin(min(1.0, math.sqrt(a)))


def oracle_quantize(d: float) -> int:
    """Independent piecewise banding rule."""
    if d < 0:
        raise ValueError(d)
    if d == 0:
        return 100
    if d <= 1000:
        n = int(d // 100)
        if n * 100 == d:
            return max(100, n * 100)
        return (n + 1) * 100
    n = int(d // 1000)
    if n * 1000 == d:
        return n * 1000
    return (n + 1) * 1000


def point_at(origin: GeoPoint, north_m: float, east_m: float) -> GeoPoint:
    """Offset a point by local meters (small-displacement approximation)."""
    lat = origin.lat + north_m / M_PER_DEG_LAT
    lon = origin.lon + east_m / (M_PER_DEG_LAT * math.cos(math.radians(origin.lat)))
    return GeoPoint(lat, lon)


def make_city(
    city_id: str = "testville",
    lat: float = 40.0,
    lon: float = -75.0,
    timezone: str = "UTC",
    population: int = 100000,
    language: str = "english",
    name: str | None = None,
) -> CityConfig:
    return CityConfig(
        city_id=city_id,
        name=name if name is not None else city_id.title(),
        city_hall=GeoPoint(lat, lon),
        timezone=timezone,
        population=population,
        local_language=resolve_language(language),
    )


@pytest.fixture
def city():
    return make_city()
