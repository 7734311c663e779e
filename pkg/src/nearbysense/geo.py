"""Geodesic distance, distance-band quantization, and band-based localization.

Distances are great-circle meters on a sphere of radius 6,371,000 m.
Proximity is reported in bands: 100 m granularity up to 1,000 m, 1,000 m
granularity beyond. Band upper bounds are inclusive, so "within 400m"
covers true distances in (300, 400]; the first band covers [0, 100].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InconsistentObservationsError, InvalidInputError

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0

# Refuse localization grids past this many candidate cells; callers should
# coarsen the resolution instead of waiting on a runaway sweep.
_MAX_GRID_CELLS = 40_000_000


def _check_coord(name: str, value: float, bound: float) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidInputError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value!r}")
    if not -bound <= value <= bound:
        raise InvalidInputError(f"{name} {value!r} outside [-{bound}, {bound}]")
    return value


@dataclass(frozen=True)
class GeoPoint:
    """Latitude/longitude in degrees; longitude normalized to (-180, 180]."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        lat = _check_coord("lat", self.lat, 90.0)
        lon = _check_coord("lon", self.lon, 180.0)
        if lon == -180.0:
            lon = 180.0
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", lon)


@dataclass(frozen=True)
class DistanceBand:
    """Quantized proximity: "within ``upper_m`` meters"."""

    upper_m: int

    def __post_init__(self) -> None:
        u = self.upper_m
        if isinstance(u, bool) or not isinstance(u, int):
            raise InvalidInputError(f"band upper bound must be an int, got {u!r}")
        if u <= 0:
            raise InvalidInputError(f"band upper bound must be positive, got {u}")
        if u <= 1000:
            if u % 100:
                raise InvalidInputError(
                    f"bands at or below 1000 m are multiples of 100 m, got {u}"
                )
        elif u % 1000:
            raise InvalidInputError(
                f"bands above 1000 m are multiples of 1000 m, got {u}"
            )

    @property
    def lower_m(self) -> float:
        """Exclusive lower edge of the band (0.0, inclusive, for band 100)."""
        if self.upper_m == 100:
            return 0.0
        return float(self.upper_m - (100 if self.upper_m <= 1000 else 1000))

    def contains(self, d: float) -> bool:
        """Whether a true distance quantizes into this band."""
        if self.upper_m == 100:
            return 0.0 <= d <= 100.0
        return self.lower_m < d <= self.upper_m


def geodesic_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine great-circle distance between two points, in meters."""
    p1 = math.radians(a.lat)
    p2 = math.radians(b.lat)
    dp = math.radians(b.lat - a.lat)
    dl = math.radians(b.lon - a.lon)
    h = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def haversine_m(
    lat1: np.ndarray | float,
    lon1: np.ndarray | float,
    lat2: np.ndarray | float,
    lon2: np.ndarray | float,
) -> np.ndarray:
    """Vectorized haversine (degrees in, meters out) with numpy broadcasting."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(lon2) - np.radians(lon1)
    h = np.sin(dp / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arctan2(np.sqrt(h), np.sqrt(1.0 - h))


def quantize_band(d: float) -> DistanceBand:
    """Smallest valid band whose (inclusive) upper bound covers distance ``d``."""
    if isinstance(d, bool) or not isinstance(d, (int, float)):
        raise InvalidInputError(f"distance must be a number, got {d!r}")
    d = float(d)
    if not math.isfinite(d) or d < 0.0:
        raise InvalidInputError(f"distance must be finite and >= 0, got {d}")
    if d <= 1000.0:
        upper = max(100, int(math.ceil(d / 100.0)) * 100)
    else:
        upper = int(math.ceil(d / 1000.0)) * 1000
    return DistanceBand(upper)


def band_interval(band: DistanceBand | int) -> tuple[float, float]:
    """(lower, upper) in meters for a band; lower is exclusive except at 0."""
    if not isinstance(band, DistanceBand):
        band = DistanceBand(band)
    return (band.lower_m, float(band.upper_m))


@dataclass(frozen=True)
class FeasibleRegion:
    """Grid sample of the positions consistent with banded observations.

    ``samples`` is an (n, 2) array of [lat, lon] rows, each satisfying every
    observation's annulus. ``contains`` checks membership in the continuous
    feasible set the samples approximate.
    """

    samples: np.ndarray
    centroid: GeoPoint
    resolution_m: float
    observations: tuple[tuple[GeoPoint, DistanceBand], ...]

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    def points(self) -> list[GeoPoint]:
        return [GeoPoint(float(lat), float(lon)) for lat, lon in self.samples]

    def contains(self, p: GeoPoint) -> bool:
        return all(
            band.contains(geodesic_distance(origin, p))
            for origin, band in self.observations
        )


def _coerce_observations(
    observations: Iterable[tuple[GeoPoint, DistanceBand | int]],
) -> list[tuple[GeoPoint, DistanceBand]]:
    out = []
    for origin, band in observations:
        if not isinstance(origin, GeoPoint):
            raise InvalidInputError(f"observation origin must be a GeoPoint, got {origin!r}")
        if not isinstance(band, DistanceBand):
            band = DistanceBand(band)
        out.append((origin, band))
    if not out:
        raise InvalidInputError("at least one (origin, band) observation is required")
    return out


def _grid_sweep(
    obs: list[tuple[GeoPoint, DistanceBand]], resolution_m: float
) -> np.ndarray | None:
    """One pass: grid the union bounding box, return survivors or None."""
    lat_margin = resolution_m / METERS_PER_DEG_LAT
    lat_min = min(o.lat - b.upper_m / METERS_PER_DEG_LAT for o, b in obs) - lat_margin
    lat_max = max(o.lat + b.upper_m / METERS_PER_DEG_LAT for o, b in obs) + lat_margin

    def lon_halfwidth(o: GeoPoint, b: DistanceBand) -> float:
        cos_lat = max(math.cos(math.radians(o.lat)), 1e-6)
        return b.upper_m / (METERS_PER_DEG_LAT * cos_lat)

    lon_min = min(o.lon - lon_halfwidth(o, b) for o, b in obs) - lat_margin
    lon_max = max(o.lon + lon_halfwidth(o, b) for o, b in obs) + lat_margin

    lat_step = resolution_m / METERS_PER_DEG_LAT
    mid_lat = 0.5 * (lat_min + lat_max)
    lon_step = resolution_m / (METERS_PER_DEG_LAT * max(math.cos(math.radians(mid_lat)), 1e-6))

    lats = np.arange(lat_min, lat_max + lat_step, lat_step)
    lons = np.arange(lon_min, lon_max + lon_step, lon_step)
    if lats.size * lons.size > _MAX_GRID_CELLS:
        raise InvalidInputError(
            f"grid of {lats.size * lons.size} cells exceeds limit; "
            f"use a coarser resolution than {resolution_m} m"
        )

    kept_rows = []
    # Sweep in row chunks to bound peak memory on large boxes.
    chunk = max(1, int(2_000_000 // max(lons.size, 1)))
    for start in range(0, lats.size, chunk):
        lat_block = lats[start : start + chunk]
        grid_lat, grid_lon = np.meshgrid(lat_block, lons, indexing="ij")
        mask = np.ones(grid_lat.shape, dtype=bool)
        for origin, band in obs:
            d = haversine_m(grid_lat, grid_lon, origin.lat, origin.lon)
            mask &= d <= band.upper_m
            lower = band.lower_m
            if lower > 0.0:
                mask &= d > lower
            if not mask.any():
                break
        if mask.any():
            kept_rows.append(
                np.column_stack([grid_lat[mask].ravel(), grid_lon[mask].ravel()])
            )
    if not kept_rows:
        return None
    return np.vstack(kept_rows)


def localize_from_bands(
    observations: Sequence[tuple[GeoPoint, DistanceBand | int]],
    resolution_m: float = 10.0,
) -> FeasibleRegion:
    """Sample the region consistent with every (origin, band) observation.

    Grid-samples the bounding box of the union of the observations' outer
    disks at ``resolution_m`` spacing and keeps the points that fall inside
    every band's annulus. The centroid is the arithmetic mean of the
    surviving sample coordinates.

    The intersection of several annuli can be a sliver thinner than the
    grid spacing, so an empty sweep is retried at successively halved
    resolutions (down to resolution/16) before the observations are
    declared inconsistent.

    Raises InconsistentObservationsError when the constraints admit no
    position (disjoint outer disks, or an empty annulus intersection).
    """
    obs = _coerce_observations(observations)
    if not isinstance(resolution_m, (int, float)) or not resolution_m > 0:
        raise InvalidInputError(f"resolution must be > 0, got {resolution_m!r}")
    resolution_m = float(resolution_m)

    # Disjoint outer disks can never intersect; fail fast before gridding
    # (also keeps far-apart inconsistent inputs from forcing a huge sweep).
    for i in range(len(obs)):
        for k in range(i + 1, len(obs)):
            oi, bi = obs[i]
            ok, bk = obs[k]
            if geodesic_distance(oi, ok) > bi.upper_m + bk.upper_m:
                raise InconsistentObservationsError(
                    f"outer disks of observations {i} and {k} do not overlap"
                )

    step = resolution_m
    samples = None
    for _ in range(5):  # resolution, /2, /4, /8, /16
        samples = _grid_sweep(obs, step)
        if samples is not None:
            break
        step /= 2.0
    if samples is None:
        raise InconsistentObservationsError(
            "no grid point satisfies every observation"
        )
    centroid = GeoPoint(float(samples[:, 0].mean()), float(samples[:, 1].mean()))
    return FeasibleRegion(
        samples=samples,
        centroid=centroid,
        resolution_m=step,
        observations=tuple(obs),
    )
