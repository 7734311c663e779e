#!/usr/bin/env python3
"""How the banded distance report works, and how much position it leaks.

A People-Nearby-style service never shows exact distances: it rounds them
up into bands (100 m steps out to 1 km, then 1 km steps). This script walks
through the quantization rules, then turns the tables: given several probe
origins and the bands they observed, it recovers the feasible region for a
user's true position.
"""

from nearbysense import (
    DistanceBand,
    GeoPoint,
    band_interval,
    geodesic_distance,
    localize_from_bands,
    quantize_band,
)
from nearbysense.geo import METERS_PER_DEG_LAT
import math


def offset(origin, north_m, east_m):
    return GeoPoint(
        origin.lat + north_m / METERS_PER_DEG_LAT,
        origin.lon + east_m / (METERS_PER_DEG_LAT * math.cos(math.radians(origin.lat))),
    )


def main():
    print("== Band quantization ==")
    for d in (0, 42, 368, 400, 999.5, 1000, 1001, 1500, 2600):
        band = quantize_band(d)
        lo, hi = band_interval(band)
        print(f"  true distance {d:>7.1f} m -> 'within {band.upper_m} m'"
              f"   (band covers ({lo:.0f}, {hi:.0f}])")
    print()
    print("  A user 368 m away is therefore reported as 'within 400 m'.")
    print()

    print("== Localization from banded observations ==")
    true_position = GeoPoint(43.8815, 11.0980)  # the user we want to localize
    print(f"  ground truth (hidden from the probes): "
          f"({true_position.lat:.5f}, {true_position.lon:.5f})")

    # Three spoofed probes around the block each see one band.
    probes = [offset(true_position, 350, 120), offset(true_position, -280, 390),
              offset(true_position, -60, -430)]
    observations = []
    for i, probe in enumerate(probes, start=1):
        d = geodesic_distance(probe, true_position)
        band = quantize_band(d)
        observations.append((probe, band))
        print(f"  probe {i}: true distance {d:6.1f} m, observes 'within {band.upper_m} m'")

    region = localize_from_bands(observations, resolution_m=10.0)
    err = geodesic_distance(region.centroid, true_position)
    print(f"\n  feasible region: {len(region)} grid samples at "
          f"{region.resolution_m:.0f} m resolution")
    print(f"  centroid estimate: ({region.centroid.lat:.5f}, {region.centroid.lon:.5f})")
    print(f"  centroid error vs ground truth: {err:.1f} m")
    print(f"  true position inside region: {region.contains(true_position)}")
    print()

    print("== Inconsistent observations are detected ==")
    far_probe = offset(true_position, 5000, 0)
    try:
        localize_from_bands([(probes[0], DistanceBand(100)), (far_probe, DistanceBand(100))])
    except Exception as e:
        print(f"  two 100 m disks 5 km apart -> {type(e).__name__}: {e}")


if __name__ == "__main__":
    main()
