"""Probe-campaign mechanics: timezone-aware scheduling, transports, and
probe execution with paging delays, retries, and graceful failure.
"""

from __future__ import annotations

import time as time_mod
from dataclasses import dataclass, field
from datetime import date, datetime, time, timezone
from pathlib import Path
from typing import Iterator, Mapping, Protocol, Sequence

from .config import CityConfig
from .errors import ConfigError, InvalidInputError, TransportError
from .geo import GeoPoint
from .population import Population
from .simulator import nearby_query, page_results
from .snapshot import parse_snapshot_text, render_block, render_header


@dataclass(frozen=True)
class ScheduledProbe:
    city_id: str
    experiment: int  # 1-based campaign round
    utc: datetime

    def epoch(self) -> float:
        return self.utc.timestamp()


def build_schedule(
    cities: Sequence[CityConfig],
    first_saturday: date,
    weeks: int,
    local_time: time,
) -> list[ScheduledProbe]:
    """One UTC instant per (city, week), at the local wall-clock time.

    Conversion goes through each city's IANA zone, so DST offsets (including
    mid-campaign transitions) are honored automatically.
    """
    if weeks < 1:
        raise InvalidInputError(f"weeks must be >= 1, got {weeks}")
    if first_saturday.weekday() != 5:
        raise InvalidInputError(f"{first_saturday} is not a Saturday")
    schedule = []
    for week in range(weeks):
        day = date.fromordinal(first_saturday.toordinal() + 7 * week)
        for city in cities:
            try:
                zone = city.zone()
            except ConfigError:
                raise
            local = datetime.combine(day, local_time, tzinfo=zone)
            schedule.append(
                ScheduledProbe(
                    city_id=city.city_id,
                    experiment=week + 1,
                    utc=local.astimezone(timezone.utc),
                )
            )
    return schedule


class Transport(Protocol):
    """Delivers a probe's snapshot text as an ordered sequence of pages."""

    def collect_pages(
        self, city: CityConfig, origin: GeoPoint, probe: ScheduledProbe
    ) -> Iterator[str]: ...


class SimulatorTransport:
    """Runs the in-process proximity simulator and renders snapshot pages.

    The first page carries the header line; page concatenation is exactly
    the full rendered snapshot.
    """

    def __init__(
        self,
        populations: Mapping[str, Population],
        recency_ttl_s: float,
        max_radius_m: float,
        page_size: int = 25,
        max_results: int | None = None,
    ) -> None:
        self.populations = populations
        self.recency_ttl_s = recency_ttl_s
        self.max_radius_m = max_radius_m
        self.page_size = page_size
        self.max_results = max_results

    def collect_pages(
        self, city: CityConfig, origin: GeoPoint, probe: ScheduledProbe
    ) -> Iterator[str]:
        pop = self.populations.get(city.city_id)
        if pop is None:
            raise TransportError(f"no population loaded for {city.city_id!r}")
        result = nearby_query(
            pop,
            origin,
            now=probe.epoch(),
            recency_ttl_s=self.recency_ttl_s,
            max_radius_m=self.max_radius_m,
            max_results=self.max_results,
        )
        header = render_header(city.city_id, probe.experiment, probe.utc.isoformat())
        pages = page_results(result, self.page_size) or [()]
        for i, page in enumerate(pages):
            blocks = "".join(
                render_block(e.profile.handle, e.band.upper_m, e.profile.status, e.profile.posts)
                for e in page
            )
            yield (header + blocks) if i == 0 else blocks


class ReplayTransport:
    """Replays previously captured snapshot files, one file per (city, exp)."""

    def __init__(self, paths: Mapping[tuple[str, int], str | Path]) -> None:
        self.paths = dict(paths)

    def collect_pages(
        self, city: CityConfig, origin: GeoPoint, probe: ScheduledProbe
    ) -> Iterator[str]:
        key = (city.city_id, probe.experiment)
        if key not in self.paths:
            raise TransportError(f"no snapshot file for {key}")
        try:
            text = Path(self.paths[key]).read_text(encoding="utf-8")
        except OSError as e:
            raise TransportError(f"cannot read snapshot for {key}: {e}") from e
        yield text


@dataclass
class ProbeSession:
    """Outcome of one probe: raw snapshot text plus collection metadata."""

    city_id: str
    experiment: int
    scheduled_utc: datetime
    origin: GeoPoint
    raw_text: str = ""
    failed: bool = False
    error: str | None = None
    attempts: int = 1
    page_fetch_times: list[float] = field(default_factory=list)
    parsed_records: int = 0
    parse_warnings: int = 0


def run_probe(
    probe: ScheduledProbe,
    city: CityConfig,
    transport: Transport,
    rate_limit_s: float = 1.0,
    retries: int = 2,
    sleep=time_mod.sleep,
) -> ProbeSession:
    """Execute one probe: spoof the origin, page with delays, retry on failure.

    The spoofed origin is always the city hall. A transport that keeps
    failing after ``retries`` extra attempts yields a failed session; the
    caller's campaign continues with other cities.
    """
    if probe.city_id != city.city_id:
        raise InvalidInputError(
            f"probe city {probe.city_id!r} does not match config {city.city_id!r}"
        )
    session = ProbeSession(
        city_id=city.city_id,
        experiment=probe.experiment,
        scheduled_utc=probe.utc,
        origin=city.city_hall,
    )
    last_error: Exception | None = None
    for attempt in range(retries + 1):
        session.attempts = attempt + 1
        session.page_fetch_times = []
        parts: list[str] = []
        try:
            for i, page in enumerate(transport.collect_pages(city, city.city_hall, probe)):
                if i and rate_limit_s > 0:
                    sleep(rate_limit_s)
                session.page_fetch_times.append(time_mod.monotonic())
                parts.append(page)
        except TransportError as e:
            last_error = e
            continue
        session.raw_text = "".join(parts)
        parsed = parse_snapshot_text(session.raw_text)
        session.parsed_records = len(parsed.records)
        session.parse_warnings = len(parsed.warnings)
        return session
    session.failed = True
    session.error = str(last_error) if last_error else "transport failed"
    return session


@dataclass
class CampaignResult:
    sessions: list[ProbeSession]

    @property
    def failed_sessions(self) -> list[ProbeSession]:
        return [s for s in self.sessions if s.failed]

    def session(self, city_id: str, experiment: int) -> ProbeSession:
        for s in self.sessions:
            if s.city_id == city_id and s.experiment == experiment:
                return s
        raise InvalidInputError(f"no session for ({city_id!r}, {experiment})")


def run_campaign(
    cities: Sequence[CityConfig],
    schedule: Sequence[ScheduledProbe],
    transport: Transport,
    rate_limit_s: float = 1.0,
    retries: int = 2,
) -> CampaignResult:
    """Run every scheduled probe; failures are flagged, never fatal."""
    by_id = {c.city_id: c for c in cities}
    sessions = []
    for probe in schedule:
        if probe.city_id not in by_id:
            raise ConfigError(f"schedule references unknown city {probe.city_id!r}")
        sessions.append(
            run_probe(
                probe,
                by_id[probe.city_id],
                transport,
                rate_limit_s=rate_limit_s,
                retries=retries,
            )
        )
    return CampaignResult(sessions=sessions)
