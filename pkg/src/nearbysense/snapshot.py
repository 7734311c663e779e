"""The canonical post-OCR snapshot text format: renderer and parser.

Format (UTF-8, bit-exact):

    #SNAPSHOT city=<id> exp=<i> utc=<iso8601>
    USER: <handle>
    DIST: within <n>m
    STATUS: <text>
    POST: <text>          (zero or more)
    <blank line>
    ... further user blocks ...

The parser is tolerant of OCR noise: distance digits are repaired from the
documented confusion table (O/o -> 0, l/I -> 1) before numeric parsing, and
malformed blocks are skipped with one warning each rather than failing the
whole snapshot.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidInputError
from .geo import DistanceBand
from .simulator import QueryEntry

HEADER_PREFIX = "#SNAPSHOT"
_HEADER_RE = re.compile(r"^#SNAPSHOT\s+city=(\S+)\s+exp=(\d+)\s+utc=(\S+)\s*$")
_USER_RE = re.compile(r"^USER: ?(.*)$")
_DIST_RE = re.compile(r"^DIST:\s*within\s+([0-9OolI]+)\s*m\s*$")
_STATUS_RE = re.compile(r"^STATUS: ?(.*)$")
_POST_RE = re.compile(r"^POST: ?(.*)$")

# Documented OCR digit-confusion repairs, applied only to DIST digit tokens.
OCR_DIGIT_REPAIRS = str.maketrans({"O": "0", "o": "0", "l": "1", "I": "1"})


@dataclass(frozen=True)
class SnapshotRecord:
    """One parsed user block."""

    handle: str
    band: DistanceBand
    status: str
    posts: tuple[str, ...]
    city_id: str
    experiment: int


@dataclass
class ParseResult:
    records: list[SnapshotRecord]
    warnings: list[str]
    city_id: str | None = None
    experiment: int | None = None
    utc: str | None = None


def render_header(city_id: str, experiment: int, utc_iso: str) -> str:
    for value, name in ((city_id, "city_id"), (utc_iso, "utc")):
        if not value or any(ch.isspace() for ch in str(value)):
            raise InvalidInputError(f"snapshot {name} must be non-empty and space-free")
    return f"{HEADER_PREFIX} city={city_id} exp={experiment} utc={utc_iso}\n"


def render_block(handle: str, band_upper_m: int, status: str, posts: Sequence[str]) -> str:
    for text, name in [(handle, "handle"), (status, "status"), *[(p, "post") for p in posts]]:
        if "\n" in text or "\r" in text:
            raise InvalidInputError(f"{name} text must not contain line breaks")
    if not handle.strip():
        raise InvalidInputError("handle must be non-empty")
    lines = [f"USER: {handle}", f"DIST: within {band_upper_m}m", f"STATUS: {status}"]
    lines.extend(f"POST: {p}" for p in posts)
    return "\n".join(lines) + "\n\n"


def render_snapshot(
    city_id: str, experiment: int, utc_iso: str, entries: Iterable[QueryEntry]
) -> str:
    """Render a full snapshot: header line plus one block per entry."""
    parts = [render_header(city_id, experiment, utc_iso)]
    for e in entries:
        parts.append(
            render_block(e.profile.handle, e.band.upper_m, e.profile.status, e.profile.posts)
        )
    return "".join(parts)


def _parse_block(chunk_lines: list[str]) -> tuple[str, DistanceBand, str, tuple[str, ...]]:
    m = _USER_RE.match(chunk_lines[0])
    if m is None:
        raise ValueError("block does not start with a USER line")
    handle = m.group(1).strip()
    if not handle:
        raise ValueError("empty handle")

    band: DistanceBand | None = None
    status = ""
    posts: list[str] = []
    for line in chunk_lines[1:]:
        dm = _DIST_RE.match(line)
        if dm is not None:
            if band is not None:
                raise ValueError("multiple DIST lines")
            token = dm.group(1).translate(OCR_DIGIT_REPAIRS)
            try:
                band = DistanceBand(int(token))
            except (ValueError, InvalidInputError) as e:
                raise ValueError(f"bad distance token {dm.group(1)!r}: {e}") from e
            continue
        sm = _STATUS_RE.match(line)
        if sm is not None:
            status = sm.group(1)
            continue
        pm = _POST_RE.match(line)
        if pm is not None:
            posts.append(pm.group(1))
            continue
        raise ValueError(f"unrecognized line {line!r}")
    if band is None:
        raise ValueError("missing DIST line")
    return handle, band, status, tuple(posts)


def parse_snapshot_text(
    raw: str, default_city: str = "unknown", default_exp: int = 0
) -> ParseResult:
    """Parse snapshot text into records plus one warning per malformed block."""
    result = ParseResult(records=[], warnings=[])
    lines = raw.split("\n")
    idx = 0
    # Skip leading blank lines, then look for the header.
    while idx < len(lines) and not lines[idx].strip():
        idx += 1
    city_id, experiment = default_city, default_exp
    if idx < len(lines) and lines[idx].startswith(HEADER_PREFIX):
        hm = _HEADER_RE.match(lines[idx])
        if hm is not None:
            city_id = hm.group(1)
            experiment = int(hm.group(2))
            result.utc = hm.group(3)
        else:
            result.warnings.append(f"malformed header line: {lines[idx]!r}")
        idx += 1
    else:
        result.warnings.append("missing #SNAPSHOT header")
    result.city_id = city_id
    result.experiment = experiment

    chunk: list[str] = []
    block_no = 0

    def flush(chunk_lines: list[str]) -> None:
        nonlocal block_no
        if not chunk_lines:
            return
        block_no += 1
        try:
            handle, band, status, posts = _parse_block(chunk_lines)
        except ValueError as e:
            result.warnings.append(f"block {block_no}: {e}")
            return
        result.records.append(
            SnapshotRecord(
                handle=handle,
                band=band,
                status=status,
                posts=posts,
                city_id=city_id,
                experiment=experiment,
            )
        )

    for line in lines[idx:]:
        if line.strip():
            chunk.append(line)
        else:
            flush(chunk)
            chunk = []
    flush(chunk)
    return result


def inject_block_noise(raw: str, fraction: float, seed: int) -> tuple[str, int]:
    """Corrupt a fraction of user blocks beyond repair, for robustness tests.

    Each chosen block has its USER line de-prefixed and its DIST digits
    blanked, so the block can no longer parse (one warning, no record).
    Returns the noised text and the number of blocks corrupted.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidInputError(f"noise fraction must be in [0, 1], got {fraction}")
    lines = raw.split("\n")
    block_starts = [
        i for i, line in enumerate(lines) if _USER_RE.match(line) is not None
    ]
    n_corrupt = int(round(fraction * len(block_starts)))
    if n_corrupt == 0:
        return raw, 0
    rng = random.Random(seed)
    chosen = rng.sample(block_starts, n_corrupt)
    for start in chosen:
        lines[start] = "U5ER " + lines[start][len("USER: "):]
        j = start + 1
        while j < len(lines) and lines[j].strip():
            if _DIST_RE.match(lines[j]):
                lines[j] = "D1ST w#th#n ###m"
            j += 1
    return "\n".join(lines), n_corrupt
