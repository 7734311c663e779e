"""Deduplicated observation store: the source of x_ij, y_ij, x_j, y_j.

Distinct-user identity is the normalized handle (whitespace-trimmed,
case-preserved) within a city. Records beyond the radius cap are dropped at
ingest; duplicate (city, experiment, handle) records are collapsed and
counted, never errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InvalidInputError
from .geo import DistanceBand
from .labeling import LABEL_PRECEDENCE, Label, LabelRecord
from .snapshot import SnapshotRecord


def normalize_handle(handle: str) -> str:
    return handle.strip()


def user_key(city_id: str, handle: str) -> str:
    return f"{city_id}:{normalize_handle(handle)}"


@dataclass
class StoredUser:
    """One distinct user within a city, merged across experiments."""

    city_id: str
    handle: str
    experiments: set[int] = field(default_factory=set)
    texts: list[str] = field(default_factory=list)

    @property
    def key(self) -> str:
        return user_key(self.city_id, self.handle)


@dataclass(frozen=True)
class IngestStats:
    added: int
    duplicates: int
    dropped_over_cap: int


class ObservationStore:
    """Per-(city, experiment) records plus per-city distinct-user registries.

    Single-writer: ingest from one thread; reads are safe once ingestion
    is quiescent.
    """

    def __init__(self) -> None:
        self._records: dict[tuple[str, int], dict[str, SnapshotRecord]] = {}
        self._users: dict[str, dict[str, StoredUser]] = {}
        self._labels: dict[str, LabelRecord] = {}
        self.duplicates = 0
        self.dropped_over_cap = 0

    # -- ingestion ---------------------------------------------------------

    def ingest(
        self, records: Iterable[SnapshotRecord], radius_cap_m: float = 2000.0
    ) -> IngestStats:
        """Add records, dropping bands beyond the cap and collapsing dupes."""
        if not radius_cap_m > 0:
            raise InvalidInputError(f"radius cap must be > 0, got {radius_cap_m}")
        added = duplicates = dropped = 0
        for rec in records:
            if rec.band.upper_m > radius_cap_m:
                dropped += 1
                continue
            handle = normalize_handle(rec.handle)
            if not handle:
                dropped += 1
                continue
            cell = self._records.setdefault((rec.city_id, rec.experiment), {})
            if handle in cell:
                duplicates += 1
                continue
            cell[handle] = rec
            added += 1
            registry = self._users.setdefault(rec.city_id, {})
            user = registry.get(handle)
            if user is None:
                user = StoredUser(city_id=rec.city_id, handle=handle, texts=[handle])
                registry[handle] = user
            user.experiments.add(rec.experiment)
            if rec.status:
                user.texts.append(rec.status)
            user.texts.extend(rec.posts)
        self.duplicates += duplicates
        self.dropped_over_cap += dropped
        return IngestStats(added=added, duplicates=duplicates, dropped_over_cap=dropped)

    # -- structure ---------------------------------------------------------

    def city_ids(self) -> list[str]:
        return sorted(self._users)

    def experiments(self) -> list[int]:
        return sorted({exp for _, exp in self._records})

    def iter_users(self, city_id: str | None = None) -> Iterator[StoredUser]:
        cities = [city_id] if city_id is not None else self.city_ids()
        for cid in cities:
            for handle in sorted(self._users.get(cid, {})):
                yield self._users[cid][handle]

    def user_texts(self, city_id: str, handle: str) -> list[str]:
        user = self._users.get(city_id, {}).get(normalize_handle(handle))
        if user is None:
            raise InvalidInputError(f"unknown user {handle!r} in {city_id!r}")
        return list(user.texts)

    # -- labels ------------------------------------------------------------

    def attach_label(self, record: LabelRecord) -> bool:
        """Attach a label; higher-precedence sources win. Returns True if kept."""
        existing = self._labels.get(record.user_key)
        if existing is not None and (
            LABEL_PRECEDENCE[existing.source] > LABEL_PRECEDENCE[record.source]
        ):
            return False
        self._labels[record.user_key] = record
        return True

    def label_of(self, city_id: str, handle: str) -> Label | None:
        rec = self._labels.get(user_key(city_id, handle))
        return rec.label if rec is not None else None

    def labels(self) -> dict[str, LabelRecord]:
        return dict(self._labels)

    def unlabeled_users(self) -> list[StoredUser]:
        return [u for u in self.iter_users() if u.key not in self._labels]

    # -- counts ------------------------------------------------------------

    def y_j(self, city_id: str) -> int:
        return len(self._users.get(city_id, {}))

    def y_ij(self, city_id: str, experiment: int) -> int:
        return len(self._records.get((city_id, experiment), {}))

    def x_j(self, city_id: str) -> int:
        return sum(
            1
            for u in self._users.get(city_id, {}).values()
            if self._labels.get(u.key) is not None
            and self._labels[u.key].label is Label.TARGET
        )

    def x_ij(self, city_id: str, experiment: int) -> int:
        cell = self._records.get((city_id, experiment), {})
        return sum(
            1
            for handle in cell
            if (rec := self._labels.get(user_key(city_id, handle))) is not None
            and rec.label is Label.TARGET
        )

    def total_distinct_users(self) -> int:
        return sum(len(reg) for reg in self._users.values())

    def total_labeled_target(self) -> int:
        return sum(self.x_j(c) for c in self.city_ids())

    def count_matrices(
        self, city_ids: Sequence[str] | None = None, experiments: Sequence[int] | None = None
    ) -> tuple[np.ndarray, np.ndarray, list[str], list[int]]:
        """x and y count matrices with shape (experiments, cities)."""
        cities = list(city_ids) if city_ids is not None else self.city_ids()
        exps = list(experiments) if experiments is not None else self.experiments()
        x = np.zeros((len(exps), len(cities)), dtype=float)
        y = np.zeros((len(exps), len(cities)), dtype=float)
        for i, exp in enumerate(exps):
            for j, cid in enumerate(cities):
                x[i, j] = self.x_ij(cid, exp)
                y[i, j] = self.y_ij(cid, exp)
        return x, y, cities, exps

    # -- persistence -------------------------------------------------------

    def to_jsonl(self) -> str:
        """One record per line, canonically sorted."""
        lines = []
        for (city_id, exp) in sorted(self._records):
            cell = self._records[(city_id, exp)]
            for handle in sorted(cell):
                rec = cell[handle]
                lines.append(
                    json.dumps(
                        {
                            "city": city_id,
                            "exp": exp,
                            "handle": rec.handle,
                            "band_upper_m": rec.band.upper_m,
                            "status": rec.status,
                            "posts": list(rec.posts),
                        },
                        ensure_ascii=False,
                        sort_keys=True,
                    )
                )
        return "\n".join(lines) + ("\n" if lines else "")

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, text: str, radius_cap_m: float = 2000.0) -> "ObservationStore":
        store = cls()
        records = []
        for n, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                records.append(
                    SnapshotRecord(
                        handle=d["handle"],
                        band=DistanceBand(int(d["band_upper_m"])),
                        status=d.get("status", ""),
                        posts=tuple(d.get("posts", ())),
                        city_id=d["city"],
                        experiment=int(d["exp"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as e:
                raise InvalidInputError(f"bad store line {n}: {e}") from e
        store.ingest(records, radius_cap_m=radius_cap_m)
        return store

    @classmethod
    def load(cls, path: str | Path, radius_cap_m: float = 2000.0) -> "ObservationStore":
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"), radius_cap_m)


def labels_to_jsonl(labels: dict[str, LabelRecord]) -> str:
    lines = [
        json.dumps(
            {
                "user_key": rec.user_key,
                "source": rec.source,
                "label": rec.label.value,
                "ballots": [b.value for b in rec.ballots],
            },
            ensure_ascii=False,
            sort_keys=True,
        )
        for _, rec in sorted(labels.items())
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def labels_from_jsonl(text: str) -> dict[str, LabelRecord]:
    out: dict[str, LabelRecord] = {}
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            rec = LabelRecord(
                user_key=d["user_key"],
                source=d["source"],
                label=Label(d["label"]),
                ballots=tuple(Label(b) for b in d.get("ballots", ())),
            )
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            raise InvalidInputError(f"bad label line {n}: {e}") from e
        out[rec.user_key] = rec
    return out


def apply_auto_labels(store: ObservationStore) -> int:
    """Attach the observed-script label to every store user. Returns count kept."""
    from .labeling import auto_label

    kept = 0
    for user in store.iter_users():
        rec = LabelRecord(user_key=user.key, source="auto", label=auto_label(user.texts))
        if store.attach_label(rec):
            kept += 1
    return kept
