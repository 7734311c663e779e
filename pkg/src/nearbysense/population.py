"""Deterministic synthetic city populations for the proximity simulator.

Users are scattered around the city hall by an isotropic Gaussian in meters
(rejection-sampled inside a hard scatter bound) and carry handles, statuses,
and posts sampled from per-language token pools. The same (city, spec, seed)
always regenerates the identical population.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Mapping

from .errors import ConfigError, InvalidInputError
from .geo import GeoPoint, METERS_PER_DEG_LAT

if TYPE_CHECKING:  # pragma: no cover
    from .config import CityConfig

POPULATION_FORMAT = "nearbysense-population-v1"

LANGUAGE_CATEGORIES = ("target_script", "romanized", "local", "english")

DEFAULT_TOKEN_POOLS: dict[str, tuple[str, ...]] = {
    "target_script": (
        "你好", "今天天气不错", "想家了", "周末去哪里玩", "新店开业大吉",
        "晚上一起吃饭吧", "最近好忙", "加油", "在这边工作两年了", "有人一起打球吗",
    ),
    "romanized": (
        "ni hao", "zai zhe li", "xiang jia le", "zhou mo yu kuai",
        "chi fan le ma", "jia you",
    ),
    "local": ("ciao a tutti", "buongiorno", "grazie mille", "andiamo", "va bene"),
    "english": (
        "hello everyone", "having a great day", "see you soon",
        "new in town", "looking for friends here",
    ),
}

DEFAULT_TARGET_PROFILE: dict[str, float] = {
    "target_script": 0.72, "romanized": 0.10, "local": 0.06, "english": 0.12,
}
DEFAULT_OTHER_PROFILE: dict[str, float] = {
    "target_script": 0.0, "romanized": 0.0, "local": 0.62, "english": 0.38,
}

_PINYIN_HANDLE_STEMS = (
    "mei", "li", "zhang", "wang", "chen", "xiao", "hua", "ming", "lan", "yun",
    "feng", "jing", "hao", "lei", "yan",
)
_LATIN_HANDLE_STEMS = (
    "alex", "sam", "jo", "marco", "lena", "nico", "ana", "tom", "mia", "leo",
    "sara", "ben", "eva", "max", "nina",
)


def _normalized_profile(profile: Mapping[str, float]) -> dict[str, float]:
    weights = {cat: float(profile.get(cat, 0.0)) for cat in LANGUAGE_CATEGORIES}
    if any(w < 0 for w in weights.values()):
        raise ConfigError(f"language profile weights must be nonnegative: {profile}")
    total = sum(weights.values())
    if total <= 0:
        raise ConfigError(f"language profile needs positive total weight: {profile}")
    return {cat: w / total for cat, w in weights.items()}


@dataclass(frozen=True)
class PopulationSpec:
    """Knobs for one city's synthetic population.

    ``reference_time`` (epoch seconds) anchors the activity window: each
    user's last_active is uniform in [reference_time - activity_window_s,
    reference_time].
    """

    target_count: int
    other_count: int
    sigma_m: float = 400.0
    scatter_bound_m: float | None = None  # defaults to 4 * sigma_m
    reference_time: float = 0.0
    activity_window_s: float = 48 * 3600.0
    posts_min: int = 1
    posts_max: int = 3
    status_blank_rate: float = 0.25
    target_profile: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_TARGET_PROFILE)
    )
    other_profile: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_OTHER_PROFILE)
    )
    token_pools: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: {k: tuple(v) for k, v in DEFAULT_TOKEN_POOLS.items()}
    )

    def __post_init__(self) -> None:
        if self.target_count < 0 or self.other_count < 0:
            raise ConfigError(
                f"user counts must be >= 0, got ({self.target_count}, {self.other_count})"
            )
        if not self.sigma_m > 0:
            raise ConfigError(f"scatter sigma must be > 0, got {self.sigma_m}")
        if self.scatter_bound_m is not None and not self.scatter_bound_m > 0:
            raise ConfigError(f"scatter bound must be > 0, got {self.scatter_bound_m}")
        if not 0 <= self.posts_min <= self.posts_max:
            raise ConfigError(
                f"need 0 <= posts_min <= posts_max, got {self.posts_min}/{self.posts_max}"
            )
        if not self.activity_window_s > 0:
            raise ConfigError("activity window must be > 0")
        for cat in LANGUAGE_CATEGORIES:
            if cat not in self.token_pools or not self.token_pools[cat]:
                raise ConfigError(f"token pool for {cat!r} must be non-empty")
        _normalized_profile(self.target_profile)
        _normalized_profile(self.other_profile)

    @property
    def bound_m(self) -> float:
        return self.scatter_bound_m if self.scatter_bound_m is not None else 4.0 * self.sigma_m

    def to_dict(self) -> dict:
        return {
            "target_count": self.target_count,
            "other_count": self.other_count,
            "sigma_m": self.sigma_m,
            "scatter_bound_m": self.scatter_bound_m,
            "reference_time": self.reference_time,
            "activity_window_s": self.activity_window_s,
            "posts_min": self.posts_min,
            "posts_max": self.posts_max,
            "status_blank_rate": self.status_blank_rate,
            "target_profile": dict(self.target_profile),
            "other_profile": dict(self.other_profile),
            "token_pools": {k: list(v) for k, v in self.token_pools.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PopulationSpec":
        pools = d.get("token_pools")
        kwargs = dict(d)
        if pools is not None:
            kwargs["token_pools"] = {k: tuple(v) for k, v in pools.items()}
        return cls(**kwargs)


@dataclass(frozen=True)
class SyntheticUser:
    user_id: str
    handle: str
    position: GeoPoint
    is_ethnic_target: bool
    language_profile: Mapping[str, float]
    last_active: float
    status: str
    posts: tuple[str, ...]

    def texts(self) -> list[str]:
        """All user-visible text: handle, status, posts."""
        out = [self.handle]
        if self.status:
            out.append(self.status)
        out.extend(self.posts)
        return out


@dataclass(frozen=True)
class Population:
    city_id: str
    seed: int
    spec: PopulationSpec
    users: tuple[SyntheticUser, ...]

    def __len__(self) -> int:
        return len(self.users)


def _scatter(rng: random.Random, center: GeoPoint, sigma_m: float, bound_m: float) -> GeoPoint:
    while True:
        dn = rng.gauss(0.0, sigma_m)
        de = rng.gauss(0.0, sigma_m)
        if math.hypot(dn, de) <= bound_m:
            break
    lat = center.lat + dn / METERS_PER_DEG_LAT
    lon = center.lon + de / (METERS_PER_DEG_LAT * math.cos(math.radians(center.lat)))
    return GeoPoint(lat, lon)


def _sample_text(rng: random.Random, profile: Mapping[str, float],
                 pools: Mapping[str, tuple[str, ...]]) -> str:
    cats = [c for c in LANGUAGE_CATEGORIES if profile.get(c, 0.0) > 0]
    weights = [profile[c] for c in cats]
    cat = rng.choices(cats, weights=weights, k=1)[0]
    return rng.choice(pools[cat])


def generate_population(city: "CityConfig", spec: PopulationSpec, seed: int) -> Population:
    """Generate the city's synthetic users, deterministically under ``seed``."""
    rng = random.Random(seed)
    bound = spec.bound_m
    users: list[SyntheticUser] = []
    seen_handles: set[str] = set()
    serial = 0

    groups = (
        (spec.target_count, True, _normalized_profile(spec.target_profile), _PINYIN_HANDLE_STEMS),
        (spec.other_count, False, _normalized_profile(spec.other_profile), _LATIN_HANDLE_STEMS),
    )
    for count, is_target, profile, stems in groups:
        for _ in range(count):
            serial += 1
            handle = f"{rng.choice(stems)}{rng.randrange(100):02d}"
            if handle in seen_handles:
                handle = f"{handle}_{serial}"
            seen_handles.add(handle)
            n_posts = rng.randint(spec.posts_min, spec.posts_max)
            posts = tuple(
                _sample_text(rng, profile, spec.token_pools) for _ in range(n_posts)
            )
            status = ""
            if rng.random() >= spec.status_blank_rate:
                status = _sample_text(rng, profile, spec.token_pools)
            users.append(
                SyntheticUser(
                    user_id=f"{city.city_id}-{serial:05d}",
                    handle=handle,
                    position=_scatter(rng, city.city_hall, spec.sigma_m, bound),
                    is_ethnic_target=is_target,
                    language_profile=profile,
                    last_active=spec.reference_time - rng.uniform(0.0, spec.activity_window_s),
                    status=status,
                    posts=posts,
                )
            )
    return Population(city_id=city.city_id, seed=seed, spec=spec, users=tuple(users))


def population_to_json(pop: Population) -> str:
    """Serialize with the seed and spec in the header; stable byte-for-byte."""
    doc = {
        "format": POPULATION_FORMAT,
        "city_id": pop.city_id,
        "seed": pop.seed,
        "spec": pop.spec.to_dict(),
        "users": [
            {
                "user_id": u.user_id,
                "handle": u.handle,
                "lat": u.position.lat,
                "lon": u.position.lon,
                "is_ethnic_target": u.is_ethnic_target,
                "language_profile": dict(u.language_profile),
                "last_active": u.last_active,
                "status": u.status,
                "posts": list(u.posts),
            }
            for u in pop.users
        ],
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=1) + "\n"


def population_from_json(text: str) -> Population:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"population file is not valid JSON: {e}") from e
    if doc.get("format") != POPULATION_FORMAT:
        raise InvalidInputError(
            f"unexpected population format {doc.get('format')!r}"
        )
    spec = PopulationSpec.from_dict(doc["spec"])
    users = []
    ids = set()
    for u in doc["users"]:
        if u["user_id"] in ids:
            raise InvalidInputError(f"duplicate user_id {u['user_id']!r}")
        ids.add(u["user_id"])
        users.append(
            SyntheticUser(
                user_id=u["user_id"],
                handle=u["handle"],
                position=GeoPoint(u["lat"], u["lon"]),
                is_ethnic_target=bool(u["is_ethnic_target"]),
                language_profile=dict(u["language_profile"]),
                last_active=float(u["last_active"]),
                status=u.get("status", ""),
                posts=tuple(u.get("posts", ())),
            )
        )
    return Population(
        city_id=doc["city_id"], seed=int(doc["seed"]), spec=spec, users=tuple(users)
    )


def save_population(pop: Population, path: str | Path) -> None:
    Path(path).write_text(population_to_json(pop), encoding="utf-8")


def load_population(path: str | Path) -> Population:
    return population_from_json(Path(path).read_text(encoding="utf-8"))
