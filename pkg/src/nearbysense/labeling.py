"""Ethnicity labeling and language-use classification.

The automated labeler follows the observed-script rule: a user is labeled
target-ethnic iff any of their texts (handle, status, posts) contains at
least one unified CJK ideograph. Romanized-target (pinyin) evidence and
local/English word hits are reported separately; pinyin informs annotation
but never the automated label.

Latin-script locales are detected via bundled high-frequency word lists
(including greetings, so a lone "bonjour" counts as local usage);
non-Latin locales are detected by script ranges.
"""

from __future__ import annotations

import csv
import enum
import io
import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import InvalidInputError

# Unified CJK ideograph ranges (BMP + extension A + SIP extensions).
# Compatibility ideographs are deliberately excluded.
CJK_RANGES: tuple[tuple[int, int], ...] = (
    (0x4E00, 0x9FFF),
    (0x3400, 0x4DBF),
    (0x20000, 0x2A6DF),
    (0x2A700, 0x2EBEF),
)

ARABIC_RANGES = ((0x0600, 0x06FF), (0x0750, 0x077F), (0x08A0, 0x08FF))
CYRILLIC_RANGES = ((0x0400, 0x04FF), (0x0500, 0x052F))
TAMIL_RANGES = ((0x0B80, 0x0BFF),)
KHMER_RANGES = ((0x1780, 0x17FF),)
THAI_RANGES = ((0x0E00, 0x0E7F),)
DEVANAGARI_RANGES = ((0x0900, 0x097F),)
HANGUL_RANGES = ((0xAC00, 0xD7AF), (0x1100, 0x11FF))

_LATIN_TOKEN_RE = re.compile(r"[A-Za-zÀ-ɏ']+")


def _in_ranges(cp: int, ranges: tuple[tuple[int, int], ...]) -> bool:
    return any(lo <= cp <= hi for lo, hi in ranges)


def is_target_script_char(ch: str) -> bool:
    return _in_ranges(ord(ch), CJK_RANGES)


def _is_latin_letter(ch: str) -> bool:
    cp = ord(ch)
    return (0x41 <= cp <= 0x5A) or (0x61 <= cp <= 0x7A) or (0xC0 <= cp <= 0x24F)


@lru_cache(maxsize=None)
def _load_words(filename: str) -> frozenset[str]:
    text = resources.files("nearbysense.data").joinpath(filename).read_text("utf-8")
    words: set[str] = set()
    for line in text.splitlines():
        for word in line.strip().lower().split():
            if word:
                words.add(word)
    return frozenset(words)


@lru_cache(maxsize=None)
def pinyin_syllables() -> frozenset[str]:
    """The bundled toneless Mandarin syllable table."""
    return _load_words("pinyin_syllables.txt")


@dataclass(frozen=True)
class LanguageSpec:
    """How to detect one local language.

    ``kind`` is "latin-words" (hit when a token is in ``words``) or
    "script" (hit when a codepoint falls in ``script_ranges``).
    ``sample_phrases`` are guaranteed to trigger the detector and double
    as default post pools for the simulator.
    """

    code: str
    name: str
    kind: str
    words: frozenset[str] = frozenset()
    script_ranges: tuple[tuple[int, int], ...] = ()
    sample_phrases: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("latin-words", "script"):
            raise InvalidInputError(f"unknown language kind {self.kind!r}")
        if self.kind == "latin-words" and not self.words:
            raise InvalidInputError(f"language {self.code!r} needs a word list")
        if self.kind == "script" and not self.script_ranges:
            raise InvalidInputError(f"language {self.code!r} needs script ranges")

    def hits(self, text: str) -> int:
        """Number of tokens (latin-words) or codepoints (script) matched."""
        if self.kind == "script":
            return sum(1 for ch in text if _in_ranges(ord(ch), self.script_ranges))
        lowered = unicodedata.normalize("NFC", text).lower()
        return sum(1 for tok in _LATIN_TOKEN_RE.findall(lowered) if tok in self.words)


def _word_language(code: str, name: str, filename: str, phrases: tuple[str, ...]) -> LanguageSpec:
    return LanguageSpec(
        code=code, name=name, kind="latin-words",
        words=_load_words(filename), sample_phrases=phrases,
    )


@lru_cache(maxsize=None)
def language_registry() -> dict[str, LanguageSpec]:
    """Bundled locale detectors, keyed by language code."""
    specs = [
        _word_language("english", "English", "words_english.txt",
                       ("hello everyone", "great day today", "see you there")),
        _word_language("italian", "Italian", "words_italian.txt",
                       ("ciao a tutti", "buongiorno", "grazie per oggi")),
        _word_language("french", "French", "words_french.txt",
                       ("bonjour", "merci beaucoup", "salut les amis")),
        _word_language("portuguese", "Portuguese", "words_portuguese.txt",
                       ("olá bom dia", "obrigado", "até amanhã aqui")),
        _word_language("spanish", "Spanish", "words_spanish.txt",
                       ("hola buenos días", "gracias", "hasta mañana aquí")),
        _word_language("german", "German", "words_german.txt",
                       ("hallo guten tag", "danke", "bis morgen hier")),
        _word_language("dutch", "Dutch", "words_dutch.txt",
                       ("hallo goede dag", "bedankt", "tot morgen hier")),
        _word_language("romanian", "Romanian", "words_romanian.txt",
                       ("salut bună ziua", "mulțumesc", "pe mâine aici")),
        LanguageSpec("arabic", "Arabic", "script", script_ranges=ARABIC_RANGES,
                     sample_phrases=("مرحبا", "شكرا جزيلا", "يوم جميل")),
        LanguageSpec("russian", "Russian", "script", script_ranges=CYRILLIC_RANGES,
                     sample_phrases=("привет", "спасибо", "хороший день")),
        LanguageSpec("tamil", "Tamil", "script", script_ranges=TAMIL_RANGES,
                     sample_phrases=("வணக்கம்", "நன்றி")),
        LanguageSpec("khmer", "Khmer", "script", script_ranges=KHMER_RANGES,
                     sample_phrases=("សួស្តី", "អរគុណ")),
        LanguageSpec("thai", "Thai", "script", script_ranges=THAI_RANGES,
                     sample_phrases=("สวัสดี", "ขอบคุณ")),
        LanguageSpec("hindi", "Hindi", "script", script_ranges=DEVANAGARI_RANGES,
                     sample_phrases=("नमस्ते", "धन्यवाद")),
        LanguageSpec("korean", "Korean", "script", script_ranges=HANGUL_RANGES,
                     sample_phrases=("안녕하세요", "감사합니다")),
    ]
    return {s.code: s for s in specs}


def resolve_language(code_or_spec: str | LanguageSpec) -> LanguageSpec:
    if isinstance(code_or_spec, LanguageSpec):
        return code_or_spec
    registry = language_registry()
    key = str(code_or_spec).lower()
    if key not in registry:
        raise InvalidInputError(
            f"unknown language {code_or_spec!r}; known: {sorted(registry)}"
        )
    return registry[key]


class Label(str, enum.Enum):
    TARGET = "target-ethnic"
    OTHER = "other"


_LABEL_ALIASES = {
    "target-ethnic": Label.TARGET,
    "target": Label.TARGET,
    "t": Label.TARGET,
    "other": Label.OTHER,
    "o": Label.OTHER,
}


def parse_label(token: str) -> Label:
    key = token.strip().lower()
    if key not in _LABEL_ALIASES:
        raise InvalidInputError(f"unknown label {token!r} (use target-ethnic/other)")
    return _LABEL_ALIASES[key]


@dataclass(frozen=True)
class ScriptProfile:
    """Script/word evidence counts for one blob of user text."""

    target_script_chars: int = 0
    latin_chars: int = 0
    latin_tokens: int = 0
    romanized_target_tokens: int = 0
    local_hits: int = 0
    english_hits: int = 0
    other_chars: int = 0

    @property
    def has_target_script(self) -> bool:
        return self.target_script_chars > 0

    @property
    def looks_romanized_target(self) -> bool:
        """True when there is latin text and every latin token is a pinyin syllable."""
        return self.latin_tokens > 0 and self.romanized_target_tokens == self.latin_tokens

    @property
    def uses_local(self) -> bool:
        return self.local_hits > 0

    @property
    def uses_english(self) -> bool:
        return self.english_hits > 0


def detect_scripts(text: str, local_language: str | LanguageSpec | None = None) -> ScriptProfile:
    """Count script and word-list evidence in one text."""
    if not isinstance(text, str):
        raise InvalidInputError(f"text must be str, got {type(text).__name__}")
    local = resolve_language(local_language) if local_language is not None else None

    target = latin = other = 0
    for ch in text:
        if is_target_script_char(ch):
            target += 1
        elif _is_latin_letter(ch):
            latin += 1
        elif ch.isalpha():
            other += 1

    tokens = _LATIN_TOKEN_RE.findall(unicodedata.normalize("NFC", text).lower())
    pinyin = pinyin_syllables()
    romanized = sum(1 for tok in tokens if tok in pinyin)
    english = sum(1 for tok in tokens if tok in _load_words("words_english.txt"))
    local_hits = local.hits(text) if local is not None else 0

    return ScriptProfile(
        target_script_chars=target,
        latin_chars=latin,
        latin_tokens=len(tokens),
        romanized_target_tokens=romanized,
        local_hits=local_hits,
        english_hits=english,
        other_chars=other,
    )


def auto_label(texts: Iterable[str]) -> Label:
    """Observed-script classifier: target iff any text has a CJK ideograph."""
    for text in texts:
        if any(is_target_script_char(ch) for ch in text):
            return Label.TARGET
    return Label.OTHER


def vote_labels(ballots: Sequence[Label]) -> Label:
    """Strict-majority label over an odd number (>= 3) of ballots."""
    n = len(ballots)
    if n < 3 or n % 2 == 0:
        raise InvalidInputError(f"voting requires an odd ballot count >= 3, got {n}")
    target = sum(1 for b in ballots if b is Label.TARGET or b == Label.TARGET)
    return Label.TARGET if target * 2 > n else Label.OTHER


@dataclass(frozen=True)
class LabelRecord:
    """A label attached to one store user, with its provenance."""

    user_key: str
    source: str  # "auto" | "imported" | "manual-voted"
    label: Label
    ballots: tuple[Label, ...] = ()

    def __post_init__(self) -> None:
        if self.source not in ("auto", "imported", "manual-voted"):
            raise InvalidInputError(f"unknown label source {self.source!r}")
        if self.source == "manual-voted":
            n = len(self.ballots)
            if n < 3 or n % 2 == 0:
                raise InvalidInputError(
                    f"manual-voted labels need an odd ballot count >= 3, got {n}"
                )


# Higher wins when attaching to a store.
LABEL_PRECEDENCE = {"auto": 1, "imported": 2, "manual-voted": 3}


@dataclass(frozen=True)
class LanguageUse:
    """Per-user language flags for the assimilation analysis."""

    uses_target: bool
    uses_local: bool
    uses_english: bool


def classify_language_use(
    texts: Iterable[str], local_language: str | LanguageSpec | None
) -> LanguageUse:
    """A user uses a language if any of their texts triggers its detector."""
    local = resolve_language(local_language) if local_language is not None else None
    uses_target = uses_local = uses_english = False
    english_words = _load_words("words_english.txt")
    for text in texts:
        if not uses_target and any(is_target_script_char(ch) for ch in text):
            uses_target = True
        if local is not None and not uses_local and local.hits(text) > 0:
            uses_local = True
        if not uses_english:
            lowered = unicodedata.normalize("NFC", text).lower()
            if any(tok in english_words for tok in _LATIN_TOKEN_RE.findall(lowered)):
                uses_english = True
    return LanguageUse(uses_target, uses_local, uses_english)


def import_annotations(source: str | io.TextIOBase) -> dict[str, LabelRecord]:
    """Read an annotation CSV (user_key, annotator_id, label) into labels.

    Duplicate (user_key, annotator_id) pairs are rejected. Users with one
    ballot become "imported" labels; odd counts >= 3 are voted into
    "manual-voted" labels; even counts are rejected as ambiguous.
    """
    if isinstance(source, str):
        handle: io.TextIOBase = io.StringIO(source)
    else:
        handle = source
    reader = csv.DictReader(handle)
    required = {"user_key", "annotator_id", "label"}
    if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
        raise InvalidInputError(
            f"annotation CSV needs columns {sorted(required)}, got {reader.fieldnames}"
        )

    ballots: dict[str, list[Label]] = {}
    seen: set[tuple[str, str]] = set()
    for i, row in enumerate(reader, start=2):
        user_key = (row["user_key"] or "").strip()
        annotator = (row["annotator_id"] or "").strip()
        if not user_key or not annotator:
            raise InvalidInputError(f"line {i}: empty user_key or annotator_id")
        pair = (user_key, annotator)
        if pair in seen:
            raise InvalidInputError(
                f"line {i}: duplicate annotation for {user_key!r} by {annotator!r}"
            )
        seen.add(pair)
        ballots.setdefault(user_key, []).append(parse_label(row["label"]))

    out: dict[str, LabelRecord] = {}
    for user_key, votes in ballots.items():
        if len(votes) == 1:
            out[user_key] = LabelRecord(user_key, "imported", votes[0])
        elif len(votes) % 2 == 1:
            out[user_key] = LabelRecord(
                user_key, "manual-voted", vote_labels(votes), tuple(votes)
            )
        else:
            raise InvalidInputError(
                f"user {user_key!r} has an even ballot count ({len(votes)}); "
                "voting needs an odd count"
            )
    return out
