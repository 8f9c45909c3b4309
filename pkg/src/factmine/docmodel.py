"""Shared domain types: documents, sentences, tokens, extractions, entities.

All types are immutable values (frozen dataclasses) and serialize to JSON
objects whose keys match the field names, one object per line in the
on-disk JSON-lines files. Spans are byte offsets into the UTF-8 encoding
of the enclosing text so round-trips are exact regardless of the
characters involved. Numeric values are carried as ``decimal.Decimal`` so
strings like "1,518" survive a round-trip without binary-float loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator


class FactmineError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(FactmineError):
    """A domain invariant does not hold."""


class MissingField(ValidationError):
    pass


class DuplicateId(ValidationError):
    pass


class UnknownSourceType(ValidationError):
    pass


class MissingPayload(ValidationError):
    pass


class SourceType(str, Enum):
    HTML = "HTML"
    PDF_TEXT = "PDF_TEXT"
    TABLE = "TABLE"


class AccessClass(str, Enum):
    OPEN = "OPEN"
    SOURCE_SPECIFIC = "SOURCE_SPECIFIC"
    SUBSCRIPTION = "SUBSCRIPTION"


class EntityKind(str, Enum):
    """The closed set of recognized entity kinds. Exactly these seven."""

    LOCATION = "LOCATION"
    ORGANIZATION = "ORGANIZATION"
    DATE = "DATE"
    MONEY = "MONEY"
    PERSON = "PERSON"
    PERCENT = "PERCENT"
    TIME = "TIME"


def render_decimal(value: Decimal) -> str:
    """Plain-notation string for a Decimal ("2300000", never "2.3E+6")."""
    s = format(value, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s or "0"


def _span(value) -> tuple[int, int]:
    start, end = value
    if end <= start:
        raise ValidationError(f"empty or reversed span {value!r}")
    return (int(start), int(end))


@dataclass(frozen=True)
class Token:
    text: str
    span: tuple[int, int]
    pos: str = ""

    def __post_init__(self):
        object.__setattr__(self, "span", _span(self.span))

    def to_dict(self) -> dict:
        return {"text": self.text, "span": list(self.span), "pos": self.pos}

    @classmethod
    def from_dict(cls, d: dict) -> "Token":
        return cls(text=d["text"], span=tuple(d["span"]), pos=d.get("pos", ""))


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    ordinal: int
    text: str
    tokens: tuple[Token, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.ordinal < 0:
            raise ValidationError("sentence ordinal must be >= 0")
        raw = self.text.encode("utf-8")
        prev_end = 0
        for tok in self.tokens:
            start, end = tok.span
            if start < prev_end or end > len(raw):
                raise ValidationError("token spans must be ordered and inside the text")
            if raw[prev_end:start].strip():
                raise ValidationError("gap between tokens contains non-whitespace")
            if raw[start:end].decode("utf-8") != tok.text:
                raise ValidationError("token text does not match its span")
            prev_end = end
        if self.tokens and raw[prev_end:].strip():
            raise ValidationError("text after the last token is not whitespace")

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "ordinal": self.ordinal,
            "text": self.text,
            "tokens": [t.to_dict() for t in self.tokens],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Sentence":
        return cls(
            doc_id=d["doc_id"],
            ordinal=d["ordinal"],
            text=d["text"],
            tokens=tuple(Token.from_dict(t) for t in d.get("tokens", [])),
        )


@dataclass(frozen=True)
class Entity:
    kind: EntityKind
    text: str
    span: tuple[int, int]

    def __post_init__(self):
        if not isinstance(self.kind, EntityKind):
            try:
                object.__setattr__(self, "kind", EntityKind(self.kind))
            except ValueError:
                raise ValidationError(f"unknown entity kind {self.kind!r}") from None
        object.__setattr__(self, "span", _span(self.span))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "text": self.text, "span": list(self.span)}

    @classmethod
    def from_dict(cls, d: dict) -> "Entity":
        return cls(kind=d["kind"], text=d["text"], span=tuple(d["span"]))


@dataclass(frozen=True)
class ExtractionRecord:
    """One (indicator phrase, numeric value, unit) triple found in a sentence.

    ``unit_matched`` is False when the unit token was not found in the unit
    gazetteer and the raw token was kept instead.
    """

    sentence_ref: tuple[str, int]
    indicator_phrase: str
    value: Decimal
    unit: str
    unit_matched: bool = True
    entities: tuple[Entity, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sentence_ref", (str(self.sentence_ref[0]), int(self.sentence_ref[1])))
        object.__setattr__(self, "entities", tuple(self.entities))
        if not self.indicator_phrase:
            raise ValidationError("indicator_phrase must be non-empty")
        if not isinstance(self.value, Decimal):
            object.__setattr__(self, "value", Decimal(str(self.value)))
        if not self.value.is_finite():
            raise ValidationError("value must be finite")

    def to_dict(self) -> dict:
        return {
            "sentence_ref": list(self.sentence_ref),
            "indicator_phrase": self.indicator_phrase,
            "value": render_decimal(self.value),
            "unit": self.unit,
            "unit_matched": self.unit_matched,
            "entities": [e.to_dict() for e in self.entities],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractionRecord":
        return cls(
            sentence_ref=(d["sentence_ref"][0], d["sentence_ref"][1]),
            indicator_phrase=d["indicator_phrase"],
            value=Decimal(d["value"]),
            unit=d["unit"],
            unit_matched=d.get("unit_matched", True),
            entities=tuple(Entity.from_dict(e) for e in d.get("entities", [])),
        )


@dataclass(frozen=True)
class SourceDocument:
    id: str
    uri: str
    source_type: SourceType
    title: str
    retrieved_at: datetime
    access_class: AccessClass = AccessClass.OPEN
    payload_ref: str = ""

    def __post_init__(self):
        if not isinstance(self.source_type, SourceType):
            try:
                object.__setattr__(self, "source_type", SourceType(self.source_type))
            except ValueError:
                raise UnknownSourceType(f"unknown source type {self.source_type!r}") from None
        if not isinstance(self.access_class, AccessClass):
            object.__setattr__(self, "access_class", AccessClass(self.access_class))
        if self.retrieved_at.tzinfo is None:
            object.__setattr__(self, "retrieved_at", self.retrieved_at.replace(tzinfo=timezone.utc))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "uri": self.uri,
            "source_type": self.source_type.value,
            "title": self.title,
            "retrieved_at": self.retrieved_at.astimezone(timezone.utc).isoformat(),
            "access_class": self.access_class.value,
            "payload_ref": self.payload_ref,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceDocument":
        return cls(
            id=d["id"],
            uri=d["uri"],
            source_type=SourceType(d["source_type"]),
            title=d["title"],
            retrieved_at=datetime.fromisoformat(d["retrieved_at"]),
            access_class=AccessClass(d["access_class"]),
            payload_ref=d.get("payload_ref", ""),
        )


@dataclass(frozen=True)
class RelevanceScore:
    raw: float
    normalized: float

    def __post_init__(self):
        if self.raw < 0:
            raise ValidationError("raw score must be nonnegative")
        if not 0.0 <= self.normalized <= 1.0:
            raise ValidationError("normalized score must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"raw": self.raw, "normalized": self.normalized}

    @classmethod
    def from_dict(cls, d: dict) -> "RelevanceScore":
        return cls(raw=d["raw"], normalized=d["normalized"])


def validate_document(
    doc: SourceDocument,
    known_ids: Iterable[str] = (),
    payload_root: Path | str | None = None,
) -> None:
    """Check the SourceDocument invariants; raise a ValidationError subclass.

    ``known_ids`` are ids already present in the repository; ``payload_root``,
    when given, is the directory that must contain ``payload_ref``.
    """
    if not doc.id:
        raise MissingField("document id must be non-empty")
    if doc.id in set(known_ids):
        raise DuplicateId(f"document id {doc.id!r} already ingested")
    if not isinstance(doc.source_type, SourceType):
        raise UnknownSourceType(f"unknown source type {doc.source_type!r}")
    if payload_root is not None:
        if not doc.payload_ref:
            raise MissingPayload("document has no payload_ref")
        if not (Path(payload_root) / doc.payload_ref).exists():
            raise MissingPayload(f"payload {doc.payload_ref!r} not found in store")


def write_jsonl(path: Path | str, items: Iterable) -> None:
    """Write objects with a ``to_dict`` method as one JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item.to_dict(), ensure_ascii=False) + "\n")


def append_jsonl(path: Path | str, item) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(item.to_dict(), ensure_ascii=False) + "\n")
        fh.flush()


def read_jsonl(path: Path | str, decoder) -> Iterator:
    """Yield ``decoder(dict)`` for each line of a JSON-lines file."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield decoder(json.loads(line))
