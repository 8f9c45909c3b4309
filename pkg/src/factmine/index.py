"""In-memory inverted index over extraction units with BM25 field scoring.

Each searchable unit carries six fields (text, indicator, value, unit,
entities, source). Scores sum, per matched field and term,
``boost * idf * tf*(k1+1) / (tf + k1*(1 - b + b*len/avglen))`` with
``idf = ln(1 + (N + 0.5)/(df + 0.5))`` computed per field, so a match in a
short high-boost field (the extracted unit, say) outweighs the same match
buried in long text. Raw scores are normalized per source type by
dividing by the group maximum.

The analyzer lowercases and splits like :func:`factmine.nlp.tokenize`,
strips grouping commas from numbers, and does no stemming unless asked;
determinism is preferred over recall.

Concurrency contract: many readers or one writer; snapshots require
quiesced writes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import nlp
from .docmodel import FactmineError, RelevanceScore, SourceType, ValidationError

FIELDS = ("text", "indicator", "value", "unit", "entities", "source")

DEFAULT_FIELD_BOOSTS = {
    "indicator": 3.0,
    "unit": 2.0,
    "text": 1.0,
    "entities": 1.0,
    "source": 0.5,
    "value": 0.5,
}


class DuplicateUnitId(FactmineError):
    pass


class UnknownSourceFilter(FactmineError):
    pass


class CorruptSnapshot(FactmineError):
    pass


class IoFailure(FactmineError):
    pass


def analyze(text: str, stem: bool = False) -> list[str]:
    """Lowercased index terms; grouping commas stripped from numbers."""
    terms = []
    for tok in nlp.tokenize(text):
        low = tok.text.lower()
        if low and low[0].isdigit():
            low = low.replace(",", "")
        if not any(c.isalnum() for c in low) and low not in ("%", "$"):
            continue
        if stem and len(low) > 3 and low.endswith("s") and not low.endswith("ss"):
            low = low[:-1]
        terms.append(low)
    return terms


@dataclass(frozen=True)
class IndexedUnit:
    """One searchable record: a sentence extraction or a resolved table cell."""

    unit_id: str
    doc_id: str
    source_type: SourceType
    fields: dict
    origin: dict | None = None

    def __post_init__(self):
        if not isinstance(self.source_type, SourceType):
            object.__setattr__(self, "source_type", SourceType(self.source_type))
        unknown = set(self.fields) - set(FIELDS)
        if unknown:
            raise ValidationError(f"unknown unit fields: {sorted(unknown)}")

    def field_text(self, name: str) -> str:
        value = self.fields.get(name, "")
        if isinstance(value, (list, tuple)):
            return " ".join(value)
        return value

    def to_dict(self) -> dict:
        d = {
            "unit_id": self.unit_id,
            "doc_id": self.doc_id,
            "source_type": self.source_type.value,
            "fields": {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in self.fields.items()},
        }
        if self.origin is not None:
            d["origin"] = self.origin
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "IndexedUnit":
        return cls(
            unit_id=d["unit_id"],
            doc_id=d["doc_id"],
            source_type=SourceType(d["source_type"]),
            fields=d["fields"],
            origin=d.get("origin"),
        )


@dataclass(frozen=True)
class ScoredHit:
    unit_id: str
    doc_id: str
    source_type: SourceType
    score: RelevanceScore

    @property
    def raw(self) -> float:
        return self.score.raw

    @property
    def normalized(self) -> float:
        return self.score.normalized


def _field_terms(unit: IndexedUnit, name: str) -> list[str]:
    value = unit.fields.get(name, "")
    if isinstance(value, (list, tuple)):
        return [str(v).lower() for v in value if str(v)]
    return analyze(str(value))


SNAPSHOT_VERSION = 1


class InvertedIndex:
    """Postings per (field, term) plus the per-field statistics BM25 needs."""

    def __init__(self, k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self._units: dict[str, IndexedUnit] = {}
        self._postings: dict[str, dict[str, dict[str, int]]] = {f: {} for f in FIELDS}
        self._lengths: dict[str, dict[str, int]] = {f: {} for f in FIELDS}
        self._doc_ids: set[str] = set()

    def __len__(self) -> int:
        return len(self._units)

    @property
    def doc_ids(self) -> frozenset[str]:
        return frozenset(self._doc_ids)

    def get(self, unit_id: str) -> IndexedUnit | None:
        return self._units.get(unit_id)

    def units(self):
        return self._units.values()

    def add_unit(self, unit: IndexedUnit) -> None:
        if unit.unit_id in self._units:
            raise DuplicateUnitId(f"unit id {unit.unit_id!r} already indexed")
        self._units[unit.unit_id] = unit
        self._doc_ids.add(unit.doc_id)
        for fname in FIELDS:
            terms = _field_terms(unit, fname)
            if not terms:
                continue
            self._lengths[fname][unit.unit_id] = len(terms)
            postings = self._postings[fname]
            for term in terms:
                postings.setdefault(term, {})
                postings[term][unit.unit_id] = postings[term].get(unit.unit_id, 0) + 1

    def document_frequency(self, term: str, fname: str) -> int:
        return len(self._postings[fname].get(term, {}))

    def field_count(self, fname: str) -> int:
        return len(self._lengths[fname])

    def average_length(self, fname: str) -> float:
        lengths = self._lengths[fname]
        return sum(lengths.values()) / len(lengths) if lengths else 0.0

    def idf(self, term: str, fname: str) -> float:
        n = self.field_count(fname)
        df = self.document_frequency(term, fname)
        return math.log(1.0 + (n + 0.5) / (df + 0.5)) if n else 0.0

    def bm25_score(self, query_terms, unit_id: str, field_boosts: dict | None = None) -> float:
        """Summed BM25 contribution of each distinct query term per field."""
        boosts = field_boosts or DEFAULT_FIELD_BOOSTS
        seen = set()
        terms = [t for t in query_terms if not (t in seen or seen.add(t))]
        score = 0.0
        for fname in FIELDS:
            boost = boosts.get(fname, 0.0)
            if boost <= 0:
                continue
            length = self._lengths[fname].get(unit_id)
            if not length:
                continue
            avg = self.average_length(fname)
            norm = self.k1 * (1.0 - self.b + self.b * length / avg)
            for term in terms:
                tf = self._postings[fname].get(term, {}).get(unit_id, 0)
                if not tf:
                    continue
                score += boost * self.idf(term, fname) * tf * (self.k1 + 1.0) / (tf + norm)
        return score

    def search(
        self,
        query_terms,
        limit: int = 10,
        source_filter: str | None = None,
        field_boosts: dict | None = None,
    ) -> list[ScoredHit]:
        """Ranked hits: raw score descending, ties by unit id; zero scores
        are excluded. The source filter restricts candidates before scoring."""
        if limit < 1:
            raise ValidationError("limit must be >= 1")
        if source_filter is not None and source_filter not in self._doc_ids:
            raise UnknownSourceFilter(f"no ingested source with id {source_filter!r}")

        candidates: set[str] = set()
        for fname in FIELDS:
            postings = self._postings[fname]
            for term in set(query_terms):
                candidates.update(postings.get(term, {}).keys())
        if source_filter is not None:
            candidates = {u for u in candidates if self._units[u].doc_id == source_filter}

        scored = []
        for unit_id in candidates:
            raw = self.bm25_score(query_terms, unit_id, field_boosts)
            if raw > 0:
                scored.append((raw, unit_id))
        scored.sort(key=lambda pair: (-pair[0], pair[1]))

        hits = []
        for raw, unit_id in scored[:limit]:
            unit = self._units[unit_id]
            hits.append(
                ScoredHit(
                    unit_id=unit_id,
                    doc_id=unit.doc_id,
                    source_type=unit.source_type,
                    score=RelevanceScore(raw=raw, normalized=0.0),
                )
            )
        return hits

    def snapshot(self, path: Path | str) -> None:
        """Write a versioned JSON container from which ``load`` rebuilds an
        index giving identical results."""
        payload = {
            "version": SNAPSHOT_VERSION,
            "unit_count": len(self._units),
            "k1": self.k1,
            "b": self.b,
            "units": [u.to_dict() for u in self._units.values()],
        }
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, ensure_ascii=False)
                fh.write("\n")
        except OSError as exc:
            raise IoFailure(str(exc)) from exc

    def load(self, path: Path | str) -> None:
        if self._units:
            raise ValidationError("snapshot must be loaded into a fresh index")
        try:
            with open(path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        except json.JSONDecodeError as exc:
            raise CorruptSnapshot(f"unreadable snapshot: {exc}") from exc
        if not isinstance(payload, dict) or payload.get("version") != SNAPSHOT_VERSION:
            raise CorruptSnapshot(f"unsupported snapshot version {payload.get('version')!r}")
        if len(payload.get("units", [])) != payload.get("unit_count"):
            raise CorruptSnapshot("unit count mismatch")
        self.k1 = payload.get("k1", self.k1)
        self.b = payload.get("b", self.b)
        for d in payload["units"]:
            self.add_unit(IndexedUnit.from_dict(d))


def normalize_scores(hits: list[ScoredHit]) -> list[ScoredHit]:
    """Within each source type, normalized = raw / group max (1.0 at the top)."""
    max_by_type: dict[SourceType, float] = {}
    for hit in hits:
        max_by_type[hit.source_type] = max(max_by_type.get(hit.source_type, 0.0), hit.raw)
    out = []
    for hit in hits:
        top = max_by_type[hit.source_type]
        normalized = hit.raw / top if top > 0 else 0.0
        out.append(replace(hit, score=RelevanceScore(raw=hit.raw, normalized=normalized)))
    return out
