"""Queries at three refinement levels and the human-in-the-loop ledger.

A query starts from the indicator name alone, can be refined with
keywords (typically the expected unit) and finally restricted to a single
source. Keywords are extra scoring terms, not filters. Every attempt is
recorded as a step in an append-only ledger together with the top raw
score and the human's achieved/not-achieved judgment; the number of
redefinitions for an indicator is simply ``len(steps) - 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .docmodel import FactmineError, ValidationError
from .index import InvertedIndex, ScoredHit, analyze, normalize_scores


class BlankIndicator(FactmineError):
    pass


@dataclass(frozen=True)
class Query:
    indicator_terms: tuple[str, ...]
    keywords: tuple[str, ...] = ()
    source_filter: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "indicator_terms", tuple(self.indicator_terms))
        object.__setattr__(self, "keywords", tuple(self.keywords))
        if not self.indicator_terms:
            raise BlankIndicator("a query needs at least one indicator term")

    @property
    def terms(self) -> list[str]:
        seen: set[str] = set()
        out = []
        for t in (*self.indicator_terms, *self.keywords):
            if t not in seen:
                seen.add(t)
                out.append(t)
        return out

    def to_dict(self) -> dict:
        return {
            "indicator_terms": list(self.indicator_terms),
            "keywords": list(self.keywords),
            "source_filter": self.source_filter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Query":
        return cls(
            indicator_terms=tuple(d["indicator_terms"]),
            keywords=tuple(d.get("keywords", [])),
            source_filter=d.get("source_filter"),
        )


def formulate(indicator_name: str, keywords=None, source: str | None = None) -> Query:
    """Tokenize the indicator name into query terms; attach keywords/source.

    ``keywords`` may be a single string ("Million tonnes") or a list of
    strings; either way each one is analyzed into lowercase terms.
    """
    if not indicator_name or not indicator_name.strip():
        raise BlankIndicator("indicator name is blank")
    terms = analyze(indicator_name)
    if not terms:
        raise BlankIndicator(f"indicator name {indicator_name!r} has no searchable terms")
    if keywords is None:
        kw_terms: list[str] = []
    elif isinstance(keywords, str):
        kw_terms = analyze(keywords)
    else:
        kw_terms = [t for kw in keywords for t in analyze(kw)]
    return Query(indicator_terms=tuple(terms), keywords=tuple(kw_terms), source_filter=source)


def run(
    query: Query,
    index: InvertedIndex,
    limit: int = 10,
    field_boosts: dict | None = None,
) -> tuple[list[ScoredHit], float]:
    """Search with indicator terms plus keywords; hits come back normalized
    per source type, and the second element is the raw score at rank 1 (0
    when nothing matched)."""
    hits = index.search(
        query.terms, limit=limit, source_filter=query.source_filter, field_boosts=field_boosts
    )
    hits = normalize_scores(hits)
    return hits, (hits[0].raw if hits else 0.0)


@dataclass(frozen=True)
class RefinementStep:
    query: Query
    top_raw_score: float
    result_achieved: bool
    idempotency_key: str | None = None

    def to_dict(self) -> dict:
        d = {
            "query": self.query.to_dict(),
            "top_raw_score": self.top_raw_score,
            "result_achieved": self.result_achieved,
        }
        if self.idempotency_key is not None:
            d["idempotency_key"] = self.idempotency_key
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RefinementStep":
        return cls(
            query=Query.from_dict(d["query"]),
            top_raw_score=float(d["top_raw_score"]),
            result_achieved=bool(d["result_achieved"]),
            idempotency_key=d.get("idempotency_key"),
        )


@dataclass(frozen=True)
class RefinementRecord:
    indicator_id: str
    steps: tuple[RefinementStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValidationError("a refinement record needs at least one step")

    @property
    def redefinition_count(self) -> int:
        return len(self.steps) - 1

    @property
    def achieved(self) -> bool:
        return any(s.result_achieved for s in self.steps)

    def to_dict(self) -> dict:
        return {
            "indicator_id": self.indicator_id,
            "steps": [s.to_dict() for s in self.steps],
            "redefinition_count": self.redefinition_count,
        }


class RefinementLedger:
    """Per-indicator refinement history, persisted as append-only JSON lines.

    Each appended line is self-contained, so a crash between appends never
    corrupts earlier records; a torn trailing line is skipped on load.
    """

    def __init__(self, path: Path | str | None = None):
        self.path = Path(path) if path is not None else None
        self._records: dict[str, RefinementRecord] = {}

    @classmethod
    def load(cls, path: Path | str) -> "RefinementLedger":
        ledger = cls(path)
        p = Path(path)
        if p.exists():
            for line in p.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                    ledger._apply(
                        entry["indicator_id"], RefinementStep.from_dict(entry)
                    )
                except (json.JSONDecodeError, KeyError):
                    continue  # torn tail write
        return ledger

    def _apply(self, indicator_id: str, step: RefinementStep) -> RefinementRecord:
        record = self._records.get(indicator_id)
        if record is None:
            record = RefinementRecord(indicator_id=indicator_id, steps=(step,))
        else:
            record = RefinementRecord(indicator_id=indicator_id, steps=(*record.steps, step))
        self._records[indicator_id] = record
        return record

    def record_step(
        self,
        indicator_id: str,
        query: Query,
        top_raw_score: float,
        achieved: bool,
        idempotency_key: str | None = None,
    ) -> RefinementRecord:
        """Append one step (and persist it); re-sending the same idempotency
        key returns the existing record without duplicating the step."""
        if idempotency_key is not None:
            existing = self._records.get(indicator_id)
            if existing and any(s.idempotency_key == idempotency_key for s in existing.steps):
                return existing
        step = RefinementStep(
            query=query,
            top_raw_score=top_raw_score,
            result_achieved=achieved,
            idempotency_key=idempotency_key,
        )
        record = self._apply(indicator_id, step)
        if self.path is not None:
            entry = {"indicator_id": indicator_id, **step.to_dict()}
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
                fh.flush()
        return record

    def get(self, indicator_id: str) -> RefinementRecord | None:
        return self._records.get(indicator_id)

    def records(self) -> list[RefinementRecord]:
        return [self._records[k] for k in sorted(self._records)]

    def __len__(self) -> int:
        return len(self._records)

    def __bool__(self) -> bool:
        return bool(self._records)
