"""File-backed repository binding ingestion, extraction, search and reporting.

Layout under the repository root::

    repo.json          version marker and tuning config
    documents.jsonl    one SourceDocument per line
    payloads/          raw payload files, one per document
    sentences.jsonl    ingested sentences
    tables.jsonl       ingested table grids
    extractions.jsonl  (indicator, value, unit) records
    units.jsonl        searchable units; the index is rebuilt from these
    ledger.jsonl       append-only refinement ledger
    resources/         grammar / gazetteer / labeler model (editable copies)

Everything except the ledger is written by the single-writer ingestion
path; searches read the in-memory index rebuilt deterministically from
``units.jsonl`` at open time.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import nlp
from .assess import (
    AdaptabilityRating,
    IndicatorRatings,
    IndicatorReport,
    SuitabilityRating,
    build_report,
    data_dependence,
    query_dependence,
)
from .docmodel import (
    AccessClass,
    ExtractionRecord,
    FactmineError,
    Sentence,
    SourceDocument,
    SourceType,
    append_jsonl,
    read_jsonl,
    render_decimal,
    validate_document,
)
from .index import DEFAULT_FIELD_BOOSTS, IndexedUnit, InvertedIndex
from .ingest import IngestConfig, PdfSidecar, TableGrid, ingest_pdf_sidecar, parse_html
from .nlp import ChunkGrammar, Gazetteer
from .query import Query, RefinementLedger, formulate, run
from .tablelabel import LabelerModel, NoDataRows, resolve_cells, viterbi_label

REPO_VERSION = 1

_PAYLOAD_EXT = {
    SourceType.HTML: ".html",
    SourceType.PDF_TEXT: ".pdftext.jsonl",
    SourceType.TABLE: ".table.json",
}

_RESOURCE_FILES = ("grammar.json", "gazetteer.json", "labeler_model.json")


class RepositoryError(FactmineError):
    pass


@dataclass
class RepoConfig:
    k1: float = 1.2
    b: float = 0.75
    field_boosts: dict = None
    relevant_threshold: float = 0.2
    repeat_page_fraction: float = 0.8
    min_font_ratio: float = 0.7

    def __post_init__(self):
        if self.field_boosts is None:
            self.field_boosts = dict(DEFAULT_FIELD_BOOSTS)

    def to_dict(self) -> dict:
        return {
            "version": REPO_VERSION,
            "k1": self.k1,
            "b": self.b,
            "field_boosts": self.field_boosts,
            "relevant_threshold": self.relevant_threshold,
            "repeat_page_fraction": self.repeat_page_fraction,
            "min_font_ratio": self.min_font_ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RepoConfig":
        return cls(
            k1=d.get("k1", 1.2),
            b=d.get("b", 0.75),
            field_boosts=d.get("field_boosts") or dict(DEFAULT_FIELD_BOOSTS),
            relevant_threshold=d.get("relevant_threshold", 0.2),
            repeat_page_fraction=d.get("repeat_page_fraction", 0.8),
            min_font_ratio=d.get("min_font_ratio", 0.7),
        )


class Repository:
    """Open (or create) a repository directory and drive the pipeline."""

    def __init__(self, root: Path | str, create: bool = False):
        self.root = Path(root)
        marker = self.root / "repo.json"
        if not marker.exists():
            if not create:
                raise RepositoryError(f"no repository at {self.root} (missing repo.json)")
            self._create_skeleton()
        with open(marker, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if data.get("version") != REPO_VERSION:
            raise RepositoryError(
                f"repository version {data.get('version')!r} not supported (want {REPO_VERSION})"
            )
        self.config = RepoConfig.from_dict(data)

        self.grammar = ChunkGrammar.load(self.root / "resources" / "grammar.json")
        self.gazetteer = Gazetteer.load(self.root / "resources" / "gazetteer.json")
        self.labeler = LabelerModel.load(self.root / "resources" / "labeler_model.json")

        self.documents: dict[str, SourceDocument] = {}
        if (self.root / "documents.jsonl").exists():
            for doc in read_jsonl(self.root / "documents.jsonl", SourceDocument.from_dict):
                self.documents[doc.id] = doc

        self.sentences: dict[tuple[str, int], Sentence] = {}
        if (self.root / "sentences.jsonl").exists():
            for s in read_jsonl(self.root / "sentences.jsonl", Sentence.from_dict):
                self.sentences[(s.doc_id, s.ordinal)] = s

        self.tables: dict[str, list[TableGrid]] = {}
        if (self.root / "tables.jsonl").exists():
            for grid in read_jsonl(self.root / "tables.jsonl", TableGrid.from_dict):
                self.tables.setdefault(grid.doc_id, []).append(grid)

        self.index = InvertedIndex(k1=self.config.k1, b=self.config.b)
        if (self.root / "units.jsonl").exists():
            for unit in read_jsonl(self.root / "units.jsonl", IndexedUnit.from_dict):
                self.index.add_unit(unit)

        self.ledger = RefinementLedger.load(self.root / "ledger.jsonl")

    def _create_skeleton(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "payloads").mkdir(exist_ok=True)
        resources = self.root / "resources"
        resources.mkdir(exist_ok=True)
        for name in _RESOURCE_FILES:
            shutil.copy(nlp._resource_path(name), resources / name)
        with open(self.root / "repo.json", "w", encoding="utf-8") as fh:
            json.dump(RepoConfig().to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    # --- ingestion ---------------------------------------------------------

    def ingest_document(
        self,
        source_type: SourceType,
        uri: str,
        payload: bytes,
        doc_id: str | None = None,
        title: str = "",
        access_class: AccessClass = AccessClass.OPEN,
        retrieved_at: datetime | None = None,
    ) -> tuple[SourceDocument, dict]:
        """Store the payload, parse it, and persist sentences/tables.

        Returns the document and counts of what was parsed out of it.
        """
        source_type = SourceType(source_type)
        if doc_id is None:
            doc_id = "S" + hashlib.sha1(uri.encode("utf-8")).hexdigest()[:8]
        payload_ref = f"payloads/{doc_id}{_PAYLOAD_EXT[source_type]}"
        doc = SourceDocument(
            id=doc_id,
            uri=uri,
            source_type=source_type,
            title=title or uri,
            retrieved_at=retrieved_at or datetime.now(timezone.utc),
            access_class=AccessClass(access_class),
            payload_ref=payload_ref,
        )
        validate_document(doc, known_ids=self.documents.keys())

        (self.root / payload_ref).write_bytes(payload)
        validate_document(doc, known_ids=self.documents.keys(), payload_root=self.root)

        sentences: list[Sentence] = []
        tables: list[TableGrid] = []
        links: list[str] = []
        if source_type is SourceType.HTML:
            sentences, tables, links = parse_html(payload, doc_id=doc_id)
        elif source_type is SourceType.PDF_TEXT:
            sidecar = PdfSidecar.loads(payload.decode("utf-8"))
            config = IngestConfig(
                repeat_page_fraction=self.config.repeat_page_fraction,
                min_font_ratio=self.config.min_font_ratio,
            )
            sentences = ingest_pdf_sidecar(sidecar, doc_id=doc_id, config=config)
        else:
            data = json.loads(payload.decode("utf-8"))
            data["doc_id"] = doc_id
            tables = [TableGrid.from_dict(data)]

        self.documents[doc.id] = doc
        append_jsonl(self.root / "documents.jsonl", doc)
        for s in sentences:
            self.sentences[(s.doc_id, s.ordinal)] = s
            append_jsonl(self.root / "sentences.jsonl", s)
        for grid in tables:
            self.tables.setdefault(doc_id, []).append(grid)
            append_jsonl(self.root / "tables.jsonl", grid)
        if links:
            with open(self.root / "links.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"doc_id": doc_id, "links": links}) + "\n")

        counts = {"sentences": len(sentences), "tables": len(tables), "links": len(links)}
        return doc, counts

    # --- extraction --------------------------------------------------------

    def _source_terms(self, doc: SourceDocument) -> str:
        return f"{doc.title} {doc.uri}".strip()

    def _sentence_units(self, doc: SourceDocument, sentence: Sentence):
        tagged = nlp.tag_sentence(sentence, self.gazetteer)
        pairs = nlp.extract_with_matches(tagged, self.grammar, self.gazetteer)
        entities = nlp.ner(tagged, self.gazetteer)
        ent_terms = [f"{e.kind.value}:{e.text}" for e in entities]
        source = self._source_terms(doc)
        units, records = [], []
        if not pairs:
            units.append(
                IndexedUnit(
                    unit_id=f"{doc.id}:s{sentence.ordinal}",
                    doc_id=doc.id,
                    source_type=doc.source_type,
                    fields={
                        "text": sentence.text,
                        "indicator": "",
                        "value": "",
                        "unit": "",
                        "entities": ent_terms,
                        "source": source,
                    },
                    origin={"kind": "sentence", "ordinal": sentence.ordinal},
                )
            )
            return units, records

        tokens = tagged.tokens
        span_of = lambda lo, hi: [tokens[lo].span[0], tokens[hi - 1].span[1]] if hi > lo else None
        for j, (match, record) in enumerate(pairs):
            records.append(record)
            units.append(
                IndexedUnit(
                    unit_id=f"{doc.id}:s{sentence.ordinal}:x{j}",
                    doc_id=doc.id,
                    source_type=doc.source_type,
                    fields={
                        "text": sentence.text,
                        "indicator": record.indicator_phrase,
                        "value": render_decimal(record.value),
                        "unit": record.unit,
                        "entities": ent_terms,
                        "source": source,
                    },
                    origin={
                        "kind": "sentence",
                        "ordinal": sentence.ordinal,
                        "extraction": j,
                        "match": {
                            "indicator": span_of(*match.indicator),
                            "value": span_of(*match.value),
                            "unit": span_of(*match.unit),
                        },
                    },
                )
            )
        return units, records

    def _cell_unit(self, doc: SourceDocument, table_idx: int, cell) -> IndexedUnit:
        parts = [*cell.row_header_path, *cell.col_header_path]
        value_text = cell.value_text.strip()
        text = " ".join(p for p in (*parts, value_text) if p)
        unit_name = ""
        for header in (*cell.col_header_path, *cell.row_header_path):
            for tok in nlp.tokenize(header, self.gazetteer.units):
                canonical = self.gazetteer.canonical_unit(tok.text)
                if canonical:
                    unit_name = canonical
                    break
            if unit_name:
                break
        value = ""
        stripped = value_text.rstrip("%").strip()
        try:
            value = render_decimal(nlp.normalize_value(stripped))
            if value_text.endswith("%"):
                unit_name = "%"
        except nlp.NotANumber:
            value = ""
        pseudo = Sentence(doc_id=doc.id, ordinal=0, text=text, tokens=tuple(nlp.tokenize(text)))
        ent_terms = [f"{e.kind.value}:{e.text}" for e in nlp.ner(pseudo, self.gazetteer)]
        match = None
        if value_text and value:
            start = len(" ".join(p for p in parts if p).encode("utf-8"))
            start = start + 1 if start else 0
            match = {"value": [start, start + len(value_text.encode("utf-8"))]}
        return IndexedUnit(
            unit_id=f"{doc.id}:t{table_idx}:r{cell.row}c{cell.col}",
            doc_id=doc.id,
            source_type=doc.source_type,
            fields={
                "text": text,
                "indicator": " ".join(p for p in parts if p),
                "value": value,
                "unit": unit_name,
                "entities": ent_terms,
                "source": self._source_terms(doc),
            },
            origin={"kind": "cell", "table": table_idx, "row": cell.row, "col": cell.col,
                    **({"match": match} if match else {})},
        )

    def extract_document(self, doc_id: str) -> dict:
        """Chunk, tag and index everything parsed from one document."""
        doc = self.documents.get(doc_id)
        if doc is None:
            raise RepositoryError(f"unknown document {doc_id!r}")
        units: list[IndexedUnit] = []
        records: list[ExtractionRecord] = []
        for (d, ordinal) in sorted(k for k in self.sentences if k[0] == doc_id):
            sentence_units, sentence_records = self._sentence_units(doc, self.sentences[(d, ordinal)])
            units.extend(sentence_units)
            records.extend(sentence_records)
        for t, grid in enumerate(self.tables.get(doc_id, [])):
            labels = viterbi_label(grid, self.labeler)
            try:
                cells = resolve_cells(grid, labels)
            except NoDataRows:
                continue
            for cell in cells:
                if cell.value_text.strip():
                    units.append(self._cell_unit(doc, t, cell))

        for record in records:
            append_jsonl(self.root / "extractions.jsonl", record)
        for unit in units:
            self.index.add_unit(unit)
            append_jsonl(self.root / "units.jsonl", unit)
        return {"units": len(units), "extractions": len(records)}

    def extract_all(self) -> dict:
        """Extract every document that has no units yet."""
        done = {u.doc_id for u in self.index.units()}
        totals = {"units": 0, "extractions": 0}
        for doc_id in sorted(self.documents):
            if doc_id in done:
                continue
            counts = self.extract_document(doc_id)
            totals["units"] += counts["units"]
            totals["extractions"] += counts["extractions"]
        return totals

    # --- search and refinement ----------------------------------------------

    def search(
        self,
        indicator: str,
        keywords=None,
        source: str | None = None,
        limit: int = 10,
    ) -> tuple[Query, list[dict], float]:
        query = formulate(indicator, keywords, source)
        hits, top_raw = run(query, self.index, limit=limit, field_boosts=self.config.field_boosts)
        return query, [self.describe_hit(h) for h in hits], top_raw

    def describe_hit(self, hit) -> dict:
        """Hit fields plus provenance and highlight spans for display."""
        unit = self.index.get(hit.unit_id)
        d = unit.to_dict()
        d["score"] = {"raw": hit.raw, "normalized": hit.normalized}
        origin = unit.origin or {}
        if origin.get("kind") == "sentence":
            sentence = self.sentences.get((unit.doc_id, origin.get("ordinal", -1)))
            if sentence is not None:
                d["entities"] = [e.to_dict() for e in nlp.ner(sentence, self.gazetteer)]
        d["highlights"] = origin.get("match") or {}
        return d

    def record_refinement(
        self,
        indicator_id: str,
        indicator: str,
        keywords=None,
        source: str | None = None,
        achieved: bool = False,
        idempotency_key: str | None = None,
    ) -> dict:
        """Run the query, append the step, and return the updated record."""
        query = formulate(indicator, keywords, source)
        _, top_raw = run(query, self.index, field_boosts=self.config.field_boosts)
        record = self.ledger.record_step(
            indicator_id, query, top_raw, achieved, idempotency_key=idempotency_key
        )
        return record.to_dict()

    # --- reporting -----------------------------------------------------------

    def report(self) -> IndicatorReport:
        """Re-run each indicator's final query, normalize the top raw scores
        per source type across indicators, and build the report."""
        records = self.ledger.records()
        outcomes = {}
        for record in records:
            final = record.steps[-1]
            hits, top_raw = run(final.query, self.index, field_boosts=self.config.field_boosts)
            top = hits[0] if hits else None
            outcomes[record.indicator_id] = (record, final, top, top_raw)

        max_by_type: dict[SourceType, float] = {}
        for record, final, top, top_raw in outcomes.values():
            if top is not None:
                st = top.source_type
                max_by_type[st] = max(max_by_type.get(st, 0.0), top_raw)

        ratings: dict[str, IndicatorRatings] = {}
        for indicator_id, (record, final, top, top_raw) in outcomes.items():
            if top is None:
                normalized = 0.0
                source_id = None
                source_type = None
                access = AccessClass.OPEN
            else:
                group_max = max_by_type[top.source_type]
                normalized = top_raw / group_max if group_max > 0 else 0.0
                source_id = final.query.source_filter or top.doc_id
                source_type = top.source_type
                doc = self.documents.get(source_id) or self.documents.get(top.doc_id)
                access = doc.access_class if doc else AccessClass.OPEN
            used_filter = final.query.source_filter is not None
            ratings[indicator_id] = IndicatorRatings(
                suitability=SuitabilityRating.from_score(normalized),
                adaptability=AdaptabilityRating.from_dependences(
                    query_dependence(record.redefinition_count),
                    data_dependence(access, used_filter),
                ),
                source_id=source_id,
                source_type=source_type,
            )
        return build_report(self.ledger, ratings, relevant_threshold=self.config.relevant_threshold)
