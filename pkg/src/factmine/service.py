"""HTTP API over a repository: the backend for the query console.

All endpoints live under ``/v1`` and speak JSON (CSV on request for the
report). Errors come back as ``{"code": ..., "message": ...}`` with a
matching HTTP status. Ingestion and ledger writes are serialized through
a single lock; searches read the in-memory index snapshot.
"""

from __future__ import annotations

import threading
from datetime import datetime

from fastapi import FastAPI, Query as QueryParam, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .assess import EmptyLedger, report_to_csv
from .docmodel import (
    DuplicateId,
    FactmineError,
    MissingField,
    MissingPayload,
    UnknownSourceType,
    ValidationError,
)
from .index import UnknownSourceFilter
from .query import BlankIndicator
from .repository import Repository, RepositoryError

_STATUS = {
    DuplicateId: 409,
    UnknownSourceFilter: 404,
    RepositoryError: 404,
    BlankIndicator: 400,
    MissingField: 400,
    MissingPayload: 400,
    UnknownSourceType: 400,
    ValidationError: 400,
}


def _status_for(exc: FactmineError) -> int:
    for etype, status in _STATUS.items():
        if isinstance(exc, etype):
            return status
    return 500


class SourceIn(BaseModel):
    type: str
    uri: str
    payload: str
    id: str | None = None
    title: str = ""
    access_class: str = "OPEN"
    retrieved_at: datetime | None = None


class RefinementIn(BaseModel):
    indicator_id: str
    indicator: str
    keywords: str | None = None
    source: str | None = None
    achieved: bool = False
    idempotency_key: str | None = Field(default=None, alias="idempotency_key")


def create_app(repo: Repository) -> FastAPI:
    app = FastAPI(title="factmine", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    write_lock = threading.Lock()

    @app.exception_handler(FactmineError)
    async def factmine_error(request: Request, exc: FactmineError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"code": type(exc).__name__, "message": str(exc)},
        )

    @app.post("/v1/sources", status_code=201)
    def add_source(body: SourceIn):
        with write_lock:
            doc, counts = repo.ingest_document(
                source_type=body.type.upper().replace("-", "_"),
                uri=body.uri,
                payload=body.payload.encode("utf-8"),
                doc_id=body.id,
                title=body.title,
                access_class=body.access_class.upper().replace("-", "_"),
                retrieved_at=body.retrieved_at,
            )
            counts.update(repo.extract_document(doc.id))
        return {"document": doc.to_dict(), "counts": counts}

    @app.get("/v1/sources")
    def list_sources():
        return {"sources": [d.to_dict() for d in repo.documents.values()]}

    @app.get("/v1/search")
    def search(
        q: str = QueryParam(..., description="indicator terms"),
        keywords: str | None = None,
        source: str | None = None,
        limit: int = 10,
    ):
        query, hits, top_raw = repo.search(q, keywords, source, limit=limit)
        return {"query": query.to_dict(), "top_raw_score": top_raw, "hits": hits}

    @app.post("/v1/refinements", status_code=201)
    def add_refinement(body: RefinementIn):
        with write_lock:
            record = repo.record_refinement(
                indicator_id=body.indicator_id,
                indicator=body.indicator,
                keywords=body.keywords,
                source=body.source,
                achieved=body.achieved,
                idempotency_key=body.idempotency_key,
            )
        return {"record": record}

    @app.get("/v1/indicators")
    def indicators():
        return {"indicators": [r.to_dict() for r in repo.ledger.records()]}

    @app.get("/v1/report")
    def report(format: str = "json"):
        try:
            result = repo.report()
        except EmptyLedger:
            if format == "csv":
                from .assess import CSV_COLUMNS

                return PlainTextResponse(",".join(CSV_COLUMNS) + "\n", media_type="text/csv")
            return {"rows": [], "totals": {}}
        if format == "csv":
            return PlainTextResponse(report_to_csv(result), media_type="text/csv")
        return result.to_dict()

    return app
