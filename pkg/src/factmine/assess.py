"""Suitability/adaptability ratings and the indicator report.

Suitability bins the normalized relevance score of an indicator's best
query into High / Medium / Low. Adaptability combines two dependence
ratings: how much query redefinition was needed, and how much the result
depends on restricted or source-specific data. The report lays one row
per indicator next to per-source-type totals (achieved / relevant / not
achieved), with an Unknown bucket for indicators that were never located.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum

from .docmodel import AccessClass, FactmineError, SourceType
from .query import RefinementLedger


class OutOfRange(FactmineError):
    pass


class EmptyLedger(FactmineError):
    pass


class SuitabilityLevel(Enum):
    LOW = "L"
    MEDIUM = "M"
    HIGH = "H"

    def __lt__(self, other):
        order = [SuitabilityLevel.LOW, SuitabilityLevel.MEDIUM, SuitabilityLevel.HIGH]
        return order.index(self) < order.index(other)


class DependenceLevel(Enum):
    L = "L"
    M = "M"
    H = "H"


class ResultStatus(Enum):
    ACHIEVED = "ACHIEVED"
    RELEVANT = "RELEVANT"
    NOT_ACHIEVED = "NOT_ACHIEVED"


def categorize_suitability(normalized_score: float) -> SuitabilityLevel:
    """Low below 0.4, Medium in [0.4, 0.7), High from 0.7 up.

    The bins are closed on the left so every score in [0, 1] maps to
    exactly one level.
    """
    if not 0.0 <= normalized_score <= 1.0:
        raise OutOfRange(f"score {normalized_score!r} outside [0, 1]")
    if normalized_score < 0.4:
        return SuitabilityLevel.LOW
    if normalized_score < 0.7:
        return SuitabilityLevel.MEDIUM
    return SuitabilityLevel.HIGH


def query_dependence(redefinition_count: int) -> DependenceLevel:
    """No redefinition is Low, one is Medium, two or more is High."""
    if redefinition_count < 0:
        raise OutOfRange("redefinition count must be >= 0")
    if redefinition_count == 0:
        return DependenceLevel.L
    if redefinition_count == 1:
        return DependenceLevel.M
    return DependenceLevel.H


def data_dependence(access_class: AccessClass, used_source_filter: bool) -> DependenceLevel:
    """High for a subscription source searched source-specifically, Medium
    for any source-specific search or source-specific access, Low for an
    open source searched openly."""
    if access_class is AccessClass.SUBSCRIPTION and used_source_filter:
        return DependenceLevel.H
    if used_source_filter or access_class is AccessClass.SOURCE_SPECIFIC:
        return DependenceLevel.M
    return DependenceLevel.L


_ADAPTABILITY = {
    (DependenceLevel.L, DependenceLevel.L): DependenceLevel.H,
    (DependenceLevel.L, DependenceLevel.M): DependenceLevel.M,
    (DependenceLevel.L, DependenceLevel.H): DependenceLevel.L,
    (DependenceLevel.M, DependenceLevel.L): DependenceLevel.H,
    (DependenceLevel.M, DependenceLevel.M): DependenceLevel.M,
    (DependenceLevel.M, DependenceLevel.H): DependenceLevel.L,
    (DependenceLevel.H, DependenceLevel.L): DependenceLevel.M,
    (DependenceLevel.H, DependenceLevel.M): DependenceLevel.L,
    (DependenceLevel.H, DependenceLevel.H): DependenceLevel.L,
}


def adaptability(query_dep: DependenceLevel, data_dep: DependenceLevel) -> DependenceLevel:
    """Combined rating; raising either dependence never raises the result.

    Medium query dependence follows the low-effort row: a single
    redefinition is still cheap to repeat.
    """
    return _ADAPTABILITY[(query_dep, data_dep)]


@dataclass(frozen=True)
class SuitabilityRating:
    level: SuitabilityLevel
    normalized_score: float

    def __post_init__(self):
        if categorize_suitability(self.normalized_score) is not self.level:
            raise OutOfRange(
                f"level {self.level} inconsistent with score {self.normalized_score}"
            )

    @classmethod
    def from_score(cls, normalized_score: float) -> "SuitabilityRating":
        return cls(level=categorize_suitability(normalized_score), normalized_score=normalized_score)


@dataclass(frozen=True)
class AdaptabilityRating:
    query_dep: DependenceLevel
    data_dep: DependenceLevel
    level: DependenceLevel

    def __post_init__(self):
        if adaptability(self.query_dep, self.data_dep) is not self.level:
            raise OutOfRange("adaptability level inconsistent with its inputs")

    @classmethod
    def from_dependences(cls, query_dep: DependenceLevel, data_dep: DependenceLevel) -> "AdaptabilityRating":
        return cls(query_dep=query_dep, data_dep=data_dep, level=adaptability(query_dep, data_dep))


def result_status(hits, achieved_flag: bool, relevant_threshold: float = 0.2) -> ResultStatus:
    """Achieved when the human says so; otherwise Relevant when the rank-1
    normalized score clears the threshold; Not Achieved otherwise."""
    if achieved_flag:
        return ResultStatus.ACHIEVED
    top = hits[0].normalized if hits else 0.0
    if top >= relevant_threshold:
        return ResultStatus.RELEVANT
    return ResultStatus.NOT_ACHIEVED


@dataclass(frozen=True)
class IndicatorRatings:
    """Per-indicator inputs the report needs beyond the ledger itself."""

    suitability: SuitabilityRating
    adaptability: AdaptabilityRating
    source_id: str | None = None
    source_type: SourceType | None = None


_TYPE_DISPLAY = {
    SourceType.HTML: "HTML",
    SourceType.PDF_TEXT: "PDF",
    SourceType.TABLE: "Table",
    None: "Unknown",
}
TYPE_BUCKETS = ("HTML", "PDF", "Table", "Unknown")

_STATUS_DISPLAY = {
    ResultStatus.ACHIEVED: "Y",
    ResultStatus.RELEVANT: "Relevant results",
    ResultStatus.NOT_ACHIEVED: "N",
}

CSV_COLUMNS = (
    "S.No",
    "Indicator",
    "Query",
    "Data source",
    "Source Type",
    "Added Keywords",
    "Suitability",
    "Adaptability",
    "Relevance score",
    "Result achieved",
)


@dataclass(frozen=True)
class ReportRow:
    serial: int
    indicator: str
    query: str
    source_id: str
    source_type: str
    keywords: str
    suitability: SuitabilityLevel
    adaptability: DependenceLevel
    relevance_score: float
    status: ResultStatus

    def to_dict(self) -> dict:
        return {
            "serial": self.serial,
            "indicator": self.indicator,
            "query": self.query,
            "source_id": self.source_id,
            "source_type": self.source_type,
            "keywords": self.keywords,
            "suitability": self.suitability.value,
            "adaptability": self.adaptability.value,
            "relevance_score": round(self.relevance_score, 4),
            "status": self.status.value,
        }


@dataclass(frozen=True)
class TypeTotals:
    total: int = 0
    achieved: int = 0
    relevant: int = 0
    not_achieved: int = 0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "achieved": self.achieved,
            "relevant": self.relevant,
            "not_achieved": self.not_achieved,
        }


@dataclass(frozen=True)
class IndicatorReport:
    rows: tuple[ReportRow, ...]
    totals: dict  # bucket name -> TypeTotals, including "Total"

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "totals": {k: v.to_dict() for k, v in self.totals.items()},
        }


def build_report(
    ledger: RefinementLedger,
    ratings: dict[str, IndicatorRatings],
    relevant_threshold: float = 0.2,
) -> IndicatorReport:
    """One row per indicator (ordered by id) plus per-source-type totals.

    ``ratings`` supplies the suitability/adaptability computed from the
    indicator's best query; indicators without a located source land in
    the Unknown bucket.
    """
    records = ledger.records()
    if not records:
        raise EmptyLedger("the refinement ledger has no records")

    rows = []
    counters = {bucket: [0, 0, 0, 0] for bucket in TYPE_BUCKETS}
    for serial, record in enumerate(records, start=1):
        rating = ratings.get(record.indicator_id)
        if rating is None:
            raise FactmineError(f"no ratings for indicator {record.indicator_id!r}")
        final = record.steps[-1]
        if record.achieved:
            status = ResultStatus.ACHIEVED
        elif rating.suitability.normalized_score >= relevant_threshold:
            status = ResultStatus.RELEVANT
        else:
            status = ResultStatus.NOT_ACHIEVED
        bucket = _TYPE_DISPLAY[rating.source_type]
        row = ReportRow(
            serial=serial,
            indicator=record.indicator_id,
            query=" ".join(final.query.indicator_terms),
            source_id=rating.source_id or "",
            source_type=bucket,
            keywords=" ".join(final.query.keywords),
            suitability=rating.suitability.level,
            adaptability=rating.adaptability.level,
            relevance_score=rating.suitability.normalized_score,
            status=status,
        )
        rows.append(row)
        c = counters[bucket]
        c[0] += 1
        c[1 if status is ResultStatus.ACHIEVED else 2 if status is ResultStatus.RELEVANT else 3] += 1

    totals = {bucket: TypeTotals(*counts) for bucket, counts in counters.items()}
    totals["Total"] = TypeTotals(
        total=sum(t.total for t in totals.values()),
        achieved=sum(t.achieved for t in totals.values()),
        relevant=sum(t.relevant for t in totals.values()),
        not_achieved=sum(t.not_achieved for t in totals.values()),
    )
    return IndicatorReport(rows=tuple(rows), totals=totals)


def report_to_csv(report: IndicatorReport) -> str:
    """The indicator grid as CSV with exactly the ten standard columns."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        writer.writerow(
            [
                row.serial,
                row.indicator,
                row.query,
                row.source_id,
                row.source_type,
                row.keywords,
                row.suitability.value,
                row.adaptability.value,
                f"{row.relevance_score:.2f}",
                _STATUS_DISPLAY[row.status],
            ]
        )
    return buf.getvalue()
