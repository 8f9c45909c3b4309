import itertools

import pytest
from hypothesis import given, strategies as st

from factmine.assess import (
    AdaptabilityRating,
    DependenceLevel,
    EmptyLedger,
    IndicatorRatings,
    OutOfRange,
    ResultStatus,
    SuitabilityLevel,
    SuitabilityRating,
    adaptability,
    build_report,
    categorize_suitability,
    data_dependence,
    query_dependence,
    report_to_csv,
    result_status,
)
from factmine.docmodel import AccessClass, RelevanceScore, SourceType
from factmine.index import ScoredHit
from factmine.query import RefinementLedger, formulate

L, M, H = DependenceLevel.L, DependenceLevel.M, DependenceLevel.H


def hit(normalized, raw=5.0):
    return ScoredHit(
        unit_id="u", doc_id="D1", source_type=SourceType.HTML,
        score=RelevanceScore(raw=raw, normalized=normalized),
    )


# --- suitability ------------------------------------------------------------------


def test_suitability_bands():
    assert categorize_suitability(0.73) is SuitabilityLevel.HIGH
    assert categorize_suitability(0.30) is SuitabilityLevel.LOW
    assert categorize_suitability(0.45) is SuitabilityLevel.MEDIUM


def test_suitability_band_edges():
    assert categorize_suitability(0.0) is SuitabilityLevel.LOW
    assert categorize_suitability(0.4) is SuitabilityLevel.MEDIUM
    assert categorize_suitability(0.7) is SuitabilityLevel.HIGH
    assert categorize_suitability(1.0) is SuitabilityLevel.HIGH


def test_suitability_out_of_range():
    with pytest.raises(OutOfRange):
        categorize_suitability(-0.01)
    with pytest.raises(OutOfRange):
        categorize_suitability(1.01)


@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
def test_suitability_monotone(s1, s2):
    if s1 > s2:
        s1, s2 = s2, s1
    assert not categorize_suitability(s2) < categorize_suitability(s1)


# --- dependences -------------------------------------------------------------------


def test_query_dependence_levels():
    assert query_dependence(0) is L
    assert query_dependence(1) is M
    assert query_dependence(7) is H


def test_data_dependence_levels():
    assert data_dependence(AccessClass.OPEN, False) is L
    assert data_dependence(AccessClass.OPEN, True) is M
    assert data_dependence(AccessClass.SUBSCRIPTION, True) is H
    assert data_dependence(AccessClass.SOURCE_SPECIFIC, False) is M


def test_adaptability_matrix():
    assert adaptability(L, L) is H
    assert adaptability(H, M) is L
    assert adaptability(M, M) is M
    assert adaptability(L, H) is L
    assert adaptability(H, L) is M
    assert adaptability(H, H) is L


def test_adaptability_antitone():
    order = {L: 0, M: 1, H: 2}
    for qd, dd in itertools.product((L, M, H), repeat=2):
        for qd2, dd2 in itertools.product((L, M, H), repeat=2):
            if order[qd2] >= order[qd] and order[dd2] >= order[dd]:
                assert order[adaptability(qd2, dd2)] <= order[adaptability(qd, dd)]


# --- status -------------------------------------------------------------------------


def test_status_achieved_flag_wins():
    assert result_status([], True) is ResultStatus.ACHIEVED


def test_status_no_hits_not_achieved():
    assert result_status([], False) is ResultStatus.NOT_ACHIEVED


def test_status_relevant_above_threshold():
    assert result_status([hit(0.28)], False) is ResultStatus.RELEVANT
    assert result_status([hit(0.1)], False) is ResultStatus.NOT_ACHIEVED


# --- report -------------------------------------------------------------------------


def ratings_for(score, qd=L, dd=L, source_id="D1", source_type=SourceType.HTML):
    return IndicatorRatings(
        suitability=SuitabilityRating.from_score(score),
        adaptability=AdaptabilityRating.from_dependences(qd, dd),
        source_id=source_id,
        source_type=source_type,
    )


def test_build_report_totals_and_unknown_bucket(tmp_path):
    ledger = RefinementLedger(tmp_path / "ledger.jsonl")
    ratings = {}
    for i in range(3):
        name = f"html-{i}"
        ledger.record_step(name, formulate("cotton area"), 5.0, True)
        ratings[name] = ratings_for(0.8)
    for i in range(2):
        name = f"pdf-{i}"
        ledger.record_step(name, formulate("cotton exports"), 4.0, False)
        ratings[name] = ratings_for(0.5, source_type=SourceType.PDF_TEXT, source_id="D3")
    name = "table-0"
    ledger.record_step(name, formulate("production"), 3.0, True)
    ratings[name] = ratings_for(0.9, source_type=SourceType.TABLE, source_id="D6")
    for i in range(4):
        name = f"missing-{i}"
        ledger.record_step(name, formulate("phantom thing"), 0.0, False)
        ratings[name] = ratings_for(0.0, source_id=None, source_type=None)

    report = build_report(ledger, ratings)
    assert len(report.rows) == 10
    totals = report.totals
    assert totals["Total"].total == 10
    assert totals["Unknown"].total == 4
    assert totals["Unknown"].not_achieved == 4
    for bucket in ("HTML", "PDF", "Table", "Unknown"):
        t = totals[bucket]
        assert t.achieved + t.relevant + t.not_achieved == t.total
    assert sum(totals[b].total for b in ("HTML", "PDF", "Table", "Unknown")) == 10


def test_build_report_empty_ledger_errors(tmp_path):
    with pytest.raises(EmptyLedger):
        build_report(RefinementLedger(tmp_path / "ledger.jsonl"), {})


def test_report_rows_ordered_and_statuses(tmp_path):
    ledger = RefinementLedger(tmp_path / "ledger.jsonl")
    ledger.record_step("b-relevant", formulate("water use"), 2.0, False)
    ledger.record_step("a-achieved", formulate("cotton area planted", keywords="ha"), 5.0, True)
    ratings = {
        "a-achieved": ratings_for(0.59, qd=L, dd=L),
        "b-relevant": ratings_for(0.28, source_type=SourceType.PDF_TEXT),
    }
    report = build_report(ledger, ratings)
    assert [r.indicator for r in report.rows] == ["a-achieved", "b-relevant"]
    assert report.rows[0].status is ResultStatus.ACHIEVED
    assert report.rows[1].status is ResultStatus.RELEVANT
    assert report.rows[0].keywords == "ha"


def test_report_csv_columns(tmp_path):
    ledger = RefinementLedger(tmp_path / "ledger.jsonl")
    ledger.record_step("area-of-cotton-planted", formulate("cotton area planted 2016", keywords="ha"), 5.0, True)
    report = build_report(ledger, {"area-of-cotton-planted": ratings_for(0.59)})
    csv_text = report_to_csv(report)
    lines = csv_text.splitlines()
    assert lines[0] == (
        "S.No,Indicator,Query,Data source,Source Type,Added Keywords,"
        "Suitability,Adaptability,Relevance score,Result achieved"
    )
    assert lines[1] == "1,area-of-cotton-planted,cotton area planted 2016,D1,HTML,ha,M,H,0.59,Y"


def test_rating_consistency_enforced():
    with pytest.raises(OutOfRange):
        SuitabilityRating(level=SuitabilityLevel.HIGH, normalized_score=0.1)
    with pytest.raises(OutOfRange):
        AdaptabilityRating(query_dep=L, data_dep=L, level=DependenceLevel.L)
