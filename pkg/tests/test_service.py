import json

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from factmine.cli import main
from factmine.repository import Repository
from factmine.service import create_app

HTML_DOC = "<p>Dryland cotton yield reached 4.2 bales in 2017.</p>"


@pytest.fixture
def client(corpus_repo):
    return TestClient(create_app(corpus_repo))


def test_search_endpoint_returns_hits(client):
    resp = client.get("/v1/search", params={"q": "irrigated planted area"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["top_raw_score"] > 0
    assert body["hits"]
    top = body["hits"][0]
    assert top["fields"]["unit"] == "hectares"
    assert {"raw", "normalized"} <= set(top["score"])


def test_search_hits_carry_provenance(client):
    resp = client.get("/v1/search", params={"q": "cotton exports", "keywords": "tonnes"})
    top = resp.json()["hits"][0]
    assert top["doc_id"]
    assert top["origin"]["kind"] in ("sentence", "cell")
    if top["origin"]["kind"] == "sentence":
        assert isinstance(top["origin"]["ordinal"], int)
        assert top["highlights"].get("value")
        s, e = top["highlights"]["value"]
        assert top["fields"]["text"].encode("utf-8")[s:e].decode("utf-8") == "2.3 million"
    assert all(set(ent) == {"kind", "text", "span"} for ent in top["entities"])


def test_search_source_filter_and_unknown_source(client):
    resp = client.get("/v1/search", params={"q": "cotton stubble", "source": "D4"})
    assert resp.status_code == 200
    assert all(h["doc_id"] == "D4" for h in resp.json()["hits"])

    resp = client.get("/v1/search", params={"q": "cotton stubble", "source": "D99"})
    assert resp.status_code == 404
    assert resp.json()["code"] == "UnknownSourceFilter"


def test_search_blank_query_is_400(client):
    resp = client.get("/v1/search", params={"q": "   "})
    assert resp.status_code == 400
    assert resp.json()["code"] == "BlankIndicator"


def test_post_source_ingests_and_indexes(client):
    resp = client.post(
        "/v1/sources",
        json={"type": "html", "uri": "https://new.example.org/page", "id": "D7",
              "payload": HTML_DOC, "title": "New page",
              "retrieved_at": "2016-09-01T00:00:00+00:00"},
    )
    assert resp.status_code == 201
    body = resp.json()
    assert body["document"]["id"] == "D7"
    assert body["counts"]["sentences"] == 1
    assert body["counts"]["units"] >= 1

    found = client.get("/v1/search", params={"q": "dryland cotton yield"}).json()
    assert any(h["doc_id"] == "D7" for h in found["hits"])


def test_post_source_duplicate_id_is_409(client):
    payload = {"type": "html", "uri": "https://dup.example.org", "id": "D8", "payload": HTML_DOC}
    assert client.post("/v1/sources", json=payload).status_code == 201
    resp = client.post("/v1/sources", json=payload)
    assert resp.status_code == 409
    assert resp.json()["code"] == "DuplicateId"


def test_refinement_flow_and_idempotency(client):
    body = {
        "indicator_id": "cotton-exports",
        "indicator": "Cotton exports",
        "achieved": False,
        "idempotency_key": "step-1",
    }
    first = client.post("/v1/refinements", json=body)
    assert first.status_code == 201
    assert first.json()["record"]["redefinition_count"] == 0

    again = client.post("/v1/refinements", json=body)
    assert len(again.json()["record"]["steps"]) == 1

    second = client.post(
        "/v1/refinements",
        json={"indicator_id": "cotton-exports", "indicator": "Cotton exports",
              "keywords": "tonnes", "achieved": True, "idempotency_key": "step-2"},
    )
    record = second.json()["record"]
    assert record["redefinition_count"] == 1
    assert record["steps"][1]["top_raw_score"] > record["steps"][0]["top_raw_score"]

    listing = client.get("/v1/indicators").json()["indicators"]
    assert any(r["indicator_id"] == "cotton-exports" for r in listing)


def test_report_empty_ledger_is_200(client):
    resp = client.get("/v1/report")
    assert resp.status_code == 200
    assert resp.json() == {"rows": [], "totals": {}}


def test_report_json_and_csv(client):
    client.post("/v1/refinements", json={
        "indicator_id": "irrigated-planted-area", "indicator": "Irrigated planted area",
        "achieved": True,
    })
    body = client.get("/v1/report").json()
    assert len(body["rows"]) == 1
    assert body["totals"]["Total"]["total"] == 1

    csv_resp = client.get("/v1/report", params={"format": "csv"})
    assert csv_resp.status_code == 200
    assert csv_resp.headers["content-type"].startswith("text/csv")
    assert csv_resp.text.splitlines()[0].startswith("S.No,Indicator,Query")
    assert len(csv_resp.text.splitlines()) == 2


# --- CLI ------------------------------------------------------------------------


def test_cli_unknown_subcommand_exits_2():
    result = CliRunner().invoke(main, ["frobnicate"])
    assert result.exit_code == 2


def test_cli_usage_error_exits_2():
    result = CliRunner().invoke(main, ["ingest", "--type", "html"])  # missing --uri and FILE
    assert result.exit_code == 2


def test_cli_search_and_report(corpus_repo):
    runner = CliRunner()
    root = str(corpus_repo.root)
    result = runner.invoke(main, ["--repo", root, "search", "cotton exports", "--keywords", "tonnes"])
    assert result.exit_code == 0
    assert "top raw score:" in result.output
    assert "tonnes" in result.output

    result = runner.invoke(main, ["--repo", root, "refine", "cotton-exports", "Cotton exports",
                                  "--keywords", "tonnes", "--achieved"])
    assert result.exit_code == 0

    result = runner.invoke(main, ["--repo", root, "report", "--format", "csv"])
    assert result.exit_code == 0
    assert result.output.splitlines()[0].startswith("S.No,")


def test_cli_snapshot_round_trip(corpus_repo, tmp_path):
    runner = CliRunner()
    out = tmp_path / "snap.json"
    result = runner.invoke(main, ["--repo", str(corpus_repo.root), "snapshot", str(out)])
    assert result.exit_code == 0
    from factmine.index import InvertedIndex

    fresh = InvertedIndex()
    fresh.load(out)
    assert len(fresh) == len(corpus_repo.index)


def test_cli_tablelabel_train_and_apply(tmp_path):
    examples = [
        {
            "grid": {"doc_id": "t", "rows": [["Year", "Area"], ["2016", "1518"], ["2017", "1640"]]},
            "labels": ["COLUMN_HEADER", "DATA", "DATA"],
        }
    ]
    infile = tmp_path / "examples.jsonl"
    infile.write_text("\n".join(json.dumps(e) for e in examples) + "\n")
    model_file = tmp_path / "model.json"
    runner = CliRunner()
    result = runner.invoke(main, ["tablelabel", "train", "--in", str(infile), "--out", str(model_file)])
    assert result.exit_code == 0, result.output

    table_file = tmp_path / "table.json"
    table_file.write_text(json.dumps({"doc_id": "t", "rows": [["Year", "Area"], ["2016", "1518"]]}))
    result = runner.invoke(main, ["tablelabel", "apply", "--model", str(model_file), str(table_file)])
    assert result.exit_code == 0, result.output
    first = json.loads(result.output.splitlines()[0])
    assert first["labels"] == ["COLUMN_HEADER", "DATA"]


def test_cli_extract_standalone_sentences_file(tmp_path):
    from factmine.docmodel import Sentence
    from factmine.nlp import tokenize

    text = "The average hectares planted per participant increased slightly 1,518 hectares."
    s = Sentence(doc_id="X", ordinal=0, text=text, tokens=tuple(tokenize(text)))
    infile = tmp_path / "sentences.jsonl"
    infile.write_text(json.dumps(s.to_dict()) + "\n")
    result = CliRunner().invoke(main, ["extract", str(infile)])
    assert result.exit_code == 0, result.output
    record = json.loads(result.output.splitlines()[0])
    assert record["indicator_phrase"] == "planted per participant"
    assert record["value"] == "1518"
    assert record["unit"] == "hectares"
