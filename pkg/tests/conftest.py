import shutil
from datetime import datetime, timezone
from pathlib import Path

import pytest

from factmine.docmodel import AccessClass, SourceType
from factmine.repository import Repository

FIXTURES = Path(__file__).parent / "fixtures"
RETRIEVED_AT = datetime(2016, 9, 1, tzinfo=timezone.utc)

CORPUS = [
    ("D1", SourceType.HTML, "https://cotton.example.org/overview",
     "Cotton industry overview", AccessClass.OPEN, "d1_overview.html"),
    ("D2", SourceType.PDF_TEXT, "https://archive.example.org/grower-survey-2016.pdf",
     "Grower Survey 2016", AccessClass.OPEN, "d2_grower_survey.pdftext.jsonl"),
    ("D3", SourceType.PDF_TEXT, "https://outlook.example.org/commodities.pdf",
     "Commodities Outlook", AccessClass.OPEN, "d3_outlook.pdftext.jsonl"),
    ("D4", SourceType.PDF_TEXT, "https://members.example.org/practices.pdf",
     "Management Practices Report", AccessClass.SUBSCRIPTION, "d4_practices.pdftext.jsonl"),
    ("D5", SourceType.HTML, "https://stats.example.org/cotton",
     "Farm statistics series", AccessClass.OPEN, "d5_stats.html"),
    ("D6", SourceType.TABLE, "https://yearbook.example.org/production-table",
     "Production yearbook table", AccessClass.OPEN, "d6_production.table.json"),
]


def build_corpus(root: Path) -> Repository:
    repo = Repository(root, create=True)
    for doc_id, source_type, uri, title, access, filename in CORPUS:
        repo.ingest_document(
            source_type=source_type,
            uri=uri,
            payload=(FIXTURES / filename).read_bytes(),
            doc_id=doc_id,
            title=title,
            access_class=access,
            retrieved_at=RETRIEVED_AT,
        )
    repo.extract_all()
    return repo


@pytest.fixture(scope="session")
def corpus_repo_path(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("corpus") / "repo"
    build_corpus(root)
    return root


@pytest.fixture
def corpus_repo(corpus_repo_path, tmp_path) -> Repository:
    """A private, mutable copy of the fixture corpus repository."""
    root = tmp_path / "repo"
    shutil.copytree(corpus_repo_path, root)
    return Repository(root)
