"""Command-line interface: ingest, extract, search, refine, report, serve.

Every subcommand is a thin wrapper over the repository operations. Exit
status is 0 on success, 1 on a domain error (message on stderr), 2 on
usage errors.
"""

from __future__ import annotations

import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from .assess import report_to_csv
from .docmodel import FactmineError, read_jsonl, Sentence
from .ingest import TableGrid
from .nlp import ChunkGrammar, Gazetteer, chunk_extract
from .repository import Repository
from .tablelabel import LabelerModel, LineLabel, resolve_cells, train_labeler, viterbi_label

_ACCESS = {"open": "OPEN", "source-specific": "SOURCE_SPECIFIC", "subscription": "SUBSCRIPTION"}
_TYPES = {"html": "HTML", "pdf-text": "PDF_TEXT", "table": "TABLE"}


def _open_repo(ctx, create: bool = False) -> Repository:
    return Repository(ctx.obj["repo"], create=create)


@click.group()
@click.option(
    "--repo",
    envvar="FACTMINE_REPO",
    default="repo",
    show_default=True,
    help="Repository directory.",
)
@click.pass_context
def main(ctx, repo):
    """Extract indicator facts from documents and query them."""
    ctx.ensure_object(dict)
    ctx.obj["repo"] = repo


@main.command()
@click.option("--type", "source_type", type=click.Choice(sorted(_TYPES)), required=True)
@click.option("--uri", required=True)
@click.option("--access", type=click.Choice(sorted(_ACCESS)), default="open", show_default=True)
@click.option("--id", "doc_id", default=None, help="Document id (derived from the URI if omitted).")
@click.option("--title", default="")
@click.option(
    "--retrieved-at",
    envvar="FACTMINE_RETRIEVED_AT",
    default=None,
    help="ISO timestamp to record instead of now (for reproducible runs).",
)
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def ingest(ctx, source_type, uri, access, doc_id, title, retrieved_at, file):
    """Ingest one document payload into the repository."""
    repo = _open_repo(ctx, create=True)
    ts = datetime.fromisoformat(retrieved_at) if retrieved_at else None
    if ts is not None and ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    doc, counts = repo.ingest_document(
        source_type=_TYPES[source_type],
        uri=uri,
        payload=Path(file).read_bytes(),
        doc_id=doc_id,
        title=title,
        access_class=_ACCESS[access],
        retrieved_at=ts,
    )
    click.echo(f"ingested {doc.id} ({source_type}): "
               f"{counts['sentences']} sentences, {counts['tables']} tables, {counts['links']} links")


@main.command()
@click.option("--grammar", type=click.Path(exists=True), default=None)
@click.option("--gazetteer", type=click.Path(exists=True), default=None)
@click.argument("sentences_file", required=False, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def extract(ctx, grammar, gazetteer, sentences_file):
    """Run chunking over repository documents, or over a sentences file.

    With SENTENCES_FILE (JSON-lines of sentences), extraction records are
    printed to stdout instead of touching the repository.
    """
    g = ChunkGrammar.load(grammar) if grammar else None
    z = Gazetteer.load(gazetteer) if gazetteer else None
    if sentences_file:
        for sentence in read_jsonl(sentences_file, Sentence.from_dict):
            for record in chunk_extract(sentence, g, z):
                click.echo(json.dumps(record.to_dict(), ensure_ascii=False))
        return
    repo = _open_repo(ctx)
    if g is not None:
        repo.grammar = g
    if z is not None:
        repo.gazetteer = z
    counts = repo.extract_all()
    click.echo(f"extracted {counts['extractions']} records into {counts['units']} units")


def _print_hits(hits, top_raw):
    click.echo(f"top raw score: {top_raw:.4f}")
    for rank, hit in enumerate(hits, start=1):
        fields = hit["fields"]
        score = hit["score"]
        triple = " | ".join(
            p for p in (fields.get("indicator"), fields.get("value"), fields.get("unit")) if p
        )
        click.echo(
            f"{rank:2d}. [{score['raw']:8.4f} {score['normalized']:.3f}] "
            f"{hit['unit_id']} ({hit['doc_id']}, {hit['source_type']})"
        )
        if triple:
            click.echo(f"      {triple}")
        click.echo(f"      {fields.get('text', '')}")


@main.command()
@click.argument("indicator")
@click.option("--keywords", default=None)
@click.option("--source", default=None)
@click.option("--limit", default=10, show_default=True)
@click.pass_context
def search(ctx, indicator, keywords, source, limit):
    """Search the index with indicator terms plus optional keywords."""
    repo = _open_repo(ctx)
    _, hits, top_raw = repo.search(indicator, keywords, source, limit=limit)
    _print_hits(hits, top_raw)


@main.command()
@click.argument("indicator")
@click.option("--keywords", default=None)
@click.option("--source", default=None)
@click.option("--indicator-id", default=None, help="Ledger id (defaults to the indicator text).")
@click.option("--mark-achieved", is_flag=True, default=False)
@click.option("--limit", default=10, show_default=True)
@click.pass_context
def query(ctx, indicator, keywords, source, indicator_id, mark_achieved, limit):
    """Search and record the attempt as a refinement step."""
    repo = _open_repo(ctx)
    _, hits, top_raw = repo.search(indicator, keywords, source, limit=limit)
    _print_hits(hits, top_raw)
    record = repo.record_refinement(
        indicator_id=indicator_id or indicator,
        indicator=indicator,
        keywords=keywords,
        source=source,
        achieved=mark_achieved,
    )
    click.echo(
        f"recorded step {len(record['steps'])} for {record['indicator_id']!r} "
        f"(redefinitions: {record['redefinition_count']})"
    )


@main.command()
@click.argument("indicator_id")
@click.argument("indicator")
@click.option("--keywords", default=None)
@click.option("--source", default=None)
@click.option("--achieved/--not-achieved", default=False)
@click.pass_context
def refine(ctx, indicator_id, indicator, keywords, source, achieved):
    """Record one refinement step for an indicator."""
    repo = _open_repo(ctx)
    record = repo.record_refinement(
        indicator_id=indicator_id,
        indicator=indicator,
        keywords=keywords,
        source=source,
        achieved=achieved,
    )
    click.echo(json.dumps(record, ensure_ascii=False))


@main.command()
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.pass_context
def report(ctx, fmt):
    """Emit the indicator suitability/adaptability report."""
    repo = _open_repo(ctx)
    result = repo.report()
    if fmt == "csv":
        click.echo(report_to_csv(result), nl=False)
    else:
        click.echo(json.dumps(result.to_dict(), indent=2, ensure_ascii=False))


@main.command()
@click.argument("out", type=click.Path(dir_okay=False))
@click.pass_context
def snapshot(ctx, out):
    """Write the index to a snapshot file."""
    repo = _open_repo(ctx)
    repo.index.snapshot(out)
    click.echo(f"wrote {len(repo.index)} units to {out}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
@click.pass_context
def serve(ctx, host, port):
    """Serve the HTTP API."""
    import uvicorn

    from .service import create_app

    repo = _open_repo(ctx, create=True)
    uvicorn.run(create_app(repo), host=host, port=port, log_level="warning")


@main.group()
def tablelabel():
    """Train or apply the table line labeler."""


@tablelabel.command()
@click.option("--in", "infile", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "outfile", required=True, type=click.Path(dir_okay=False))
@click.option("--epochs", default=5, show_default=True)
def train(infile, outfile, epochs):
    """Train from JSON-lines of {"grid": .., "labels": [..]} examples."""
    examples = []
    with open(infile, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            grid = TableGrid.from_dict(entry["grid"])
            labels = [LineLabel(l) for l in entry["labels"]]
            examples.append((grid, labels))
    model = train_labeler(examples, epochs=epochs)
    model.save(outfile)
    click.echo(f"trained on {len(examples)} examples -> {outfile}")


@tablelabel.command()
@click.option("--model", "model_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.argument("table_file", type=click.Path(exists=True, dir_okay=False))
def apply(model_file, table_file):
    """Label a table file and print the resolved cells."""
    model = LabelerModel.load(model_file) if model_file else None
    with open(table_file, "r", encoding="utf-8") as fh:
        grid = TableGrid.from_dict(json.load(fh))
    labels = viterbi_label(grid, model)
    click.echo(json.dumps({"labels": [l.value for l in labels]}))
    for cell in resolve_cells(grid, labels):
        click.echo(json.dumps(cell.to_dict(), ensure_ascii=False))


def entrypoint(argv=None):
    try:
        main(args=argv, standalone_mode=True)
    except FactmineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
