"""Turn raw HTML pages and PDF-extracted text blocks into sentences and tables.

HTML text is harvested from ``<p>``, headings and list items (table cells go
to :class:`TableGrid` instead); script/style/comment content is never
emitted. PDF ingestion works on a sidecar file of layout-annotated text
blocks produced by any external extractor: blocks whose rounded (y,
font size) position recurs on most pages are dropped as running
headers/footers, tiny-font blocks are dropped as furniture, and the rest is
read in (page, y, x) order and split into sentences.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from html.parser import HTMLParser
from pathlib import Path
from statistics import median

from .docmodel import FactmineError, Sentence, ValidationError
from .nlp import tokenize


class EmptySidecar(FactmineError):
    pass


class MalformedMarkup(FactmineError):
    pass


# Words after which a period does not end a sentence. Stored without the
# trailing period; single letters and dotted tokens ("e.g") are guarded by
# rule, not by list.
ABBREVIATIONS = {
    "approx", "no", "fig", "figs", "mr", "mrs", "ms", "dr", "prof", "vs",
    "etc", "est", "dept", "inc", "ltd", "co", "st", "jan", "feb", "mar",
    "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
}

_CLOSERS = "\"')]’”"


def _is_abbreviation(text: str, dot: int) -> bool:
    start = dot
    while start > 0 and (text[start - 1].isalnum() or text[start - 1] == "."):
        start -= 1
    word = text[start:dot]
    if not word or not any(c.isalpha() for c in word):
        return False
    return (
        word.lower() in ABBREVIATIONS
        or (len(word) == 1 and word.isalpha())
        or "." in word
    )


def _next_starts_sentence(text: str, pos: int) -> bool:
    k = pos
    while k < len(text) and text[k].isspace():
        k += 1
    if k == len(text):
        return True
    c = text[k]
    return c.isupper() or c.isdigit() or c in "\"'(“‘"


def segment_sentences(text: str) -> list[str]:
    """Split text on sentence-final punctuation.

    Periods after abbreviations, initials or inside numbers never split.
    Each returned sentence is a contiguous substring of the input; only
    whitespace lies between consecutive sentences.
    """
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] in ".!?":
            j = i + 1
            while j < n and (text[j] in ".!?" or text[j] in _CLOSERS):
                j += 1
            if (j >= n or text[j].isspace()) and _next_starts_sentence(text, j):
                if text[i] == "." and _is_abbreviation(text, i):
                    i += 1
                    continue
                piece = text[start:j].strip()
                if piece:
                    sentences.append(piece)
                start = j
                i = j
                continue
        i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# --- tables ----------------------------------------------------------------


@dataclass(frozen=True)
class CellEmphasis:
    is_th: bool = False
    is_bold: bool = False

    def to_dict(self) -> dict:
        return {"is_th": self.is_th, "is_bold": self.is_bold}

    @classmethod
    def from_dict(cls, d: dict) -> "CellEmphasis":
        return cls(is_th=bool(d.get("is_th")), is_bold=bool(d.get("is_bold")))


@dataclass(frozen=True)
class TableGrid:
    """One table as a grid of cell strings with optional span/emphasis info.

    ``rows`` may be ragged and carry rowspan/colspan anchors as parsed;
    :func:`normalize_grid` produces the rectangular physical grid used by
    the labeler.
    """

    doc_id: str
    rows: tuple[tuple[str, ...], ...]
    cell_spans: tuple[tuple[tuple[int, int], ...], ...] | None = None
    emphasis: tuple[tuple[CellEmphasis, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if self.cell_spans is not None:
            object.__setattr__(
                self, "cell_spans", tuple(tuple(tuple(s) for s in r) for r in self.cell_spans)
            )
        if self.emphasis is not None:
            object.__setattr__(self, "emphasis", tuple(tuple(r) for r in self.emphasis))

    def to_dict(self) -> dict:
        d: dict = {"doc_id": self.doc_id, "rows": [list(r) for r in self.rows]}
        if self.cell_spans is not None:
            d["cell_spans"] = [[list(s) for s in r] for r in self.cell_spans]
        if self.emphasis is not None:
            d["emphasis"] = [[e.to_dict() for e in r] for r in self.emphasis]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TableGrid":
        spans = d.get("cell_spans")
        emph = d.get("emphasis")
        return cls(
            doc_id=d.get("doc_id", ""),
            rows=tuple(tuple(r) for r in d["rows"]),
            cell_spans=tuple(tuple(tuple(s) for s in r) for r in spans) if spans else None,
            emphasis=tuple(tuple(CellEmphasis.from_dict(e) for e in r) for r in emph) if emph else None,
        )


def normalize_grid(grid: TableGrid) -> TableGrid:
    """Expand row/col spans into replicated cells and pad to a rectangle.

    Span anchors keep their (rowspan, colspan) in ``cell_spans``; covered
    and padded positions carry (1, 1).
    """
    rows: list[list[str]] = []
    spans: list[list[tuple[int, int]]] = []
    emph: list[list[CellEmphasis]] = []
    carry: dict[int, list] = {}  # col -> [remaining, text, emphasis]

    for r, logical in enumerate(grid.rows):
        out_text: list[str] = []
        out_span: list[tuple[int, int]] = []
        out_emph: list[CellEmphasis] = []
        cells = list(logical)
        cell_spans = list(grid.cell_spans[r]) if grid.cell_spans else [(1, 1)] * len(cells)
        cell_emph = list(grid.emphasis[r]) if grid.emphasis else [CellEmphasis()] * len(cells)
        ci = 0
        col = 0
        while ci < len(cells) or col in carry:
            if col in carry:
                remaining, text, e = carry[col]
                out_text.append(text)
                out_span.append((1, 1))
                out_emph.append(e)
                if remaining > 1:
                    carry[col][0] = remaining - 1
                else:
                    del carry[col]
                col += 1
                continue
            text = cells[ci]
            rs, cs = cell_spans[ci] if ci < len(cell_spans) else (1, 1)
            e = cell_emph[ci] if ci < len(cell_emph) else CellEmphasis()
            rs, cs = max(1, rs), max(1, cs)
            for k in range(cs):
                out_text.append(text)
                out_span.append((rs, cs) if k == 0 else (1, 1))
                out_emph.append(e)
                if rs > 1:
                    carry[col + k] = [rs - 1, text, e]
            col += cs
            ci += 1
        rows.append(out_text)
        spans.append(out_span)
        emph.append(out_emph)

    width = max((len(r) for r in rows), default=0)
    for r_text, r_span, r_emph in zip(rows, spans, emph):
        while len(r_text) < width:
            r_text.append("")
            r_span.append((1, 1))
            r_emph.append(CellEmphasis())

    return TableGrid(
        doc_id=grid.doc_id,
        rows=tuple(tuple(r) for r in rows),
        cell_spans=tuple(tuple(r) for r in spans),
        emphasis=tuple(tuple(r) for r in emph),
    )


# --- HTML ------------------------------------------------------------------

_TEXT_TAGS = {"p", "h1", "h2", "h3", "h4", "h5", "h6", "li"}
_SKIP_TAGS = {"script", "style"}
_VOID_BREAKS = {"br", "hr"}


class _PageParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.links: list[str] = []
        self.blocks: list[str] = []  # finished text blocks, document order
        self.tables: list[dict] = []  # finished table dicts
        self._skip_depth = 0
        self._text_stack: list[list[str]] = []
        self._table_stack: list[dict] = []

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
            return
        if tag == "a":
            href = dict(attrs).get("href")
            if href:
                self.links.append(href)
        if tag in _VOID_BREAKS:
            self._append_text(" ")
            return
        if tag == "table":
            self._table_stack.append({"rows": [], "spans": [], "emph": [], "cell": None})
            return
        if self._table_stack:
            table = self._table_stack[-1]
            if tag == "tr":
                table["rows"].append([])
                table["spans"].append([])
                table["emph"].append([])
            elif tag in ("td", "th"):
                attrs_d = dict(attrs)
                table["cell"] = {
                    "parts": [],
                    "rowspan": _int_attr(attrs_d.get("rowspan"), 1),
                    "colspan": _int_attr(attrs_d.get("colspan"), 1),
                    "is_th": tag == "th",
                    "is_bold": False,
                }
            elif tag in ("b", "strong") and table["cell"] is not None:
                table["cell"]["is_bold"] = True
            return
        if tag in _TEXT_TAGS:
            # browsers close an open <p>/<li> when a new block begins
            self._flush_text_blocks()
            self._text_stack.append([])

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if tag == "table" and self._table_stack:
            table = self._table_stack.pop()
            self._close_cell(table)
            if table["rows"]:
                self.tables.append(table)
            return
        if self._table_stack:
            table = self._table_stack[-1]
            if tag in ("td", "th", "tr"):
                self._close_cell(table)
            return
        if tag in _TEXT_TAGS and self._text_stack:
            self._flush_text_blocks()

    def _flush_text_blocks(self):
        while self._text_stack:
            parts = self._text_stack.pop()
            text = re.sub(r"\s+", " ", "".join(parts)).strip()
            if text:
                self.blocks.append(text)

    def close(self):
        super().close()
        self._flush_text_blocks()

    def handle_data(self, data):
        if self._skip_depth:
            return
        self._append_text(data)

    def _append_text(self, data: str):
        if self._table_stack:
            cell = self._table_stack[-1]["cell"]
            if cell is not None:
                cell["parts"].append(data)
            return
        if self._text_stack:
            self._text_stack[-1].append(data)

    def _close_cell(self, table: dict):
        cell = table.pop("cell", None)
        table["cell"] = None
        if cell is None or not table["rows"]:
            return
        text = re.sub(r"\s+", " ", "".join(cell["parts"])).strip()
        table["rows"][-1].append(text)
        table["spans"][-1].append((cell["rowspan"], cell["colspan"]))
        table["emph"][-1].append(CellEmphasis(is_th=cell["is_th"], is_bold=cell["is_bold"]))


def _int_attr(value, default: int) -> int:
    try:
        return max(1, int(value))
    except (TypeError, ValueError):
        return default


def parse_html(payload: bytes, doc_id: str = "") -> tuple[list[Sentence], list[TableGrid], list[str]]:
    """Parse an HTML page into sentences, table grids, and link targets.

    The parser recovers from sloppy markup the way browsers do; only
    undecodable input is an error (decoding uses UTF-8 with replacement,
    so in practice any byte string parses).
    """
    text = payload.decode("utf-8", errors="replace")
    parser = _PageParser()
    try:
        parser.feed(text)
        parser.close()
    except Exception as exc:  # html.parser rarely raises; treat it as fatal markup
        raise MalformedMarkup(str(exc)) from exc

    sentences: list[Sentence] = []
    for block in parser.blocks:
        for piece in segment_sentences(block):
            sentences.append(
                Sentence(
                    doc_id=doc_id,
                    ordinal=len(sentences),
                    text=piece,
                    tokens=tuple(tokenize(piece)),
                )
            )
    tables = [
        TableGrid(
            doc_id=doc_id,
            rows=tuple(tuple(r) for r in t["rows"]),
            cell_spans=tuple(tuple(r) for r in t["spans"]),
            emphasis=tuple(tuple(r) for r in t["emph"]),
        )
        for t in parser.tables
    ]
    return sentences, tables, parser.links


# --- PDF sidecar -----------------------------------------------------------


class Direction(str, Enum):
    LTR = "LTR"
    TTB = "TTB"


@dataclass(frozen=True)
class PdfBlock:
    text: str
    page: int
    x: float
    y: float
    font_size: float
    direction: Direction = Direction.LTR

    def __post_init__(self):
        if self.page < 1:
            raise ValidationError("page must be >= 1")
        if self.font_size <= 0:
            raise ValidationError("font_size must be > 0")
        if not isinstance(self.direction, Direction):
            object.__setattr__(self, "direction", Direction(self.direction))

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "page": self.page,
            "x": self.x,
            "y": self.y,
            "font_size": self.font_size,
            "direction": self.direction.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PdfBlock":
        return cls(
            text=d["text"],
            page=int(d["page"]),
            x=float(d["x"]),
            y=float(d["y"]),
            font_size=float(d["font_size"]),
            direction=Direction(d.get("direction", "LTR")),
        )


@dataclass(frozen=True)
class PdfSidecar:
    blocks: tuple[PdfBlock, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @classmethod
    def load(cls, path: Path | str) -> "PdfSidecar":
        blocks = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    blocks.append(PdfBlock.from_dict(json.loads(line)))
        return cls(blocks=tuple(blocks))

    @classmethod
    def loads(cls, text: str) -> "PdfSidecar":
        blocks = [
            PdfBlock.from_dict(json.loads(line))
            for line in text.splitlines()
            if line.strip()
        ]
        return cls(blocks=tuple(blocks))


@dataclass(frozen=True)
class IngestConfig:
    """Layout-filter thresholds for PDF sidecar ingestion."""

    repeat_page_fraction: float = 0.8
    min_font_ratio: float = 0.7


def ingest_pdf_sidecar(
    sidecar: PdfSidecar, doc_id: str = "", config: IngestConfig | None = None
) -> list[Sentence]:
    """Drop running headers/footers and furniture, then emit body sentences.

    A block is a running header/footer when the same text at the same
    rounded (y, font size) recurs on at least ``repeat_page_fraction`` of
    the pages (never on single-page documents); blocks set below
    ``min_font_ratio`` of the median font size are dropped as well.
    """
    config = config or IngestConfig()
    if not sidecar.blocks:
        raise EmptySidecar("sidecar contains no blocks")

    blocks = sorted(sidecar.blocks, key=lambda b: (b.page, b.y, b.x, b.text))
    pages = {b.page for b in blocks}
    n_pages = len(pages)

    dropped: set[int] = set()
    if n_pages >= 2:
        groups: dict[tuple[str, int, int], set[int]] = {}
        key = lambda b: (b.text.strip(), round(b.y), round(b.font_size))
        for b in blocks:
            groups.setdefault(key(b), set()).add(b.page)
        for i, b in enumerate(blocks):
            if len(groups[key(b)]) >= config.repeat_page_fraction * n_pages:
                dropped.add(i)

    body_fonts = [b.font_size for i, b in enumerate(blocks) if i not in dropped]
    median_font = median(body_fonts) if body_fonts else median(b.font_size for b in blocks)
    for i, b in enumerate(blocks):
        if b.font_size < config.min_font_ratio * median_font:
            dropped.add(i)

    body = " ".join(b.text.strip() for i, b in enumerate(blocks) if i not in dropped and b.text.strip())
    sentences = []
    for piece in segment_sentences(body):
        sentences.append(
            Sentence(
                doc_id=doc_id,
                ordinal=len(sentences),
                text=piece,
                tokens=tuple(tokenize(piece)),
            )
        )
    return sentences
