"""Tokenization, POS tagging, phrase chunking and rule-based entity tagging.

The pipeline is deliberately deterministic: a small closed-class lexicon
plus suffix rules for POS tags, a configurable grammar of regular
expressions over tag sequences for (indicator, value, unit) chunks, and
gazetteer/pattern rules for the seven entity kinds. Grammar and gazetteer
are data files under ``resources/``, not code.

Chunk matching applies two phrase-boundary refinements on top of the raw
regex captures:

* an indicator phrase is cut after the last unit word it contains, so a
  phrase never straddles an earlier quantity's unit mention;
* a run of plain verbs (no adverbs, no auxiliaries) sitting between the
  indicator capture and the value is folded into the indicator, keeping
  mentions like "Exports reached 2.3 million tonnes" intact.
"""

from __future__ import annotations

import json
import re
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from decimal import Decimal
from functools import lru_cache
from importlib import resources as importlib_resources
from pathlib import Path

from .docmodel import Entity, EntityKind, ExtractionRecord, FactmineError, Sentence, Token

_NUMBER_RE = re.compile(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?")
_TOKEN_RE = re.compile(
    r"\d{1,3}(?:,\d{3})+(?:\.\d+)?"  # grouped number, optional decimals
    r"|\d+(?:\.\d+)?"               # plain number
    r"|[A-Za-z]+(?:['’-][A-Za-z]+)*"  # word, internal apostrophe/hyphen
    r"|[^\sA-Za-z0-9]"              # single punctuation character
)
_SCALE_WORDS = {"thousand": 3, "million": 6, "billion": 9}
_AUXILIARIES = {
    "is", "are", "was", "were", "be", "been", "being",
    "has", "have", "had", "do", "does", "did",
}


class NotANumber(FactmineError):
    pass


class GrammarError(FactmineError):
    pass


def _resource_path(name: str) -> Path:
    return Path(str(importlib_resources.files("factmine").joinpath("resources", name)))


@dataclass(frozen=True)
class Gazetteer:
    """Unit surface forms with canonical names, plus entity term lists.

    All lookups are case-insensitive; multi-word surfaces are stored
    lowercased with single spaces.
    """

    units: dict[str, str]
    locations: frozenset[str]
    organizations: frozenset[str]
    persons: frozenset[str]
    month_names: frozenset[str]
    time_words: frozenset[str]

    @classmethod
    def from_dict(cls, d: dict) -> "Gazetteer":
        norm = lambda terms: frozenset(" ".join(t.lower().split()) for t in terms)
        return cls(
            units={k.lower(): v for k, v in d.get("units", {}).items()},
            locations=norm(d.get("locations", [])),
            organizations=norm(d.get("organizations", [])),
            persons=norm(d.get("persons", [])),
            month_names=norm(d.get("month_names", [])),
            time_words=norm(d.get("time_words", [])),
        )

    @classmethod
    def load(cls, path: Path | str) -> "Gazetteer":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def canonical_unit(self, surface: str) -> str | None:
        return self.units.get(" ".join(surface.lower().split()))


@lru_cache(maxsize=1)
def default_gazetteer() -> Gazetteer:
    return Gazetteer.load(_resource_path("gazetteer.json"))


@lru_cache(maxsize=1)
def _lexicon() -> dict[str, str]:
    with open(_resource_path("lexicon.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)


def _byte_offsets(text: str) -> list[int]:
    """offsets[i] = byte offset of character i in the UTF-8 encoding."""
    offsets = [0]
    for ch in text:
        offsets.append(offsets[-1] + len(ch.encode("utf-8")))
    return offsets


def tokenize(text: str, unit_forms=None) -> list[Token]:
    """Split on whitespace/punctuation, keeping grouped numbers ("1,518")
    and slash-joined unit compounds ("ha/farm", "mm/year") whole.

    ``unit_forms`` is the set of unit surface forms used for the slash
    rule; it defaults to the packaged gazetteer's units.
    """
    if unit_forms is None:
        unit_forms = default_gazetteer().units
    offsets = _byte_offsets(text)
    raw = [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]

    merged: list[tuple[str, int, int]] = []
    i = 0
    while i < len(raw):
        if (
            i + 2 < len(raw)
            and raw[i + 1][0] == "/"
            and raw[i][2] == raw[i + 1][1]  # adjacent, no whitespace
            and raw[i + 1][2] == raw[i + 2][1]
        ):
            compound = f"{raw[i][0]}/{raw[i + 2][0]}".lower()
            if compound in unit_forms or (
                raw[i][0].lower() in unit_forms and raw[i + 2][0].lower() in unit_forms
            ):
                merged.append((text[raw[i][1]:raw[i + 2][2]], raw[i][1], raw[i + 2][2]))
                i += 3
                continue
        merged.append(raw[i])
        i += 1

    return [Token(text=t, span=(offsets[s], offsets[e])) for t, s, e in merged]


def pos_tag(tokens, gaz: Gazetteer | None = None) -> list[Token]:
    """Assign one Penn-style tag per token.

    Cascade: closed-class lexicon, unit gazetteer (NN, or NNS for plural
    surfaces), numeric pattern (CD), suffix rules, default NN.
    Punctuation tokens are tagged as themselves.
    """
    gaz = gaz or default_gazetteer()
    lexicon = _lexicon()
    tagged = []
    for tok in tokens:
        low = tok.text.lower()
        if low in lexicon:
            tag = lexicon[low]
        elif low in gaz.units:
            tag = "NNS" if low.endswith("s") and len(low) > 2 else "NN"
        elif _NUMBER_RE.fullmatch(tok.text):
            tag = "CD"
        elif not any(c.isalnum() for c in tok.text):
            tag = tok.text
        elif low.endswith("ed") and len(low) >= 4:
            tag = "VBN"
        elif low.endswith("ing") and len(low) >= 5:
            tag = "VBG"
        elif low.endswith("ly") and len(low) >= 4:
            tag = "RB"
        elif low.endswith("s") and len(low) >= 4 and not low.endswith("ss"):
            tag = "NNS"
        else:
            tag = "NN"
        tagged.append(Token(text=tok.text, span=tok.span, pos=tag))
    return tagged


def tag_sentence(sentence: Sentence, gaz: Gazetteer | None = None) -> Sentence:
    """Return the sentence with POS-tagged tokens (tokenizing if needed)."""
    tokens = list(sentence.tokens) or tokenize(sentence.text)
    return Sentence(
        doc_id=sentence.doc_id,
        ordinal=sentence.ordinal,
        text=sentence.text,
        tokens=tuple(pos_tag(tokens, gaz)),
    )


def normalize_value(text: str) -> Decimal:
    """Parse "1,518" or "2.3 million" into an exact Decimal."""
    m = re.fullmatch(
        r"\s*([+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?)(?:\s+([A-Za-z]+))?\s*",
        text,
    )
    if not m:
        raise NotANumber(f"not a numeric value: {text!r}")
    number, scale = m.group(1), m.group(2)
    value = Decimal(number.replace(",", ""))
    if scale is not None:
        exponent = _SCALE_WORDS.get(scale.lower())
        if exponent is None:
            raise NotANumber(f"unknown scale word in {text!r}")
        value *= Decimal(10) ** exponent
    return value


# --- chunk grammar ---------------------------------------------------------

_ATOM_RE = re.compile(r"(?<!\(\?P)<([^<>]+)>")


def _escape_encoded(text: str) -> str:
    return text.replace(">", "›")


def _compile_rule(pattern: str) -> re.Pattern:
    def atom(m: re.Match) -> str:
        body = m.group(1)
        if re.fullmatch(r"[a-z][a-z'/-]*", body):  # literal word constraint
            return f"<[^:>]*:{re.escape(_escape_encoded(body))}>"
        return f"<{body}:[^>]*>"

    try:
        return re.compile(_ATOM_RE.sub(atom, pattern))
    except re.error as exc:
        raise GrammarError(f"bad chunk rule pattern {pattern!r}: {exc}") from exc


@dataclass(frozen=True)
class ChunkRule:
    name: str
    pattern: str

    def __post_init__(self):
        compiled = _compile_rule(self.pattern)
        groups = compiled.groupindex
        if "VALUE" not in groups:
            raise GrammarError(f"rule {self.name!r} must capture VALUE")
        object.__setattr__(self, "_compiled", compiled)

    @property
    def compiled(self) -> re.Pattern:
        return self._compiled  # type: ignore[attr-defined]


@dataclass(frozen=True)
class ChunkGrammar:
    rules: tuple[ChunkRule, ...]

    @classmethod
    def from_dict(cls, d: dict) -> "ChunkGrammar":
        return cls(tuple(ChunkRule(r["name"], r["pattern"]) for r in d["rules"]))

    @classmethod
    def load(cls, path: Path | str) -> "ChunkGrammar":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@lru_cache(maxsize=1)
def default_grammar() -> ChunkGrammar:
    return ChunkGrammar.load(_resource_path("grammar.json"))


@dataclass(frozen=True)
class ChunkMatch:
    """Token index ranges of one grammar match (ends exclusive)."""

    rule: str
    indicator: tuple[int, int]
    value: tuple[int, int]
    unit: tuple[int, int]


def _encode(tokens) -> tuple[str, list[int], list[int]]:
    starts, ends, parts = [], [], []
    offset = 0
    for tok in tokens:
        atom = f"<{tok.pos}:{_escape_encoded(tok.text.lower())}>"
        starts.append(offset)
        offset += len(atom)
        ends.append(offset)
        parts.append(atom)
    return "".join(parts), starts, ends


def chunk_matches(
    sentence: Sentence,
    grammar: ChunkGrammar | None = None,
    gaz: Gazetteer | None = None,
) -> list[ChunkMatch]:
    """Apply the grammar rules in order; the first match per value token wins."""
    grammar = grammar or default_grammar()
    gaz = gaz or default_gazetteer()
    tokens = sentence.tokens
    if tokens and all(not t.pos for t in tokens):
        tokens = tuple(pos_tag(tokens, gaz))
    if not tokens:
        return []

    encoded, starts, ends = _encode(tokens)

    def token_range(span: tuple[int, int]) -> tuple[int, int]:
        if span == (-1, -1):
            return (0, 0)
        return (bisect_left(starts, span[0]), bisect_right(ends, span[1]))

    claimed: set[int] = set()
    found: list[ChunkMatch] = []
    for rule in grammar.rules:
        for m in rule.compiled.finditer(encoded):
            vlo, vhi = token_range(m.span("VALUE"))
            if any(k in claimed for k in range(vlo, vhi)):
                continue
            ilo, ihi = token_range(m.span("INDICATOR")) if "INDICATOR" in rule.compiled.groupindex else (0, 0)
            ulo, uhi = token_range(m.span("UNIT")) if "UNIT" in rule.compiled.groupindex else (0, 0)

            if ihi > ilo:
                ilo, ihi = _refine_indicator(tokens, (ilo, ihi), (vlo, vhi), gaz)
                if ihi <= ilo:
                    continue
            claimed.update(range(vlo, vhi))
            found.append(ChunkMatch(rule=rule.name, indicator=(ilo, ihi), value=(vlo, vhi), unit=(ulo, uhi)))
    found.sort(key=lambda c: c.value[0])
    return found


def _refine_indicator(tokens, indicator, value, gaz: Gazetteer):
    """Unit-boundary trim, then verb-tail fold (see module docstring)."""
    ilo, ihi = indicator
    for k in range(ihi - 1, ilo - 1, -1):
        if tokens[k].text.lower() in gaz.units:
            ilo = k + 1
            break
    if ihi <= ilo:
        return ilo, ihi
    vlo = value[0]
    if ihi < vlo:  # indicator precedes the value: consider the separator run
        separator = tokens[ihi:vlo]
        if separator and all(
            t.pos.startswith("VB") and t.text.lower() not in _AUXILIARIES for t in separator
        ):
            ihi = vlo
    return ilo, ihi


def _phrase(tokens, lo: int, hi: int) -> str:
    return " ".join(t.text for t in tokens[lo:hi])


def extract_with_matches(
    sentence: Sentence,
    grammar: ChunkGrammar | None = None,
    gaz: Gazetteer | None = None,
) -> list[tuple[ChunkMatch, ExtractionRecord]]:
    """Like :func:`chunk_extract` but keeps each record paired with the
    grammar match it came from (for highlight spans)."""
    gaz = gaz or default_gazetteer()
    matches = chunk_matches(sentence, grammar, gaz)
    if not matches:
        return []
    tokens = sentence.tokens if any(t.pos for t in sentence.tokens) else tuple(
        pos_tag(sentence.tokens, gaz)
    )
    entities = tuple(ner(sentence, gaz))
    pairs = []
    for m in matches:
        if m.indicator[1] <= m.indicator[0]:
            continue
        try:
            value = normalize_value(_phrase(tokens, *m.value))
        except NotANumber:
            continue
        unit_raw = _phrase(tokens, *m.unit)
        canonical = gaz.canonical_unit(unit_raw) if unit_raw else None
        record = ExtractionRecord(
            sentence_ref=(sentence.doc_id, sentence.ordinal),
            indicator_phrase=_phrase(tokens, *m.indicator),
            value=value,
            unit=canonical if canonical is not None else unit_raw,
            unit_matched=canonical is not None,
            entities=entities,
        )
        pairs.append((m, record))
    return pairs


def chunk_extract(
    sentence: Sentence,
    grammar: ChunkGrammar | None = None,
    gaz: Gazetteer | None = None,
) -> list[ExtractionRecord]:
    """Extract (indicator phrase, value, unit) records from a tagged sentence.

    Scale words captured next to the number ("2.3 million") are folded into
    the value; the unit is canonicalized via the gazetteer, falling back to
    the raw token with ``unit_matched=False``.
    """
    return [record for _, record in extract_with_matches(sentence, grammar, gaz)]


# --- named entities --------------------------------------------------------

_CLOCK_HOUR_RE = re.compile(r"\d{1,2}")
_YEAR_RE = re.compile(r"(19|20)\d{2}")
_DAY_RE = re.compile(r"[0-9]{1,2}")
_CURRENCY = {"$", "€", "£"}
_KIND_ORDER = {kind: i for i, kind in enumerate(EntityKind)}


def _is_number(text: str) -> bool:
    return bool(_NUMBER_RE.fullmatch(text))


def ner(sentence: Sentence, gaz: Gazetteer | None = None) -> list[Entity]:
    """Tag the seven entity kinds with pattern and gazetteer rules.

    Overlaps are resolved longest-match-first, then pattern matches win
    over gazetteer matches; the result has non-overlapping spans.
    """
    gaz = gaz or default_gazetteer()
    tokens = list(sentence.tokens) or tokenize(sentence.text, gaz.units)
    n = len(tokens)
    texts = [t.text for t in tokens]
    lowers = [t.text.lower() for t in tokens]

    # (start, end, kind, is_pattern) over token indices, end exclusive
    candidates: list[tuple[int, int, EntityKind, bool]] = []

    for i in range(n):
        # number followed by % or "percent"
        if _is_number(texts[i]) and i + 1 < n and lowers[i + 1] in ("%", "percent"):
            candidates.append((i, i + 2, EntityKind.PERCENT, True))
        # currency symbol followed by a number
        if texts[i] in _CURRENCY and i + 1 < n and _is_number(texts[i + 1]):
            candidates.append((i, i + 2, EntityKind.MONEY, True))
        # standalone year
        if _YEAR_RE.fullmatch(texts[i]):
            candidates.append((i, i + 1, EntityKind.DATE, True))
        # month name with optional day before and day/year after
        if lowers[i] in gaz.month_names:
            start, end = i, i + 1
            if i > 0 and _DAY_RE.fullmatch(texts[i - 1]) and not _YEAR_RE.fullmatch(texts[i - 1]):
                start = i - 1
            if end < n and _DAY_RE.fullmatch(texts[end]) and not _YEAR_RE.fullmatch(texts[end]):
                end += 1
            if end < n and texts[end] == "," and end + 1 < n and _YEAR_RE.fullmatch(texts[end + 1]):
                end += 2
            elif end < n and _YEAR_RE.fullmatch(texts[end]):
                end += 1
            candidates.append((start, end, EntityKind.DATE, True))
        # clock time: HH : MM (: SS)? (am|pm)?
        if (
            _CLOCK_HOUR_RE.fullmatch(texts[i])
            and i + 2 < n
            and texts[i + 1] == ":"
            and re.fullmatch(r"\d{2}", texts[i + 2])
        ):
            end = i + 3
            if end + 1 < n and texts[end] == ":" and re.fullmatch(r"\d{2}", texts[end + 1]):
                end += 2
            if end < n and lowers[end] in ("am", "pm"):
                end += 1
            candidates.append((i, end, EntityKind.TIME, True))
        if lowers[i] in gaz.time_words:
            candidates.append((i, i + 1, EntityKind.TIME, True))

    gazetteer_kinds = (
        (gaz.locations, EntityKind.LOCATION),
        (gaz.organizations, EntityKind.ORGANIZATION),
        (gaz.persons, EntityKind.PERSON),
    )
    max_ngram = 5
    for i in range(n):
        for j in range(min(n, i + max_ngram), i, -1):
            phrase = " ".join(lowers[i:j])
            for terms, kind in gazetteer_kinds:
                if phrase in terms:
                    candidates.append((i, j, kind, False))

    candidates.sort(key=lambda c: (-(c[1] - c[0]), not c[3], c[0], _KIND_ORDER[c[2]]))

    raw = sentence.text.encode("utf-8")
    taken: set[int] = set()
    entities: list[Entity] = []
    for start, end, kind, _ in candidates:
        if any(k in taken for k in range(start, end)):
            continue
        taken.update(range(start, end))
        span = (tokens[start].span[0], tokens[end - 1].span[1])
        entities.append(Entity(kind=kind, text=raw[span[0]:span[1]].decode("utf-8"), span=span))
    entities.sort(key=lambda e: e.span)
    return entities
