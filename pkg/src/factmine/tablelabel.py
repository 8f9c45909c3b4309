"""Label table lines by structural role and resolve data cells to header paths.

Each row of a (rectangularized) grid gets one of four labels via a
linear-chain model: per-row boolean features carry emission weights, label
bigrams carry transition weights, and decoding is exact max-product
Viterbi. Training uses the averaged structured perceptron over the same
parameterization, which keeps updates deterministic. A hand-set default
model ships in ``resources/labeler_model.json`` so the pipeline works
untrained.

Resolution walks the labeled grid: each DATA-row cell outside the
row-header columns gets the stacked column-header cells above it and the
row's header cells (plus any preceding section line) as its paths.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

from .docmodel import FactmineError, ValidationError
from .ingest import TableGrid, normalize_grid
from .nlp import _resource_path


class EmptyGrid(FactmineError):
    pass


class EmptyTrainingSet(FactmineError):
    pass


class NoDataRows(FactmineError):
    pass


class LineLabel(Enum):
    """Structural role of one table line; enum order is the tie-break order."""

    COLUMN_HEADER = "COLUMN_HEADER"
    ROW_HEADER_LINE = "ROW_HEADER_LINE"
    DATA = "DATA"
    NOTE = "NOTE"


LABELS = tuple(LineLabel)

FEATURE_NAMES = (
    "IS_FIRST_ROW",
    "ALL_CELLS_ALPHA",
    "MAJORITY_NUMERIC",
    "HAS_TH_FLAG",
    "HAS_SPANNING_CELL",
    "FIRST_CELL_EMPTY",
    "ROW_SHORTER_THAN_MODE",
)

_NUMERIC_CELL_RE = re.compile(r"[-+$€£]?\s*\d[\d,]*(?:\.\d+)?\s*%?")


def is_numeric_cell(text: str) -> bool:
    return bool(_NUMERIC_CELL_RE.fullmatch(text.strip())) if text.strip() else False


def _is_alpha_cell(text: str) -> bool:
    t = text.strip()
    return bool(t) and all(c.isalpha() or c.isspace() for c in t)


def featurize(grid: TableGrid) -> list[tuple[str, ...]]:
    """Per-row active boolean features; the grid is rectangularized first."""
    grid = normalize_grid(grid)
    if not grid.rows:
        raise EmptyGrid("grid has no rows")

    counts = [sum(1 for c in row if c.strip()) for row in grid.rows]
    mode_count = max(Counter(counts).items(), key=lambda kv: (kv[1], kv[0]))[0]

    features: list[tuple[str, ...]] = []
    for r, row in enumerate(grid.rows):
        non_empty = [c for c in row if c.strip()]
        active = []
        if r == 0:
            active.append("IS_FIRST_ROW")
        if non_empty and all(_is_alpha_cell(c) or not c.strip() for c in row):
            active.append("ALL_CELLS_ALPHA")
        if non_empty and sum(1 for c in non_empty if is_numeric_cell(c)) * 2 > len(non_empty):
            active.append("MAJORITY_NUMERIC")
        if grid.emphasis and any(e.is_th for e in grid.emphasis[r]):
            active.append("HAS_TH_FLAG")
        if grid.cell_spans and any(s != (1, 1) for s in grid.cell_spans[r]):
            active.append("HAS_SPANNING_CELL")
        if row and not row[0].strip():
            active.append("FIRST_CELL_EMPTY")
        if counts[r] < mode_count:
            active.append("ROW_SHORTER_THAN_MODE")
        features.append(tuple(active))
    return features


@dataclass(frozen=True)
class LabelerModel:
    """Emission weights per (feature, label) and transition weights per bigram.

    Unknown features score 0; all stored weights must be finite.
    """

    feature_weights: dict[tuple[str, LineLabel], float]
    transition_weights: dict[tuple[LineLabel, LineLabel], float]

    def __post_init__(self):
        for w in list(self.feature_weights.values()) + list(self.transition_weights.values()):
            if not math.isfinite(w):
                raise ValidationError("model weights must be finite")

    def emission(self, active: tuple[str, ...], label: LineLabel) -> float:
        return sum(self.feature_weights.get((f, label), 0.0) for f in active)

    def transition(self, prev: LineLabel, cur: LineLabel) -> float:
        return self.transition_weights.get((prev, cur), 0.0)

    @classmethod
    def zero(cls) -> "LabelerModel":
        return cls(feature_weights={}, transition_weights={})

    def to_dict(self) -> dict:
        features: dict[str, dict[str, float]] = {}
        for (feat, label), w in sorted(self.feature_weights.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
            if w:
                features.setdefault(feat, {})[label.value] = w
        transitions: dict[str, dict[str, float]] = {}
        for (a, b), w in sorted(self.transition_weights.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
            if w:
                transitions.setdefault(a.value, {})[b.value] = w
        return {"features": features, "transitions": transitions}

    @classmethod
    def from_dict(cls, d: dict) -> "LabelerModel":
        fw = {
            (feat, LineLabel(label)): float(w)
            for feat, per_label in d.get("features", {}).items()
            for label, w in per_label.items()
        }
        tw = {
            (LineLabel(a), LineLabel(b)): float(w)
            for a, per_b in d.get("transitions", {}).items()
            for b, w in per_b.items()
        }
        return cls(feature_weights=fw, transition_weights=tw)

    def save(self, path: Path | str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: Path | str) -> "LabelerModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@lru_cache(maxsize=1)
def default_model() -> LabelerModel:
    return LabelerModel.load(_resource_path("labeler_model.json"))


def sequence_score(features, labels, model: LabelerModel) -> float:
    score = sum(model.emission(f, l) for f, l in zip(features, labels))
    score += sum(model.transition(a, b) for a, b in zip(labels, labels[1:]))
    return score


def viterbi_label(grid: TableGrid, model: LabelerModel | None = None) -> list[LineLabel]:
    """Max-scoring label sequence; among ties, the sequence that is
    lexicographically first under label enum order, comparing earlier rows
    first."""
    model = model or default_model()
    features = featurize(grid)
    n = len(features)

    # suffix-best scores, then a greedy forward walk picks the
    # lexicographically-first optimal sequence
    beta = [dict.fromkeys(LABELS, 0.0) for _ in range(n)]
    for label in LABELS:
        beta[n - 1][label] = model.emission(features[n - 1], label)
    for t in range(n - 2, -1, -1):
        for label in LABELS:
            best = max(model.transition(label, nxt) + beta[t + 1][nxt] for nxt in LABELS)
            beta[t][label] = model.emission(features[t], label) + best

    labels: list[LineLabel] = []
    best0 = max(beta[0].values())
    for label in LABELS:
        if beta[0][label] == best0:
            labels.append(label)
            break
    for t in range(1, n):
        prev = labels[-1]
        best = max(model.transition(prev, nxt) + beta[t][nxt] for nxt in LABELS)
        for nxt in LABELS:
            if model.transition(prev, nxt) + beta[t][nxt] == best:
                labels.append(nxt)
                break
    return labels


def labeling_accuracy(model: LabelerModel, examples) -> float:
    """Fraction of rows labeled correctly over the example set."""
    total = correct = 0
    for grid, gold in examples:
        pred = viterbi_label(grid, model)
        total += len(gold)
        correct += sum(1 for p, g in zip(pred, gold) if p == g)
    return correct / total if total else 0.0


def train_labeler(examples, epochs: int = 5) -> LabelerModel:
    """Averaged structured perceptron over the featurize/Viterbi pipeline.

    Deterministic given the example order. The returned model never scores
    worse on the training set than the zero model it starts from.
    """
    if not examples:
        raise EmptyTrainingSet("no training examples")
    if epochs < 1:
        raise ValidationError("epochs must be >= 1")

    prepared = []
    for grid, gold in examples:
        feats = featurize(grid)
        if len(gold) != len(feats):
            raise ValidationError("gold label count must equal row count")
        prepared.append((grid, feats, tuple(gold)))

    fw: dict[tuple[str, LineLabel], float] = {}
    tw: dict[tuple[LineLabel, LineLabel], float] = {}
    fw_sum: dict[tuple[str, LineLabel], float] = {}
    tw_sum: dict[tuple[LineLabel, LineLabel], float] = {}

    def bump(weights, key, delta):
        weights[key] = weights.get(key, 0.0) + delta

    visits = 0
    for _ in range(epochs):
        for grid, feats, gold in prepared:
            pred = viterbi_label(grid, LabelerModel(feature_weights=fw, transition_weights=tw))
            if tuple(pred) != gold:
                for active, p, g in zip(feats, pred, gold):
                    if p != g:
                        for f in active:
                            bump(fw, (f, g), 1.0)
                            bump(fw, (f, p), -1.0)
                for (pa, pb), (ga, gb) in zip(zip(pred, pred[1:]), zip(gold, gold[1:])):
                    if (pa, pb) != (ga, gb):
                        bump(tw, (ga, gb), 1.0)
                        bump(tw, (pa, pb), -1.0)
            visits += 1
            for k, w in fw.items():
                bump(fw_sum, k, w)
            for k, w in tw.items():
                bump(tw_sum, k, w)

    averaged = LabelerModel(
        feature_weights={k: w / visits for k, w in fw_sum.items()},
        transition_weights={k: w / visits for k, w in tw_sum.items()},
    )
    pairs = [(g, gold) for g, _, gold in prepared]
    if labeling_accuracy(averaged, pairs) >= labeling_accuracy(LabelerModel.zero(), pairs):
        return averaged
    return LabelerModel.zero()


# --- resolution -------------------------------------------------------------


@dataclass(frozen=True)
class ResolvedCell:
    """A data cell tied to its row/column header paths."""

    row_header_path: tuple[str, ...]
    col_header_path: tuple[str, ...]
    value_text: str
    row: int
    col: int

    def to_dict(self) -> dict:
        return {
            "row_header_path": list(self.row_header_path),
            "col_header_path": list(self.col_header_path),
            "value_text": self.value_text,
            "row": self.row,
            "col": self.col,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResolvedCell":
        return cls(
            row_header_path=tuple(d["row_header_path"]),
            col_header_path=tuple(d["col_header_path"]),
            value_text=d["value_text"],
            row=d["row"],
            col=d["col"],
        )


def row_header_columns(grid: TableGrid, labels) -> list[int]:
    """Leftmost maximal run of columns whose data cells are mostly
    non-numeric; falls back to column 0 when no column qualifies (rows are
    almost always keyed by their first column). Never swallows every column.
    """
    data_rows = [r for r, l in enumerate(labels) if l is LineLabel.DATA]
    ncols = len(grid.rows[0]) if grid.rows else 0
    run: list[int] = []
    for c in range(ncols):
        cells = [grid.rows[r][c] for r in data_rows]
        non_numeric = sum(1 for cell in cells if not is_numeric_cell(cell))
        if cells and non_numeric >= 0.8 * len(cells):
            run.append(c)
        else:
            break
    if not run and ncols >= 2:
        run = [0]
    if len(run) >= ncols:
        run = run[: ncols - 1]
    return run


def resolve_cells(grid: TableGrid, labels) -> list[ResolvedCell]:
    """Resolve each DATA-row value cell to its header paths.

    Column paths stack the COLUMN_HEADER cells of that column top to
    bottom (spans already expanded by normalization); row paths take the
    row's cells in the row-header columns, prefixed by the most recent
    ROW_HEADER_LINE section text. NOTE rows are skipped.
    """
    grid = normalize_grid(grid)
    labels = list(labels)
    if len(labels) != len(grid.rows):
        raise ValidationError("label count must equal row count")
    data_rows = [r for r, l in enumerate(labels) if l is LineLabel.DATA]
    if not data_rows:
        raise NoDataRows("no rows labeled DATA")

    header_rows = [r for r, l in enumerate(labels) if l is LineLabel.COLUMN_HEADER]
    hdr_cols = row_header_columns(grid, labels)
    ncols = len(grid.rows[0])
    value_cols = [c for c in range(ncols) if c not in hdr_cols]

    col_paths: dict[int, tuple[str, ...]] = {}
    for c in value_cols:
        path: list[str] = []
        for h in header_rows:
            cell = grid.rows[h][c].strip()
            if cell and (not path or path[-1] != cell):
                path.append(cell)
        col_paths[c] = tuple(path)

    resolved: list[ResolvedCell] = []
    section: list[str] = []
    for r, label in enumerate(labels):
        if label is LineLabel.ROW_HEADER_LINE:
            section = [next((c.strip() for c in grid.rows[r] if c.strip()), "")]
            section = [s for s in section if s]
        elif label is LineLabel.DATA:
            row_path = tuple(
                s for s in section + [grid.rows[r][c].strip() for c in hdr_cols] if s
            )
            for c in value_cols:
                resolved.append(
                    ResolvedCell(
                        row_header_path=row_path,
                        col_header_path=col_paths[c],
                        value_text=grid.rows[r][c],
                        row=r,
                        col=c,
                    )
                )
    return resolved
