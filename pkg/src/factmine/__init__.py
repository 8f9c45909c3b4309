"""factmine: extract (indicator, value, unit) facts from heterogeneous
documents, index them, and assess indicators through query refinement."""

__version__ = "0.1.0"

from .docmodel import (
    AccessClass,
    Entity,
    EntityKind,
    ExtractionRecord,
    FactmineError,
    RelevanceScore,
    Sentence,
    SourceDocument,
    SourceType,
    Token,
)

__all__ = [
    "AccessClass",
    "Entity",
    "EntityKind",
    "ExtractionRecord",
    "FactmineError",
    "RelevanceScore",
    "Sentence",
    "SourceDocument",
    "SourceType",
    "Token",
    "__version__",
]
