"""Sparse vector models over MI tables, queried by cosine similarity.

A model's rows are the second element of each pair (activities for
object-activity tables, verbs for affordances, the later activity for
prediction) and its dimensions are the first element.  Cell values are
MI clamped at zero; dimensions that end up zero are dropped, and rows
with nothing positive left are dropped entirely.

Scores must be reproducible bit for bit, so every dot product and norm
accumulates in ascending dimension-index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .aggregate import MiTable

DEFAULT_TOP_K = 20


class VsmError(Exception):
    pass


class EmptyQueryError(VsmError):
    def __init__(self) -> None:
        super().__init__("empty query")


class UnknownTermsError(VsmError):
    """Raised when none of the query terms name a known dimension."""

    def __init__(self, terms: list[str]) -> None:
        self.terms = list(terms)
        listed = ", ".join(repr(t) for t in self.terms)
        super().__init__(f"no known terms in query: {listed}")


class UnknownRowError(VsmError):
    def __init__(self, label: str) -> None:
        self.label = label
        super().__init__(f"unknown label: {label!r}")


@dataclass(frozen=True)
class ScoredResult:
    label: str
    score: float
    frequency: int


@dataclass
class Row:
    vec: dict[int, float]  # dim index -> positive MI
    norm: float
    frequency: int


@dataclass
class VectorModel:
    kind: str
    dims: list[str]
    dim_index: dict[str, int]
    rows: dict[str, Row]  # insertion order is sorted by label
    postings: dict[int, list[tuple[str, float]]]

    def __len__(self) -> int:
        return len(self.rows)


def build_model(table: MiTable, kind: str) -> VectorModel:
    by_row: dict[str, dict[str, float]] = {}
    for (a, b), v in table.values.items():
        if v > 0.0:
            by_row.setdefault(b, {})[a] = v
    dims = sorted({a for vec in by_row.values() for a in vec})
    dim_index = {d: i for i, d in enumerate(dims)}
    rows: dict[str, Row] = {}
    postings: dict[int, list[tuple[str, float]]] = {}
    for label in sorted(by_row):
        vec = {dim_index[a]: v for a, v in by_row[label].items()}
        ordered = sorted(vec.items())
        norm = math.sqrt(sum(v * v for _, v in ordered))
        rows[label] = Row(vec, norm, table.marginals_b.get(label, 0))
        for d, v in ordered:
            postings.setdefault(d, []).append((label, v))
    return VectorModel(kind, dims, dim_index, rows, postings)


def _resolve_terms(model: VectorModel, terms: list[str]) -> list[int]:
    """Map query terms to dimension indices, ascending and deduplicated."""
    cleaned = [t.strip().lower() for t in terms]
    cleaned = [t for t in cleaned if t]
    if not cleaned:
        raise EmptyQueryError()
    known: set[int] = set()
    unknown: list[str] = []
    for t in cleaned:
        idx = model.dim_index.get(t)
        if idx is None:
            if t not in unknown:
                unknown.append(t)
        else:
            known.add(idx)
    if not known:
        raise UnknownTermsError(unknown)
    return sorted(known)


def _ranked(model: VectorModel, dots: dict[str, float], qnorm: float,
            top_k: int, skip: str | None = None) -> list[ScoredResult]:
    if top_k < 1:
        raise VsmError(f"top_k must be positive, got {top_k}")
    results = []
    for label, row in model.rows.items():
        if label == skip:
            continue
        dot = dots.get(label, 0.0)
        score = dot / (qnorm * row.norm) if row.norm > 0.0 else 0.0
        results.append(ScoredResult(label, score, row.frequency))
    results.sort(key=lambda r: (-r.score, -r.frequency, r.label))
    return results[:top_k]


def query(model: VectorModel, terms: list[str],
          top_k: int = DEFAULT_TOP_K) -> list[ScoredResult]:
    """Rank rows against a bag of terms.

    Unknown terms are ignored; a query with no known terms at all is an
    error.  Ties break by higher row frequency, then label.
    """
    known = _resolve_terms(model, terms)
    qnorm = math.sqrt(float(len(known)))
    dots: dict[str, float] = {}
    for d in known:
        for label, v in model.postings.get(d, ()):
            dots[label] = dots.get(label, 0.0) + v
    return _ranked(model, dots, qnorm, top_k)


def score_single(model: VectorModel, terms: list[str], target: str) -> float:
    """Cosine between the query and one row; 0.0 if the row is absent."""
    known = _resolve_terms(model, terms)
    row = model.rows.get(target.strip().lower())
    if row is None or row.norm <= 0.0:
        return 0.0
    dot = 0.0
    for d in known:
        dot += row.vec.get(d, 0.0)
    return dot / (math.sqrt(float(len(known))) * row.norm)


def neighbors(model: VectorModel, label: str,
              top_k: int = DEFAULT_TOP_K) -> list[ScoredResult]:
    """Rows most similar to an existing row, excluding itself."""
    key = label.strip().lower()
    row = model.rows.get(key)
    if row is None:
        raise UnknownRowError(label)
    dots: dict[str, float] = {}
    for d, v in sorted(row.vec.items()):
        for other, ov in model.postings.get(d, ()):
            if other != key:
                dots[other] = dots.get(other, 0.0) + v * ov
    return _ranked(model, dots, row.norm, top_k, skip=key)
