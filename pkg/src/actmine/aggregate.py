"""Counting tables and windowed statistics over match streams.

Three table kinds flow through the system: FreqTable (label counts),
PairTable (windowed pair counts plus per-side label frequencies), and
MiTable (smoothed pointwise mutual information per pair).

MI(A, B) = log2(((AB + k) * corpusSize) / (A * B * span))

where AB is the windowed pair count, A and B are the standalone frequencies
of the two labels, and k is the smoothing constant applied to AB only.
Window distances are token_idx differences within one document; matches in
different documents never pair.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from math import log2
from typing import Iterable, Iterator, Union

from .corpus import TaggedToken, sentences
from .tclang import CoOccur, Freq, Mi, RuleRef, SkipGram
from .tcruntime import (CompiledProgram, ContractError, Match, emit_pairs,
                        scan_corpus_sentences, scan_sentence)

Pair = tuple[str, str]


@dataclass
class FreqTable:
    counts: dict[str, int] = field(default_factory=dict)
    total: int = 0


@dataclass
class PairTable:
    pair_counts: dict[Pair, int] = field(default_factory=dict)
    marginals_a: dict[str, int] = field(default_factory=dict)
    marginals_b: dict[str, int] = field(default_factory=dict)
    span: int = 50
    ordered: bool = False
    corpus_size: int = 0


@dataclass
class MiTable:
    values: dict[Pair, float] = field(default_factory=dict)
    marginals_a: dict[str, int] = field(default_factory=dict)
    marginals_b: dict[str, int] = field(default_factory=dict)
    span: int = 50
    ordered: bool = False
    corpus_size: int = 0
    k: float = 10.0


Table = Union[FreqTable, PairTable, MiTable]


def freq(matches: Iterable[Match]) -> FreqTable:
    """Exact label counts of a match stream; empty labels are excluded."""
    table = FreqTable()
    counts = table.counts
    total = 0
    for m in matches:
        label = m.label
        if not label:
            continue
        counts[label] = counts.get(label, 0) + 1
        total += 1
    table.total = total
    return table


def _group_by_doc(matches: Iterable[Match]) -> Iterator[tuple[str, list[Match]]]:
    cur: list[Match] = []
    cur_doc: str | None = None
    for m in matches:
        if m.doc_id != cur_doc:
            if cur:
                yield cur_doc, cur
            cur = []
            cur_doc = m.doc_id
        cur.append(m)
    if cur:
        yield cur_doc, cur


def _co_occur_doc(ma: list[Match], mb: list[Match], span: int) -> Iterator[Pair]:
    starts = [b.start_idx for b in mb]
    for a in ma:
        if not a.label:
            continue
        lo = bisect_left(starts, a.start_idx - span)
        hi = bisect_right(starts, a.start_idx + span)
        for b in mb[lo:hi]:
            if b.start_idx == a.start_idx and b.end_idx == a.end_idx:
                continue  # the identical span never pairs with itself
            if b.label:
                yield (a.label, b.label)


def co_occur(matches_a: Iterable[Match], matches_b: Iterable[Match],
             span: int) -> Iterator[Pair]:
    """Unordered windowed pairing: every (a, b) in the same document with
    |start_a - start_b| <= span, excluding the identical span."""
    if span < 1:
        raise ContractError(f"span must be >= 1, got {span}")
    by_doc_b = dict(_group_by_doc(matches_b))
    for doc, ma in _group_by_doc(matches_a):
        mb = by_doc_b.get(doc)
        if mb:
            yield from _co_occur_doc(ma, mb, span)


def _skip_gram_doc(ms: list[Match], span: int) -> Iterator[Pair]:
    n = len(ms)
    for i in range(n):
        m1 = ms[i]
        if not m1.label:
            continue
        limit = m1.start_idx + span
        for j in range(i + 1, n):
            m2 = ms[j]
            if m2.start_idx > limit:
                break  # starts ascend within a document
            if m2.label:
                yield (m1.label, m2.label)


def skip_gram(matches: Iterable[Match], n: int, span: int) -> Iterator[Pair]:
    """Ordered pairs (earlier, later) within span tokens, n = 2 only."""
    if n != 2:
        raise ContractError(f"unsupported n for skip-gram: {n} (only 2)")
    if span < 1:
        raise ContractError(f"span must be >= 1, got {span}")
    for _, ms in _group_by_doc(matches):
        yield from _skip_gram_doc(ms, span)


def count_pairs(pairs: Iterable[Pair], marginals_a: dict[str, int],
                marginals_b: dict[str, int], span: int, ordered: bool,
                corpus_size: int) -> PairTable:
    """Materialize a pair stream into a PairTable with the given marginals."""
    counts: dict[Pair, int] = {}
    for pair in pairs:
        counts[pair] = counts.get(pair, 0) + 1
    return PairTable(pair_counts=counts, marginals_a=marginals_a,
                     marginals_b=marginals_b, span=span, ordered=ordered,
                     corpus_size=corpus_size)


def prune_pairs(table: PairTable, min_count: int) -> PairTable:
    """Drop labels and pairs seen fewer than min_count times.

    Marginal frequencies of surviving labels are untouched; pruning removes
    entries, it never rescales the statistics.
    """
    if min_count <= 1:
        return table
    ma = {k: v for k, v in table.marginals_a.items() if v >= min_count}
    mb = {k: v for k, v in table.marginals_b.items() if v >= min_count}
    pc = {p: c for p, c in table.pair_counts.items()
          if c >= min_count and p[0] in ma and p[1] in mb}
    return PairTable(pair_counts=pc, marginals_a=ma, marginals_b=mb,
                     span=table.span, ordered=table.ordered,
                     corpus_size=table.corpus_size)


def mi(pairs: PairTable, k: float = 10.0) -> MiTable:
    """Smoothed MI per pair; k is added to the pair count only."""
    if k < 0:
        raise ContractError(f"smoothing k must be >= 0, got {k}")
    if pairs.corpus_size <= 0:
        raise ContractError("corpus_size must be positive to compute MI")
    values: dict[Pair, float] = {}
    n = pairs.corpus_size
    span = pairs.span
    fa = pairs.marginals_a
    fb = pairs.marginals_b
    for (a, b), ab in pairs.pair_counts.items():
        ca = fa.get(a, 0)
        cb = fb.get(b, 0)
        if ca <= 0 or cb <= 0:
            raise ContractError(f"zero marginal for pair ({a!r}, {b!r})")
        values[(a, b)] = log2(((ab + k) * n) / (ca * cb * span))
    return MiTable(values=values, marginals_a=dict(fa), marginals_b=dict(fb),
                   span=span, ordered=pairs.ordered, corpus_size=n, k=k)


def merge(t1: Table, t2: Table) -> Table:
    """Combine two same-kind count tables; associative and commutative."""
    if type(t1) is not type(t2):
        raise ContractError(
            f"cannot merge {type(t1).__name__} with {type(t2).__name__}")
    if isinstance(t1, FreqTable):
        counts = dict(t1.counts)
        for k_, v in t2.counts.items():
            counts[k_] = counts.get(k_, 0) + v
        return FreqTable(counts=counts, total=t1.total + t2.total)
    if isinstance(t1, PairTable):
        if t1.span != t2.span or t1.ordered != t2.ordered:
            raise ContractError(
                f"metadata mismatch: span {t1.span}/{t2.span}, "
                f"ordered {t1.ordered}/{t2.ordered}")
        pc = dict(t1.pair_counts)
        for p, v in t2.pair_counts.items():
            pc[p] = pc.get(p, 0) + v
        ma = dict(t1.marginals_a)
        for k_, v in t2.marginals_a.items():
            ma[k_] = ma.get(k_, 0) + v
        mb = dict(t1.marginals_b)
        for k_, v in t2.marginals_b.items():
            mb[k_] = mb.get(k_, 0) + v
        return PairTable(pair_counts=pc, marginals_a=ma, marginals_b=mb,
                         span=t1.span, ordered=t1.ordered,
                         corpus_size=t1.corpus_size + t2.corpus_size)
    raise ContractError("MI tables merge at the count stage, not after")


def run_program(compiled: CompiledProgram, tokens: Iterable[TaggedToken],
                k: float = 10.0, min_count: int = 1,
                default_span: int = 50) -> Table:
    """Execute a compiled program's pipeline over a token stream.

    default_span only matters for pair-emitting rule sources (svo shapes),
    whose pairs come from single matches: it is the span constant used in
    their MI normalization, keeping one span across all statistics.
    """
    pipe = compiled.checked.pipeline
    freq_node = pipe.inner if isinstance(pipe, Mi) else pipe
    assert isinstance(freq_node, Freq)
    src = freq_node.source

    token_count = 0

    def counted_sentences() -> Iterator[list[TaggedToken]]:
        nonlocal token_count
        for sent in sentences(tokens):
            token_count += len(sent)
            yield sent

    # Plain label frequency pipeline.
    if isinstance(src, RuleRef) and compiled.pair_shape is None:
        rule = compiled.rules[src.name]
        table = FreqTable()
        counts = table.counts
        total = 0
        for sent in counted_sentences():
            for m in scan_sentence(rule, sent):
                if m.label:
                    counts[m.label] = counts.get(m.label, 0) + 1
                    total += 1
        table.total = total
        return table

    fa: dict[str, int] = {}
    fb: dict[str, int] = {}
    pc: dict[Pair, int] = {}

    def bump(d: dict[str, int], label: str) -> None:
        if label:
            d[label] = d.get(label, 0) + 1

    if isinstance(src, CoOccur):
        span, ordered = src.span, False
        a_name, b_name = src.rule_a.name, src.rule_b.name
        scan_names = (a_name,) if a_name == b_name else (a_name, b_name)
        for _, found in scan_corpus_sentences(compiled, counted_sentences(),
                                              scan_names):
            ma, mb = found[a_name], found[b_name]
            for m in ma:
                bump(fa, m.label)
            for m in mb:
                bump(fb, m.label)
            for pair in _co_occur_doc(ma, mb, span):
                pc[pair] = pc.get(pair, 0) + 1
    elif isinstance(src, SkipGram):
        span, ordered = src.span, True
        name = src.rule.name
        for _, found in scan_corpus_sentences(compiled, counted_sentences(),
                                              (name,)):
            ms = found[name]
            for m in ms:
                bump(fa, m.label)
                bump(fb, m.label)
            for pair in _skip_gram_doc(ms, span):
                pc[pair] = pc.get(pair, 0) + 1
    else:  # pair-emitting rule, svo shaped
        shape = compiled.pair_shape
        span, ordered = default_span, True
        rule = compiled.rules[src.name]
        for sent in counted_sentences():
            for m in scan_sentence(rule, sent):
                for rname, lbl in m.sublabels:
                    if rname == shape.a_rule:
                        bump(fa, lbl)
                    elif rname == shape.b_rule:
                        bump(fb, lbl)
                for pair in emit_pairs(m, shape):
                    pc[pair] = pc.get(pair, 0) + 1

    table = PairTable(pair_counts=pc, marginals_a=fa, marginals_b=fb,
                      span=span, ordered=ordered, corpus_size=token_count)
    if isinstance(pipe, Mi):
        return mi(prune_pairs(table, min_count), k)
    return table
