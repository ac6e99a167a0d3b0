"""Compile checked programs into streaming matchers and scan sentences.

Matching policy, shared with every consumer:

* anchored attempt at each token position, left to right;
* on success the scan resumes at the first token after the match, so one
  rule's matches never overlap;
* ``?`` and ``+`` are greedy with single-path commitment: once a repetition
  has consumed input the engine never backs into it to try a shorter parse;
* ``-`` consumes its pattern greedily when it matches and succeeds empty
  when it does not, so "([ADJ]- [NOUN])+" walks compound nouns whether or
  not adjectives appear;
* ordered choice: the first ``|`` branch that matches wins;
* an empty match is discarded and the scan advances one token.

A match label is the space-joined lemmas of every consumed token that is not
under a Minus node.  Rule references record (rule name, sub-label) pairs so
that svo-shaped rules can emit (noun, verb) pairs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable

from .corpus import PosTag, TaggedToken
from .tclang import (Alt, CheckedProgram, Literal, Minus, Opt, PairShape,
                     PatternExpr, Plus, PosClass, RuleRef, Seq, walk_refs)

log = logging.getLogger(__name__)

# A matcher consumes (tokens, start, kept_lemmas, sublabels) and returns the
# end position, or -1 on failure, restoring the two lists before failing.
MatchFn = Callable[[list, int, list, list], int]


class ContractError(Exception):
    """An operation was invoked outside its contract."""


@dataclass(frozen=True, slots=True)
class Match:
    rule: str
    doc_id: str
    start_idx: int  # token_idx of the first consumed token
    end_idx: int    # token_idx one past the last consumed token
    label: str
    sublabels: tuple[tuple[str, str], ...] = ()


@dataclass
class CompiledRule:
    name: str
    fn: MatchFn
    first_lemmas: frozenset[str]
    first_tags: frozenset[PosTag]
    nullable: bool


@dataclass
class CompiledProgram:
    rules: dict[str, CompiledRule]
    scan_rules: tuple[str, ...]
    pair_shape: PairShape | None
    checked: CheckedProgram
    warnings: list[str]


def _compile_expr(expr: PatternExpr, done: dict[str, MatchFn]) -> MatchFn:
    if isinstance(expr, Literal):
        lem = expr.text.lower()

        def match_literal(toks, i, kept, subs, _lem=lem):
            if i < len(toks) and toks[i].lemma == _lem:
                kept.append(_lem)
                return i + 1
            return -1
        return match_literal

    if isinstance(expr, PosClass):
        def match_pos(toks, i, kept, subs, _tag=expr.tag):
            if i < len(toks) and toks[i].pos is _tag:
                kept.append(toks[i].lemma)
                return i + 1
            return -1
        return match_pos

    if isinstance(expr, RuleRef):
        target = done[expr.name]  # dependencies compile first

        def match_ref(toks, i, kept, subs, _f=target, _name=expr.name):
            k0 = len(kept)
            j = _f(toks, i, kept, subs)
            if j >= 0:
                subs.append((_name, " ".join(kept[k0:])))
            return j
        return match_ref

    if isinstance(expr, Seq):
        fns = tuple(_compile_expr(item, done) for item in expr.items)

        def match_seq(toks, i, kept, subs, _fns=fns):
            k0, s0 = len(kept), len(subs)
            j = i
            for f in _fns:
                j = f(toks, j, kept, subs)
                if j < 0:
                    del kept[k0:]
                    del subs[s0:]
                    return -1
            return j
        return match_seq

    if isinstance(expr, Alt):
        fns = tuple(_compile_expr(item, done) for item in expr.items)

        def match_alt(toks, i, kept, subs, _fns=fns):
            for f in _fns:
                j = f(toks, i, kept, subs)
                if j >= 0:
                    return j
            return -1
        return match_alt

    if isinstance(expr, Opt):
        inner = _compile_expr(expr.inner, done)

        def match_opt(toks, i, kept, subs, _f=inner):
            j = _f(toks, i, kept, subs)
            return i if j < 0 else j
        return match_opt

    if isinstance(expr, Plus):
        inner = _compile_expr(expr.inner, done)

        def match_plus(toks, i, kept, subs, _f=inner):
            j = _f(toks, i, kept, subs)
            if j < 0:
                return -1
            while True:
                nx = _f(toks, j, kept, subs)
                if nx < 0 or nx == j:  # no progress: stop, never retry shorter
                    return j
                j = nx
        return match_plus

    if isinstance(expr, Minus):
        inner = _compile_expr(expr.inner, done)

        def match_minus(toks, i, kept, subs, _f=inner):
            j = _f(toks, i, [], [])
            return i if j < 0 else j
        return match_minus

    raise TypeError(f"not a pattern expression: {expr!r}")


def _first_sets(expr: PatternExpr, rules: dict[str, PatternExpr],
                cache: dict[str, tuple]) -> tuple[frozenset, frozenset, bool]:
    """(first lemmas, first POS tags, nullable) for gating scan attempts."""
    if isinstance(expr, Literal):
        return frozenset((expr.text.lower(),)), frozenset(), False
    if isinstance(expr, PosClass):
        return frozenset(), frozenset((expr.tag,)), False
    if isinstance(expr, RuleRef):
        if expr.name not in cache:
            cache[expr.name] = _first_sets(rules[expr.name], rules, cache)
        return cache[expr.name]
    if isinstance(expr, Seq):
        lems: set = set()
        tags: set = set()
        nullable = True
        for item in expr.items:
            l, t, n = _first_sets(item, rules, cache)
            lems |= l
            tags |= t
            if not n:
                nullable = False
                break
        return frozenset(lems), frozenset(tags), nullable
    if isinstance(expr, Alt):
        lems = set()
        tags = set()
        nullable = False
        for item in expr.items:
            l, t, n = _first_sets(item, rules, cache)
            lems |= l
            tags |= t
            nullable = nullable or n
        return frozenset(lems), frozenset(tags), nullable
    if isinstance(expr, (Opt, Minus)):
        l, t, _ = _first_sets(expr.inner, rules, cache)
        return l, t, True
    if isinstance(expr, Plus):
        return _first_sets(expr.inner, rules, cache)
    raise TypeError(f"not a pattern expression: {expr!r}")


def compile_program(checked: CheckedProgram) -> CompiledProgram:
    """Compile every rule of a checked program into matcher closures."""
    order: list[str] = []
    state: dict[str, bool] = {}

    def visit(name: str) -> None:
        if state.get(name):
            return
        state[name] = True
        for ref in walk_refs(checked.rules[name]):
            visit(ref.name)
        order.append(name)

    for name in checked.rule_order:
        visit(name)

    fns: dict[str, MatchFn] = {}
    compiled: dict[str, CompiledRule] = {}
    warnings: list[str] = []
    first_cache: dict[str, tuple] = {}
    for name in order:
        expr = checked.rules[name]
        fns[name] = _compile_expr(expr, fns)
        lems, tags, nullable = _first_sets(expr, checked.rules, first_cache)
        if nullable:
            warnings.append(f"rule {name!r}: pattern can match empty")
        compiled[name] = CompiledRule(name, fns[name], lems, tags, nullable)
    for w in warnings:
        log.warning("%s", w)
    return CompiledProgram(rules=compiled, scan_rules=checked.scan_rules,
                           pair_shape=checked.pair_shape, checked=checked,
                           warnings=warnings)


def scan_sentence(rule: CompiledRule, sentence: list[TaggedToken]) -> list[Match]:
    """Non-overlapping leftmost matches of one rule over one sentence."""
    matches: list[Match] = []
    fn = rule.fn
    flem = rule.first_lemmas
    ftag = rule.first_tags
    name = rule.name
    i = 0
    n = len(sentence)
    while i < n:
        tok = sentence[i]
        if tok.lemma not in flem and tok.pos not in ftag:
            i += 1
            continue
        kept: list[str] = []
        subs: list[tuple[str, str]] = []
        j = fn(sentence, i, kept, subs)
        if j <= i:  # failed, or matched empty: discard and advance one token
            i += 1
            continue
        matches.append(Match(name, tok.doc_id, tok.token_idx,
                             sentence[j - 1].token_idx + 1,
                             " ".join(kept), tuple(subs)))
        i = j
    return matches


def emit_pairs(match: Match, shape: PairShape | None = None) -> list[tuple[str, str]]:
    """(noun-label, verb-label) pairs from a match with tracked components.

    With an svo-shaped rule this emits (subject, vp) and, when the optional
    object matched, (object, vp).  The pivot component is taken from `shape`
    when given, otherwise inferred: the component rule that matched exactly
    once while the other repeated, or the second component when both matched
    once.  Pairs with an empty side are dropped.
    """
    subs = match.sublabels
    names = list(dict.fromkeys(rule for rule, _ in subs))
    if len(names) != 2:
        raise ContractError(
            f"match of {match.rule!r} has {len(names)} tracked component rule(s), "
            "need exactly 2 to emit pairs")
    if shape is not None:
        b_rule = shape.b_rule
        if b_rule not in names:
            raise ContractError(
                f"match of {match.rule!r} has no {b_rule!r} component")
    else:
        counts = {n: sum(1 for rule, _ in subs if rule == n) for n in names}
        singles = [n for n in names if counts[n] == 1]
        if len(singles) == 1:
            b_rule = singles[0]
        elif len(singles) == 2:
            b_rule = names[1]
        else:
            raise ContractError(
                f"cannot orient pair components of match of {match.rule!r}")
    b_labels = [lbl for rule, lbl in subs if rule == b_rule]
    if len(b_labels) != 1:
        raise ContractError(
            f"pivot component {b_rule!r} matched {len(b_labels)} times, need 1")
    b_label = b_labels[0]
    if not b_label:
        return []
    return [(lbl, b_label) for rule, lbl in subs if rule != b_rule and lbl]


def scan_corpus_sentences(compiled: CompiledProgram,
                          sents: Iterable[list[TaggedToken]],
                          rule_names: tuple[str, ...] | None = None,
                          ) -> Iterable[tuple[str, dict[str, list[Match]]]]:
    """Yield (doc_id, {rule: matches}) per document, scanning chosen rules."""
    names = rule_names if rule_names is not None else tuple(dict.fromkeys(
        compiled.scan_rules))
    rules = [compiled.rules[n] for n in names]
    cur_doc: str | None = None
    acc: dict[str, list[Match]] = {}
    for sent in sents:
        doc = sent[0].doc_id
        if doc != cur_doc:
            if cur_doc is not None:
                yield cur_doc, acc
            cur_doc = doc
            acc = {n: [] for n in names}
        for rule in rules:
            found = scan_sentence(rule, sent)
            if found:
                acc[rule.name].extend(found)
    if cur_doc is not None:
        yield cur_doc, acc
