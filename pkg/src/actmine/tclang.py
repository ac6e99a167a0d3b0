"""The pattern language: lexer, parser, static checker, pretty printer.

A program is a sequence of named pattern rules followed by exactly one
aggregation pipeline line:

    human_pronoun = "he" | "she" | "i" | "we" | "they"
    np = [DET]? ([ADJ]- [NOUN])+
    vp = human_pronoun ([VERB] [ADP])+
    MI(freq(co-occur(np, vp, 50)))

Pattern operators, tightest first: postfix ``?`` ``+`` ``-``, then
juxtaposition (sequence), then ``|``.  Quoted literals match on the token
lemma case-insensitively, ``[TAG]`` matches a POS class, a bare identifier
references another rule.  ``-`` matches normally but removes the consumed
tokens from the emitted label.  ``#`` starts a comment, a newline ends a
rule, identifiers may contain ``-`` and ``_``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .corpus import POS_TAG_NAMES, PosTag, parse_tag

AGG_NAMES = ("freq", "co-occur", "skip-gram", "MI")

# Diagnostic kinds.  Tests rely on these being distinct strings.
E_SYNTAX = "syntax"
E_UNDEFINED = "undefined-rule"
E_CYCLE = "cyclic-rule"
E_MISSING_PIPELINE = "missing-pipeline"
E_DUPLICATE_PIPELINE = "duplicate-pipeline"
E_DUPLICATE_RULE = "duplicate-rule"
E_RESERVED = "reserved-name"
E_UNKNOWN_POS = "unknown-pos"
E_BAD_SPAN = "bad-span"
E_UNSUPPORTED_N = "unsupported-n"
E_MI_SHAPE = "mi-shape"
E_MI_PAIR_SOURCE = "mi-pair-source"
E_BAD_PIPELINE = "bad-pipeline"


class TcError(Exception):
    """A diagnostic with a kind and a 1-based source position."""

    def __init__(self, kind: str, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.kind = kind
        self.message = message
        self.line = line
        self.col = col


def _loc_field():
    return field(default=(1, 1), compare=False, repr=False)


@dataclass(frozen=True)
class Literal:
    text: str
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class PosClass:
    tag: PosTag
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class RuleRef:
    name: str
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class Seq:
    items: tuple["PatternExpr", ...]
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class Alt:
    items: tuple["PatternExpr", ...]
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class Opt:
    inner: "PatternExpr"
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class Plus:
    """One or more repetitions, greedy and committed (no backtracking)."""

    inner: "PatternExpr"
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class Minus:
    """Matches its inner pattern but drops the consumed tokens from the label.

    Never wraps another Minus; construction through the parser normalizes
    that away.
    """

    inner: "PatternExpr"
    loc: tuple[int, int] = _loc_field()


PatternExpr = Union[Literal, PosClass, RuleRef, Seq, Alt, Opt, Plus, Minus]


@dataclass(frozen=True)
class Freq:
    source: Union[RuleRef, "CoOccur", "SkipGram"]
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class CoOccur:
    rule_a: RuleRef
    rule_b: RuleRef
    span: int
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class SkipGram:
    rule: RuleRef
    n: int
    span: int
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class Mi:
    inner: Freq
    loc: tuple[int, int] = _loc_field()


AggExpr = Union[Freq, CoOccur, SkipGram, Mi]


@dataclass(frozen=True)
class RuleDef:
    name: str
    expr: PatternExpr
    loc: tuple[int, int] = _loc_field()


@dataclass(frozen=True)
class TcProgram:
    rules: tuple[RuleDef, ...]
    pipeline: AggExpr


# ---------------------------------------------------------------------------
# Lexer

_PUNCT_TOKENS = {
    "(": "LPAREN", ")": "RPAREN", "[": "LBRACK", "]": "RBRACK",
    "|": "PIPE", "?": "QMARK", "+": "PLUS", "-": "MINUS",
    "=": "EQ", ",": "COMMA",
}


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    line: int
    col: int


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _lex(src: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            toks.append(_Tok("NEWLINE", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and src[i] != "\n":
                i += 1
                col += 1
            continue
        start_col = col
        if ch == '"':
            j = i + 1
            while j < n and src[j] not in '"\n':
                j += 1
            if j >= n or src[j] != '"':
                raise TcError(E_SYNTAX, "unterminated string literal", line, start_col)
            toks.append(_Tok("STRING", src[i + 1:j], line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(_Tok("NUMBER", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if _is_ident_start(ch):
            j = i + 1
            # '-' joins an identifier only when followed by another ident
            # character; a trailing '-' is the drop operator.
            while j < n and (_is_ident_char(src[j])
                             or (src[j] == "-" and j + 1 < n and _is_ident_char(src[j + 1]))):
                j += 1
            toks.append(_Tok("IDENT", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        kind = _PUNCT_TOKENS.get(ch)
        if kind is None:
            raise TcError(E_SYNTAX, f"unexpected character {ch!r}", line, start_col)
        toks.append(_Tok(kind, ch, line, start_col))
        i += 1
        col += 1
    toks.append(_Tok("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser

_ATOM_STARTS = ("IDENT", "STRING", "LBRACK", "LPAREN")


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def expect(self, kind: str, what: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            raise TcError(E_SYNTAX, f"expected {what}, got {t.value!r}" if t.value
                          else f"expected {what}, got end of input", t.line, t.col)
        return self.next()

    def skip_newlines(self) -> None:
        while self.peek().kind == "NEWLINE":
            self.next()

    def at_line_end(self) -> bool:
        return self.peek().kind in ("NEWLINE", "EOF")

    # pattern expressions -------------------------------------------------

    def parse_alt(self) -> PatternExpr:
        first = self.parse_seq()
        if self.peek().kind != "PIPE":
            return first
        items = [first]
        loc = (first.loc[0], first.loc[1])
        while self.peek().kind == "PIPE":
            self.next()
            items.append(self.parse_seq())
        return Alt(tuple(items), loc)

    def parse_seq(self) -> PatternExpr:
        items = [self.parse_postfix()]
        while self.peek().kind in _ATOM_STARTS:
            items.append(self.parse_postfix())
        if len(items) == 1:
            return items[0]
        return Seq(tuple(items), items[0].loc)

    def parse_postfix(self) -> PatternExpr:
        expr = self.parse_atom()
        while True:
            t = self.peek()
            if t.kind == "QMARK":
                self.next()
                expr = Opt(expr, (t.line, t.col))
            elif t.kind == "PLUS":
                self.next()
                expr = Plus(expr, (t.line, t.col))
            elif t.kind == "MINUS":
                self.next()
                if not isinstance(expr, Minus):  # Minus over Minus normalizes away
                    expr = Minus(expr, (t.line, t.col))
            else:
                return expr

    def parse_atom(self) -> PatternExpr:
        t = self.peek()
        if t.kind == "STRING":
            self.next()
            if not t.value:
                raise TcError(E_SYNTAX, "empty string literal", t.line, t.col)
            return Literal(t.value, (t.line, t.col))
        if t.kind == "LBRACK":
            self.next()
            name = self.expect("IDENT", "a POS tag")
            self.expect("RBRACK", "']'")
            tag = parse_tag(name.value)
            if tag is None:
                raise TcError(E_UNKNOWN_POS,
                              f"unknown POS tag [{name.value}]; expected one of "
                              + " ".join(sorted(POS_TAG_NAMES)),
                              name.line, name.col)
            return PosClass(tag, (t.line, t.col))
        if t.kind == "IDENT":
            self.next()
            return RuleRef(t.value, (t.line, t.col))
        if t.kind == "LPAREN":
            self.next()
            inner = self.parse_alt()
            self.expect("RPAREN", "')'")
            return inner
        raise TcError(E_SYNTAX, f"expected a pattern, got {t.value!r}" if t.value
                      else "expected a pattern, got end of input", t.line, t.col)

    # aggregation pipeline -------------------------------------------------

    def parse_aggcall(self) -> AggExpr:
        t = self.expect("IDENT", "an aggregator name")
        name = t.value
        loc = (t.line, t.col)
        if name not in AGG_NAMES:
            raise TcError(E_SYNTAX, f"unknown aggregator {name!r}", t.line, t.col)
        self.expect("LPAREN", "'('")
        if name == "freq":
            source = self.parse_agg_source()
            self.expect("RPAREN", "')'")
            return Freq(source, loc)
        if name == "co-occur":
            a = self.parse_rule_arg()
            self.expect("COMMA", "','")
            b = self.parse_rule_arg()
            self.expect("COMMA", "','")
            span = self.parse_int_arg()
            self.expect("RPAREN", "')'")
            return CoOccur(a, b, span, loc)
        if name == "skip-gram":
            r = self.parse_rule_arg()
            self.expect("COMMA", "','")
            gram_n = self.parse_int_arg()
            self.expect("COMMA", "','")
            span = self.parse_int_arg()
            self.expect("RPAREN", "')'")
            return SkipGram(r, gram_n, span, loc)
        # MI
        t2 = self.peek()
        if t2.kind != "IDENT" or t2.value not in AGG_NAMES:
            raise TcError(E_MI_SHAPE, "MI takes a freq(...) argument", t2.line, t2.col)
        inner = self.parse_aggcall()
        if not isinstance(inner, Freq):
            raise TcError(E_MI_SHAPE, "MI takes a freq(...) argument", t2.line, t2.col)
        self.expect("RPAREN", "')'")
        return Mi(inner, loc)

    def parse_agg_source(self) -> Union[RuleRef, CoOccur, SkipGram]:
        t = self.peek()
        if t.kind == "IDENT" and t.value in AGG_NAMES:
            inner = self.parse_aggcall()
            if isinstance(inner, (Freq, Mi)):
                raise TcError(E_BAD_PIPELINE,
                              "freq takes a rule, co-occur(...) or skip-gram(...)",
                              t.line, t.col)
            return inner
        r = self.expect("IDENT", "a rule name")
        return RuleRef(r.value, (r.line, r.col))

    def parse_rule_arg(self) -> RuleRef:
        t = self.expect("IDENT", "a rule name")
        return RuleRef(t.value, (t.line, t.col))

    def parse_int_arg(self) -> int:
        t = self.expect("NUMBER", "an integer")
        return int(t.value)


def parse_program(src: str) -> TcProgram:
    """Parse source text into a program, or raise TcError with line/column."""
    p = _Parser(_lex(src))
    rules: list[RuleDef] = []
    seen: dict[str, RuleDef] = {}
    pipeline: AggExpr | None = None
    while True:
        p.skip_newlines()
        t = p.peek()
        if t.kind == "EOF":
            break
        if t.kind == "IDENT" and p.toks[p.i + 1].kind == "EQ":
            if pipeline is not None:
                raise TcError(E_SYNTAX, "rule defined after the pipeline line",
                              t.line, t.col)
            name = p.next().value
            if name in AGG_NAMES:
                raise TcError(E_RESERVED,
                              f"rule name {name!r} collides with an aggregator",
                              t.line, t.col)
            if name in seen:
                raise TcError(E_DUPLICATE_RULE, f"duplicate rule {name!r}",
                              t.line, t.col)
            p.next()  # '='
            expr = p.parse_alt()
            if not p.at_line_end():
                bad = p.peek()
                raise TcError(E_SYNTAX, f"unexpected {bad.value!r} after rule body",
                              bad.line, bad.col)
            rd = RuleDef(name, expr, (t.line, t.col))
            rules.append(rd)
            seen[name] = rd
        else:
            call = p.parse_aggcall()
            if not p.at_line_end():
                bad = p.peek()
                raise TcError(E_SYNTAX, f"unexpected {bad.value!r} after pipeline",
                              bad.line, bad.col)
            if pipeline is not None:
                raise TcError(E_DUPLICATE_PIPELINE, "more than one pipeline line",
                              t.line, t.col)
            pipeline = call
    if not rules:
        eof = p.peek()
        raise TcError(E_SYNTAX, "program must define at least one rule",
                      eof.line, max(eof.col, 1))
    if pipeline is None:
        eof = p.peek()
        raise TcError(E_MISSING_PIPELINE, "program has no pipeline line",
                      eof.line, max(eof.col, 1))
    return TcProgram(tuple(rules), pipeline)


# ---------------------------------------------------------------------------
# Checker

@dataclass(frozen=True)
class PairShape:
    """Which component rule labels each side of an emitted pair."""

    a_rule: str  # the repeated or leading component (nouns in svo shapes)
    b_rule: str  # the pivot component (the verb phrase in svo shapes)


@dataclass(frozen=True)
class CheckedProgram:
    rules: dict[str, PatternExpr]
    rule_order: tuple[str, ...]
    pipeline: AggExpr
    scan_rules: tuple[str, ...]
    pair_shape: PairShape | None


def walk_refs(expr: PatternExpr) -> Iterator[RuleRef]:
    """Yield every rule reference in an expression, in source order."""
    if isinstance(expr, RuleRef):
        yield expr
    elif isinstance(expr, (Seq, Alt)):
        for item in expr.items:
            yield from walk_refs(item)
    elif isinstance(expr, (Opt, Plus, Minus)):
        yield from walk_refs(expr.inner)


def _component_refs(expr: PatternExpr, under_minus: bool = False) -> list[str]:
    """Rule references that contribute sublabels (everything not under Minus)."""
    out: list[str] = []
    if isinstance(expr, RuleRef):
        if not under_minus:
            out.append(expr.name)
    elif isinstance(expr, (Seq, Alt)):
        for item in expr.items:
            out.extend(_component_refs(item, under_minus))
    elif isinstance(expr, Minus):
        out.extend(_component_refs(expr.inner, True))
    elif isinstance(expr, (Opt, Plus)):
        out.extend(_component_refs(expr.inner, under_minus))
    return out


def _normalize(expr: PatternExpr) -> PatternExpr:
    if isinstance(expr, Seq):
        return Seq(tuple(_normalize(i) for i in expr.items), expr.loc)
    if isinstance(expr, Alt):
        return Alt(tuple(_normalize(i) for i in expr.items), expr.loc)
    if isinstance(expr, Opt):
        return Opt(_normalize(expr.inner), expr.loc)
    if isinstance(expr, Plus):
        return Plus(_normalize(expr.inner), expr.loc)
    if isinstance(expr, Minus):
        inner = _normalize(expr.inner)
        while isinstance(inner, Minus):
            inner = inner.inner
        return Minus(inner, expr.loc)
    return expr


def _pair_shape_for(rule_name: str, rules: dict[str, PatternExpr],
                    loc: tuple[int, int]) -> PairShape:
    comps = _component_refs(rules[rule_name])
    names = list(dict.fromkeys(comps))
    if len(names) != 2:
        raise TcError(E_MI_PAIR_SOURCE,
                      f"MI requires pair-emitting source; rule {rule_name!r} "
                      f"has {len(names)} tracked component(s)",
                      loc[0], loc[1])
    for comp in names:
        if _component_refs(rules[comp]):
            raise TcError(E_MI_PAIR_SOURCE,
                          f"pair component {comp!r} must not reference further rules",
                          loc[0], loc[1])
    counts = {n: comps.count(n) for n in names}
    singles = [n for n in names if counts[n] == 1]
    if len(singles) == 1:
        b_rule = singles[0]
    elif len(singles) == 2:
        b_rule = names[1]
    else:
        raise TcError(E_MI_PAIR_SOURCE,
                      f"cannot orient pair components of rule {rule_name!r}",
                      loc[0], loc[1])
    a_rule = names[0] if names[1] == b_rule else names[1]
    return PairShape(a_rule, b_rule)


def check_program(program: TcProgram) -> CheckedProgram:
    """Resolve references, reject cycles, validate the pipeline shape."""
    rules: dict[str, PatternExpr] = {}
    order: list[str] = []
    for rd in program.rules:
        rules[rd.name] = _normalize(rd.expr)
        order.append(rd.name)

    rule_locs = {rd.name: rd.loc for rd in program.rules}
    for rd in program.rules:
        for ref in walk_refs(rules[rd.name]):
            if ref.name not in rules:
                raise TcError(E_UNDEFINED, f"undefined rule {ref.name!r}",
                              ref.loc[0], ref.loc[1])

    state: dict[str, int] = {}  # 1 = visiting, 2 = done

    def visit(name: str, path: list[str]) -> None:
        mark = state.get(name)
        if mark == 2:
            return
        if mark == 1:
            cycle = path[path.index(name):] + [name]
            loc = rule_locs[name]
            raise TcError(E_CYCLE, "cyclic rule reference: " + " -> ".join(cycle),
                          loc[0], loc[1])
        state[name] = 1
        path.append(name)
        for ref in walk_refs(rules[name]):
            visit(ref.name, path)
        path.pop()
        state[name] = 2

    for name in order:
        visit(name, [])

    pipeline = program.pipeline
    pair_shape: PairShape | None = None

    def require_rule(ref: RuleRef) -> str:
        if ref.name not in rules:
            raise TcError(E_UNDEFINED, f"undefined rule {ref.name!r}",
                          ref.loc[0], ref.loc[1])
        return ref.name

    def check_span(value: int, loc: tuple[int, int]) -> None:
        if value < 1:
            raise TcError(E_BAD_SPAN, f"span must be >= 1, got {value}",
                          loc[0], loc[1])

    def check_freq(freq: Freq, under_mi: bool) -> tuple[str, ...]:
        nonlocal pair_shape
        src = freq.source
        if isinstance(src, RuleRef):
            name = require_rule(src)
            comps = list(dict.fromkeys(_component_refs(rules[name])))
            if under_mi or len(comps) >= 2:
                pair_shape = _pair_shape_for(name, rules, src.loc)
            return (name,)
        if isinstance(src, CoOccur):
            check_span(src.span, src.loc)
            return (require_rule(src.rule_a), require_rule(src.rule_b))
        if isinstance(src, SkipGram):
            if src.n != 2:
                raise TcError(E_UNSUPPORTED_N,
                              f"unsupported n for skip-gram: {src.n} (only 2)",
                              src.loc[0], src.loc[1])
            check_span(src.span, src.loc)
            return (require_rule(src.rule),)
        raise TcError(E_BAD_PIPELINE, "freq takes a rule, co-occur or skip-gram",
                      freq.loc[0], freq.loc[1])

    if isinstance(pipeline, Mi):
        scan = check_freq(pipeline.inner, under_mi=True)
    elif isinstance(pipeline, Freq):
        scan = check_freq(pipeline, under_mi=False)
    else:
        raise TcError(E_BAD_PIPELINE, "pipeline must aggregate with freq or MI",
                      pipeline.loc[0], pipeline.loc[1])

    return CheckedProgram(rules=rules, rule_order=tuple(order),
                          pipeline=pipeline, scan_rules=scan,
                          pair_shape=pair_shape)


# ---------------------------------------------------------------------------
# Pretty printer

_PREC_ALT = 0
_PREC_SEQ = 1
_PREC_POSTFIX = 2


def _prec(expr: PatternExpr) -> int:
    if isinstance(expr, Alt):
        return _PREC_ALT
    if isinstance(expr, Seq):
        return _PREC_SEQ
    return _PREC_POSTFIX


def _fmt(expr: PatternExpr, min_prec: int) -> str:
    if isinstance(expr, Literal):
        return f'"{expr.text}"'
    if isinstance(expr, PosClass):
        return f"[{expr.tag.value}]"
    if isinstance(expr, RuleRef):
        return expr.name
    if isinstance(expr, Seq):
        body = " ".join(_fmt(i, _PREC_SEQ + 1) for i in expr.items)
        return f"({body})" if _PREC_SEQ < min_prec else body
    if isinstance(expr, Alt):
        body = " | ".join(_fmt(i, _PREC_ALT + 1) for i in expr.items)
        return f"({body})" if _PREC_ALT < min_prec else body
    op = "?" if isinstance(expr, Opt) else "+" if isinstance(expr, Plus) else "-"
    return _fmt(expr.inner, _PREC_POSTFIX) + op


def _fmt_agg(agg: AggExpr) -> str:
    if isinstance(agg, Freq):
        return f"freq({_fmt_agg(agg.source)})" if not isinstance(agg.source, RuleRef) \
            else f"freq({agg.source.name})"
    if isinstance(agg, CoOccur):
        return f"co-occur({agg.rule_a.name}, {agg.rule_b.name}, {agg.span})"
    if isinstance(agg, SkipGram):
        return f"skip-gram({agg.rule.name}, {agg.n}, {agg.span})"
    if isinstance(agg, Mi):
        return f"MI({_fmt_agg(agg.inner)})"
    raise TypeError(f"not an aggregation: {agg!r}")


def pretty_print(program: TcProgram) -> str:
    """Render a program back to canonical source text."""
    lines = [f"{rd.name} = {_fmt(rd.expr, _PREC_ALT)}" for rd in program.rules]
    lines.append(_fmt_agg(program.pipeline))
    return "\n".join(lines) + "\n"
