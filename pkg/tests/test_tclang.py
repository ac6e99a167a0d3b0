"""Pattern language: lexer, parser, checker diagnostics, pretty printer."""

from pathlib import Path

import pytest

from actmine.corpus import PosTag
from actmine.tclang import (E_BAD_PIPELINE, E_BAD_SPAN, E_CYCLE,
                            E_DUPLICATE_PIPELINE, E_DUPLICATE_RULE,
                            E_MI_PAIR_SOURCE, E_MI_SHAPE, E_MISSING_PIPELINE,
                            E_RESERVED, E_SYNTAX, E_UNDEFINED, E_UNKNOWN_POS,
                            E_UNSUPPORTED_N, Alt, CoOccur, Freq, Literal, Mi,
                            Minus, Opt, Plus, PosClass, RuleRef, Seq, SkipGram,
                            TcError, check_program, parse_program,
                            pretty_print)

SCRIPTS_DIR = Path(__file__).parent / "data" / "scripts"
SCRIPT_FILES = sorted(SCRIPTS_DIR.glob("*.tc"))


def parse_check(src):
    return check_program(parse_program(src))


# ---------------------------------------------------------------------------
# Parsing structure

def test_verb_census_script_structure():
    src = SCRIPTS_DIR.joinpath("laptop.tc").read_text()
    prog = parse_program(src)
    assert [r.name for r in prog.rules] == ["laptop", "verb_phrase"]
    assert prog.pipeline == Freq(RuleRef("verb_phrase"))
    laptop = prog.rules[0].expr
    assert laptop == Seq((Opt(PosClass(PosTag.DET)),
                          Opt(Plus(PosClass(PosTag.ADJ))),
                          Literal("laptop")))
    assert prog.rules[1].expr == Seq((PosClass(PosTag.VERB),
                                      Minus(RuleRef("laptop"))))


def test_all_bundled_scripts_parse_and_check():
    assert len(SCRIPT_FILES) == 4
    for path in SCRIPT_FILES:
        checked = parse_check(path.read_text())
        assert checked.scan_rules


def test_pipeline_shapes():
    co = parse_program(SCRIPTS_DIR.joinpath("activity-object.tc").read_text())
    assert isinstance(co.pipeline, Mi)
    assert co.pipeline.inner.source == CoOccur(RuleRef("np"), RuleRef("vp"), 50)

    sk = parse_program(
        SCRIPTS_DIR.joinpath("activity-activity.tc").read_text())
    assert sk.pipeline.inner.source == SkipGram(RuleRef("vp"), 2, 50)


def test_alternation_is_ordered_and_flat():
    prog = parse_program('p = "a" | "b" | "c"\nfreq(p)\n')
    expr = prog.rules[0].expr
    assert expr == Alt((Literal("a"), Literal("b"), Literal("c")))


def test_postfix_binds_tighter_than_sequence():
    prog = parse_program("p = [DET]? [NOUN]+\nfreq(p)\n")
    assert prog.rules[0].expr == Seq((Opt(PosClass(PosTag.DET)),
                                      Plus(PosClass(PosTag.NOUN))))


def test_sequence_binds_tighter_than_alternation():
    prog = parse_program('p = [DET] [NOUN] | "x"\nfreq(p)\n')
    assert prog.rules[0].expr == Alt((
        Seq((PosClass(PosTag.DET), PosClass(PosTag.NOUN))), Literal("x")))


def test_parens_group():
    prog = parse_program('p = ([ADJ]- [NOUN])+\nfreq(p)\n')
    assert prog.rules[0].expr == Plus(Seq((Minus(PosClass(PosTag.ADJ)),
                                           PosClass(PosTag.NOUN))))


def test_stacked_postfix_operators():
    prog = parse_program("p = [NOUN]+?\nfreq(p)\n")
    assert prog.rules[0].expr == Opt(Plus(PosClass(PosTag.NOUN)))


def test_double_minus_collapses_to_one():
    prog = parse_program("p = [NOUN]--\nfreq(p)\n")
    assert prog.rules[0].expr == Minus(PosClass(PosTag.NOUN))


def test_identifiers_with_hyphen_and_underscore():
    prog = parse_program("my-rule_2 = [NOUN]\nfreq(my-rule_2)\n")
    assert prog.rules[0].name == "my-rule_2"


def test_trailing_hyphen_is_the_drop_operator():
    # "a- b" is Minus(a) then b; "a-b" is one identifier
    prog = parse_program("a = [NOUN]\nb = [VERB]\np = a- b\nfreq(p)\n")
    assert prog.rules[2].expr == Seq((Minus(RuleRef("a")), RuleRef("b")))
    prog = parse_program("a-b = [NOUN]\nfreq(a-b)\n")
    assert prog.rules[0].name == "a-b"


def test_comments_and_blank_lines():
    src = "# heading\n\np = [NOUN]  # trailing\n\nfreq(p)  # done\n"
    prog = parse_program(src)
    assert prog.rules[0].expr == PosClass(PosTag.NOUN)


def test_literal_text_preserved_verbatim():
    prog = parse_program('p = "Laptop"\nfreq(p)\n')
    assert prog.rules[0].expr == Literal("Laptop")  # lowering is runtime's job


# ---------------------------------------------------------------------------
# Diagnostics

def expect_error(src, kind, fragment=None):
    with pytest.raises(TcError) as exc:
        parse_check(src)
    assert exc.value.kind == kind, exc.value
    assert exc.value.line >= 1 and exc.value.col >= 1
    if fragment:
        assert fragment in exc.value.message
    return exc.value


def test_missing_pipeline():
    err = expect_error("x = [NOUN]\n", E_MISSING_PIPELINE)
    assert "pipeline" in err.message


def test_no_rules_at_all():
    expect_error("freq(x)\n", E_SYNTAX, "at least one rule")


def test_duplicate_pipeline():
    expect_error("x = [NOUN]\nfreq(x)\nfreq(x)\n", E_DUPLICATE_PIPELINE)


def test_rule_after_pipeline():
    expect_error("x = [NOUN]\nfreq(x)\ny = [VERB]\n", E_SYNTAX,
                 "after the pipeline")


def test_duplicate_rule():
    expect_error("x = [NOUN]\nx = [VERB]\nfreq(x)\n", E_DUPLICATE_RULE, "x")


def test_reserved_rule_names():
    for name in ("freq", "MI", "co-occur", "skip-gram"):
        err = expect_error(f"{name} = [NOUN]\nfreq({name})\n", E_RESERVED)
        assert name in err.message


def test_undefined_rule_in_body():
    err = expect_error("x = ghost\nfreq(x)\n", E_UNDEFINED, "ghost")
    assert (err.line, err.col) == (1, 5)


def test_undefined_rule_in_pipeline():
    expect_error("x = [NOUN]\nfreq(ghost)\n", E_UNDEFINED, "ghost")
    expect_error("x = [NOUN]\nMI(freq(co-occur(x, ghost, 50)))\n",
                 E_UNDEFINED, "ghost")


def test_smallest_cycle():
    err = expect_error("a = b\nb = a\nfreq(a)\n", E_CYCLE)
    assert "a -> b -> a" in err.message or "b -> a -> b" in err.message


def test_self_cycle():
    expect_error("a = a\nfreq(a)\n", E_CYCLE)


def test_unknown_pos_tag():
    err = expect_error("x = [NOUNX]\nfreq(x)\n", E_UNKNOWN_POS, "NOUNX")
    assert "NOUN" in err.message  # suggests the valid tag set


def test_bad_span():
    expect_error("a = [NOUN]\nb = [VERB]\nMI(freq(co-occur(a, b, 0)))\n",
                 E_BAD_SPAN)


def test_unsupported_skip_gram_n():
    err = expect_error("a = [NOUN]\nMI(freq(skip-gram(a, 3, 50)))\n",
                       E_UNSUPPORTED_N)
    assert "3" in err.message


def test_mi_requires_freq_argument():
    expect_error("a = [NOUN]\nb = [VERB]\nMI(co-occur(a, b, 50))\n",
                 E_MI_SHAPE)
    expect_error("a = [NOUN]\nMI(a)\n", E_MI_SHAPE)


def test_mi_over_single_label_rule():
    expect_error("x = [NOUN]\nMI(freq(x))\n", E_MI_PAIR_SOURCE)


def test_mi_pair_component_must_be_flat():
    src = ("inner = [NOUN]\n"
           "np = inner\n"
           "vp = [VERB]\n"
           "svo = np vp np?\n"
           "MI(freq(svo))\n")
    expect_error(src, E_MI_PAIR_SOURCE, "np")


def test_freq_of_freq_rejected():
    expect_error("x = [NOUN]\nfreq(freq(x))\n", E_BAD_PIPELINE)


def test_bare_co_occur_pipeline_rejected():
    expect_error("a = [NOUN]\nb = [VERB]\nco-occur(a, b, 50)\n",
                 E_BAD_PIPELINE)


def test_syntax_error_positions():
    with pytest.raises(TcError) as exc:
        parse_program('x = [NOUN\nfreq(x)\n')
    assert exc.value.kind == E_SYNTAX
    assert exc.value.line == 1

    with pytest.raises(TcError) as exc:
        parse_program('x = "unterminated\nfreq(x)\n')
    assert "unterminated" in exc.value.message

    with pytest.raises(TcError) as exc:
        parse_program('x = ""\nfreq(x)\n')
    assert "empty string" in exc.value.message

    with pytest.raises(TcError) as exc:
        parse_program("x = [NOUN] @\nfreq(x)\n")
    assert (exc.value.line, exc.value.col) == (1, 12)


def test_unknown_aggregator_name():
    with pytest.raises(TcError, match="unknown aggregator"):
        parse_program("x = [NOUN]\ncount(x)\n")


def test_junk_after_rule_body():
    expect_error("x = [NOUN] )\nfreq(x)\n", E_SYNTAX, "after rule body")


# ---------------------------------------------------------------------------
# Pretty printer and fuzzing

def test_parse_pretty_parse_fixed_point_on_bundled_scripts():
    for path in SCRIPT_FILES:
        prog = parse_program(path.read_text())
        printed = pretty_print(prog)
        again = parse_program(printed)
        assert again == prog, path.name
        assert pretty_print(again) == printed


def test_pretty_print_parenthesizes_only_when_needed():
    src = 'p = [DET]? ([ADJ]- [NOUN])+ | "x"\nfreq(p)\n'
    printed = pretty_print(parse_program(src))
    assert printed == 'p = [DET]? ([ADJ]- [NOUN])+ | "x"\nfreq(p)\n'


def test_truncation_fuzz_never_escapes_tc_errors():
    for path in SCRIPT_FILES:
        src = path.read_text()
        for cut in range(len(src)):
            try:
                parse_check(src[:cut])
            except TcError as e:
                assert e.line >= 1 and e.col >= 1
            # any other exception type fails the test by propagating


# ---------------------------------------------------------------------------
# Checker outputs

def test_checked_scan_rules_and_pair_shape():
    checked = parse_check(
        SCRIPTS_DIR.joinpath("object-affordance.tc").read_text())
    assert checked.scan_rules == ("svo",)
    assert checked.pair_shape is not None
    assert (checked.pair_shape.a_rule, checked.pair_shape.b_rule) == \
        ("np", "vp")

    checked = parse_check(
        SCRIPTS_DIR.joinpath("activity-object.tc").read_text())
    assert checked.scan_rules == ("np", "vp")
    assert checked.pair_shape is None


def test_checker_normalizes_nested_minus():
    checked = parse_check("p = ([NOUN]-)-\nq = [VERB]\nfreq(q)\n")
    assert checked.rules["p"] == Minus(PosClass(PosTag.NOUN))
