import pytest

from qfuf.fuzz import FuzzSpec, generate_script
from qfuf.smtlib import (CommandKind, LexError, ParseError, SortMismatch,
                         UndeclaredSymbol, UnsupportedFeature, parse_script,
                         parse_warnings, print_term, xor_semantics)
from qfuf.terms import Kind


def test_basic_script_shape():
    script = parse_script(
        "(declare-sort S 0)(declare-fun a () S)(assert (= a a))(check-sat)"
    )
    kinds = [c.kind for c in script.commands]
    assert kinds == [
        CommandKind.DECLARE_SORT,
        CommandKind.DECLARE_FUN,
        CommandKind.ASSERT,
        CommandKind.CHECK_SAT,
    ]


def test_nary_xor_is_one_node():
    script = parse_script(
        "(declare-fun p () Bool)(declare-fun q () Bool)(declare-fun r () Bool)"
        "(assert (xor p q r))"
    )
    term = script.commands[-1].term
    assert term.kind is Kind.XOR
    assert len(term.args) == 3


def test_let_expansion_shares_nodes():
    script = parse_script(
        "(declare-sort S 0)(declare-fun a () S)(declare-fun f (S) S)"
        "(assert (let ((x (f a))) (= x x)))"
    )
    term = script.commands[-1].term
    assert term.kind is Kind.EQ
    assert term.args[0] is term.args[1]


def test_let_is_parallel_and_shadowing():
    # inner x shadows outer x lexically; bindings see the outer scope
    script = parse_script(
        "(declare-fun p () Bool)(declare-fun q () Bool)"
        "(assert (let ((x p)) (let ((x q) (y x)) (and x y))))"
    )
    term = script.commands[-1].term
    # x -> q, y -> outer x -> p
    names = [a.symbol.name for a in term.args]
    assert names == ["q", "p"]


def test_annotation_stripped():
    script = parse_script(
        "(declare-fun p () Bool)(assert (! p :named foo))"
    )
    assert script.commands[-1].term.symbol.name == "p"


def test_chainable_equality():
    script = parse_script(
        "(declare-sort S 0)(declare-fun a () S)(declare-fun b () S)"
        "(declare-fun c () S)(assert (= a b c))"
    )
    term = script.commands[-1].term
    assert term.kind is Kind.AND
    assert all(a.kind is Kind.EQ for a in term.args)


def test_distinct_kept_nary():
    script = parse_script(
        "(declare-sort S 0)(declare-fun a () S)(declare-fun b () S)"
        "(declare-fun c () S)(assert (distinct a b c))"
    )
    assert script.commands[-1].term.kind is Kind.DISTINCT


def test_bool_argument_positions_accepted():
    script = parse_script(
        "(declare-sort S 0)(declare-fun f (Bool) S)(declare-fun p () Bool)"
        "(declare-fun a () S)(assert (= (f p) (f (not p))))(assert (= a a))"
    )
    assert script.commands[4].term.kind is Kind.EQ


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_script("(declare-sort S 0")
    assert err.value.line >= 1
    with pytest.raises(UndeclaredSymbol) as err2:
        parse_script("\n\n(assert (= zz zz))")
    assert err2.value.line == 3


def test_missing_paren_rejected():
    with pytest.raises((ParseError, LexError)):
        parse_script("(declare-fun p () Bool)(assert (or p p)")


def test_undeclared_symbol():
    with pytest.raises(UndeclaredSymbol):
        parse_script("(assert (= a a))(check-sat)")


def test_sort_mismatch_reported():
    with pytest.raises(SortMismatch):
        parse_script(
            "(declare-sort S 0)(declare-fun a () S)(declare-fun p () Bool)"
            "(assert (= a p))"
        )


def test_unsupported_features():
    with pytest.raises(UnsupportedFeature):
        parse_script("(declare-sort Pair 2)")
    with pytest.raises(UnsupportedFeature):
        parse_script("(declare-fun p () Bool)(assert (forall ((x Bool)) p))")
    with pytest.raises(UnsupportedFeature):
        parse_script("(declare-fun f (Bool) Bool)(assert (f 42))")
    with pytest.raises(UnsupportedFeature):
        parse_script("(push 1)")


def test_set_info_payload_skipped():
    script = parse_script(
        '(set-info :source |random text (with parens) and "quotes"|)'
        "(set-option :produce-models true)"
        "(set-logic QF_UF)(check-sat)"
    )
    assert script.commands[-1].kind is CommandKind.CHECK_SAT


def test_comments_ignored():
    script = parse_script("; header\n(check-sat) ; trailing\n")
    assert script.commands[0].kind is CommandKind.CHECK_SAT


def test_repeated_check_sat_warns_and_ignores():
    script, warnings = parse_warnings("(check-sat)(check-sat)")
    assert len([c for c in script.commands
                if c.kind is CommandKind.CHECK_SAT]) == 1
    assert warnings


def test_quoted_symbols_roundtrip():
    script = parse_script(
        "(declare-sort S 0)(declare-fun |hello world| () S)"
        "(assert (= |hello world| |hello world|))"
    )
    term = script.commands[-1].term
    printed = print_term(term.args[0])
    assert printed == "|hello world|"
    again = parse_script(
        f"(declare-sort S 0)(declare-fun |hello world| () S)(assert (= {printed} {printed}))"
    )
    assert again.commands[-1].term.kind is Kind.EQ


def test_xor_semantics_examples():
    assert xor_semantics([True, True]) is False
    assert xor_semantics([True, True, True]) is True
    # left-associative fold of binary xor equals parity
    vals = [False, False, False, False, True]
    folded = vals[0]
    for v in vals[1:]:
        folded = folded != v
    assert xor_semantics(vals) is folded is True


@pytest.mark.parametrize("seed", range(25))
def test_print_parse_roundtrip(seed):
    """Round-trip: reparsing a printed fuzz script interns identical terms."""
    text = generate_script(FuzzSpec(), seed)
    script = parse_script(text)
    for cmd in script.commands:
        if cmd.kind is CommandKind.ASSERT:
            printed = print_term(cmd.term)
            # reparse within the same bank: must intern to the same id
            from qfuf.smtlib import _Parser
            parser = _Parser(f"(assert {printed})", script.bank)
            reparsed = parser.parse_script().commands[0].term
            assert reparsed is cmd.term


def test_print_term_examples(bank):
    s = bank.declare_sort("S")
    a = bank.const(bank.declare_fun("a", (), s))
    b = bank.const(bank.declare_fun("b", (), s))
    f = bank.declare_fun("f", (s,), s)
    p = bank.const(bank.declare_fun("p", (), bank.bool_sort))
    q = bank.const(bank.declare_fun("q", (), bank.bool_sort))
    r = bank.const(bank.declare_fun("r", (), bank.bool_sort))
    fa = bank.app(f, [a])
    c = bank.const(bank.declare_fun("c", (), s))  # interned after (f a)
    assert print_term(bank.eq(a, b)) == "(= a b)"
    assert print_term(bank.xor([p, q, r])) == "(xor p q r)"
    assert print_term(bank.eq(fa, c)) == "(= (f a) c)"
