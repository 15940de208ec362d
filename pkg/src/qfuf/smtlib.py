"""SMT-LIB 2 frontend for the QF_UF fragment.

Hand-written lexer and recursive-descent parser producing interned terms
and a command stream, plus the matching printer.  `let` bindings are
expanded by substitution during elaboration; `!` annotations (including
`:named`) are accepted and stripped.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Iterable, Sequence

from .terms import Kind, Sort, SortError, Symbol, Term, TermBank


class FrontendError(Exception):
    """Base class for lexing/parsing/elaboration errors."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


class LexError(FrontendError):
    pass


class ParseError(FrontendError):
    pass


class UndeclaredSymbol(FrontendError):
    pass


class UnsupportedFeature(FrontendError):
    pass


class SortMismatch(FrontendError):
    pass


RESERVED = frozenset(
    "let forall exists par as ! _ match BINARY DECIMAL HEXADECIMAL NUMERAL STRING".split()
)

_SIMPLE_SYMBOL = re.compile(r"[A-Za-z~!@$%^&*_\-+=<>.?/][A-Za-z0-9~!@$%^&*_\-+=<>.?/]*\Z")
_NUMERAL = re.compile(r"(0|[1-9][0-9]*)\Z")


class Tok(Enum):
    LPAREN = "("
    RPAREN = ")"
    SYMBOL = "symbol"
    KEYWORD = "keyword"
    NUMERAL = "numeral"
    STRING = "string"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: Tok
    text: str
    line: int
    col: int
    pos: int


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if c == ";":
            while i < n and text[i] != "\n":
                advance(1)
            continue
        start_line, start_col, start_pos = line, col, i
        if c == "(":
            toks.append(Token(Tok.LPAREN, "(", start_line, start_col, start_pos))
            advance(1)
            continue
        if c == ")":
            toks.append(Token(Tok.RPAREN, ")", start_line, start_col, start_pos))
            advance(1)
            continue
        if c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise LexError("unterminated quoted symbol", start_line, start_col)
            body = text[i + 1 : j]
            if "\\" in body:
                raise LexError("backslash in quoted symbol", start_line, start_col)
            advance(j + 1 - i)
            toks.append(Token(Tok.SYMBOL, body, start_line, start_col, start_pos))
            continue
        if c == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            else:
                raise LexError("unterminated string literal", start_line, start_col)
            body = text[i + 1 : j].replace('""', '"')
            advance(j + 1 - i)
            toks.append(Token(Tok.STRING, body, start_line, start_col, start_pos))
            continue
        if c == ":":
            j = i + 1
            while j < n and _SIMPLE_SYMBOL.match(text[j]):
                j += 1
            if j == i + 1:
                raise LexError("bare ':' is not a token", start_line, start_col)
            word = text[i:j]
            advance(j - i)
            toks.append(Token(Tok.KEYWORD, word, start_line, start_col, start_pos))
            continue
        j = i
        while j < n and text[j] not in ' \t\r\n();"|:':
            j += 1
        word = text[i:j]
        advance(j - i)
        if re.match(r"[0-9]", word):
            # numerals/decimals/hex/binary all start with a digit or #
            toks.append(Token(Tok.NUMERAL, word, start_line, start_col, start_pos))
        elif word.startswith("#"):
            toks.append(Token(Tok.NUMERAL, word, start_line, start_col, start_pos))
        elif _SIMPLE_SYMBOL.match(word):
            toks.append(Token(Tok.SYMBOL, word, start_line, start_col, start_pos))
        else:
            raise LexError(f"cannot tokenize {word!r}", start_line, start_col)
    toks.append(Token(Tok.EOF, "", line, col, n))
    return toks


class CommandKind(Enum):
    SET_LOGIC = "set-logic"
    SET_INFO = "set-info"
    SET_OPTION = "set-option"
    DECLARE_SORT = "declare-sort"
    DECLARE_FUN = "declare-fun"
    DECLARE_CONST = "declare-const"
    ASSERT = "assert"
    CHECK_SAT = "check-sat"
    GET_MODEL = "get-model"
    EXIT = "exit"


@dataclass
class Command:
    kind: CommandKind
    term: Term | None = None
    name: str | None = None
    symbol: Symbol | None = None
    sort: Sort | None = None
    source_span: tuple[int, int] = (0, 0)


@dataclass
class Script:
    bank: TermBank
    commands: list[Command] = field(default_factory=list)

    def assertions(self) -> list[Term]:
        """Assertions preceding the first honored check-sat (or all of them)."""
        out = []
        for cmd in self.commands:
            if cmd.kind is CommandKind.ASSERT:
                out.append(cmd.term)
            elif cmd.kind is CommandKind.CHECK_SAT:
                break
        return out

    def has_check_sat(self) -> bool:
        return any(c.kind is CommandKind.CHECK_SAT for c in self.commands)


def xor_semantics(values: Sequence[bool]) -> bool:
    """n-ary xor is parity: true iff an odd number of inputs are true."""
    if not values:
        raise ValueError("xor needs at least one operand")
    return reduce(lambda a, b: a != b, values)


class _Parser:
    def __init__(self, text: str, bank: TermBank):
        self.toks = tokenize(text)
        self.pos = 0
        self.bank = bank
        self.warnings: list[str] = []

    # -- token plumbing -------------------------------------------------

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: Tok) -> Token:
        tok = self.next()
        if tok.kind is not kind:
            raise ParseError(
                f"expected {kind.value!r}, found {tok.text!r}", tok.line, tok.col
            )
        return tok

    def skip_sexp(self) -> None:
        """Skip one balanced s-expression (for attribute payloads)."""
        tok = self.next()
        if tok.kind is Tok.LPAREN:
            depth = 1
            while depth:
                tok = self.next()
                if tok.kind is Tok.EOF:
                    raise ParseError("unexpected end of input", tok.line, tok.col)
                if tok.kind is Tok.LPAREN:
                    depth += 1
                elif tok.kind is Tok.RPAREN:
                    depth -= 1
        elif tok.kind in (Tok.RPAREN, Tok.EOF):
            raise ParseError("expected an s-expression", tok.line, tok.col)

    # -- commands -------------------------------------------------------

    def parse_script(self) -> Script:
        script = Script(self.bank)
        seen_check_sat = False
        while self.peek().kind is not Tok.EOF:
            start = self.expect(Tok.LPAREN)
            head = self.expect(Tok.SYMBOL)
            cmd = self.command(head)
            end = self.toks[self.pos - 1]
            cmd.source_span = (start.pos, end.pos + 1)
            if cmd.kind is CommandKind.CHECK_SAT:
                if seen_check_sat:
                    self.warnings.append(
                        f"{head.line}:{head.col}: ignoring repeated (check-sat)"
                    )
                    continue
                seen_check_sat = True
            script.commands.append(cmd)
        return script

    def command(self, head: Token) -> Command:
        name = head.text
        if name == "set-logic":
            logic = self.expect(Tok.SYMBOL).text
            self.expect(Tok.RPAREN)
            return Command(CommandKind.SET_LOGIC, name=logic)
        if name in ("set-info", "set-option"):
            kind = CommandKind.SET_INFO if name == "set-info" else CommandKind.SET_OPTION
            key = self.next()
            if key.kind is not Tok.KEYWORD:
                raise ParseError(f"{name} expects a keyword", key.line, key.col)
            while self.peek().kind is not Tok.RPAREN:
                self.skip_sexp()
            self.expect(Tok.RPAREN)
            return Command(kind, name=key.text)
        if name == "declare-sort":
            sym = self.expect(Tok.SYMBOL)
            arity = 0
            if self.peek().kind is Tok.NUMERAL:
                tok = self.next()
                if not _NUMERAL.match(tok.text):
                    raise ParseError(f"bad sort arity {tok.text!r}", tok.line, tok.col)
                arity = int(tok.text)
            self.expect(Tok.RPAREN)
            if arity != 0:
                raise UnsupportedFeature(
                    "parametric sorts are not part of QF_UF", sym.line, sym.col
                )
            if sym.text in self.bank.sorts:
                raise ParseError(f"sort {sym.text!r} already declared", sym.line, sym.col)
            sort = self.bank.declare_sort(sym.text)
            return Command(CommandKind.DECLARE_SORT, name=sym.text, sort=sort)
        if name == "declare-fun":
            sym = self.expect(Tok.SYMBOL)
            self.expect(Tok.LPAREN)
            arg_sorts = []
            while self.peek().kind is not Tok.RPAREN:
                arg_sorts.append(self.sort_ref())
            self.expect(Tok.RPAREN)
            ret = self.sort_ref()
            self.expect(Tok.RPAREN)
            symbol = self.declare(sym, arg_sorts, ret)
            return Command(CommandKind.DECLARE_FUN, name=sym.text, symbol=symbol)
        if name == "declare-const":
            sym = self.expect(Tok.SYMBOL)
            ret = self.sort_ref()
            self.expect(Tok.RPAREN)
            symbol = self.declare(sym, [], ret)
            return Command(CommandKind.DECLARE_CONST, name=sym.text, symbol=symbol)
        if name == "assert":
            term = self.term({})
            self.expect(Tok.RPAREN)
            if not term.is_bool:
                raise SortMismatch(
                    f"asserted term has sort {term.sort.name}, expected Bool",
                    head.line,
                    head.col,
                )
            return Command(CommandKind.ASSERT, term=term)
        if name == "check-sat":
            self.expect(Tok.RPAREN)
            return Command(CommandKind.CHECK_SAT)
        if name == "get-model":
            self.expect(Tok.RPAREN)
            return Command(CommandKind.GET_MODEL)
        if name == "exit":
            self.expect(Tok.RPAREN)
            return Command(CommandKind.EXIT)
        if name in ("push", "pop", "get-proof", "get-unsat-core", "define-fun",
                    "define-sort", "get-value", "get-assertions"):
            raise UnsupportedFeature(f"command {name!r}", head.line, head.col)
        raise ParseError(f"unknown command {name!r}", head.line, head.col)

    def declare(self, sym: Token, arg_sorts: list[Sort], ret: Sort) -> Symbol:
        try:
            return self.bank.declare_fun(sym.text, arg_sorts, ret)
        except SortError as e:
            raise SortMismatch(str(e), sym.line, sym.col) from None

    def sort_ref(self) -> Sort:
        tok = self.expect(Tok.SYMBOL)
        try:
            return self.bank.sort(tok.text)
        except SortError:
            raise UndeclaredSymbol(f"sort {tok.text!r}", tok.line, tok.col) from None

    # -- terms ----------------------------------------------------------

    def term(self, env: dict[str, Term]) -> Term:
        tok = self.next()
        if tok.kind is Tok.SYMBOL:
            return self.atom(tok, env)
        if tok.kind is Tok.NUMERAL:
            raise UnsupportedFeature("numeric literals", tok.line, tok.col)
        if tok.kind is not Tok.LPAREN:
            raise ParseError(f"expected a term, found {tok.text!r}", tok.line, tok.col)
        head = self.next()
        if head.kind is Tok.LPAREN:
            raise UnsupportedFeature("indexed/qualified identifiers", head.line, head.col)
        if head.kind is not Tok.SYMBOL:
            raise ParseError(f"expected an operator, found {head.text!r}",
                             head.line, head.col)
        name = head.text
        if name in ("forall", "exists"):
            raise UnsupportedFeature("quantifiers", head.line, head.col)
        if name == "as":
            raise UnsupportedFeature("qualified identifiers", head.line, head.col)
        if name == "let":
            return self.let(head, env)
        if name == "!":
            term = self.term(env)
            while self.peek().kind is not Tok.RPAREN:
                attr = self.next()
                if attr.kind is not Tok.KEYWORD:
                    raise ParseError("expected an attribute keyword", attr.line, attr.col)
                if self.peek().kind not in (Tok.RPAREN, Tok.KEYWORD):
                    self.skip_sexp()
            self.expect(Tok.RPAREN)
            return term
        args = []
        while self.peek().kind is not Tok.RPAREN:
            args.append(self.term(env))
        self.expect(Tok.RPAREN)
        return self.build(head, name, args)

    def atom(self, tok: Token, env: dict[str, Term]) -> Term:
        name = tok.text
        if name in env:
            return env[name]
        if name == "true":
            return self.bank.true_term
        if name == "false":
            return self.bank.false_term
        sym = self.bank.symbols.get(name)
        if sym is None:
            raise UndeclaredSymbol(name, tok.line, tok.col)
        if sym.arity != 0:
            raise SortMismatch(
                f"{name!r} has arity {sym.arity}, used without arguments",
                tok.line, tok.col,
            )
        return self.bank.const(sym)

    def let(self, head: Token, env: dict[str, Term]) -> Term:
        self.expect(Tok.LPAREN)
        bindings: list[tuple[str, Term]] = []
        while self.peek().kind is not Tok.RPAREN:
            self.expect(Tok.LPAREN)
            var = self.expect(Tok.SYMBOL)
            value = self.term(env)  # parallel let: bound in the outer scope
            self.expect(Tok.RPAREN)
            bindings.append((var.text, value))
        self.expect(Tok.RPAREN)
        inner = dict(env)
        inner.update(bindings)
        body = self.term(inner)
        self.expect(Tok.RPAREN)
        return body

    def build(self, head: Token, name: str, args: list[Term]) -> Term:
        bank = self.bank
        try:
            if name == "=":
                if len(args) < 2:
                    raise ParseError("= needs at least two arguments", head.line, head.col)
                pairs = [bank.eq(a, b) for a, b in zip(args, args[1:])]
                return pairs[0] if len(pairs) == 1 else bank.and_(pairs)
            if name == "distinct":
                return bank.distinct(args)
            if name == "not":
                if len(args) != 1:
                    raise ParseError("not takes one argument", head.line, head.col)
                return bank.not_(args[0])
            if name == "and":
                return bank.and_(args)
            if name == "or":
                return bank.or_(args)
            if name == "xor":
                return bank.xor(args)
            if name == "=>":
                return bank.implies(args)
            if name == "ite":
                if len(args) != 3:
                    raise ParseError("ite takes three arguments", head.line, head.col)
                return bank.ite(*args)
            sym = bank.symbols.get(name)
            if sym is None:
                raise UndeclaredSymbol(name, head.line, head.col)
            return bank.app(sym, args)
        except SortError as e:
            raise SortMismatch(str(e), head.line, head.col) from None


def parse_script(text: str, bank: TermBank | None = None) -> Script:
    return _Parser(text, bank or TermBank()).parse_script()


def parse_warnings(text: str, bank: TermBank | None = None) -> tuple[Script, list[str]]:
    parser = _Parser(text, bank or TermBank())
    script = parser.parse_script()
    return script, parser.warnings


# ----------------------------------------------------------------------
# printing

def print_symbol(name: str) -> str:
    if _SIMPLE_SYMBOL.match(name) and name not in RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"symbol {name!r} cannot be quoted")
    return f"|{name}|"


def print_term(t: Term) -> str:
    """SMT-LIB concrete syntax; reparsing yields an identical term id."""
    parts: list[str] = []
    _print_into(t, parts)
    return "".join(parts)


def _print_into(t: Term, out: list[str]) -> None:
    if t.kind is Kind.TRUE:
        out.append("true")
        return
    if t.kind is Kind.FALSE:
        out.append("false")
        return
    if t.kind is Kind.APP:
        if not t.args:
            out.append(print_symbol(t.symbol.name))
            return
        out.append("(")
        out.append(print_symbol(t.symbol.name))
        for a in t.args:
            out.append(" ")
            _print_into(a, out)
        out.append(")")
        return
    out.append("(")
    out.append(t.kind.value)
    for a in t.args:
        out.append(" ")
        _print_into(a, out)
    out.append(")")


def print_command(cmd: Command) -> str:
    k = cmd.kind
    if k is CommandKind.SET_LOGIC:
        return f"(set-logic {cmd.name})"
    if k is CommandKind.DECLARE_SORT:
        return f"(declare-sort {print_symbol(cmd.name)} 0)"
    if k is CommandKind.DECLARE_FUN:
        sym = cmd.symbol
        args = " ".join(s.name for s in sym.arg_sorts)
        return f"(declare-fun {print_symbol(sym.name)} ({args}) {sym.ret_sort.name})"
    if k is CommandKind.DECLARE_CONST:
        sym = cmd.symbol
        return f"(declare-const {print_symbol(sym.name)} {sym.ret_sort.name})"
    if k is CommandKind.ASSERT:
        return f"(assert {print_term(cmd.term)})"
    if k is CommandKind.CHECK_SAT:
        return "(check-sat)"
    if k is CommandKind.GET_MODEL:
        return "(get-model)"
    if k is CommandKind.EXIT:
        return "(exit)"
    if k in (CommandKind.SET_INFO, CommandKind.SET_OPTION):
        return f"({k.value} {cmd.name})"
    raise ValueError(f"cannot print {cmd}")


def print_script(script: Script) -> str:
    return "\n".join(print_command(c) for c in script.commands) + "\n"
