"""Hash-consed terms, sorts and function symbols.

Every term lives in a TermBank.  Structural equality coincides with object
identity (and with id equality), so terms can be used as dict keys and
compared with `is` / `==` interchangeably.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

BOOL_SORT_NAME = "Bool"

# Internal names used by the Bool-term/EUF bridge and ite elimination.
CARRIER_SORT_NAME = "__Bool_carrier"
BOOL_TRUE_NAME = "__bool_true"
BOOL_FALSE_NAME = "__bool_false"
ITE_CONST_PREFIX = "__ite!"


class SortError(Exception):
    """A term construction or declaration violated sort discipline."""


class Kind(Enum):
    APP = "app"
    EQ = "="
    DISTINCT = "distinct"
    NOT = "not"
    AND = "and"
    OR = "or"
    XOR = "xor"
    IMPLIES = "=>"
    ITE = "ite"
    TRUE = "true"
    FALSE = "false"


CONNECTIVES = frozenset(
    {Kind.NOT, Kind.AND, Kind.OR, Kind.XOR, Kind.IMPLIES}
)


@dataclass(frozen=True)
class Sort:
    name: str
    is_bool: bool = False

    def __repr__(self) -> str:
        return f"Sort({self.name})"


@dataclass(frozen=True, eq=False)
class Symbol:
    name: str
    arg_sorts: tuple[Sort, ...]
    ret_sort: Sort

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    def __repr__(self) -> str:
        args = " ".join(s.name for s in self.arg_sorts)
        return f"Symbol({self.name} : ({args}) {self.ret_sort.name})"


@dataclass(frozen=True, eq=False)
class Term:
    """One interned DAG node.  Do not construct directly; use a TermBank."""

    id: int
    kind: Kind
    args: tuple["Term", ...]
    sort: Sort
    symbol: Symbol | None = None

    def __hash__(self) -> int:
        return self.id

    @property
    def is_bool(self) -> bool:
        return self.sort.is_bool

    def __repr__(self) -> str:
        if self.kind is Kind.APP and not self.args:
            return f"Term#{self.id}({self.symbol.name})"
        return f"Term#{self.id}({self.kind.value})"


class TermBank:
    """Interning factory for sorts, symbols and terms.

    Child ids are always strictly smaller than the parent id, so iterating
    terms by id is a topological order of the DAG.
    """

    def __init__(self) -> None:
        self.sorts: dict[str, Sort] = {}
        self.symbols: dict[str, Symbol] = {}
        self._terms: list[Term] = []
        self._intern: dict[tuple, Term] = {}
        self.bool_sort = self._add_sort(Sort(BOOL_SORT_NAME, is_bool=True))
        self.true_term = self._new(Kind.TRUE, (), self.bool_sort)
        self.false_term = self._new(Kind.FALSE, (), self.bool_sort)
        self._carrier: Sort | None = None
        self._bool_true_sym: Symbol | None = None
        self._bool_false_sym: Symbol | None = None

    # ------------------------------------------------------------------
    # declarations

    def _add_sort(self, sort: Sort) -> Sort:
        self.sorts[sort.name] = sort
        return sort

    def declare_sort(self, name: str) -> Sort:
        existing = self.sorts.get(name)
        if existing is not None:
            if existing.is_bool:
                raise SortError(f"cannot redeclare builtin sort {name!r}")
            return existing
        return self._add_sort(Sort(name))

    def sort(self, name: str) -> Sort:
        try:
            return self.sorts[name]
        except KeyError:
            raise SortError(f"unknown sort {name!r}") from None

    def declare_fun(
        self, name: str, arg_sorts: Iterable[Sort], ret_sort: Sort
    ) -> Symbol:
        arg_sorts = tuple(arg_sorts)
        existing = self.symbols.get(name)
        if existing is not None:
            if existing.arg_sorts == arg_sorts and existing.ret_sort is ret_sort:
                return existing
            raise SortError(f"symbol {name!r} redeclared with a different signature")
        sym = Symbol(name, arg_sorts, ret_sort)
        self.symbols[name] = sym
        return sym

    # ------------------------------------------------------------------
    # interning

    def _new(self, kind: Kind, args: tuple[Term, ...], sort: Sort,
             symbol: Symbol | None = None) -> Term:
        key = (kind, symbol, tuple(a.id for a in args))
        hit = self._intern.get(key)
        if hit is not None:
            return hit
        term = Term(len(self._terms), kind, args, sort, symbol)
        self._terms.append(term)
        self._intern[key] = term
        return term

    def __len__(self) -> int:
        return len(self._terms)

    def term_by_id(self, tid: int) -> Term:
        return self._terms[tid]

    # ------------------------------------------------------------------
    # constructors

    def app(self, symbol: Symbol, args: Iterable[Term] = ()) -> Term:
        args = tuple(args)
        if len(args) != symbol.arity:
            raise SortError(
                f"{symbol.name!r} expects {symbol.arity} arguments, got {len(args)}"
            )
        for i, (a, want) in enumerate(zip(args, symbol.arg_sorts)):
            if a.sort is not want:
                raise SortError(
                    f"argument {i} of {symbol.name!r}: expected sort "
                    f"{want.name}, got {a.sort.name}"
                )
        return self._new(Kind.APP, args, symbol.ret_sort, symbol)

    def const(self, symbol: Symbol) -> Term:
        return self.app(symbol, ())

    def eq(self, lhs: Term, rhs: Term) -> Term:
        if lhs.sort is not rhs.sort:
            raise SortError(
                f"equality over mismatched sorts {lhs.sort.name} / {rhs.sort.name}"
            )
        if rhs.id < lhs.id:
            lhs, rhs = rhs, lhs
        return self._new(Kind.EQ, (lhs, rhs), self.bool_sort)

    def distinct(self, args: Iterable[Term]) -> Term:
        args = tuple(args)
        if len(args) < 2:
            raise SortError("distinct needs at least two arguments")
        first = args[0].sort
        for a in args[1:]:
            if a.sort is not first:
                raise SortError(
                    f"distinct over mismatched sorts {first.name} / {a.sort.name}"
                )
        return self._new(Kind.DISTINCT, args, self.bool_sort)

    def _connective(self, kind: Kind, args: tuple[Term, ...], min_arity: int) -> Term:
        if len(args) < min_arity:
            raise SortError(f"{kind.value} needs at least {min_arity} arguments")
        for a in args:
            if not a.is_bool:
                raise SortError(
                    f"{kind.value} child must have sort Bool, got {a.sort.name}"
                )
        return self._new(kind, args, self.bool_sort)

    def not_(self, arg: Term) -> Term:
        return self._connective(Kind.NOT, (arg,), 1)

    def and_(self, args: Iterable[Term]) -> Term:
        return self._connective(Kind.AND, tuple(args), 1)

    def or_(self, args: Iterable[Term]) -> Term:
        return self._connective(Kind.OR, tuple(args), 1)

    def xor(self, args: Iterable[Term]) -> Term:
        return self._connective(Kind.XOR, tuple(args), 1)

    def implies(self, args: Iterable[Term]) -> Term:
        return self._connective(Kind.IMPLIES, tuple(args), 2)

    def ite(self, cond: Term, then: Term, els: Term) -> Term:
        if not cond.is_bool:
            raise SortError(f"ite condition must be Bool, got {cond.sort.name}")
        if then.sort is not els.sort:
            raise SortError(
                f"ite branches over mismatched sorts {then.sort.name} / {els.sort.name}"
            )
        return self._new(Kind.ITE, (cond, then, els), then.sort)

    def mk_term(self, kind: Kind, args: Iterable[Term],
                symbol: Symbol | None = None) -> Term:
        """Generic constructor dispatching on kind (sort-checked)."""
        args = tuple(args)
        if kind is Kind.APP:
            assert symbol is not None
            return self.app(symbol, args)
        if kind is Kind.EQ:
            if len(args) != 2:
                raise SortError("= takes exactly two arguments here")
            return self.eq(*args)
        if kind is Kind.DISTINCT:
            return self.distinct(args)
        if kind is Kind.NOT:
            if len(args) != 1:
                raise SortError("not takes exactly one argument")
            return self.not_(args[0])
        if kind is Kind.AND:
            return self.and_(args)
        if kind is Kind.OR:
            return self.or_(args)
        if kind is Kind.XOR:
            return self.xor(args)
        if kind is Kind.IMPLIES:
            return self.implies(args)
        if kind is Kind.ITE:
            if len(args) != 3:
                raise SortError("ite takes exactly three arguments")
            return self.ite(*args)
        if kind is Kind.TRUE:
            return self.true_term
        if kind is Kind.FALSE:
            return self.false_term
        raise SortError(f"cannot construct kind {kind}")

    # ------------------------------------------------------------------
    # internal bridge vocabulary

    @property
    def carrier_sort(self) -> Sort:
        if self._carrier is None:
            self._carrier = self._add_sort(Sort(CARRIER_SORT_NAME))
        return self._carrier

    @property
    def bool_true(self) -> Term:
        if self._bool_true_sym is None:
            self._bool_true_sym = self.declare_fun(
                BOOL_TRUE_NAME, (), self.carrier_sort
            )
        return self.const(self._bool_true_sym)

    @property
    def bool_false(self) -> Term:
        if self._bool_false_sym is None:
            self._bool_false_sym = self.declare_fun(
                BOOL_FALSE_NAME, (), self.carrier_sort
            )
        return self.const(self._bool_false_sym)

    def bridge_eq(self, bool_term: Term, carrier_const: Term) -> Term:
        """Equality between a Bool term and a carrier constant.

        These atoms are internal to the Bool/EUF bridge, so the usual
        same-sort requirement on Eq is deliberately not enforced.
        """
        assert bool_term.is_bool and carrier_const.sort is self.carrier_sort
        lhs, rhs = bool_term, carrier_const
        if rhs.id < lhs.id:
            lhs, rhs = rhs, lhs
        return self._new(Kind.EQ, (lhs, rhs), self.bool_sort)


def is_bridge_atom(t: Term) -> bool:
    return t.kind is Kind.EQ and t.args[0].sort is not t.args[1].sort


def subterms(t: Term) -> Iterator[Term]:
    """Yield each distinct subterm exactly once, children before parents."""
    seen: set[int] = set()
    stack: list[tuple[Term, bool]] = [(t, False)]
    while stack:
        node, expanded = stack.pop()
        if node.id in seen:
            continue
        if expanded:
            seen.add(node.id)
            yield node
        else:
            stack.append((node, True))
            for child in reversed(node.args):
                if child.id not in seen:
                    stack.append((child, False))
