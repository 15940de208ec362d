"""Tseitin conversion of preprocessed assertions to CNF.

Responsibilities beyond plain CNF conversion:

* maintain the bijection between theory atoms (equalities over non-Bool
  sorts) and SAT variables;
* eliminate non-Bool if-then-else terms by introducing a fresh constant
  per ite occurrence with two defining clauses;
* install the Bool-term/EUF bridge: every Bool-sorted term used as a UF
  argument (or as an operand of an equality over Bool) is linked to two
  fresh carrier constants via `t = __bool_true` / `t = __bool_false`
  atoms, a pair of linking clauses and one mutual-exclusivity clause.

Polarity optimization is intentionally not applied: definitional clauses
are kept bidirectional so certificates can reuse them as equivalences.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .smtlib import print_term
from .terms import ITE_CONST_PREFIX, Kind, Term, TermBank


@dataclass
class BridgeEntry:
    term: Term
    eq_true: int   # var of (t = __bool_true)
    eq_false: int  # var of (t = __bool_false)
    eq_true_term: Term
    eq_false_term: Term


@dataclass
class AtomMap:
    atom_of: dict[int, int] = field(default_factory=dict)   # term id -> var
    term_of: dict[int, Term] = field(default_factory=dict)  # var -> term
    prop_of: dict[int, int] = field(default_factory=dict)   # Bool app term id -> var

    def var_for_term(self, t: Term) -> int | None:
        return self.atom_of.get(t.id) or self.prop_of.get(t.id)


@dataclass
class CnfProblem:
    clauses: list[list[int]]
    num_vars: int
    atoms: AtomMap
    theory_atoms: dict[int, Term]         # var -> Eq term (incl. bridge atoms)
    bridge: dict[int, BridgeEntry]        # bridged term id -> entry
    bridge_defs: list[Term]               # bridge clauses as Bool terms
    ite_defs: list[Term]                  # ite defining clauses as Bool terms
    ite_consts: dict[int, Term]           # ite term id -> replacement constant
    root_lits: list[int] = field(default_factory=list)

    def dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        for var in sorted(self.atoms.term_of):
            lines.append(f"c atom {var} {print_term(self.atoms.term_of[var])}")
        for clause in self.clauses:
            lines.append(" ".join(map(str, clause)) + " 0")
        return "\n".join(lines) + "\n"


class Booleanizer:
    def __init__(self, bank: TermBank, bridge_enabled: bool = True):
        self.bank = bank
        self.bridge_enabled = bridge_enabled
        self.num_vars = 0
        self.clauses: list[list[int]] = []
        self.atoms = AtomMap()
        self.theory_atoms: dict[int, Term] = {}
        self.bridge: dict[int, BridgeEntry] = {}
        self.bridge_defs: list[Term] = []
        self.ite_defs: list[Term] = []
        self.ite_consts: dict[int, Term] = {}
        self._lit_memo: dict[int, int] = {}
        self._ite_memo: dict[int, Term] = {}
        self._const_true: int | None = None
        self._carrier_diseq_installed = False
        self.root_lits: list[int] = []

    # ------------------------------------------------------------------

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add_clause(self, lits: list[int]) -> None:
        # connectives may carry duplicate children; dedupe literals and
        # drop tautological definitional clauses
        seen: set[int] = set()
        out: list[int] = []
        for lit in lits:
            if -lit in seen:
                return
            if lit not in seen:
                seen.add(lit)
                out.append(lit)
        self.clauses.append(out)

    def const_true_lit(self) -> int:
        if self._const_true is None:
            self._const_true = self.new_var()
            self.add_clause([self._const_true])
        return self._const_true

    # ------------------------------------------------------------------
    # ite elimination (non-Bool ites only)

    def eliminate_ites(self, t: Term) -> Term:
        hit = self._ite_memo.get(t.id)
        if hit is not None:
            return hit
        bank = self.bank
        if t.args:
            new_args = tuple(self.eliminate_ites(a) for a in t.args)
        else:
            new_args = ()
        if t.kind is Kind.ITE and not t.is_bool:
            cond, then, els = new_args
            sym = bank.declare_fun(f"{ITE_CONST_PREFIX}{t.id}", (), t.sort)
            const = bank.const(sym)
            self.ite_consts[t.id] = const
            self.ite_defs.append(bank.or_([negate(bank, cond), bank.eq(const, then)]))
            self.ite_defs.append(bank.or_([cond, bank.eq(const, els)]))
            result = const
        elif new_args != t.args:
            result = bank.mk_term(t.kind, new_args, t.symbol)
        else:
            result = t
        self._ite_memo[t.id] = result
        return result

    # ------------------------------------------------------------------
    # bridge

    def _install_carrier_diseq(self) -> None:
        if self._carrier_diseq_installed:
            return
        self._carrier_diseq_installed = True
        bank = self.bank
        atom = bank.eq(bank.bool_true, bank.bool_false)
        var = self._theory_var(atom)
        self.add_clause([-var])
        self.bridge_defs.append(bank.not_(atom))

    def bridge_term(self, t: Term) -> BridgeEntry:
        entry = self.bridge.get(t.id)
        if entry is not None:
            return entry
        bank = self.bank
        self._install_carrier_diseq()
        eq_true_term = bank.bridge_eq(t, bank.bool_true)
        eq_false_term = bank.bridge_eq(t, bank.bool_false)
        eq_true = self._theory_var(eq_true_term)
        eq_false = self._theory_var(eq_false_term)
        p = self.lit_of(t)
        self.add_clause([-p, eq_true])
        self.add_clause([p, eq_false])
        self.add_clause([-eq_true, -eq_false])
        self.bridge_defs.append(bank.or_([negate(bank, t), eq_true_term]))
        self.bridge_defs.append(bank.or_([t, eq_false_term]))
        self.bridge_defs.append(
            bank.or_([bank.not_(eq_true_term), bank.not_(eq_false_term)])
        )
        entry = BridgeEntry(t, eq_true, eq_false, eq_true_term, eq_false_term)
        self.bridge[t.id] = entry
        return entry

    def _collect_bridges(self, t: Term, seen: set[int]) -> None:
        if t.id in seen:
            return
        seen.add(t.id)
        for a in t.args:
            self._collect_bridges(a, seen)
        if not self.bridge_enabled:
            return
        if t.kind is Kind.APP:
            if t.args and t.is_bool:
                # Bool-returning application used as an atom: congruence on
                # its symbol matters, so it joins the EUF graph
                self.bridge_term(t)
            for a in t.args:
                if a.is_bool:
                    self.bridge_term(a)
        elif t.kind is Kind.EQ and t.args[0].is_bool and t.args[1].is_bool:
            for a in t.args:
                self.bridge_term(a)

    # ------------------------------------------------------------------
    # atoms and literals

    def _theory_var(self, t: Term) -> int:
        var = self.atoms.atom_of.get(t.id)
        if var is None:
            var = self.new_var()
            self.atoms.atom_of[t.id] = var
            self.atoms.term_of[var] = t
            self.theory_atoms[var] = t
        return var

    def _prop_var(self, t: Term) -> int:
        var = self.atoms.prop_of.get(t.id)
        if var is None:
            var = self.new_var()
            self.atoms.prop_of[t.id] = var
            self.atoms.term_of[var] = t
        return var

    def lit_of(self, t: Term) -> int:
        hit = self._lit_memo.get(t.id)
        if hit is not None:
            return hit
        lit = self._encode(t)
        self._lit_memo[t.id] = lit
        return lit

    def _encode(self, t: Term) -> int:
        bank = self.bank
        kind = t.kind
        if kind is Kind.TRUE:
            return self.const_true_lit()
        if kind is Kind.FALSE:
            return -self.const_true_lit()
        if kind is Kind.APP:
            return self._prop_var(t)
        if kind is Kind.NOT:
            return -self.lit_of(t.args[0])
        if kind is Kind.EQ:
            lhs, rhs = t.args
            if lhs.is_bool and rhs.is_bool:
                a, b = self.lit_of(lhs), self.lit_of(rhs)
                aux = self.new_var()
                self.add_clause([-aux, -a, b])
                self.add_clause([-aux, a, -b])
                self.add_clause([aux, a, b])
                self.add_clause([aux, -a, -b])
                return aux
            return self._theory_var(t)
        if kind is Kind.DISTINCT:
            return self.lit_of(self._expand_distinct(t))
        if kind is Kind.AND:
            lits = [self.lit_of(a) for a in t.args]
            aux = self.new_var()
            for l in lits:
                self.add_clause([-aux, l])
            self.add_clause([aux] + [-l for l in lits])
            return aux
        if kind is Kind.OR:
            lits = [self.lit_of(a) for a in t.args]
            aux = self.new_var()
            for l in lits:
                self.add_clause([aux, -l])
            self.add_clause([-aux] + lits)
            return aux
        if kind is Kind.IMPLIES:
            lits = [self.lit_of(a) for a in t.args]
            folded = [-l for l in lits[:-1]] + [lits[-1]]
            aux = self.new_var()
            for l in folded:
                self.add_clause([aux, -l])
            self.add_clause([-aux] + folded)
            return aux
        if kind is Kind.XOR:
            lits = [self.lit_of(a) for a in t.args]
            acc = lits[0]
            for nxt in lits[1:]:
                aux = self.new_var()
                self.add_clause([-aux, acc, nxt])
                self.add_clause([-aux, -acc, -nxt])
                self.add_clause([aux, -acc, nxt])
                self.add_clause([aux, acc, -nxt])
                acc = aux
            return acc
        if kind is Kind.ITE:
            c = self.lit_of(t.args[0])
            a = self.lit_of(t.args[1])
            b = self.lit_of(t.args[2])
            aux = self.new_var()
            self.add_clause([-aux, -c, a])
            self.add_clause([-aux, c, b])
            self.add_clause([aux, -c, -a])
            self.add_clause([aux, c, -b])
            return aux
        raise AssertionError(f"cannot encode {t!r}")

    def _expand_distinct(self, t: Term) -> Term:
        bank = self.bank
        args = t.args
        if args[0].is_bool:
            if len(args) >= 3:
                return bank.false_term
            return bank.not_(bank.eq(args[0], args[1]))
        if len({a.id for a in args}) < len(args):
            return bank.false_term
        pairs = [
            bank.not_(bank.eq(args[i], args[j]))
            for i in range(len(args))
            for j in range(i + 1, len(args))
        ]
        return pairs[0] if len(pairs) == 1 else bank.and_(pairs)

    # ------------------------------------------------------------------

    def run(self, assertions: list[Term]) -> CnfProblem:
        rewritten = [self.eliminate_ites(a) for a in assertions]
        # ite defining clauses may nest further ites in their branches
        pending = list(self.ite_defs)
        while pending:
            clause_term = pending.pop()
            again = self.eliminate_ites(clause_term)
            assert again is clause_term, "ite elimination must be bottom-up"
        seen: set[int] = set()
        for a in rewritten + self.ite_defs:
            self._collect_bridges(a, seen)
        for a in rewritten + self.ite_defs:
            lit = self.lit_of(a)
            self.root_lits.append(lit)
            self.add_clause([lit])
        return CnfProblem(
            clauses=self.clauses,
            num_vars=self.num_vars,
            atoms=self.atoms,
            theory_atoms=self.theory_atoms,
            bridge=self.bridge,
            bridge_defs=self.bridge_defs,
            ite_defs=self.ite_defs,
            ite_consts=self.ite_consts,
            root_lits=self.root_lits,
        )


def negate(bank: TermBank, t: Term) -> Term:
    if t.kind is Kind.NOT:
        return t.args[0]
    if t.kind is Kind.TRUE:
        return bank.false_term
    if t.kind is Kind.FALSE:
        return bank.true_term
    return bank.not_(t)


def booleanize(bank: TermBank, assertions: list[Term],
               bridge_enabled: bool = True) -> CnfProblem:
    return Booleanizer(bank, bridge_enabled).run(assertions)
