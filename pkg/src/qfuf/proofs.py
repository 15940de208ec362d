"""Unsat certificates: construction, emission, internal replay.

A certificate records the declarations, the original assumptions, the
preprocessing units (with the disjunction each was extracted from), the
theory lemmas that the solver actually used, and the definitional clauses
introduced by booleanization (ite elimination and the Bool/EUF bridge).

Its propositional skeleton -- normalized assumptions + preprocessing
units + definitional clauses + theory lemma clauses -- must be
unsatisfiable by purely propositional reasoning; theory lemmas must be
re-derivable by a fresh congruence closure; preprocessing units must be
entailed by every branch of their source disjunction.  `replay_check`
re-establishes all three from the certificate alone.

The emitted proof script uses proof-assistant surface syntax (axioms for
declarations and assumptions, one theorem per lemma closed by `grind`,
a final `False` theorem closed by `bv_decide`).  Checking it externally
is documented in the README; the internal gate is `replay_check`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .booleanize import CnfProblem, booleanize, negate
from .euf import EGraph
from .preprocess import (DiamondUnit, PreproResult, TermLemma,
                         _diamond_branches)
from .sat import Budget, SatSolver
from .smtlib import Script, CommandKind, print_term
from .terms import Kind, Sort, Symbol, Term, TermBank, subterms

SignedAtom = tuple[Term, bool]


class IncompleteLog(Exception):
    """The certificate skeleton is not propositionally unsat (solver bug)."""


@dataclass
class CertLemma:
    clause: list[SignedAtom]
    premises: list[SignedAtom]
    kind: str

    def key(self) -> frozenset:
        return frozenset((t.id, pol) for t, pol in self.clause)


@dataclass
class Certificate:
    bank: TermBank
    sort_decls: list[Sort]
    symbol_decls: list[Symbol]
    assumptions: list[Term]
    normalized: list[Term]
    prepro_units: list[DiamondUnit]
    theory_lemmas: list[CertLemma]
    def_clauses: list[Term]
    prepro_enabled: bool


@dataclass
class ReplayReport:
    valid: bool
    stage: int | None = None
    detail: str = ""

    def __str__(self) -> str:
        if self.valid:
            return "Valid"
        return f"Invalid(stage {self.stage}: {self.detail})"


# ----------------------------------------------------------------------
# construction

def substitute_ites(bank: TermBank, t: Term, ite_consts: dict[int, Term],
                    memo: dict[int, Term]) -> Term:
    hit = memo.get(t.id)
    if hit is not None:
        return hit
    if t.kind is Kind.ITE and not t.is_bool and t.id in ite_consts:
        result = ite_consts[t.id]
    elif t.args:
        new_args = tuple(substitute_ites(bank, a, ite_consts, memo)
                         for a in t.args)
        if new_args != t.args:
            result = bank.mk_term(t.kind, new_args, t.symbol)
        else:
            result = t
    else:
        result = t
    memo[t.id] = result
    return result


def clause_term(bank: TermBank, clause: list[SignedAtom]) -> Term:
    lits = [t if pol else negate(bank, t) for t, pol in clause]
    return lits[0] if len(lits) == 1 else bank.or_(lits)


def _signed(cnf: CnfProblem, lit: int) -> SignedAtom:
    term = cnf.theory_atoms[abs(lit)]
    return (term, lit > 0)


def build_certificate(script: Script, prepro: PreproResult,
                      cnf: CnfProblem | None,
                      proof_log: list[tuple]) -> Certificate:
    bank = script.bank
    assumptions = script.assertions()
    lemmas: list[CertLemma] = []
    seen: set[frozenset] = set()

    def push(lemma: CertLemma) -> None:
        key = lemma.key()
        if key not in seen:
            seen.add(key)
            lemmas.append(lemma)

    if prepro.conflict_lemma is not None:
        c = prepro.conflict_lemma
        push(CertLemma(list(c.clause), list(c.premises), c.kind))
    for entry in proof_log:
        if entry[0] != "theory":
            continue
        theory_lemma = entry[1]
        clause = [_signed(cnf, l) for l in theory_lemma.lits]
        premises = [_signed(cnf, l) for l in theory_lemma.premises]
        push(CertLemma(clause, premises, theory_lemma.kind))

    ite_consts = cnf.ite_consts if cnf is not None else {}
    memo: dict[int, Term] = {}
    base = prepro.simplified_inputs if prepro.enabled else assumptions
    normalized = [substitute_ites(bank, t, ite_consts, memo) for t in base]

    sort_decls = [s for s in bank.sorts.values()
                  if not s.is_bool and not s.name.startswith("__")]
    symbol_decls = []
    for cmd in script.commands:
        if cmd.kind in (CommandKind.DECLARE_FUN, CommandKind.DECLARE_CONST):
            symbol_decls.append(cmd.symbol)

    cert = Certificate(
        bank=bank,
        sort_decls=sort_decls,
        symbol_decls=symbol_decls,
        assumptions=assumptions,
        normalized=normalized,
        prepro_units=list(prepro.units),
        theory_lemmas=lemmas,
        def_clauses=(list(cnf.bridge_defs) + list(cnf.ite_defs))
        if cnf is not None else [],
        prepro_enabled=prepro.enabled,
    )
    if _skeleton_verdict(cert) != "unsat":
        raise IncompleteLog("certificate skeleton is not propositionally unsat")
    return cert


def _skeleton_verdict(cert: Certificate) -> str:
    bank = cert.bank
    formulas = list(cert.normalized)
    formulas.extend(u.unit for u in cert.prepro_units)
    formulas.extend(cert.def_clauses)
    formulas.extend(clause_term(bank, l.clause) for l in cert.theory_lemmas)
    cnf = booleanize(bank, formulas, bridge_enabled=False)
    engine = SatSolver(cnf.num_vars, cnf.clauses, hooks=None)
    return engine.solve(Budget()).verdict


# ----------------------------------------------------------------------
# replay

def _lemma_euf_valid(bank: TermBank, clause: list[SignedAtom]) -> bool:
    """Assert the clause's negation into a fresh closure; expect a conflict."""
    g = EGraph()
    for t, _ in clause:
        if t.kind is not Kind.EQ:
            return False
        g.add_term(t.args[0])
        g.add_term(t.args[1])
    if bank._carrier is not None and g.has_term(bank.bool_true) \
            and g.has_term(bank.bool_false):
        if g.assert_diseq_terms(bank.bool_true, bank.bool_false, None):
            return True
    for t, pol in clause:
        lhs, rhs = t.args
        if pol:
            conflict = g.assert_diseq_terms(lhs, rhs, (t, False))
        else:
            conflict = g.merge_terms(lhs, rhs, (t, True))
        if conflict is not None:
            return True
    return False


def _unit_entailed(bank: TermBank, unit: Term, source: Term) -> bool:
    branches = _diamond_branches(source)
    if branches is None or unit.kind is not Kind.EQ:
        return False
    terms = sorted((t for t in subterms(source) if not t.is_bool),
                   key=lambda t: t.id)
    terms += [unit.args[0], unit.args[1]]
    for branch in branches:
        g = EGraph()
        for t in terms:
            g.add_term(t)
        for eq in branch:
            g.merge_terms(eq.args[0], eq.args[1], None)
        if not g.same_terms(unit.args[0], unit.args[1]):
            return False
    return True


def replay_check(cert: Certificate) -> ReplayReport:
    for i, lemma in enumerate(cert.theory_lemmas):
        if not _lemma_euf_valid(cert.bank, lemma.clause):
            return ReplayReport(False, 1, f"theory lemma {i} is not EUF-valid")
    for i, du in enumerate(cert.prepro_units):
        if not _unit_entailed(cert.bank, du.unit, du.source_term):
            return ReplayReport(
                False, 2, f"preprocessing unit {i} is not branch-entailed"
            )
    if _skeleton_verdict(cert) != "unsat":
        return ReplayReport(False, 3, "skeleton is propositionally satisfiable")
    return ReplayReport(True)


# ----------------------------------------------------------------------
# emission

_LEAN_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_LEAN_RESERVED = frozenset(
    """theorem axiom by have fun def let in end match with if then else
    from import open Prop Type True False true false And Or Not Xor Iff
    Eq variable section namespace example sorry grind decide""".split()
)


class _Namer:
    def __init__(self) -> None:
        self.used: set[str] = set()
        self.by_key: dict[tuple, str] = {}

    def name(self, key: tuple, preferred: str) -> str:
        hit = self.by_key.get(key)
        if hit is not None:
            return hit
        base = preferred
        if not _LEAN_IDENT.match(base) or base in _LEAN_RESERVED:
            base = re.sub(r"[^A-Za-z0-9_]", "_", base)
            if not base or not re.match(r"[A-Za-z_]", base):
                base = "x_" + base
        candidate = base
        k = 1
        while candidate in self.used:
            candidate = f"{base}_{k}"
            k += 1
        self.used.add(candidate)
        self.by_key[key] = candidate
        return candidate


class ProofPrinter:
    def __init__(self, cert: Certificate):
        self.cert = cert
        self.bank = cert.bank
        self.names = _Namer()
        self.reify: dict[int, str] = {}  # bridged Bool term id -> carrier name
        self.extra_consts: list[tuple[str, str]] = []  # (name, sort name)

    # -- naming helpers

    def sort_name(self, sort: Sort) -> str:
        return self.names.name(("sort", sort.name), sort.name)

    def sym_name(self, sym: Symbol) -> str:
        return self.names.name(("sym", sym.name), sym.name)

    def _reify_name(self, t: Term) -> str:
        hit = self.reify.get(t.id)
        if hit is not None:
            return hit
        name = self.names.name(("reify", t.id), f"rb{len(self.reify)}")
        self.reify[t.id] = name
        carrier = self.sort_name(self.bank.carrier_sort)
        self.extra_consts.append((name, carrier))
        return name

    # -- formula printing

    def term(self, t: Term) -> str:
        if t.kind is Kind.APP:
            if not t.args:
                return self.sym_name(t.symbol)
            args = " ".join(self.term(a) if not a.is_bool else self.prop(a)
                            for a in t.args)
            return f"({self.sym_name(t.symbol)} {args})"
        if t.kind is Kind.ITE:
            return (f"(if {self.prop(t.args[0])} then {self.term(t.args[1])} "
                    f"else {self.term(t.args[2])})")
        raise ValueError(f"not a first-order term: {t!r}")

    def prop(self, t: Term) -> str:
        kind = t.kind
        if kind is Kind.TRUE:
            return "True"
        if kind is Kind.FALSE:
            return "False"
        if kind is Kind.APP:
            if not t.args:
                return self.sym_name(t.symbol)
            args = " ".join(self.term(a) if not a.is_bool else self.prop(a)
                            for a in t.args)
            return f"({self.sym_name(t.symbol)} {args})"
        if kind is Kind.EQ:
            lhs, rhs = t.args
            if lhs.sort is not rhs.sort:
                # bridge atom: equality between a reified Bool term and a
                # carrier constant
                bool_side, carrier_side = (
                    (lhs, rhs) if rhs.sort is self.bank.carrier_sort else (rhs, lhs)
                )
                return f"({self._reify_name(bool_side)} = {self.term(carrier_side)})"
            if lhs.is_bool:
                return f"({self.prop(lhs)} ↔ {self.prop(rhs)})"
            return f"({self.term(lhs)} = {self.term(rhs)})"
        if kind is Kind.NOT:
            return f"(¬ {self.prop(t.args[0])})"
        if kind is Kind.AND:
            return "(" + " ∧ ".join(self.prop(a) for a in t.args) + ")"
        if kind is Kind.OR:
            return "(" + " ∨ ".join(self.prop(a) for a in t.args) + ")"
        if kind is Kind.IMPLIES:
            return "(" + " → ".join(self.prop(a) for a in t.args) + ")"
        if kind is Kind.XOR:
            acc = self.prop(t.args[0])
            for a in t.args[1:]:
                acc = f"(¬ ({acc} ↔ {self.prop(a)}))"
            return acc
        if kind is Kind.ITE:
            return (f"(if {self.prop(t.args[0])} then {self.prop(t.args[1])} "
                    f"else {self.prop(t.args[2])})")
        if kind is Kind.DISTINCT:
            pairs = []
            args = t.args
            for i in range(len(args)):
                for j in range(i + 1, len(args)):
                    if args[0].is_bool:
                        pairs.append(
                            f"(¬ ({self.prop(args[i])} ↔ {self.prop(args[j])}))"
                        )
                    else:
                        pairs.append(
                            f"(¬ ({self.term(args[i])} = {self.term(args[j])}))"
                        )
            return pairs[0] if len(pairs) == 1 else "(" + " ∧ ".join(pairs) + ")"
        raise ValueError(f"cannot print {t!r}")

    # -- script assembly

    def emit(self) -> str:
        cert = self.cert
        lines: list[str] = []
        lines.append("-- unsatisfiability certificate (internally replay-checked)")
        lines.append("-- external check: see README (Lean 4 toolchain with mathlib)")
        lines.append("set_option maxHeartbeats 1000000")
        lines.append("attribute [local instance] Classical.propDecidable")
        lines.append("")

        body: list[str] = []
        assumption_names: list[str] = []
        have_names: list[tuple[str, str]] = []  # (hypothesis name, source name)

        for i, (orig, norm) in enumerate(zip(cert.assumptions, cert.normalized),
                                         start=1):
            a_name = self.names.name(("assume", i), f"assume_{i}")
            body.append(f"axiom {a_name} : {self.prop(orig)}")
            assumption_names.append(a_name)
            if norm is not orig:
                n_name = self.names.name(("norm", i), f"norm_{i}")
                body.append(
                    f"theorem {n_name} : {self.prop(norm)} := by\n"
                    f"  have h := {a_name}; grind"
                )
                have_names.append((f"h{i}", n_name))
            else:
                have_names.append((f"h{i}", a_name))

        for i, du in enumerate(cert.prepro_units, start=1):
            src = assumption_names[du.source_index] \
                if 0 <= du.source_index < len(assumption_names) else None
            p_name = self.names.name(("prep", i), f"prep_{i}")
            tactic = f"have h := {src}; grind" if src else "grind"
            body.append(
                f"theorem {p_name} : {self.prop(du.unit)} := by\n  {tactic}"
            )
            have_names.append((f"p{i}", p_name))

        for i, clause in enumerate(cert.def_clauses, start=1):
            d_name = self.names.name(("def", i), f"defn_{i}")
            body.append(f"axiom {d_name} : {self.prop(clause)}")
            have_names.append((f"d{i}", d_name))

        for i, lemma in enumerate(cert.theory_lemmas, start=1):
            l_name = self.names.name(("lemma", i), f"lemma_{i}")
            prop = self.prop(clause_term(self.bank, lemma.clause))
            body.append(f"theorem {l_name} : {prop} := by\n  grind")
            have_names.append((f"l{i}", l_name))

        # declarations are collected during printing (reified constants may
        # be discovered along the way), so headers are assembled last
        decls: list[str] = []
        for sort in cert.sort_decls:
            decls.append(f"axiom {self.sort_name(sort)} : Type")
        if ("sort", self.bank.carrier_sort.name) in self.names.by_key:
            decls.append(f"axiom {self.sort_name(self.bank.carrier_sort)} : Type")
        for sym in cert.symbol_decls:
            decls.append(self._symbol_axiom(sym))
        for sym in self._internal_symbols():
            decls.append(self._symbol_axiom(sym))
        for name, sort in self.extra_consts:
            decls.append(f"axiom {name} : {sort}")

        final = ["theorem unsat_certificate : False := by"]
        for hyp, src in have_names:
            final.append(f"  have {hyp} := {src}")
        final.append("  bv_decide")

        lines.extend(decls)
        lines.append("")
        lines.extend(body)
        lines.append("")
        lines.extend(final)
        return "\n".join(lines) + "\n"

    def _internal_symbols(self) -> list[Symbol]:
        out = []
        for key, _ in sorted(self.names.by_key.items(), key=lambda kv: kv[1]):
            if key[0] == "sym":
                sym = self.bank.symbols.get(key[1])
                if sym is not None and sym.name.startswith("__"):
                    out.append(sym)
        return out

    def _symbol_axiom(self, sym: Symbol) -> str:
        def sname(s: Sort) -> str:
            return "Prop" if s.is_bool else self.sort_name(s)

        if sym.arity == 0:
            return f"axiom {self.sym_name(sym)} : {sname(sym.ret_sort)}"
        sig = " → ".join(sname(s) for s in sym.arg_sorts)
        return f"axiom {self.sym_name(sym)} : {sig} → {sname(sym.ret_sort)}"


def emit_proof_script(cert: Certificate) -> str:
    return ProofPrinter(cert).emit()
