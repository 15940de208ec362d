"""Satisfiability-preserving rewriting ahead of booleanization.

Pipeline (when enabled): simplify every assertion bottom-up, propagate
top-level unit literals to fixpoint, extract common equality consequences
from disjunctions of equality conjunctions ("diamond" shapes), then run a
final unit-propagation pass.

Unit propagation substitutes only at Boolean positions: it never rewrites
inside uninterpreted-function arguments or inside non-Bool terms, which
keeps the propositional atom set stable for certificate construction.
Unit equalities are additionally tracked in a congruence closure so that
an EUF-inconsistent unit set collapses to [false]; the closure conflict is
recorded as a theory lemma for the proof emitter.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .euf import EGraph, closure_over
from .terms import Kind, Term, TermBank, subterms

# a signed atom: (term, polarity)
SignedAtom = tuple[Term, bool]


@dataclass
class TermLemma:
    """A clause over signed atom terms, valid in EUF given nothing."""

    clause: list[SignedAtom]
    premises: list[SignedAtom]
    kind: str


@dataclass
class DiamondUnit:
    unit: Term
    source_index: int
    source_term: Term


@dataclass
class PreproStats:
    simplifications: int = 0
    units_propagated: int = 0
    diamond_units: int = 0


@dataclass
class PreproResult:
    assertions: list[Term]
    added_units: list[Term]
    units: list[DiamondUnit]
    stats: PreproStats
    conflict_lemma: TermLemma | None
    enabled: bool
    simplified_inputs: list[Term]


def is_atom(t: Term) -> bool:
    """Atoms are equalities and Bool-valued applications (incl. variables)."""
    return t.kind is Kind.EQ or (t.kind is Kind.APP and t.is_bool)


def as_literal(t: Term) -> SignedAtom | None:
    if t.kind is Kind.NOT and is_atom(t.args[0]):
        return (t.args[0], False)
    if is_atom(t):
        return (t, True)
    return None


class Simplifier:
    """Bottom-up rewriting to a fixpoint of local rules; memoized per bank."""

    def __init__(self, bank: TermBank, stats: PreproStats | None = None):
        self.bank = bank
        self.stats = stats or PreproStats()
        self._memo: dict[int, Term] = {}

    def _count(self) -> None:
        self.stats.simplifications += 1

    def simplify(self, t: Term) -> Term:
        hit = self._memo.get(t.id)
        if hit is not None:
            return hit
        if t.kind in (Kind.TRUE, Kind.FALSE) or t.kind is Kind.APP:
            # UF applications are left intact, including Bool-sorted arguments
            result = t
        else:
            args = tuple(self.simplify(a) if a.is_bool or t.kind in
                         (Kind.EQ, Kind.ITE, Kind.DISTINCT) else a
                         for a in t.args)
            result = self._rebuild(t.kind, args)
        self._memo[t.id] = result
        return result

    def _rebuild(self, kind: Kind, args: tuple[Term, ...]) -> Term:
        bank = self.bank
        if kind is Kind.NOT:
            return self.not_(args[0])
        if kind is Kind.AND:
            return self.and_(args)
        if kind is Kind.OR:
            return self.or_(args)
        if kind is Kind.XOR:
            return self.xor(args)
        if kind is Kind.IMPLIES:
            return self.implies(args)
        if kind is Kind.EQ:
            return self.eq(args[0], args[1])
        if kind is Kind.ITE:
            return self.ite(*args)
        if kind is Kind.DISTINCT:
            return self.distinct(args)
        raise AssertionError(kind)

    # -- smart constructors (each applies its rules and recurses as needed)

    def not_(self, a: Term) -> Term:
        bank = self.bank
        if a.kind is Kind.TRUE:
            self._count()
            return bank.false_term
        if a.kind is Kind.FALSE:
            self._count()
            return bank.true_term
        if a.kind is Kind.NOT:
            self._count()
            return a.args[0]
        return bank.not_(a)

    def and_(self, args: tuple[Term, ...]) -> Term:
        bank = self.bank
        out: list[Term] = []
        seen: set[int] = set()
        for a in args:
            if a.kind is Kind.FALSE:
                self._count()
                return bank.false_term
            if a.kind is Kind.TRUE:
                self._count()
                continue
            if a.id in seen:
                self._count()
                continue
            seen.add(a.id)
            out.append(a)
        for a in out:
            comp = a.args[0].id if a.kind is Kind.NOT else None
            if comp is not None and comp in seen:
                self._count()
                return bank.false_term
        if not out:
            return bank.true_term
        if len(out) == 1:
            return out[0]
        return bank.and_(out)

    def or_(self, args: tuple[Term, ...]) -> Term:
        bank = self.bank
        out: list[Term] = []
        seen: set[int] = set()
        for a in args:
            if a.kind is Kind.TRUE:
                self._count()
                return bank.true_term
            if a.kind is Kind.FALSE:
                self._count()
                continue
            if a.id in seen:
                self._count()
                continue
            seen.add(a.id)
            out.append(a)
        for a in out:
            comp = a.args[0].id if a.kind is Kind.NOT else None
            if comp is not None and comp in seen:
                self._count()
                return bank.true_term
        if not out:
            return bank.false_term
        if len(out) == 1:
            return out[0]
        return bank.or_(out)

    def xor(self, args: tuple[Term, ...]) -> Term:
        bank = self.bank
        flip = False
        counts: dict[int, int] = {}
        order: list[Term] = []
        for a in args:
            if a.kind is Kind.FALSE:
                self._count()
                continue
            if a.kind is Kind.TRUE:
                self._count()
                flip = not flip
                continue
            if a.id not in counts:
                order.append(a)
            counts[a.id] = counts.get(a.id, 0) + 1
        out = [a for a in order if counts[a.id] % 2 == 1]
        if len(out) < len(order):
            self._count()
        if not out:
            return bank.true_term if flip else bank.false_term
        if len(out) == 1:
            return self.not_(out[0]) if flip else out[0]
        result = bank.xor(out)
        return self.not_(result) if flip else result

    def implies(self, args: tuple[Term, ...]) -> Term:
        # (=> a1 .. an) is ¬a1 ∨ ... ∨ ¬a_{n-1} ∨ an
        bank = self.bank
        *leading, final = args
        kept: list[Term] = []
        for a in leading:
            if a.kind is Kind.TRUE:
                self._count()
                continue
            if a.kind is Kind.FALSE:
                self._count()
                return bank.true_term
            kept.append(a)
        if final.kind is Kind.TRUE:
            self._count()
            return bank.true_term
        if not kept:
            self._count()
            return final
        if final.kind is Kind.FALSE:
            self._count()
            return self.or_(tuple(self.not_(a) for a in kept))
        return bank.implies(kept + [final])

    def eq(self, lhs: Term, rhs: Term) -> Term:
        bank = self.bank
        if lhs.id == rhs.id:
            self._count()
            return bank.true_term
        if lhs.is_bool:
            for a, b in ((lhs, rhs), (rhs, lhs)):
                if a.kind is Kind.TRUE:
                    self._count()
                    return b
                if a.kind is Kind.FALSE:
                    self._count()
                    return self.not_(b)
        return bank.eq(lhs, rhs)

    def ite(self, cond: Term, then: Term, els: Term) -> Term:
        bank = self.bank
        if cond.kind is Kind.TRUE:
            self._count()
            return then
        if cond.kind is Kind.FALSE:
            self._count()
            return els
        if then.id == els.id:
            self._count()
            return then
        if then.is_bool:
            if then.kind is Kind.TRUE:
                self._count()
                return self.or_((cond, els))
            if then.kind is Kind.FALSE:
                self._count()
                return self.and_((self.not_(cond), els))
            if els.kind is Kind.TRUE:
                self._count()
                return self.or_((self.not_(cond), then))
            if els.kind is Kind.FALSE:
                self._count()
                return self.and_((cond, then))
        return bank.ite(cond, then, els)

    def distinct(self, args: tuple[Term, ...]) -> Term:
        bank = self.bank
        if len({a.id for a in args}) < len(args):
            self._count()
            return bank.false_term
        if args[0].is_bool:
            if len(args) >= 3:
                self._count()
                return bank.false_term
            self._count()
            return self.not_(self.eq(args[0], args[1]))
        self._count()
        pairs = [self.not_(self.eq(args[i], args[j]))
                 for i in range(len(args)) for j in range(i + 1, len(args))]
        return self.and_(tuple(pairs))


def simplify(bank: TermBank, t: Term, stats: PreproStats | None = None) -> Term:
    return Simplifier(bank, stats).simplify(t)


# ----------------------------------------------------------------------
# unit propagation

_BOOL_STRUCTURE = (Kind.NOT, Kind.AND, Kind.OR, Kind.XOR, Kind.IMPLIES)


def _substitute(bank: TermBank, t: Term, env: dict[int, bool],
                memo: dict[int, Term], hits: list[int]) -> Term:
    """Replace forced atoms by constants at Boolean positions only."""
    if t.id in env and is_atom(t):
        hits.append(t.id)
        return bank.true_term if env[t.id] else bank.false_term
    cached = memo.get(t.id)
    if cached is not None:
        return cached
    result = t
    if t.kind in _BOOL_STRUCTURE:
        new = tuple(_substitute(bank, a, env, memo, hits) for a in t.args)
        if any(n is not o for n, o in zip(new, t.args)):
            result = bank.mk_term(t.kind, new)
    elif t.kind is Kind.EQ and t.args[0].is_bool and t.args[1].is_bool:
        new = tuple(_substitute(bank, a, env, memo, hits) for a in t.args)
        if any(n is not o for n, o in zip(new, t.args)):
            result = bank.eq(*new)
    elif t.kind is Kind.ITE and t.is_bool:
        new = tuple(_substitute(bank, a, env, memo, hits) for a in t.args)
        if any(n is not o for n, o in zip(new, t.args)):
            result = bank.ite(*new)
    elif t.kind is Kind.ITE:
        cond = _substitute(bank, t.args[0], env, memo, hits)
        if cond is not t.args[0]:
            result = bank.ite(cond, t.args[1], t.args[2])
    elif t.kind is Kind.DISTINCT and t.args[0].is_bool:
        new = tuple(_substitute(bank, a, env, memo, hits) for a in t.args)
        if any(n is not o for n, o in zip(new, t.args)):
            result = bank.distinct(new)
    memo[t.id] = result
    return result


class _UnitState:
    """Forced atom values plus a congruence closure over unit equalities."""

    def __init__(self, bank: TermBank):
        self.bank = bank
        self.values: dict[int, bool] = {}
        self.graph = EGraph()
        self.conflict: TermLemma | None = None
        self.contradiction = False

    def add(self, atom: Term, value: bool) -> bool:
        """Record a forced atom; returns True when newly recorded."""
        old = self.values.get(atom.id)
        if old is not None:
            if old != value:
                self.contradiction = True
            return False
        self.values[atom.id] = value
        if atom.kind is Kind.EQ and not atom.args[0].is_bool:
            lhs, rhs = atom.args
            self.graph.add_term(lhs)
            self.graph.add_term(rhs)
            tag = (atom, value)
            if value:
                conflict = self.graph.merge_terms(lhs, rhs, tag)
            else:
                conflict = self.graph.assert_diseq_terms(lhs, rhs, tag)
            if conflict is not None:
                premises = [t for t in conflict.eq_tags if t is not None]
                if conflict.diseq_tag is not None:
                    premises.append(conflict.diseq_tag)
                clause = [(a, not pol) for a, pol in premises]
                self.conflict = TermLemma(clause, premises, "conflict")
                self.contradiction = True
        return True


def unit_propagate(
    bank: TermBank,
    assertions: list[tuple[Term, int]],
    stats: PreproStats,
) -> tuple[list[tuple[Term, int]], TermLemma | None, bool]:
    """Returns (assertions, closure conflict lemma, derived_false)."""
    state = _UnitState(bank)
    work = list(assertions)
    simp = Simplifier(bank, stats)
    while True:
        changed = False
        for term, _ in work:
            lit = as_literal(term)
            if lit is not None and state.add(*lit):
                changed = True
            if state.contradiction:
                return [(bank.false_term, 0)], state.conflict, True
        if not state.values:
            break
        out: list[tuple[Term, int]] = []
        for term, idx in work:
            if as_literal(term) is not None or term.kind in (Kind.TRUE, Kind.FALSE):
                out.append((term, idx))
                continue
            hits: list[int] = []
            sub = _substitute(bank, term, state.values, {}, hits)
            if hits:
                stats.units_propagated += len(hits)
                sub = simp.simplify(sub)
                changed = True
            out.append((sub, idx))
        work = out
        if any(t.kind is Kind.FALSE for t, _ in work):
            return [(bank.false_term, 0)], None, True
        if not changed:
            break
    work = [(t, i) for t, i in work if t.kind is not Kind.TRUE]
    return work, None, False


# ----------------------------------------------------------------------
# diamond extraction

def _diamond_branches(assertion: Term) -> list[list[Term]] | None:
    if assertion.kind is not Kind.OR:
        return None
    branches: list[list[Term]] = []
    for child in assertion.args:
        if child.kind is Kind.EQ and not child.args[0].is_bool:
            branches.append([child])
        elif child.kind is Kind.AND and child.args and all(
            g.kind is Kind.EQ and not g.args[0].is_bool for g in child.args
        ):
            branches.append(list(child.args))
        else:
            return None
    return branches if len(branches) >= 2 else None


def diamond_extract(bank: TermBank, assertion: Term) -> list[Term]:
    """Unit equalities entailed by every branch of a diamond-shaped Or."""
    branches = _diamond_branches(assertion)
    if branches is None:
        return []
    terms = sorted(
        (t for t in subterms(assertion) if not t.is_bool),
        key=lambda t: t.id,
    )
    closures = [
        closure_over(bank, terms, [(e.args[0], e.args[1]) for e in branch])
        for branch in branches
    ]
    groups: dict[tuple[int, ...], list[Term]] = {}
    for t in terms:
        key = tuple(g.find(g.node_of(t)) for g in closures)
        groups.setdefault(key, []).append(t)
    units: list[Term] = []
    for members in groups.values():
        if len(members) < 2:
            continue
        head = members[0]
        for other in members[1:]:
            units.append(bank.eq(head, other))
    return units


# ----------------------------------------------------------------------
# pipeline

def preprocess(bank: TermBank, assertions: list[Term],
               enabled: bool = True) -> PreproResult:
    stats = PreproStats()
    if not enabled:
        return PreproResult(
            assertions=list(assertions),
            added_units=[],
            units=[],
            stats=stats,
            conflict_lemma=None,
            enabled=False,
            simplified_inputs=list(assertions),
        )
    simp = Simplifier(bank, stats)
    simplified = [simp.simplify(a) for a in assertions]
    work = list(enumerate(simplified))
    work = [(t, i) for i, t in work]
    work, conflict, false = unit_propagate(bank, work, stats)
    units: list[DiamondUnit] = []
    added: list[Term] = []
    if not false:
        existing = {t.id for t, _ in work}
        for term, idx in list(work):
            for unit in diamond_extract(bank, term):
                if unit.id in existing:
                    continue
                existing.add(unit.id)
                units.append(DiamondUnit(unit, idx, term))
                added.append(unit)
                work.append((unit, idx))
        stats.diamond_units = len(added)
        work, conflict, false = unit_propagate(bank, work, stats)
    return PreproResult(
        assertions=[t for t, _ in work],
        added_units=added,
        units=units,
        stats=stats,
        conflict_lemma=conflict,
        enabled=True,
        simplified_inputs=simplified,
    )
