"""Shared test helpers: independent oracles kept deliberately naive."""
from __future__ import annotations

import random

import pytest

from qfuf.terms import Kind, Term, TermBank


@pytest.fixture
def bank() -> TermBank:
    return TermBank()


# ----------------------------------------------------------------------
# brute-force congruence closure oracle: repeatedly apply symmetry,
# transitivity and congruence on an explicit partition until stable

def closure_oracle(terms: list[Term], equalities: list[tuple[Term, Term]]):
    ids = [t.id for t in terms]
    rep = {i: i for i in ids}

    def find(i: int) -> int:
        while rep[i] != i:
            i = rep[i]
        return i

    def union(a: int, b: int) -> bool:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        rep[ra] = rb
        return True

    for s, t in equalities:
        union(s.id, t.id)
    apps = [t for t in terms if t.kind is Kind.APP and t.args]
    changed = True
    while changed:
        changed = False
        for i, a in enumerate(apps):
            for b in apps[i + 1:]:
                if a.symbol is not b.symbol or len(a.args) != len(b.args):
                    continue
                if find(a.id) == find(b.id):
                    continue
                if all(find(x.id) == find(y.id)
                       for x, y in zip(a.args, b.args)):
                    union(a.id, b.id)
                    changed = True
    groups: dict[int, set[int]] = {}
    for i in ids:
        groups.setdefault(find(i), set()).add(i)
    return frozenset(frozenset(g) for g in groups.values())


def random_ground_terms(bank: TermBank, rng: random.Random,
                        num_consts: int = 6, num_funs: int = 2,
                        extra_apps: int = 8):
    """A pool of ground terms over one sort with unary/binary functions."""
    sort = bank.declare_sort("U")
    consts = [bank.const(bank.declare_fun(f"k{i}", (), sort))
              for i in range(num_consts)]
    funs = [bank.declare_fun(f"g{i}", tuple([sort] * rng.randint(1, 2)), sort)
            for i in range(num_funs)]
    pool = list(consts)
    for _ in range(extra_apps):
        f = rng.choice(funs)
        args = [rng.choice(pool) for _ in range(f.arity)]
        pool.append(bank.app(f, args))
    return pool


# ----------------------------------------------------------------------
# propositional oracles

def brute_force_sat(num_vars: int, clauses: list[list[int]]) -> bool:
    """Tiny independent DPLL (unit propagation + splitting)."""

    def simplify(clauses: list[list[int]], lit: int):
        out = []
        for c in clauses:
            if lit in c:
                continue
            reduced = [l for l in c if l != -lit]
            if not reduced:
                return None
            out.append(reduced)
        return out

    def go(clauses: list[list[int]]) -> bool:
        while True:
            unit = next((c[0] for c in clauses if len(c) == 1), None)
            if unit is None:
                break
            clauses = simplify(clauses, unit)
            if clauses is None:
                return False
        if not clauses:
            return True
        lit = clauses[0][0]
        for choice in (lit, -lit):
            reduced = simplify(clauses, choice)
            if reduced is not None and go(reduced):
                return True
        return False

    return go([list(c) for c in clauses])


def eval_formula(t: Term, atom_vals: dict[int, bool]) -> bool:
    """Evaluate a Bool term over truth values for its atoms."""
    from qfuf.smtlib import xor_semantics

    kind = t.kind
    if kind is Kind.TRUE:
        return True
    if kind is Kind.FALSE:
        return False
    if t.id in atom_vals:
        return atom_vals[t.id]
    if kind is Kind.NOT:
        return not eval_formula(t.args[0], atom_vals)
    if kind is Kind.AND:
        return all(eval_formula(a, atom_vals) for a in t.args)
    if kind is Kind.OR:
        return any(eval_formula(a, atom_vals) for a in t.args)
    if kind is Kind.XOR:
        return xor_semantics([eval_formula(a, atom_vals) for a in t.args])
    if kind is Kind.IMPLIES:
        vals = [eval_formula(a, atom_vals) for a in t.args]
        return any(not v for v in vals[:-1]) or vals[-1]
    if kind is Kind.EQ:
        return eval_formula(t.args[0], atom_vals) == eval_formula(t.args[1], atom_vals)
    if kind is Kind.ITE:
        if eval_formula(t.args[0], atom_vals):
            return eval_formula(t.args[1], atom_vals)
        return eval_formula(t.args[2], atom_vals)
    raise AssertionError(f"not a propositional node: {t!r}")


def collect_atoms(t: Term) -> list[Term]:
    """Distinct propositional atoms of a formula, in first-seen order."""
    from qfuf.preprocess import is_atom

    out: list[Term] = []
    seen: set[int] = set()

    def walk(node: Term) -> None:
        if node.id in seen:
            return
        seen.add(node.id)
        if is_atom(node):
            out.append(node)
            return
        if node.kind is Kind.EQ and not node.args[0].is_bool:
            out.append(node)
            return
        for a in node.args:
            walk(a)

    walk(t)
    return out
