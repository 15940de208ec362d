"""Delta debugging for failing scripts.

Classic ddmin over the assertion list (declarations are always kept),
followed by structural shrinking inside the surviving assertions:
dropping children of n-ary connectives, unwrapping unary connectives,
and replacing non-Bool subterms by a declared constant of the same sort.
The reduced script still parses and still fails the oracle, and is
1-minimal at assertion granularity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .smtlib import (Command, CommandKind, Script, parse_script, print_command,
                     print_term)
from .terms import Kind, Term, TermBank

Oracle = Callable[[str], bool]


class OracleFlaky(Exception):
    """The oracle returned different answers for identical inputs."""


def _render(prelude: list[str], asserts: list[str], trailer: list[str]) -> str:
    return "\n".join(prelude + [f"(assert {a})" for a in asserts] + trailer) + "\n"


def _split_script(text: str) -> tuple[list[str], list[str], list[str]]:
    script = parse_script(text)
    prelude: list[str] = []
    asserts: list[str] = []
    trailer: list[str] = []
    for cmd in script.commands:
        if cmd.kind is CommandKind.ASSERT:
            asserts.append(print_term(cmd.term))
        elif cmd.kind in (CommandKind.CHECK_SAT, CommandKind.GET_MODEL,
                          CommandKind.EXIT):
            trailer.append(print_command(cmd))
        else:
            prelude.append(print_command(cmd))
    if not any(c.kind is CommandKind.CHECK_SAT for c in script.commands):
        trailer.insert(0, "(check-sat)")
    return prelude, asserts, trailer


def ddmin_list(items: list, test: Callable[[list], bool]) -> list:
    """Zeller-style ddmin: returns a 1-minimal sublist still failing."""
    n = 2
    while len(items) >= 2:
        chunk = max(1, len(items) // n)
        subsets = [items[i:i + chunk] for i in range(0, len(items), chunk)]
        reduced = False
        for subset in subsets:
            if len(subset) < len(items) and test(subset):
                items = subset
                n = 2
                reduced = True
                break
        if not reduced:
            for i in range(len(subsets)):
                complement = [x for j, s in enumerate(subsets) if j != i for x in s]
                if len(complement) < len(items) and test(complement):
                    items = complement
                    n = max(n - 1, 2)
                    reduced = True
                    break
        if not reduced:
            if n >= len(items):
                break
            n = min(2 * n, len(items))
    return items


def _shrink_candidates(bank: TermBank, t: Term) -> list[Term]:
    """Smaller same-sorted variants of t, most aggressive first."""
    out: list[Term] = []
    if t.kind in (Kind.AND, Kind.OR, Kind.XOR) and len(t.args) > 1:
        for i in range(len(t.args)):
            rest = t.args[:i] + t.args[i + 1:]
            out.append(rest[0] if len(rest) == 1 else bank.mk_term(t.kind, rest))
    if t.kind is Kind.IMPLIES and len(t.args) > 2:
        for i in range(len(t.args) - 1):
            rest = t.args[:i] + t.args[i + 1:]
            out.append(bank.mk_term(t.kind, rest))
    if t.kind is Kind.NOT:
        out.append(t.args[0])
    if t.kind is Kind.ITE:
        out.append(t.args[1])
        out.append(t.args[2])
    const = _same_sort_const(bank, t)
    if const is not None and const.id != t.id:
        out.append(const)
    return out


def _same_sort_const(bank: TermBank, t: Term) -> Term | None:
    if t.is_bool:
        return None
    for sym in bank.symbols.values():
        if sym.arity == 0 and sym.ret_sort is t.sort \
                and not sym.name.startswith("__"):
            return bank.const(sym)
    return None


def _rewrite_at(bank: TermBank, root: Term, target: Term, repl: Term,
                memo: dict[int, Term]) -> Term:
    if root.id == target.id:
        return repl
    hit = memo.get(root.id)
    if hit is not None:
        return hit
    result = root
    if root.args:
        new_args = tuple(_rewrite_at(bank, a, target, repl, memo)
                         for a in root.args)
        if new_args != root.args:
            result = bank.mk_term(root.kind, new_args, root.symbol)
    memo[root.id] = result
    return result


def _shrink_assert(text_prelude: list[str], asserts: list[str],
                   trailer: list[str], idx: int, oracle: Oracle) -> str | None:
    """One shrinking step on assertion idx; returns the new text or None."""
    current = _render(text_prelude, asserts, trailer)
    script = parse_script(current)
    bank = script.bank
    terms = [c.term for c in script.commands if c.kind is CommandKind.ASSERT]
    root = terms[idx]
    seen: set[int] = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if node.id in seen:
            continue
        seen.add(node.id)
        for cand in _shrink_candidates(bank, node):
            try:
                new_root = _rewrite_at(bank, root, node, cand, {})
            except Exception:  # noqa: BLE001 - ill-sorted rewrite, skip
                continue
            if new_root.id == root.id or not new_root.is_bool:
                continue
            new_asserts = list(asserts)
            new_asserts[idx] = print_term(new_root)
            candidate = _render(text_prelude, new_asserts, trailer)
            if oracle(candidate):
                return candidate
        stack.extend(node.args)
    return None


def ddmin_script(text: str, oracle: Oracle, structural: bool = True) -> str:
    """Reduce a failing script; oracle(text) is True while it still fails."""
    if not oracle(text):
        raise ValueError("oracle does not fail on the initial script")
    if not oracle(text):  # second run on identical input probes determinism
        raise OracleFlaky("oracle gave different answers on identical input")
    prelude, asserts, trailer = _split_script(text)

    def test(subset: list[str]) -> bool:
        return oracle(_render(prelude, subset, trailer))

    asserts = ddmin_list(asserts, test)
    if structural:
        changed = True
        while changed:
            changed = False
            for idx in range(len(asserts)):
                shrunk = _shrink_assert(prelude, asserts, trailer, idx, oracle)
                if shrunk is not None:
                    _, asserts, _ = _split_script(shrunk)
                    changed = True
                    break
    return _render(prelude, asserts, trailer)
