"""Finite model construction, evaluation, printing and validation.

Universe elements of an uninterpreted sort S are named `@S!val!<k>` (one
per congruence class containing a term of that sort).  Bool values are
plain Python booleans throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .booleanize import CnfProblem
from .euf import EufTheory
from .smtlib import (Command, CommandKind, Script, parse_script, print_symbol,
                     print_term, xor_semantics)
from .terms import Kind, Sort, Symbol, Term, TermBank

Value = object  # element name (str) or bool


class ModelError(Exception):
    """Internal inconsistency while building a model (crash-class)."""


class EvalError(Exception):
    """A symbol required by evaluation is not interpreted."""


@dataclass
class FunInterp:
    symbol: Symbol
    table: dict[tuple, Value] = field(default_factory=dict)
    default: Value = None


@dataclass
class Model:
    universes: dict[str, list[str]] = field(default_factory=dict)
    const_interp: dict[str, Value] = field(default_factory=dict)
    fun_interp: dict[str, FunInterp] = field(default_factory=dict)
    decl_order: list[Symbol] = field(default_factory=list)

    def universe(self, sort: Sort) -> list[Value]:
        if sort.is_bool:
            return [True, False]
        return self.universes[sort.name]


def _element(sort: Sort, index: int) -> str:
    return f"@{sort.name}!val!{index}"


def _declared_symbols(script: Script) -> list[Symbol]:
    symbols = []
    for cmd in script.commands:
        if cmd.kind in (CommandKind.DECLARE_FUN, CommandKind.DECLARE_CONST):
            symbols.append(cmd.symbol)
    return symbols


def build_model(theory: EufTheory, cnf: CnfProblem,
                assignment: list[bool], script: Script) -> Model:
    bank = script.bank
    egraph = theory.egraph
    model = Model()
    symbols = _declared_symbols(script)
    model.decl_order = symbols

    user_sorts = [s for s in bank.sorts.values()
                  if not s.is_bool and not s.name.startswith("__")]

    known_terms = [bank.term_by_id(tid) for tid in egraph._term_node]

    # one universe element per congruence class holding a term of the sort
    root_element: dict[tuple[str, int], str] = {}
    for sort in user_sorts:
        roots: list[int] = []
        for t in sorted((t for t in known_terms if t.sort is sort),
                        key=lambda t: t.id):
            root = egraph.find(egraph.node_of(t))
            if root not in roots:
                roots.append(root)
        if not roots:
            model.universes[sort.name] = [_element(sort, 0)]
            continue
        model.universes[sort.name] = []
        for k, root in enumerate(roots):
            name = _element(sort, k)
            model.universes[sort.name].append(name)
            root_element[(sort.name, root)] = name

    def bool_value_of(t: Term) -> bool:
        entry = cnf.bridge.get(t.id)
        if entry is not None:
            if egraph.has_term(entry.term) and egraph.has_term(bank.bool_true):
                node = egraph.node_of(entry.term)
                if egraph.same(node, egraph.node_of(bank.bool_true)):
                    return True
                if egraph.same(node, egraph.node_of(bank.bool_false)):
                    return False
            for var, pol in ((entry.eq_true, True), (entry.eq_false, False)):
                if var < len(assignment) and assignment[var] is not None:
                    if assignment[var]:
                        return pol
        var = cnf.atoms.prop_of.get(t.id)
        if var is not None and var < len(assignment) and assignment[var] is not None:
            return assignment[var]
        return False

    def value_of(t: Term) -> Value:
        if t.is_bool:
            return bool_value_of(t)
        root = egraph.find(egraph.node_of(t))
        name = root_element.get((t.sort.name, root))
        if name is None:
            raise ModelError(f"no element for class of {print_term(t)}")
        return name

    for sym in symbols:
        if sym.arity == 0:
            term = bank.const(sym)
            if sym.ret_sort.is_bool:
                var = cnf.atoms.prop_of.get(term.id)
                if var is not None and var < len(assignment) \
                        and assignment[var] is not None:
                    model.const_interp[sym.name] = assignment[var]
                elif egraph.has_term(term):
                    model.const_interp[sym.name] = bool_value_of(term)
                else:
                    model.const_interp[sym.name] = False
            elif egraph.has_term(term):
                model.const_interp[sym.name] = value_of(term)
            else:
                model.const_interp[sym.name] = model.universes[sym.ret_sort.name][0]
        else:
            default: Value = (False if sym.ret_sort.is_bool
                              else model.universes[sym.ret_sort.name][0])
            interp = FunInterp(sym, default=default)
            model.fun_interp[sym.name] = interp

    for t in sorted(known_terms, key=lambda t: t.id):
        if t.kind is not Kind.APP or not t.args or t.symbol is None:
            continue
        interp = model.fun_interp.get(t.symbol.name)
        if interp is None:
            continue  # internal symbol
        key = tuple(value_of(a) for a in t.args)
        val = value_of(t)
        old = interp.table.get(key)
        if old is not None and old != val:
            raise ModelError(
                f"conflicting interpretations for {t.symbol.name}{key}: "
                f"{old} vs {val}"
            )
        interp.table[key] = val
    return model


# ----------------------------------------------------------------------
# evaluation

def evaluate(t: Term, model: Model) -> Value:
    kind = t.kind
    if kind is Kind.TRUE:
        return True
    if kind is Kind.FALSE:
        return False
    if kind is Kind.APP:
        if t.symbol.arity == 0:
            try:
                return model.const_interp[t.symbol.name]
            except KeyError:
                raise EvalError(f"uninterpreted constant {t.symbol.name!r}") from None
        try:
            interp = model.fun_interp[t.symbol.name]
        except KeyError:
            raise EvalError(f"uninterpreted function {t.symbol.name!r}") from None
        key = tuple(evaluate(a, model) for a in t.args)
        return interp.table.get(key, interp.default)
    if kind is Kind.EQ:
        return evaluate(t.args[0], model) == evaluate(t.args[1], model)
    if kind is Kind.DISTINCT:
        vals = [evaluate(a, model) for a in t.args]
        return len(set(map(repr, vals))) == len(vals)
    if kind is Kind.NOT:
        return not evaluate(t.args[0], model)
    if kind is Kind.AND:
        return all(evaluate(a, model) for a in t.args)
    if kind is Kind.OR:
        return any(evaluate(a, model) for a in t.args)
    if kind is Kind.XOR:
        return xor_semantics([evaluate(a, model) for a in t.args])
    if kind is Kind.IMPLIES:
        *leading, final = [evaluate(a, model) for a in t.args]
        return any(not v for v in leading) or final
    if kind is Kind.ITE:
        if evaluate(t.args[0], model):
            return evaluate(t.args[1], model)
        return evaluate(t.args[2], model)
    raise EvalError(f"cannot evaluate {t!r}")


def model_satisfies(model: Model, assertions: list[Term]) -> bool:
    return all(evaluate(a, model) is True for a in assertions)


# ----------------------------------------------------------------------
# printing

def _print_value(v: Value, sort: Sort) -> str:
    if sort.is_bool:
        return "true" if v else "false"
    return f"(as {v} {sort.name})"


def print_model(model: Model) -> str:
    lines = ["("]
    for sym in model.decl_order:
        if sym.arity == 0:
            val = model.const_interp[sym.name]
            body = _print_value(val, sym.ret_sort)
            lines.append(
                f"  (define-fun {print_symbol(sym.name)} () {sym.ret_sort.name} {body})"
            )
            continue
        interp = model.fun_interp[sym.name]
        params = " ".join(
            f"(x!{i} {s.name})" for i, s in enumerate(sym.arg_sorts)
        )
        body = _print_value(interp.default, sym.ret_sort)
        for key in sorted(interp.table, key=repr, reverse=True):
            val = interp.table[key]
            conds = [
                f"(= x!{i} {_print_value(k, s)})"
                for i, (k, s) in enumerate(zip(key, sym.arg_sorts))
            ]
            cond = conds[0] if len(conds) == 1 else "(and " + " ".join(conds) + ")"
            body = (f"(ite {cond} {_print_value(val, sym.ret_sort)} {body})")
        lines.append(
            f"  (define-fun {print_symbol(sym.name)} ({params}) "
            f"{sym.ret_sort.name} {body})"
        )
    lines.append(")")
    return "\n".join(lines)


# ----------------------------------------------------------------------
# validation script

def emit_validation_script(script: Script, model: Model) -> str:
    lines: list[str] = []
    for cmd in script.commands:
        if cmd.kind in (CommandKind.SET_LOGIC, CommandKind.DECLARE_SORT,
                        CommandKind.DECLARE_FUN, CommandKind.DECLARE_CONST):
            from .smtlib import print_command
            lines.append(print_command(cmd))
    for sort_name, elements in model.universes.items():
        for e in elements:
            lines.append(f"(declare-fun {e} () {sort_name})")
        if len(elements) >= 2:
            lines.append(f"(assert (distinct {' '.join(elements)}))")

    def value_text(v: Value) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        return v

    for sym in model.decl_order:
        if sym.arity == 0:
            val = model.const_interp[sym.name]
            lines.append(
                f"(assert (= {print_symbol(sym.name)} {value_text(val)}))"
            )
            continue
        interp = model.fun_interp[sym.name]
        domains = [model.universe(s) for s in sym.arg_sorts]
        for key in product(*domains):
            val = interp.table.get(tuple(key), interp.default)
            args = " ".join(value_text(k) for k in key)
            lines.append(
                f"(assert (= ({print_symbol(sym.name)} {args}) {value_text(val)}))"
            )
    for a in script.assertions():
        lines.append(f"(assert {print_term(a)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def validate_script_text(text: str, model: Model) -> bool:
    """Parse a validation script and evaluate its assertions under the
    model extended with the universe element constants."""
    script = parse_script(text)
    extended = Model(
        universes=dict(model.universes),
        const_interp=dict(model.const_interp),
        fun_interp=model.fun_interp,
        decl_order=model.decl_order,
    )
    for elements in model.universes.values():
        for e in elements:
            extended.const_interp[e] = e
    for cmd in script.commands:
        if cmd.kind is CommandKind.ASSERT:
            if evaluate(cmd.term, extended) is not True:
                return False
    return True
