"""Lazy DPLL(T) SMT solver for QF_UF.

Parse SMT-LIB 2, decide satisfiability with a CDCL SAT engine cooperating
with a congruence-closure theory solver, build verifiable models for sat
instances and replay-checked proof certificates for unsat instances.
"""
from .smtlib import parse_script, print_term, xor_semantics
from .solver import SolveOptions, solve_script
from .terms import Kind, Sort, SortError, Symbol, Term, TermBank

__all__ = [
    "Kind",
    "Sort",
    "SortError",
    "Symbol",
    "Term",
    "TermBank",
    "SolveOptions",
    "parse_script",
    "print_term",
    "solve_script",
    "xor_semantics",
]
