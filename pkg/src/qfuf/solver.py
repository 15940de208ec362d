"""End-to-end solving pipeline for one script."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .booleanize import CnfProblem, booleanize
from .euf import EufTheory
from .preprocess import PreproResult, preprocess
from .sat import Budget, SatSolver, SolveResult
from .smtlib import Script
from .terms import Kind, Term


@dataclass
class SolveOptions:
    preprocessing: bool = True
    theory_propagation: bool = True
    conflict_budget: int | None = None
    timeout: float | None = None  # seconds of wall clock for the solve
    seed: int | None = None


@dataclass
class Outcome:
    verdict: str  # "sat" | "unsat" | "unknown"
    script: Script
    assertions: list[Term]
    prepro: PreproResult
    cnf: CnfProblem | None = None
    theory: EufTheory | None = None
    engine: SatSolver | None = None
    result: SolveResult | None = None
    elapsed: float = 0.0

    @property
    def final_check_rejections(self) -> int:
        return self.theory.final_check_rejections if self.theory else 0

    def proof_log(self) -> list[tuple]:
        return self.result.proof_log if self.result else []


def solve_script(script: Script, options: SolveOptions | None = None) -> Outcome:
    options = options or SolveOptions()
    start = time.monotonic()
    bank = script.bank
    assertions = script.assertions()
    prepro = preprocess(bank, assertions, enabled=options.preprocessing)
    outcome = Outcome("unknown", script, assertions, prepro)
    if any(a.kind is Kind.FALSE for a in prepro.assertions):
        outcome.verdict = "unsat"
        outcome.elapsed = time.monotonic() - start
        return outcome
    live = [a for a in prepro.assertions if a.kind is not Kind.TRUE]
    cnf = booleanize(bank, live)
    theory = EufTheory(bank, cnf.theory_atoms)
    engine = SatSolver(
        cnf.num_vars,
        cnf.clauses,
        hooks=theory,
        theory_propagation=options.theory_propagation,
        seed=options.seed,
    )
    deadline = None
    if options.timeout is not None:
        deadline = start + options.timeout
    result = engine.solve(Budget(max_conflicts=options.conflict_budget,
                                 deadline=deadline))
    outcome.cnf = cnf
    outcome.theory = theory
    outcome.engine = engine
    outcome.result = result
    outcome.verdict = result.verdict
    outcome.elapsed = time.monotonic() - start
    return outcome
