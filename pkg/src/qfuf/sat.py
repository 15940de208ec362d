"""CDCL SAT engine with an external-propagator hook contract.

Literals are signed integers (var >= 1, negative = negated), clauses are
lists of literals.  The engine implements two-watched-literal propagation,
first-UIP learning with non-chronological backjumping, VSIDS-style
activity branching with decay, Luby restarts and glue-based learnt-clause
reduction.

A hooks object (see qfuf.euf.EufTheory) may provide:
  on_assign(lit, is_decision)         -- assignment notification
  on_backtrack(level)                 -- backjump/restart notification
  cb_propagate() -> lit | None        -- one theory-entailed literal
  cb_reason(lit) -> TheoryLemma       -- lazy reason for a propagated lit
  cb_final_check() -> lemmas | None   -- None accepts the full assignment
  cb_has_external_clause() -> TheoryLemma | None

Theory-propagated literals get lazy reasons: the reason clause is only
materialized (and logged) when conflict analysis needs it.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional

from .euf import TheoryLemma

THEORY_REASON = "theory"


class EngineError(Exception):
    """Crash-class fault (malformed clause from a hook, internal invariant)."""


@dataclass
class Clause:
    lits: list[int]
    learnt: bool = False
    lbd: int = 0
    lemma: TheoryLemma | None = None


@dataclass
class Budget:
    max_conflicts: int | None = None
    deadline: float | None = None  # time.monotonic() value

    def out_of_conflicts(self, conflicts: int) -> bool:
        return self.max_conflicts is not None and conflicts >= self.max_conflicts

    def out_of_time(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline


@dataclass
class SolveResult:
    verdict: str  # "sat" | "unsat" | "unknown"
    model: list[bool] | None = None  # indexed by var, entry 0 unused
    proof_log: list[tuple] = field(default_factory=list)
    conflicts: int = 0
    decisions: int = 0


def luby(i: int) -> int:
    """i-th element (1-based) of the Luby restart sequence."""
    k = 1
    while (1 << (k + 1)) - 1 <= i:
        k += 1
    while i != (1 << k) - 1:
        i = i - (1 << k) + 1
        k = 1
        while (1 << (k + 1)) - 1 <= i:
            k += 1
    return 1 << (k - 1)


class SatSolver:
    RESTART_BASE = 64
    VAR_DECAY = 0.95
    CLAUSE_KEEP_LBD = 3

    def __init__(self, num_vars: int, clauses: list[list[int]],
                 hooks=None, theory_propagation: bool = True,
                 seed: int | None = None):
        self.num_vars = num_vars
        self.hooks = hooks
        self.theory_propagation = theory_propagation and hooks is not None
        self.values: list[Optional[bool]] = [None] * (num_vars + 1)
        self.levels = [0] * (num_vars + 1)
        self.reasons: list = [None] * (num_vars + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.watches: dict[int, list[Clause]] = {}
        self.clauses: list[Clause] = []
        self.learnts: list[Clause] = []
        self.activity = [0.0] * (num_vars + 1)
        self.var_inc = 1.0
        self.phase = [False] * (num_vars + 1)
        self.order: list[int] = []
        self._order_pos = 0
        self._order_dirty = True
        self.proof_log: list[tuple] = []
        self.conflicts = 0
        self.decisions = 0
        self._unsat = False
        if seed is not None:
            rng = random.Random(seed)
            for v in range(1, num_vars + 1):
                self.activity[v] = rng.random() * 1e-6
        for lits in clauses:
            self._add_input_clause(list(lits))

    # ------------------------------------------------------------------
    # clause plumbing

    def _check_lits(self, lits: list[int]) -> None:
        seen = set()
        for lit in lits:
            v = abs(lit)
            if v < 1 or v > self.num_vars:
                raise EngineError(f"literal {lit} out of range")
            if v in seen:
                raise EngineError(f"duplicate variable {v} in clause {lits}")
            seen.add(v)

    def _add_input_clause(self, lits: list[int]) -> None:
        self._check_lits(lits)
        if not lits:
            self._unsat = True
            return
        if len(lits) == 1:
            lit = lits[0]
            val = self.lit_value(lit)
            if val is False:
                self._unsat = True
            elif val is None:
                self.enqueue(lit, Clause(lits))
            return
        clause = Clause(lits)
        self.clauses.append(clause)
        self._watch(clause)

    def _watch(self, clause: Clause) -> None:
        for lit in clause.lits[:2]:
            self.watches.setdefault(lit, []).append(clause)

    def lit_value(self, lit: int) -> Optional[bool]:
        v = self.values[abs(lit)]
        if v is None:
            return None
        return v if lit > 0 else not v

    @property
    def decision_level(self) -> int:
        return len(self.trail_lim)

    # ------------------------------------------------------------------
    # assignment

    def enqueue(self, lit: int, reason) -> None:
        var = abs(lit)
        assert self.values[var] is None
        self.values[var] = lit > 0
        self.levels[var] = self.decision_level
        self.reasons[var] = reason
        self.trail.append(lit)
        self.phase[var] = lit > 0
        if self.hooks is not None:
            self.hooks.on_assign(lit, is_decision=reason is None)

    def backtrack(self, level: int) -> None:
        if self.decision_level <= level:
            return
        limit = self.trail_lim[level]
        for lit in reversed(self.trail[limit:]):
            var = abs(lit)
            self.values[var] = None
            self.reasons[var] = None
        del self.trail[limit:]
        del self.trail_lim[level:]
        self.qhead = min(self.qhead, len(self.trail))
        self._order_dirty = True
        if self.hooks is not None:
            self.hooks.on_backtrack(level)

    # ------------------------------------------------------------------
    # propagation

    def propagate(self) -> Clause | None:
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            falsified = -lit
            watchers = self.watches.get(falsified)
            if not watchers:
                continue
            kept: list[Clause] = []
            conflict: Clause | None = None
            for idx, clause in enumerate(watchers):
                lits = clause.lits
                if lits[0] == falsified:
                    lits[0], lits[1] = lits[1], lits[0]
                first = lits[0]
                if self.lit_value(first) is True:
                    kept.append(clause)
                    continue
                moved = False
                for k in range(2, len(lits)):
                    if self.lit_value(lits[k]) is not False:
                        lits[1], lits[k] = lits[k], lits[1]
                        self.watches.setdefault(lits[1], []).append(clause)
                        moved = True
                        break
                if moved:
                    continue
                kept.append(clause)
                if self.lit_value(first) is False:
                    kept.extend(watchers[idx + 1:])
                    conflict = clause
                    break
                self.enqueue(first, clause)
            self.watches[falsified] = kept
            if conflict is not None:
                return conflict
        return None

    # ------------------------------------------------------------------
    # conflict analysis (first UIP)

    def _reason_clause(self, var: int) -> Clause:
        reason = self.reasons[var]
        if reason is THEORY_REASON:
            lit = var if self.values[var] else -var
            lemma = self.hooks.cb_reason(lit)
            clause = Clause(list(lemma.lits), lemma=lemma)
            if clause.lits[0] != lit:
                raise EngineError("theory reason must start with the propagated literal")
            self._check_lits(clause.lits)
            self.proof_log.append(("theory", lemma))
            self.reasons[var] = clause
            return clause
        return reason

    def _log_refutation_reasons(self, clause: Clause) -> None:
        """Materialize lazy theory reasons reachable from a final conflict.

        The proof log must contain every theory lemma the refutation rests
        on; literals forced by theory propagation carry their reason only
        on demand, so the implication chain is walked here once the
        problem is known to be unsat.
        """
        seen: set[int] = set()
        stack = [abs(l) for l in clause.lits]
        while stack:
            var = stack.pop()
            if var in seen or self.values[var] is None:
                continue
            seen.add(var)
            reason = self.reasons[var]
            if reason is THEORY_REASON:
                reason = self._reason_clause(var)
            if isinstance(reason, Clause):
                stack.extend(abs(l) for l in reason.lits)

    def bump_var(self, var: int) -> None:
        self.activity[var] += self.var_inc
        if self.activity[var] > 1e100:
            for v in range(1, self.num_vars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100
        self._order_dirty = True

    def analyze(self, conflict: Clause) -> tuple[list[int], int, int]:
        learnt: list[int] = []
        seen = [False] * (self.num_vars + 1)
        counter = 0
        cur_level = self.decision_level
        clause = conflict
        resolved: int | None = None  # trail literal currently resolved upon
        index = len(self.trail) - 1
        while True:
            for lit in clause.lits:
                if lit == resolved:
                    continue
                var = abs(lit)
                if seen[var] or self.levels[var] == 0:
                    continue
                seen[var] = True
                self.bump_var(var)
                if self.levels[var] == cur_level:
                    counter += 1
                else:
                    learnt.append(lit)
            while not seen[abs(self.trail[index])]:
                index -= 1
            resolved = self.trail[index]
            index -= 1
            counter -= 1
            if counter == 0:
                break
            clause = self._reason_clause(abs(resolved))
        learnt = [-resolved] + learnt
        if len(learnt) == 1:
            backjump = 0
        else:
            backjump = max(self.levels[abs(l)] for l in learnt[1:])
            # move one literal of the backjump level into watch position 1
            for k in range(1, len(learnt)):
                if self.levels[abs(learnt[k])] == backjump:
                    learnt[1], learnt[k] = learnt[k], learnt[1]
                    break
        lbd = len({self.levels[abs(l)] for l in learnt})
        return learnt, backjump, lbd

    # ------------------------------------------------------------------
    # external clauses

    def integrate_external(self, lemma: TheoryLemma) -> Clause | None:
        """Add a clause mid-search; returns it if conflicting after placement."""
        lits = list(lemma.lits)
        self._check_lits(lits)
        self.proof_log.append(("theory", lemma))
        if not lits:
            self._unsat = True
            return None
        clause = Clause(lits, lemma=lemma)
        non_false = [l for l in lits if self.lit_value(l) is not False]
        if len(lits) == 1:
            lit = lits[0]
            self.backtrack(0)
            val = self.lit_value(lit)
            if val is False:
                self._unsat = True
                self._log_refutation_reasons(clause)
            elif val is None:
                self.enqueue(lit, clause)
            return None
        if len(non_false) >= 2:
            order = {l: i for i, l in enumerate(lits)}
            lits.sort(key=lambda l: (self.lit_value(l) is False, order[l]))
            clause.lits = lits
            self.clauses.append(clause)
            self._watch(clause)
            return None
        false_levels = sorted(
            (self.levels[abs(l)] for l in lits if self.lit_value(l) is False),
            reverse=True,
        )
        if len(non_false) == 1:
            unit = non_false[0]
            assert_level = false_levels[0] if false_levels else 0
            if self.lit_value(unit) is True and self.levels[abs(unit)] <= assert_level:
                lits.sort(key=lambda l: (l != unit, -self.levels[abs(l)]))
                clause.lits = lits
                self.clauses.append(clause)
                self._watch(clause)
                return None
            self.backtrack(assert_level)
            lits.sort(key=lambda l: (self.lit_value(l) is False,
                                     -self.levels[abs(l)]))
            clause.lits = lits
            self.clauses.append(clause)
            self._watch(clause)
            if self.lit_value(lits[0]) is None:
                self.enqueue(lits[0], clause)
            return None
        # falsified clause
        top = false_levels[0]
        if top == 0:
            self._unsat = True
            self._log_refutation_reasons(clause)
            return None
        second = next((lv for lv in false_levels[1:] if lv != top), 0)
        n_top = sum(1 for lv in false_levels if lv == top)
        if n_top >= 2:
            self.backtrack(top)
            lits.sort(key=lambda l: -self.levels[abs(l)])
            clause.lits = lits
            self.clauses.append(clause)
            self._watch(clause)
            return clause
        self.backtrack(second)
        lits.sort(key=lambda l: (self.lit_value(l) is False,
                                 -self.levels[abs(l)]))
        clause.lits = lits
        self.clauses.append(clause)
        self._watch(clause)
        if self.lit_value(lits[0]) is None:
            self.enqueue(lits[0], clause)
        return None

    # ------------------------------------------------------------------
    # heuristics

    def _rebuild_order(self) -> None:
        self.order = sorted(
            (v for v in range(1, self.num_vars + 1) if self.values[v] is None),
            key=lambda v: (-self.activity[v], v),
        )
        self._order_pos = 0
        self._order_dirty = False

    def pick_branch_var(self) -> int | None:
        if self._order_dirty:
            self._rebuild_order()
        while self._order_pos < len(self.order):
            v = self.order[self._order_pos]
            if self.values[v] is None:
                return v
            self._order_pos += 1
        self._rebuild_order()
        return self.order[0] if self.order else None

    def reduce_db(self) -> None:
        locked = {id(self.reasons[abs(l)]) for l in self.trail
                  if isinstance(self.reasons[abs(l)], Clause)}
        keep, drop = [], []
        for c in self.learnts:
            if c.lbd <= self.CLAUSE_KEEP_LBD or id(c) in locked:
                keep.append(c)
            else:
                drop.append(c)
        drop.sort(key=lambda c: c.lbd)
        keep.extend(drop[: len(drop) // 2])
        dead = set(map(id, drop[len(drop) // 2:]))
        if not dead:
            return
        self.learnts = keep
        for lit in list(self.watches):
            self.watches[lit] = [c for c in self.watches[lit] if id(c) not in dead]

    # ------------------------------------------------------------------
    # main loop

    def _absorb_external(self, lemma: TheoryLemma) -> Clause | None:
        conflict = self.integrate_external(lemma)
        if self._unsat or conflict is not None:
            return conflict
        return self.propagate()

    def _theory_fixpoint(self) -> Clause | None:
        """Drain external clauses and theory propagations to fixpoint."""
        hooks = self.hooks
        while True:
            lemma = hooks.cb_has_external_clause()
            if lemma is not None:
                conflict = self._absorb_external(lemma)
                if self._unsat:
                    return None
                if conflict is not None:
                    return conflict
                continue
            if not self.theory_propagation:
                return None
            lit = hooks.cb_propagate()
            if lit is None:
                # the drain inside cb_propagate may have parked a conflict
                lemma = hooks.cb_has_external_clause()
                if lemma is None:
                    return None
                conflict = self._absorb_external(lemma)
                if self._unsat:
                    return None
                if conflict is not None:
                    return conflict
                continue
            if self.lit_value(lit) is not None:
                raise EngineError("theory propagated an assigned literal")
            self.enqueue(lit, THEORY_REASON)
            conflict = self.propagate()
            if conflict is not None:
                return conflict

    def _handle_conflict(self, conflict: Clause) -> bool:
        """Learn from a conflict; False means the problem is unsat."""
        self.conflicts += 1
        if self.decision_level == 0:
            self._log_refutation_reasons(conflict)
            return False
        learnt, backjump, lbd = self.analyze(conflict)
        self.proof_log.append(("learnt", tuple(learnt)))
        self.backtrack(backjump)
        if len(learnt) == 1:
            self.enqueue(learnt[0], Clause(learnt, learnt=True, lbd=1))
        else:
            clause = Clause(learnt, learnt=True, lbd=lbd)
            self.learnts.append(clause)
            self._watch(clause)
            self.enqueue(learnt[0], clause)
        self.var_inc /= self.VAR_DECAY
        return True

    def solve(self, budget: Budget | None = None) -> SolveResult:
        budget = budget or Budget()
        if self._unsat:
            return SolveResult("unsat", proof_log=self.proof_log)
        restarts = 0
        conflicts_until_restart = self.RESTART_BASE * luby(1)
        next_reduce = 2000
        while True:
            conflict = self.propagate()
            if conflict is None and self.hooks is not None:
                conflict = self._theory_fixpoint()
            if self._unsat:
                return SolveResult("unsat", proof_log=self.proof_log,
                                   conflicts=self.conflicts, decisions=self.decisions)
            if conflict is not None:
                if not self._handle_conflict(conflict):
                    return SolveResult("unsat", proof_log=self.proof_log,
                                       conflicts=self.conflicts,
                                       decisions=self.decisions)
                conflicts_until_restart -= 1
                if self.conflicts >= next_reduce:
                    self.reduce_db()
                    next_reduce += 1000 + 250 * restarts
                if budget.out_of_conflicts(self.conflicts) or budget.out_of_time():
                    return SolveResult("unknown", conflicts=self.conflicts,
                                       decisions=self.decisions)
                continue
            if conflicts_until_restart <= 0:
                restarts += 1
                conflicts_until_restart = self.RESTART_BASE * luby(restarts + 1)
                self.backtrack(0)
                continue
            if len(self.trail) == self.num_vars:
                if self.hooks is not None:
                    lemmas = self.hooks.cb_final_check()
                    if lemmas:
                        conflict = None
                        for lemma in lemmas:
                            conflict = self.integrate_external(lemma) or conflict
                        if self._unsat:
                            return SolveResult("unsat", proof_log=self.proof_log,
                                               conflicts=self.conflicts,
                                               decisions=self.decisions)
                        if conflict is not None and not self._handle_conflict(conflict):
                            return SolveResult("unsat", proof_log=self.proof_log,
                                               conflicts=self.conflicts,
                                               decisions=self.decisions)
                        if budget.out_of_time():
                            return SolveResult("unknown", conflicts=self.conflicts,
                                               decisions=self.decisions)
                        continue
                return SolveResult("sat", model=list(self.values),
                                   proof_log=self.proof_log,
                                   conflicts=self.conflicts,
                                   decisions=self.decisions)
            if self.decisions % 256 == 0 and budget.out_of_time():
                return SolveResult("unknown", conflicts=self.conflicts,
                                   decisions=self.decisions)
            var = self.pick_branch_var()
            if var is None:
                raise EngineError("no unassigned variable despite partial trail")
            self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self.enqueue(var if self.phase[var] else -var, None)
