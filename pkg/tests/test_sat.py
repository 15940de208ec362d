import random

import pytest

from conftest import brute_force_sat
from qfuf.euf import TheoryLemma
from qfuf.sat import Budget, Clause, EngineError, SatSolver, luby


def solve(num_vars, clauses, **kw):
    return SatSolver(num_vars, clauses, **kw).solve(Budget())


def random_cnf(rng, max_vars=20, max_clauses=40):
    n = rng.randint(1, max_vars)
    clauses = []
    for _ in range(rng.randint(1, max_clauses)):
        width = rng.randint(1, min(4, n))
        vars_ = rng.sample(range(1, n + 1), width)
        clauses.append([v if rng.random() < 0.5 else -v for v in vars_])
    return n, clauses


class TestBasics:
    def test_contradictory_units(self):
        assert solve(1, [[1], [-1]]).verdict == "unsat"

    def test_direct_contradiction_has_proof_log(self):
        result = solve(2, [[1, 2], [-1, -2], [1], [2]])
        assert result.verdict == "unsat"

    def test_simple_sat_model(self):
        result = solve(2, [[1, 2], [-1]])
        assert result.verdict == "sat"
        assert result.model[2] is True and result.model[1] is False

    def test_empty_problem(self):
        assert solve(0, []).verdict == "sat"

    def test_budget_unknown(self):
        rng = random.Random(5)
        # an unsat pigeonhole-ish instance with a 1-conflict budget
        clauses = [[1, 2], [1, -2], [-1, 2], [-1, -2]]
        result = SatSolver(2, clauses).solve(Budget(max_conflicts=0))
        # with a zero budget the first conflict already exhausts it
        assert result.verdict in ("unsat", "unknown")

    def test_luby_sequence(self):
        assert [luby(i) for i in range(1, 16)] == \
            [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]


class TestOracle:
    @pytest.mark.parametrize("seed", range(150))
    def test_verdict_matches_brute_force(self, seed):
        rng = random.Random(seed)
        n, clauses = random_cnf(rng, max_vars=12, max_clauses=30)
        expected = "sat" if brute_force_sat(n, clauses) else "unsat"
        assert solve(n, clauses).verdict == expected

    @pytest.mark.parametrize("seed", range(50))
    def test_sat_models_satisfy_all_clauses(self, seed):
        rng = random.Random(1000 + seed)
        n, clauses = random_cnf(rng)
        result = solve(n, clauses)
        if result.verdict == "sat":
            for clause in clauses:
                assert any(
                    result.model[abs(l)] == (l > 0) for l in clause
                )

    @pytest.mark.parametrize("seed", range(30))
    def test_learnt_clauses_entailed(self, seed):
        """Every learnt clause follows from the input clause set."""
        rng = random.Random(2000 + seed)
        n, clauses = random_cnf(rng, max_vars=10, max_clauses=25)
        engine = SatSolver(n, clauses)
        engine.solve(Budget())
        for entry in engine.proof_log:
            if entry[0] != "learnt":
                continue
            learnt = entry[1]
            negation = [[-l] for l in learnt]
            assert not brute_force_sat(n, clauses + negation)

    def test_determinism(self):
        rng = random.Random(3)
        n, clauses = random_cnf(rng)
        first = solve(n, clauses)
        second = solve(n, clauses)
        assert first.verdict == second.verdict
        assert first.model == second.model
        assert first.conflicts == second.conflicts

    def test_seed_changes_tie_breaks_not_verdicts(self):
        rng = random.Random(4)
        for _ in range(20):
            n, clauses = random_cnf(rng, max_vars=10)
            a = solve(n, clauses, seed=1).verdict
            b = solve(n, clauses, seed=99).verdict
            assert a == b


class RejectEqualHooks:
    """Final-check stub rejecting any model where vars 1 and 2 agree."""

    def __init__(self):
        self.values = {}
        self.trail = []

    def on_assign(self, lit, is_decision):
        self.values[abs(lit)] = lit > 0
        self.trail.append((lit, is_decision))

    def on_backtrack(self, level):
        # crude mirror: drop everything after the level-th decision
        decisions = 0
        keep = []
        for lit, is_dec in self.trail:
            if is_dec:
                decisions += 1
                if decisions > level:
                    break
            keep.append((lit, is_dec))
        self.trail = keep
        self.values = {abs(l): l > 0 for l, _ in keep}

    def cb_propagate(self):
        return None

    def cb_reason(self, lit):
        raise AssertionError("no propagations issued")

    def cb_has_external_clause(self):
        return None

    def cb_final_check(self):
        if self.values.get(1) == self.values.get(2):
            lits = [-1, -2] if self.values[1] else [1, 2]
            return [TheoryLemma(lits=lits, premises=[], kind="conflict")]
        return None


class TestHooks:
    def test_final_check_reject_then_resolve(self):
        # [DERIVED] one reject/re-solve round lands on p != q
        hooks = RejectEqualHooks()
        result = SatSolver(2, [[1, 2]], hooks=hooks).solve(Budget())
        assert result.verdict == "sat"
        assert result.model[1] != result.model[2]

    def test_hooks_see_consistent_assignment_stream(self):
        hooks = RejectEqualHooks()
        engine = SatSolver(3, [[1, 2, 3]], hooks=hooks)
        result = engine.solve(Budget())
        assert result.verdict == "sat"
        for var, value in hooks.values.items():
            assert engine.values[var] == value


class TestExternalClauses:
    def test_satisfied_lemma_no_backtrack(self):
        engine = SatSolver(2, [[1], [2]])
        assert engine.propagate() is None
        level_before = engine.decision_level
        engine.integrate_external(TheoryLemma([1, 2], [], "conflict"))
        assert engine.decision_level == level_before

    def test_unit_lemma_on_decision_flips(self):
        # [DERIVED] assertion-level rule on a 2-var instance: the unit
        # lemma {-1} forces a backjump to level 0 and flips var 1
        engine = SatSolver(2, [[1, 2]], )
        engine.trail_lim.append(len(engine.trail))
        engine.enqueue(1, None)
        assert engine.propagate() is None
        engine.integrate_external(TheoryLemma([-1], [], "conflict"))
        assert engine.decision_level == 0
        assert engine.values[1] is False

    def test_lemma_false_at_level_zero_is_unsat(self):
        engine = SatSolver(1, [[1]])
        assert engine.propagate() is None
        engine.integrate_external(TheoryLemma([-1], [], "conflict"))
        assert engine._unsat

    def test_duplicate_vars_rejected(self):
        engine = SatSolver(2, [])
        with pytest.raises(EngineError):
            engine.integrate_external(TheoryLemma([1, 1], [], "conflict"))
        with pytest.raises(EngineError):
            SatSolver(1, [[1, -1, 1]])
