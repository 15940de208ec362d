import random

import pytest

from conftest import closure_oracle, random_ground_terms
from qfuf.diamond import gen_eq_diamond
from qfuf.preprocess import (diamond_extract, preprocess, simplify,
                             unit_propagate, PreproStats)
from qfuf.smtlib import parse_script, print_term
from qfuf.terms import Kind, TermBank


def setup_terms(bank):
    s = bank.declare_sort("S")
    consts = {n: bank.const(bank.declare_fun(n, (), s))
              for n in "a b c d w x y z".split()}
    bools = {n: bank.const(bank.declare_fun(n, (), bank.bool_sort))
             for n in "p q r".split()}
    f = bank.declare_fun("f", (s,), s)
    return s, consts, bools, f


class TestSimplify:
    def test_reflexive_equality(self, bank):
        _, c, _, _ = setup_terms(bank)
        assert simplify(bank, bank.eq(c["a"], c["a"])) is bank.true_term

    def test_ite_equal_branches(self, bank):
        _, c, b, _ = setup_terms(bank)
        ite = bank.ite(b["p"], c["a"], c["a"])
        eq = bank.eq(ite, c["b"])
        assert simplify(bank, eq) is bank.eq(c["a"], c["b"])

    def test_ite_constant_condition(self, bank):
        _, c, b, _ = setup_terms(bank)
        t = bank.ite(bank.true_term, c["a"], c["b"])
        assert simplify(bank, bank.eq(t, c["b"])) is bank.eq(c["a"], c["b"])

    def test_and_complementary_pair(self, bank):
        _, _, b, _ = setup_terms(bank)
        t = bank.and_([b["p"], bank.not_(b["p"]), b["q"]])
        assert simplify(bank, t) is bank.false_term

    def test_or_dedup_and_neutral(self, bank):
        _, _, b, _ = setup_terms(bank)
        t = bank.or_([b["p"], bank.false_term, b["p"], b["q"]])
        out = simplify(bank, t)
        assert out.kind is Kind.OR and len(out.args) == 2

    def test_not_involution(self, bank):
        _, _, b, _ = setup_terms(bank)
        assert simplify(bank, bank.not_(bank.not_(b["p"]))) is b["p"]
        assert simplify(bank, bank.not_(bank.true_term)) is bank.false_term

    def test_xor_drops_false_and_cancels_pairs(self, bank):
        _, _, b, _ = setup_terms(bank)
        t = bank.xor([b["p"], bank.false_term, b["q"], b["p"]])
        assert simplify(bank, t) is b["q"]

    def test_xor_true_flips(self, bank):
        _, _, b, _ = setup_terms(bank)
        t = bank.xor([b["p"], bank.true_term])
        assert simplify(bank, t) is bank.not_(b["p"])

    def test_implies_short_circuit(self, bank):
        _, _, b, _ = setup_terms(bank)
        assert simplify(bank, bank.implies([bank.false_term, b["p"]])) \
            is bank.true_term
        assert simplify(bank, bank.implies([b["p"], bank.true_term])) \
            is bank.true_term
        assert simplify(bank, bank.implies([bank.true_term, b["p"]])) is b["p"]

    def test_distinct_duplicate_child(self, bank):
        _, c, _, _ = setup_terms(bank)
        t = bank.distinct([c["a"], c["b"], c["a"]])
        assert simplify(bank, t) is bank.false_term

    def test_distinct_bool_three(self, bank):
        _, _, b, _ = setup_terms(bank)
        t = bank.distinct([b["p"], b["q"], b["r"]])
        assert simplify(bank, t) is bank.false_term

    def test_eq_bool_constant(self, bank):
        _, _, b, _ = setup_terms(bank)
        assert simplify(bank, bank.eq(b["p"], bank.true_term)) is b["p"]
        assert simplify(bank, bank.eq(b["p"], bank.false_term)) \
            is bank.not_(b["p"])

    @pytest.mark.parametrize("seed", range(20))
    def test_idempotent(self, seed):
        from qfuf.fuzz import FuzzSpec, generate_script

        text = generate_script(FuzzSpec(num_asserts=3), seed)
        script = parse_script(text)
        bank = script.bank
        for a in script.assertions():
            once = simplify(bank, a)
            assert simplify(bank, once) is once


class TestUnitPropagate:
    def run(self, bank, assertions):
        stats = PreproStats()
        out, lemma, false = unit_propagate(
            bank, [(a, i) for i, a in enumerate(assertions)], stats
        )
        return [t for t, _ in out], lemma, false

    def test_unit_resolution(self, bank):
        _, _, b, _ = setup_terms(bank)
        out, _, false = self.run(
            bank, [b["p"], bank.or_([bank.not_(b["p"]), b["q"]])]
        )
        assert not false
        assert out == [b["p"], b["q"]]

    def test_contradicting_units(self, bank):
        _, c, _, _ = setup_terms(bank)
        eq = bank.eq(c["a"], c["b"])
        out, _, false = self.run(bank, [eq, bank.not_(eq)])
        assert false
        assert out == [bank.false_term]

    def test_xor_substitution(self, bank):
        # [DERIVED] substitute p=false into the parity and re-simplify
        _, _, b, _ = setup_terms(bank)
        out, _, false = self.run(
            bank, [bank.not_(b["p"]), bank.xor([b["p"], b["q"]])]
        )
        assert not false
        assert out == [bank.not_(b["p"]), b["q"]]

    def test_transitive_unit_conflict_produces_lemma(self, bank):
        _, c, _, _ = setup_terms(bank)
        eqs = [bank.eq(c["a"], c["b"]), bank.eq(c["b"], c["c"]),
               bank.not_(bank.eq(c["a"], c["c"]))]
        out, lemma, false = self.run(bank, eqs)
        assert false and out == [bank.false_term]
        assert lemma is not None
        clause_ids = {(t.id, pol) for t, pol in lemma.clause}
        assert (bank.eq(c["a"], c["c"]).id, True) in clause_ids

    def test_never_increases_atom_count(self, bank):
        from conftest import collect_atoms

        _, c, b, f = setup_terms(bank)
        assertions = [
            b["p"],
            bank.or_([bank.not_(b["p"]), bank.eq(c["a"], c["b"])]),
            bank.implies([bank.eq(c["a"], c["b"]), b["q"]]),
        ]
        before = set()
        for a in assertions:
            before.update(t.id for t in collect_atoms(a))
        out, _, _ = self.run(bank, assertions)
        after = set()
        for a in out:
            if a.kind not in (Kind.TRUE, Kind.FALSE):
                after.update(t.id for t in collect_atoms(a))
        assert after <= before


class TestDiamondExtract:
    def test_paper_shape(self, bank):
        _, c, _, _ = setup_terms(bank)
        x, y, z, w = c["x"], c["y"], c["z"], c["w"]
        assertion = bank.or_([
            bank.and_([bank.eq(x, y), bank.eq(y, z)]),
            bank.and_([bank.eq(x, w), bank.eq(w, z)]),
        ])
        units = diamond_extract(bank, assertion)
        assert units == [bank.eq(x, z)]

    def test_identical_branches(self, bank):
        _, c, _, _ = setup_terms(bank)
        eq = bank.eq(c["a"], c["b"])
        assertion = bank.or_([eq, eq])
        assert diamond_extract(bank, assertion) == [eq]

    def test_disjoint_branches(self, bank):
        # [DERIVED] per-branch closures {a,b} and {c,d} share no pair
        _, c, _, _ = setup_terms(bank)
        assertion = bank.or_([
            bank.and_([bank.eq(c["a"], c["b"])]),
            bank.and_([bank.eq(c["c"], c["d"])]),
        ])
        assert diamond_extract(bank, assertion) == []

    def test_congruence_contributes(self, bank):
        # branches with f(a)=b style equalities still close over f
        _, c, _, f = setup_terms(bank)
        a, b_, z = c["a"], c["b"], c["z"]
        fa = bank.app(f, [a])
        assertion = bank.or_([
            bank.and_([bank.eq(fa, b_), bank.eq(fa, z)]),
            bank.and_([bank.eq(b_, c["w"]), bank.eq(z, c["w"])]),
        ])
        units = diamond_extract(bank, assertion)
        assert bank.eq(b_, z) in units

    def test_non_diamond_shapes_skipped(self, bank):
        _, c, b, _ = setup_terms(bank)
        mixed = bank.or_([bank.eq(c["a"], c["b"]), b["p"]])
        assert diamond_extract(bank, mixed) == []

    @pytest.mark.parametrize("seed", range(30))
    def test_units_entailed_by_every_branch(self, seed):
        """Entailment oracle: each unit is equated by every branch closure."""
        rng = random.Random(seed)
        bank = TermBank()
        pool = random_ground_terms(bank, rng)
        branches = []
        for _ in range(rng.randint(2, 3)):
            eqs = [bank.eq(*rng.sample(pool, 2)) for _ in range(rng.randint(1, 4))]
            branches.append(bank.and_(eqs) if len(eqs) > 1 else eqs[0])
        assertion = bank.or_(branches)
        units = diamond_extract(bank, assertion)
        from qfuf.terms import subterms
        terms = [t for t in subterms(assertion) if not t.is_bool]
        for unit in units:
            for branch in branches:
                eqs = [branch] if branch.kind is Kind.EQ else list(branch.args)
                partition = closure_oracle(
                    terms, [(e.args[0], e.args[1]) for e in eqs]
                )
                cls = next(g for g in partition if unit.args[0].id in g)
                assert unit.args[1].id in cls


class TestPreprocessPipeline:
    def test_disabled_is_identity(self, bank):
        _, c, b, _ = setup_terms(bank)
        assertions = [bank.eq(c["a"], c["a"]), b["p"]]
        res = preprocess(bank, assertions, enabled=False)
        assert res.assertions == assertions
        assert res.added_units == []

    def test_trivial_true_assertions_dropped(self, bank):
        res = preprocess(bank, [bank.true_term, bank.true_term])
        assert res.assertions in ([], [bank.true_term])
        assert res.stats.simplifications >= 0

    def test_eq_diamond3_trace(self):
        # [DERIVED] the pipeline adds the three chain units, then the final
        # propagation pass collapses everything to false via the closure
        script = parse_script(gen_eq_diamond(3))
        bank = script.bank
        res = preprocess(bank, script.assertions())
        unit_texts = sorted(print_term(u) for u in res.added_units)
        assert unit_texts == ["(= x1 x2)", "(= x2 x3)", "(= x3 x4)"]
        assert res.assertions == [bank.false_term]
        assert res.conflict_lemma is not None
        assert res.stats.diamond_units == 3

    @pytest.mark.parametrize("seed", range(40))
    def test_equivalence_differential(self, seed):
        """Preprocessing must never change the verdict."""
        from qfuf.fuzz import FuzzSpec, generate_script
        from qfuf.solver import SolveOptions, solve_script

        text = generate_script(FuzzSpec(num_asserts=3, max_depth=2), seed)
        on = solve_script(parse_script(text), SolveOptions()).verdict
        off = solve_script(parse_script(text),
                           SolveOptions(preprocessing=False)).verdict
        assert on == off
