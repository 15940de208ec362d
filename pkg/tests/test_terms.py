import random

import pytest

from qfuf.terms import Kind, SortError, TermBank, subterms


def test_eq_hash_consing_identity(bank):
    s = bank.declare_sort("S")
    a = bank.const(bank.declare_fun("a", (), s))
    first = bank.eq(a, a)
    second = bank.eq(a, a)
    assert first is second
    assert first.id == second.id


def test_eq_symmetry_normalization(bank):
    s = bank.declare_sort("S")
    a = bank.const(bank.declare_fun("a", (), s))
    b = bank.const(bank.declare_fun("b", (), s))
    assert bank.eq(a, b) is bank.eq(b, a)


def test_eq_sort_mismatch(bank):
    s = bank.declare_sort("S")
    a = bank.const(bank.declare_fun("a", (), s))
    p = bank.const(bank.declare_fun("p", (), bank.bool_sort))
    with pytest.raises(SortError):
        bank.eq(a, p)


def test_sort_of_builtins(bank):
    s = bank.declare_sort("S")
    t = bank.declare_sort("T")
    f = bank.declare_fun("f", (s,), t)
    a = bank.const(bank.declare_fun("a", (), s))
    assert bank.true_term.sort is bank.bool_sort
    assert bank.app(f, [a]).sort is t
    c = bank.const(bank.declare_fun("p", (), bank.bool_sort))
    ite = bank.ite(c, a, a)
    assert ite.sort is s


def test_app_signature_checked(bank):
    s = bank.declare_sort("S")
    t = bank.declare_sort("T")
    f = bank.declare_fun("f", (s,), t)
    b = bank.const(bank.declare_fun("b", (), t))
    with pytest.raises(SortError):
        bank.app(f, [b])
    with pytest.raises(SortError):
        bank.app(f, [])


def test_redeclaration_rules(bank):
    s = bank.declare_sort("S")
    bank.declare_fun("f", (s,), s)
    assert bank.declare_fun("f", (s,), s).name == "f"
    with pytest.raises(SortError):
        bank.declare_fun("f", (s, s), s)


def test_subterms_constant(bank):
    s = bank.declare_sort("S")
    a = bank.const(bank.declare_fun("a", (), s))
    assert list(subterms(a)) == [a]


def test_subterms_children_before_parents(bank):
    s = bank.declare_sort("S")
    a = bank.const(bank.declare_fun("a", (), s))
    b = bank.const(bank.declare_fun("b", (), s))
    f = bank.declare_fun("f", (s, s), s)
    fab = bank.app(f, [a, b])
    seq = list(subterms(fab))
    assert set(seq) == {a, b, fab}
    assert seq.index(a) < seq.index(fab)
    assert seq.index(b) < seq.index(fab)


def test_subterms_shares_dag_nodes(bank):
    s = bank.declare_sort("S")
    a = bank.const(bank.declare_fun("a", (), s))
    f = bank.declare_fun("f", (s,), s)
    fa = bank.app(f, [a])
    eq = bank.eq(fa, fa)
    assert len(list(subterms(eq))) == 3  # a, f(a), (= (f a) (f a))


def test_children_ids_strictly_smaller(bank):
    s = bank.declare_sort("S")
    a = bank.const(bank.declare_fun("a", (), s))
    b = bank.const(bank.declare_fun("b", (), s))
    f = bank.declare_fun("f", (s, s), s)
    rng = random.Random(1)
    pool = [a, b]
    for _ in range(50):
        t = bank.app(f, [rng.choice(pool), rng.choice(pool)])
        pool.append(t)
    for t in pool:
        for child in t.args:
            assert child.id < t.id


def test_node_count_matches_shadow_map(bank):
    """Interning stores exactly one node per structurally distinct term."""
    s = bank.declare_sort("S")
    f = bank.declare_fun("f", (s, s), s)
    consts = [bank.const(bank.declare_fun(f"c{i}", (), s)) for i in range(4)]
    rng = random.Random(7)
    shadow: set[tuple] = set()
    pool = list(consts)

    def shape(t):
        return (t.kind, t.symbol.name if t.symbol else None,
                tuple(a.id for a in t.args))

    before = len(bank)
    for t in pool:
        shadow.add(shape(t))
    for _ in range(300):
        t = bank.app(f, [rng.choice(pool), rng.choice(pool)])
        pool.append(t)
        shadow.add(shape(t))
    assert len(bank) - before + len(consts) == len(shadow)


def test_interning_deterministic():
    def build(bank: TermBank):
        s = bank.declare_sort("S")
        a = bank.const(bank.declare_fun("a", (), s))
        b = bank.const(bank.declare_fun("b", (), s))
        f = bank.declare_fun("f", (s,), s)
        ids = [
            bank.eq(a, b).id,
            bank.app(f, [a]).id,
            bank.eq(bank.app(f, [b]), a).id,
        ]
        return ids

    assert build(TermBank()) == build(TermBank())


def test_connective_children_must_be_bool(bank):
    s = bank.declare_sort("S")
    a = bank.const(bank.declare_fun("a", (), s))
    with pytest.raises(SortError):
        bank.and_([a])
    with pytest.raises(SortError):
        bank.not_(a)
    with pytest.raises(SortError):
        bank.ite(a, a, a)


def test_distinct_needs_uniform_sorts(bank):
    s = bank.declare_sort("S")
    t = bank.declare_sort("T")
    a = bank.const(bank.declare_fun("a", (), s))
    b = bank.const(bank.declare_fun("b", (), t))
    with pytest.raises(SortError):
        bank.distinct([a, b])


def test_ite_branch_sorts_must_agree(bank):
    s = bank.declare_sort("S")
    t = bank.declare_sort("T")
    a = bank.const(bank.declare_fun("a", (), s))
    b = bank.const(bank.declare_fun("b", (), t))
    p = bank.const(bank.declare_fun("p", (), bank.bool_sort))
    with pytest.raises(SortError):
        bank.ite(p, a, b)
