"""Congruence closure with explanations, undo trail and theory hooks.

The EGraph follows the classic flattened-application design: n-ary
applications are curried into binary `apply` nodes over one leaf per
function symbol, congruence is detected through a signature table keyed
by representative pairs, and every merge records an edge in a proof
forest so that derived equalities can be explained in terms of the
originally asserted equations.

Labels attached to merges and disequalities are opaque tags (the SAT
layer uses signed literals, the preprocessor uses terms).  A tag of
`None` marks a background fact and never appears in explanations.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .terms import Kind, Term, TermBank

Tag = Hashable


@dataclass
class Conflict:
    """An inconsistent assertion set: eq_tags ∪ {diseq_tag} is EUF-unsat."""

    eq_tags: list[Tag]
    diseq_tag: Tag


@dataclass
class TheoryLemma:
    """A clause over theory atoms, valid modulo the asserted premises."""

    lits: list[int]
    premises: list[int]
    kind: str


class NotEqualError(Exception):
    """explain() was called on two nodes that are not currently equal."""


class EGraph:
    def __init__(self) -> None:
        self.parent: list[int] = []
        self.size: list[int] = []
        self.node_args: list[tuple[int, int] | None] = []
        self._term_node: dict[int, int] = {}
        self._sym_node: dict[str, int] = {}
        self._apply_cache: dict[tuple[int, int], int] = {}
        self.use: dict[int, list[int]] = {}
        self.sig: dict[tuple[int, int], int] = {}
        # proof forest adjacency: node -> [(neighbor, label)]
        self.forest: dict[int, list[tuple[int, tuple]]] = {}
        # all asserted disequalities: (node_a, node_b, tag)
        self.diseqs: list[tuple[int, int, Tag]] = []
        self._trail: list[tuple] = []
        self._marks: list[tuple[int, int]] = []  # (trail len, diseq len) per level
        self._pending: deque[tuple[int, int, tuple]] = deque()

    # ------------------------------------------------------------------
    # nodes

    @property
    def level(self) -> int:
        return len(self._marks)

    def _new_node(self, args: tuple[int, int] | None = None) -> int:
        n = len(self.parent)
        self.parent.append(n)
        self.size.append(1)
        self.node_args.append(args)
        return n

    def find(self, n: int) -> int:
        parent = self.parent
        while parent[n] != n:
            n = parent[n]
        return n

    def node_of(self, t: Term) -> int:
        return self._term_node[t.id]

    def has_term(self, t: Term) -> bool:
        return t.id in self._term_node

    def add_term(self, t: Term) -> int:
        """Flatten a term into the graph (level 0 only); idempotent."""
        hit = self._term_node.get(t.id)
        if hit is not None:
            return hit
        assert self.level == 0, "terms must be added before any push"
        if t.kind is Kind.APP and t.args:
            sym = t.symbol
            cur = self._sym_node.get(sym.name)
            if cur is None:
                cur = self._new_node()
                self._sym_node[sym.name] = cur
            for a in t.args:
                an = self.add_term(a)
                cur = self._apply(cur, an)
            node = cur
        else:
            # constants and opaque leaves (connectives, ites, bridged Bool terms)
            node = self._new_node()
        self._term_node[t.id] = node
        return node

    def _apply(self, l: int, r: int) -> int:
        hit = self._apply_cache.get((l, r))
        if hit is not None:
            return hit
        n = self._new_node((l, r))
        self._apply_cache[(l, r)] = n
        self.use.setdefault(self.find(l), []).append(n)
        self.use.setdefault(self.find(r), []).append(n)
        key = (self.find(l), self.find(r))
        existing = self.sig.get(key)
        if existing is None:
            self.sig[key] = n
        else:
            self._pending.append((n, existing, ("cong", n, existing)))
            conflict = self._process_pending()
            assert conflict is None, "fresh node cannot join watched classes"
        return n

    # ------------------------------------------------------------------
    # merging

    def merge(self, a: int, b: int, tag: Tag) -> Conflict | None:
        self._pending.append((a, b, ("eq", tag)))
        return self._process_pending()

    def merge_terms(self, s: Term, t: Term, tag: Tag) -> Conflict | None:
        return self.merge(self._term_node[s.id], self._term_node[t.id], tag)

    def _process_pending(self) -> Conflict | None:
        while self._pending:
            a, b, label = self._pending.popleft()
            ra, rb = self.find(a), self.find(b)
            if ra == rb:
                continue
            if self.size[ra] > self.size[rb]:
                ra, rb = rb, ra
            self.forest.setdefault(a, []).append((b, label))
            self.forest.setdefault(b, []).append((a, label))
            self.parent[ra] = rb
            self.size[rb] += self.size[ra]
            self._trail.append(("union", ra, rb, a, b))
            for p in self.use.get(ra, ()):  # re-canonize signatures
                pl, pr = self.node_args[p]
                key = (self.find(pl), self.find(pr))
                existing = self.sig.get(key)
                if existing is None:
                    self.sig[key] = p
                    self._trail.append(("sig", key))
                elif self.find(existing) != self.find(p):
                    self._pending.append((p, existing, ("cong", p, existing)))
            lst = self.use.setdefault(rb, [])
            self._trail.append(("use", rb, len(lst)))
            lst.extend(self.use.get(ra, ()))
            for x, y, dtag in self.diseqs:
                if self.find(x) == self.find(y):
                    self._pending.clear()
                    return Conflict(self.explain(x, y), dtag)
        return None

    def assert_diseq(self, a: int, b: int, tag: Tag) -> Conflict | None:
        if self.find(a) == self.find(b):
            return Conflict(self.explain(a, b), tag)
        self.diseqs.append((a, b, tag))
        return None

    def assert_diseq_terms(self, s: Term, t: Term, tag: Tag) -> Conflict | None:
        return self.assert_diseq(self._term_node[s.id], self._term_node[t.id], tag)

    def same(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)

    def same_terms(self, s: Term, t: Term) -> bool:
        return self.find(self._term_node[s.id]) == self.find(self._term_node[t.id])

    def watched_diseq(self, a: int, b: int) -> Tag | None:
        """Tag of a recorded disequality separating the classes of a and b."""
        ra, rb = self.find(a), self.find(b)
        for x, y, tag in self.diseqs:
            rx, ry = self.find(x), self.find(y)
            if (rx, ry) == (ra, rb) or (rx, ry) == (rb, ra):
                return tag
        return None

    # ------------------------------------------------------------------
    # explanations

    def explain(self, a: int, b: int) -> list[Tag]:
        """Asserted tags whose equations force a ~ b (fresh-closure checkable)."""
        out: list[Tag] = []
        seen_tags: set[Tag] = set()
        seen_pairs: set[tuple[int, int]] = set()
        work = [(a, b)]
        while work:
            x, y = work.pop()
            if x == y:
                continue
            pair = (x, y) if x < y else (y, x)
            if pair in seen_pairs:
                continue
            seen_pairs.add(pair)
            for other, label in self._forest_path(x, y):
                if label[0] == "eq":
                    tag = label[1]
                    if tag is not None and tag not in seen_tags:
                        seen_tags.add(tag)
                        out.append(tag)
                else:
                    _, p, q = label
                    pl, pr = self.node_args[p]
                    ql, qr = self.node_args[q]
                    work.append((pl, ql))
                    work.append((pr, qr))
        return out

    def _forest_path(self, a: int, b: int) -> list[tuple[int, tuple]]:
        """Edges along the unique forest path from a to b."""
        if a == b:
            return []
        prev: dict[int, tuple[int, int, tuple]] = {a: None}
        queue = deque([a])
        while queue:
            u = queue.popleft()
            if u == b:
                break
            for v, label in self.forest.get(u, ()):
                if v not in prev:
                    prev[v] = (u, v, label)
                    queue.append(v)
        if b not in prev:
            raise NotEqualError(f"nodes {a} and {b} are not connected")
        edges = []
        cur = b
        while cur != a:
            u, v, label = prev[cur]
            edges.append((u, label))
            cur = u
        return edges

    def explain_terms(self, s: Term, t: Term) -> list[Tag]:
        return self.explain(self._term_node[s.id], self._term_node[t.id])

    # ------------------------------------------------------------------
    # backtracking

    def push(self) -> int:
        assert not self._pending
        self._marks.append((len(self._trail), len(self.diseqs)))
        return len(self._marks)

    def pop_to(self, level: int) -> None:
        assert 0 <= level <= len(self._marks)
        if level == len(self._marks):
            return
        trail_len, diseq_len = self._marks[level]
        del self._marks[level:]
        del self.diseqs[diseq_len:]
        while len(self._trail) > trail_len:
            rec = self._trail.pop()
            op = rec[0]
            if op == "union":
                _, ra, rb, a, b = rec
                self.parent[ra] = ra
                self.size[rb] -= self.size[ra]
                self.forest[a].pop()
                self.forest[b].pop()
            elif op == "sig":
                del self.sig[rec[1]]
            elif op == "use":
                _, root, old_len = rec
                del self.use[root][old_len:]

    # ------------------------------------------------------------------
    # inspection (model building, oracles)

    def partition(self, terms: Iterable[Term]) -> dict[int, list[Term]]:
        """Group the given terms by equivalence class root."""
        classes: dict[int, list[Term]] = {}
        for t in terms:
            classes.setdefault(self.find(self._term_node[t.id]), []).append(t)
        return classes


def closure_over(
    bank: TermBank,
    terms: Sequence[Term],
    equalities: Iterable[tuple[Term, Term]],
) -> EGraph:
    """Fresh congruence closure of the given equalities over the given terms."""
    g = EGraph()
    for t in terms:
        g.add_term(t)
    for s, t in equalities:
        g.add_term(s)
        g.add_term(t)
        g.merge_terms(s, t, None)
    return g


def entails_equality(
    bank: TermBank,
    terms: Sequence[Term],
    equalities: Sequence[tuple[Term, Term]],
    lhs: Term,
    rhs: Term,
) -> bool:
    g = closure_over(bank, list(terms) + [lhs, rhs], equalities)
    return g.same_terms(lhs, rhs)


class EufTheory:
    """Theory side of the solver's propagator hook contract.

    Assignments stream in through `on_assign` and are applied lazily: the
    queue is drained when the engine asks for propagations or runs the
    final check, so the cost profile matches the chosen drain policy.
    """

    def __init__(self, bank: TermBank, atoms: dict[int, Term]):
        self.bank = bank
        self.egraph = EGraph()
        self.atom_sides: dict[int, tuple[int, int]] = {}
        self.atom_term: dict[int, Term] = dict(atoms)
        for var, term in atoms.items():
            assert term.kind is Kind.EQ
            lhs, rhs = term.args
            self.atom_sides[var] = (
                self.egraph.add_term(lhs),
                self.egraph.add_term(rhs),
            )
        if bank._carrier is not None and bank.bool_true.id in self.egraph._term_node:
            self.egraph.assert_diseq_terms(bank.bool_true, bank.bool_false, None)
        self._scan_order = sorted(self.atom_sides)
        self._queue: list[tuple[int, int]] = []  # (lit, engine level)
        self._qhead = 0
        self._level = 0
        self._value: dict[int, bool] = {}
        self._pending_lemma: TheoryLemma | None = None
        self._halted = False
        # (lit, justification) for lazily explained propagations
        self._prop_just: dict[int, tuple] = {}
        self.lemmas_produced: list[TheoryLemma] = []
        self.final_check_rejections = 0
        self.propagations = 0

    # -- notifications ---------------------------------------------------

    def on_assign(self, lit: int, is_decision: bool) -> None:
        if is_decision:
            self._level += 1
        self._queue.append((lit, self._level))
        self._value[abs(lit)] = lit > 0

    def on_backtrack(self, level: int) -> None:
        while self._queue and self._queue[-1][1] > level:
            lit, _ = self._queue.pop()
            del self._value[abs(lit)]
            self._prop_just.pop(abs(lit), None)
        self._qhead = min(self._qhead, len(self._queue))
        self._level = level
        self.egraph.pop_to(min(self.egraph.level, level))
        self._pending_lemma = None
        self._halted = False

    # -- queue processing --------------------------------------------------

    def _conflict_lemma(self, conflict: Conflict, kind: str) -> TheoryLemma:
        premises = [t for t in conflict.eq_tags if t is not None]
        if conflict.diseq_tag is not None:
            premises.append(conflict.diseq_tag)
        lits = [-p for p in premises]
        return TheoryLemma(lits=lits, premises=premises, kind=kind)

    def _drain(self) -> None:
        if self._halted:
            return
        g = self.egraph
        while self._qhead < len(self._queue):
            lit, lvl = self._queue[self._qhead]
            self._qhead += 1
            while g.level < lvl:
                g.push()
            sides = self.atom_sides.get(abs(lit))
            if sides is None:
                continue
            a, b = sides
            if lit > 0:
                conflict = g.merge(a, b, lit)
            else:
                conflict = g.assert_diseq(a, b, lit)
            if conflict is not None:
                lemma = self._conflict_lemma(conflict, "conflict")
                self._pending_lemma = lemma
                self._halted = True
                return

    # -- hook contract -----------------------------------------------------

    def cb_has_external_clause(self) -> TheoryLemma | None:
        # reports conflicts already uncovered by a drain; does not drain
        # itself, so the drain policy stays with cb_propagate/cb_final_check
        lemma = self._pending_lemma
        self._pending_lemma = None
        return lemma

    def cb_propagate(self) -> int | None:
        self._drain()
        if self._halted:
            return None
        g = self.egraph
        for var in self._scan_order:
            if var in self._value:
                continue
            a, b = self.atom_sides[var]
            if g.same(a, b):
                self._prop_just[var] = ("eq",)
                self.propagations += 1
                return var
            dtag = g.watched_diseq(a, b)
            if dtag is not None:
                self._prop_just[var] = ("diseq", dtag)
                self.propagations += 1
                return -var
        return None

    def cb_reason(self, lit: int) -> TheoryLemma:
        var = abs(lit)
        just = self._prop_just[var]
        a, b = self.atom_sides[var]
        g = self.egraph
        if just[0] == "eq":
            premises = g.explain(a, b)
        else:
            dtag = just[1]
            dx, dy, _ = next(
                d for d in g.diseqs if d[2] == dtag
            )
            if g.same(a, dx):
                premises = g.explain(a, dx) + g.explain(b, dy)
            else:
                premises = g.explain(a, dy) + g.explain(b, dx)
            premises.append(dtag)
        deduped: list[int] = []
        for p in premises:
            if p is not None and p not in deduped:
                deduped.append(p)
        premises = deduped
        lits = [lit] + [-p for p in premises]
        lemma = TheoryLemma(lits=lits, premises=premises, kind="propagation-reason")
        return lemma

    def cb_final_check(self) -> list[TheoryLemma] | None:
        self._drain()
        if self._pending_lemma is not None:
            lemma = self._pending_lemma
            self._pending_lemma = None
            self.final_check_rejections += 1
            return [lemma]
        return None
