"""Lazy propagation on a strong junction tree.

Cliques keep their potentials as unmultiplied sets.  Messages toward the
strong root are computed by eliminating one variable at a time from the sets
that are relevant for the separator, with these savings:

* potentials that cannot influence the separator or any utility are dropped;
* probability marginals that are structurally one are never computed;
* the division of an expected utility by its probability marginal is kept
  pending and often cancels against a later product;
* a utility sum is distributed over the probability factors when that is
  cheaper.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

import networkx as nx
import numpy as np

from .jtree import assign_potentials, build_for, relevant_past
from .model import DECISION, InfluenceDiagram, check_evidence, information_partition
from .potential import (
    PROBABILITY,
    UTILITY,
    OpCounter,
    Potential,
    add_all,
    divide,
    is_structural_unity,
    max_out,
    multiply,
    multiply_all,
    restrict,
    sum_out,
)
from .relevance import classify_barren, d_connected_targets
from .strategy import Strategy, arbitrary_rule, rule_from_record


@dataclass(frozen=True, eq=False)
class Term:
    """A utility potential divided by zero or more pending probability divisors."""

    numerator: Potential
    divisors: tuple = ()

    @property
    def domain(self) -> frozenset:
        return self.numerator.domain.union(*(d.domain for d in self.divisors))

    def resolve(self, ctr: OpCounter) -> Potential:
        out = self.numerator
        for d in self.divisors:
            out = divide(out, d, ctr)
        return out


@dataclass(frozen=True)
class Message:
    phi: tuple = ()
    psi: tuple = ()

    @property
    def empty(self) -> bool:
        return not self.phi and not self.psi


@dataclass(frozen=True)
class _Shape:
    """Structure of a potential, as the domain-graph helpers see it."""

    kind: str
    variables: tuple
    head: frozenset = frozenset()
    tainted: bool = False
    unity: bool = False

    @property
    def tail(self) -> frozenset:
        return frozenset(self.variables) - self.head

    @property
    def domain(self) -> frozenset:
        return frozenset(self.variables)


def _utility_shape(domain: Iterable[int]) -> _Shape:
    return _Shape(UTILITY, tuple(sorted(domain)))


def _has(pots: Iterable[Potential], p: Potential) -> bool:
    return any(q is p for q in pots)


def _cells(domain: Iterable[int], cards: Mapping[int, int]) -> int:
    return int(np.prod([cards[v] for v in domain], dtype=np.int64))


# ---------------------------------------------------------------------------
# Relevance


def relevant_potentials(
    phi: Sequence[Potential], psi: Sequence[Term], separator: Iterable[int]
) -> tuple:
    """Drop potentials that cannot influence ``separator`` or any utility.

    A probability potential survives if some variable of its domain is
    d-connected to the separator or to a utility; afterwards potentials whose
    heads are all barren are removed.  Utilities, and probability potentials
    still awaited as divisors, are always kept.
    """
    separator = set(separator)
    referenced = [d for t in psi for d in t.divisors]
    shapes = list(phi) + [_utility_shape(t.domain) for t in psi]
    connected = d_connected_targets(shapes, separator, utility_targets=True)
    keep = [
        p
        for p in phi
        if _has(referenced, p) or (p.domain & connected)
    ]
    barren, _ = classify_barren(keep, shapes[len(phi):], required=separator)
    keep = [
        p
        for p in keep
        if _has(referenced, p) or p.tainted or not p.head or not p.head <= barren
    ]
    return keep, list(psi)


# ---------------------------------------------------------------------------
# Internal elimination order


def _is_unity_shape(shapes: Sequence, var: int) -> bool:
    live = [s for s in shapes if not s.unity]
    if not live or any(s.kind != PROBABILITY or s.tainted for s in live):
        return False
    return frozenset().union(*(s.head for s in live)) == {var}


def _fill(g: nx.Graph, v) -> int:
    if v not in g:
        return 0
    nbrs = list(g.adj[v])
    return sum(1 for a, b in combinations(nbrs, 2) if not g.has_edge(a, b))


def _eliminate_shapes(phis: list, utils: list, y: int, unity_rule: bool) -> tuple:
    phi_y = [s for s in phis if y in s.domain]
    util_y = [s for s in utils if y in s.domain]
    phis = [s for s in phis if y not in s.domain]
    utils = [s for s in utils if y not in s.domain]
    if phi_y and not (unity_rule and _is_unity_shape(phi_y, y)):
        dom = frozenset().union(*(s.domain for s in phi_y)) - {y}
        head = frozenset().union(*(s.head for s in phi_y)) - {y}
        tainted = any(s.tainted for s in phi_y)
        phis.append(_Shape(PROBABILITY, tuple(sorted(dom)), head, tainted))
    if util_y:
        dom = frozenset().union(*(s.domain for s in phi_y + util_y)) - {y}
        utils.append(_utility_shape(dom))
    return phis, utils


def _select(
    remaining: set,
    phis: list,
    utils: list,
    ranks: Mapping[int, int],
    decisions: set,
    cards: Mapping[int, int],
    unity_rule: bool,
) -> int:
    top = max(ranks[v] for v in remaining)
    legal = sorted(v for v in remaining if ranks[v] == top)

    def barren_now(ph, v):
        return v not in decisions and _is_unity_shape(
            [s for s in ph if v in s.domain], v
        )

    pool = [v for v in legal if barren_now(phis, v)]
    if pool:
        better = []
        for y in legal:
            if y in pool:
                continue
            in_util = [s for s in utils if y in s.domain]
            if not in_util:
                continue
            ph2, ut2 = _eliminate_shapes(list(phis), list(utils), y, unity_rule)
            new = ut2[-1]
            if _cells(new.domain, cards) >= max(_cells(s.domain, cards) for s in in_util):
                continue
            if all(barren_now(ph2, x) for x in pool):
                better.append(y)
        pool = better or pool
    else:
        pool = legal
    g = nx.Graph()
    for s in list(phis) + list(utils):
        g.add_nodes_from(s.variables)
        g.add_edges_from(combinations(s.variables, 2))
    return min(pool, key=lambda v: (_fill(g, v), v))


def _shapes(phi: Sequence[Potential], psi: Sequence[Term]) -> tuple:
    phis = [_Shape(PROBABILITY, p.variables, p.head, p.tainted, p.unity) for p in phi]
    utils = [_utility_shape(t.domain) for t in psi]
    return phis, utils


def _card_map(pots: Iterable[Potential]) -> dict:
    cards = {}
    for p in pots:
        cards.update(zip(p.variables, p.cards))
    return cards


def choose_internal_order(
    variables: Iterable[int],
    phi: Sequence[Potential],
    psi: Sequence,
    ranks: Mapping[int, int],
    decisions: Iterable[int] = (),
    *,
    unity_rule: bool = True,
) -> list:
    """Order in which to eliminate ``variables`` from the given potential sets.

    Only variables without a later-ranked variable left are eligible.  Among
    those, variables whose probability marginal is structurally one go
    first, unless eliminating some other variable shrinks a utility table
    without spoiling that property.  Remaining ties go to minimum fill-in on
    the live domain graph, then to the lowest id.  ``psi`` may hold terms or
    plain utility potentials.
    """
    psi = [t if isinstance(t, Term) else Term(t) for t in psi]
    cards = _card_map(list(phi) + [t.numerator for t in psi] + [d for t in psi for d in t.divisors])
    phis, utils = _shapes(phi, psi)
    remaining = set(variables)
    decisions = set(decisions)
    order = []
    while remaining:
        y = _select(remaining, phis, utils, ranks, decisions, cards, unity_rule)
        phis, utils = _eliminate_shapes(phis, utils, y, unity_rule)
        remaining.discard(y)
        order.append(y)
    return order


# ---------------------------------------------------------------------------
# Elimination of one variable


@dataclass
class EliminationOutcome:
    phi: list
    psi: list
    record: object = None
    unity_fired: Optional[bool] = None
    phi_table: Optional[np.ndarray] = None


class _ProductCache:
    """Products of subsets of the probability factors of one elimination."""

    def __init__(self, store=None):
        self.store = dict(store or {})

    def product(self, pots: Sequence[Potential], ctr: OpCounter) -> Optional[Potential]:
        if not pots:
            return None
        key = frozenset(map(id, pots))
        if key not in self.store:
            self.store[key] = multiply_all(list(pots), ctr)
        return self.store[key]


def _cheapest(*plans, deferred=None):
    """Run each plan on scratch state and keep the cheapest (first on ties).

    ``deferred`` estimates work a plan's result still implies later on.
    """
    best = None
    for plan in plans:
        ctr = OpCounter()
        result = plan(ctr)
        cost = ctr.total + (deferred(result) if deferred else 0)
        if best is None or cost < best[0]:
            best = (cost, ctr, result)
    return best[1:]


def _deferred_cost(terms: Sequence[Term]) -> int:
    """Lower bound on the work separate terms still need to be combined.

    Terms that keep different pending divisors cannot be added until those
    divisions are carried out (or the terms reach the root).
    """
    groups = {_key(t.divisors) for t in terms}
    if len(groups) < 2:
        return 0
    cost = sum(t.numerator.size * len(t.divisors) for t in terms)
    return cost + max(t.numerator.size for t in terms) * (len(terms) - 1)


def _split_divisors(term: Term, phi_y: Sequence[Potential], y: int, ctr: OpCounter):
    """Classify a term's divisors into cancellable and outer ones.

    Divisors that contain ``y`` but have no factor to cancel against are
    executed right away.
    """
    cancel, outer, num = [], [], term.numerator
    for d in term.divisors:
        if _has(phi_y, d):
            cancel.append(d)
        elif y in d.domain:
            num = divide(num, d, ctr)
        else:
            outer.append(d)
    return num, cancel, outer


def _key(divs: Sequence[Potential]) -> frozenset:
    return frozenset(map(id, divs))


def _marginalize(p: Potential, y: int, decision: bool, ctr: OpCounter):
    if decision:
        return max_out(p, y, ctr)
    return sum_out(p, y, ctr, unity_rule=False), None


def _combined(phi_y, parts, y, decision, cache, ctr, cancel=True):
    common = set.intersection(*(set(map(id, c)) for _, c, _ in parts)) if cancel else set()
    outer_common = set.intersection(*(set(map(id, o)) for _, _, o in parts))
    nums, outer = [], None
    for num, cancel, out in parts:
        for d in cancel:
            if id(d) not in common:
                num = divide(num, d, ctr)
        kept = []
        for d in out:
            if id(d) in outer_common:
                kept.append(d)
            else:
                num = divide(num, d, ctr)
        if outer is None:
            outer = kept
        nums.append(num)
    total = add_all(nums, ctr)
    factors = [p for p in phi_y if id(p) not in common]
    prob = cache.product(factors, ctr)
    val = multiply(prob, total, ctr) if prob is not None else total
    out, record = _marginalize(val, y, decision, ctr)
    return [Term(out, tuple(outer))], record


def _distributed(phi_y, parts, y, cache, ctr):
    groups, order = {}, []
    for num, cancel, out in parts:
        factors = [p for p in phi_y if not _has(cancel, p)]
        prob = cache.product(factors, ctr)
        val = multiply(prob, num, ctr) if prob is not None else num
        key = _key(out)
        if key not in groups:
            groups[key] = (out, [])
            order.append(key)
        groups[key][1].append(val)
    terms = []
    for key in order:
        out, vals = groups[key]
        if len(vals) == 1:
            terms.append(Term(sum_out(vals[0], y, ctr, unity_rule=False), tuple(out)))
            continue

        def add_then_sum(c, vals=vals):
            return sum_out(add_all(vals, c), y, c, unity_rule=False)

        def sum_then_add(c, vals=vals):
            return add_all([sum_out(v, y, c, unity_rule=False) for v in vals], c)

        sub, res = _cheapest(add_then_sum, sum_then_add)
        ctr.merge(sub)
        terms.append(Term(res, tuple(out)))
    return terms


def _distributed_max(phi_y, parts, y, cache, ctr):
    """Weight each utility term by its own factors, add, then maximize."""
    outer_common = set.intersection(*(set(map(id, o)) for _, _, o in parts))
    vals, outer = [], None
    for num, cancel, out in parts:
        kept = []
        for d in out:
            if id(d) in outer_common:
                kept.append(d)
            else:
                num = divide(num, d, ctr)
        if outer is None:
            outer = kept
        prob = cache.product([p for p in phi_y if not _has(cancel, p)], ctr)
        vals.append(multiply(prob, num, ctr) if prob is not None else num)
    best, record = max_out(add_all(vals, ctr), y, ctr)
    return [Term(best, tuple(outer))], record


def eliminate_variable(
    phi: Sequence[Potential],
    psi: Sequence[Term],
    y: int,
    ctr: OpCounter,
    *,
    decision: bool = False,
    unity_rule: bool = True,
    force_divide: bool = False,
) -> EliminationOutcome:
    """Eliminate ``y`` (summed if chance, maximized if decision).

    The new probability potential is the marginal of the factors holding
    ``y``; the new utility term is the expected (or maximal) utility, which
    keeps that marginal as a pending divisor.
    """
    psi = [t if isinstance(t, Term) else Term(t) for t in psi]
    phi_y = [p for p in phi if y in p.domain]
    psi_y = [t for t in psi if y in t.domain]
    phi_rest = [p for p in phi if y not in p.domain]
    psi_rest = [t for t in psi if y not in t.domain]
    cache = _ProductCache()
    outcome = EliminationOutcome(phi_rest, psi_rest)

    structural = not decision and is_structural_unity(phi_y, y)
    phi_star = None
    if structural and unity_rule:
        outcome.unity_fired = True
    elif decision and phi_y:
        # Everything downstream of the decision is gone, so the product of
        # its probability factors cannot vary with it: any slice will do.
        phi_star = restrict(cache.product(phi_y, ctr), {y: 0})
    elif phi_y:
        prob = cache.product(phi_y, ctr)
        phi_star, _ = _marginalize(prob, y, decision, ctr)
        if structural:
            outcome.unity_fired = False
            outcome.phi_table = phi_star.table
    if phi_star is not None:
        outcome.phi.append(phi_star)
    if not psi_y:
        return outcome

    parts = []
    for t in psi_y:
        parts.append(_split_divisors(t, phi_y, y, ctr))

    def combined(c, cancel=True, store=cache.store):
        return _combined(phi_y, parts, y, decision, _ProductCache(store), c, cancel)

    cancellable = any(cancel for _, cancel, _ in parts)
    if decision:
        plans = [combined]
        if cancellable:
            plans.append(lambda c: combined(c, cancel=False))
        if cancellable or len(parts) > 1:
            plans.append(
                lambda c: _distributed_max(phi_y, parts, y, _ProductCache(cache.store), c)
            )
        sub, (terms, outcome.record) = _cheapest(*plans)
        ctr.merge(sub)
    else:
        plans = [lambda c: combined(c)[0]]
        if cancellable:
            plans.append(lambda c: combined(c, cancel=False)[0])
        if len(parts) > 1 or parts[0][1]:
            plans.append(lambda c: _distributed(phi_y, parts, y, _ProductCache(cache.store), c))
        sub, terms = _cheapest(*plans, deferred=_deferred_cost)
        ctr.merge(sub)

    for t in terms:
        if phi_star is None:
            outcome.psi.append(t)
        elif force_divide:
            ctr.divisions_introduced += t.numerator.size
            outcome.psi.append(Term(divide(t.numerator, phi_star, ctr), t.divisors))
        else:
            ctr.divisions_introduced += t.numerator.size
            outcome.psi.append(Term(t.numerator, t.divisors + (phi_star,)))
    return outcome


def root_value(psi: Sequence[Term], ctr: OpCounter) -> float:
    """Add up scalar terms, dividing each divisor group once."""
    groups, order = {}, []
    for t in psi:
        if t.domain:
            raise RuntimeError("non-scalar utility left at the root")
        key = _key(t.divisors)
        if key not in groups:
            groups[key] = (t.divisors, [])
            order.append(key)
        groups[key][1].append(t.numerator)
    totals = []
    for key in order:
        divs, nums = groups[key]
        s = add_all(nums, ctr)
        for d in divs:
            s = divide(s, d, ctr)
        totals.append(s)
    if not totals:
        return 0.0
    return float(add_all(totals, ctr).table)


def absorb(
    phi: Sequence[Potential],
    psi: Sequence,
    separator: Iterable[int],
    ranks: Mapping[int, int],
    ctr: OpCounter,
    *,
    eliminate: Optional[Iterable[int]] = None,
    decisions: Iterable[int] = (),
    prune: bool = True,
    unity_rule: bool = True,
    force_divide: bool = False,
    records: Optional[dict] = None,
    trace: Optional[list] = None,
) -> Message:
    """Compute the message a clique sends over ``separator``.

    ``phi``/``psi`` are the clique's own potentials plus the messages from
    its children.  ``eliminate`` defaults to every variable outside the
    separator.  Decision rules found on the way go to ``records`` (None for
    a decision that affects nothing); unity checks go to ``trace``.
    """
    separator = set(separator)
    decisions = set(decisions)
    psi = [t if isinstance(t, Term) else Term(t) for t in psi]
    phi = list(phi)
    if prune:
        phi, psi = relevant_potentials(phi, psi, separator)
    live = set().union(*(p.domain for p in phi), *(t.domain for t in psi))
    if eliminate is None:
        eliminate = live - separator
    eliminate = set(eliminate)
    todo = eliminate & live
    if records is not None:
        for d in (eliminate & decisions) - live:
            records[d] = None
    cards = _card_map(list(phi) + [t.numerator for t in psi])
    while todo:
        phis, utils = _shapes(phi, psi)
        y = _select(todo, phis, utils, ranks, decisions, cards, unity_rule)
        todo.discard(y)
        out = eliminate_variable(
            phi,
            psi,
            y,
            ctr,
            decision=y in decisions,
            unity_rule=unity_rule,
            force_divide=force_divide,
        )
        if trace is not None and out.unity_fired is not None:
            trace.append((y, out.unity_fired, out.phi_table))
        if records is not None and y in decisions:
            records[y] = out.record
        phi, psi = out.phi, out.psi
    return Message(tuple(phi), tuple(psi))


# ---------------------------------------------------------------------------
# Collect propagation


@dataclass
class LazyRun:
    """Everything a lazy solve produced, for inspection and testing."""

    strategy: Strategy
    tree: object
    messages: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)


class _Collector:
    def __init__(
        self,
        diagram: InfluenceDiagram,
        evidence: Mapping[int, int],
        ctr: OpCounter,
        prune: bool,
        force_divide: bool,
        unity_rule: bool,
        visit_seed,
    ):
        self.diagram = diagram
        self.evidence = dict(evidence)
        self.ctr = ctr
        self.prune = prune
        self.force_divide = force_divide
        self.unity_rule = unity_rule
        self.rng = None if visit_seed is None else random.Random(visit_seed)
        self.partition = information_partition(diagram)
        self.ranks = self.partition.ranks()
        self.decisions = set(diagram.decisions)
        self.cards = dict(enumerate(diagram.cards))
        self.tree = build_for(diagram, self.partition)
        binding = assign_potentials(diagram, self.tree)
        self.phi = [[restrict(p, self.evidence) for p in ps] for ps in binding.probability]
        self.psi = [[Term(restrict(u, self.evidence)) for u in us] for us in binding.utility]
        self.records = {}
        self.messages = {}
        self.trace = []

    def children(self, i):
        kids = self.tree.children(i)
        if self.rng is not None:
            self.rng.shuffle(kids)
        return kids

    def collect(self, i: int) -> Message:
        msgs = [self.collect(c) for c in self.children(i)]
        msg = self.absorb(i, msgs)
        self.messages[i] = msg
        return msg

    def absorb(self, i: int, msgs: Sequence[Message]) -> Message:
        phi = list(self.phi[i])
        psi = list(self.psi[i])
        for m in msgs:
            phi.extend(m.phi)
            psi.extend(m.psi)
        return absorb(
            phi,
            psi,
            self.tree.separators[i] - self.evidence.keys(),
            self.ranks,
            self.ctr,
            eliminate=self.tree.eliminated[i] - self.evidence.keys(),
            decisions=self.decisions,
            prune=self.prune,
            unity_rule=self.unity_rule,
            force_divide=self.force_divide,
            records=self.records,
            trace=self.trace,
        )

    def run(self) -> LazyRun:
        root = self.collect(self.tree.root)
        meu = root_value(root.psi, self.ctr)
        rules = {}
        for d in self.diagram.decision_order:
            vd = tuple(v for v in relevant_past(self.tree, d, self.ranks) if v not in self.evidence)
            cards = tuple(self.cards[v] for v in vd)
            rec = self.records.get(d)
            rules[d] = arbitrary_rule(d, vd, cards) if rec is None else rule_from_record(rec, vd, cards)
        strategy = Strategy(rules, meu, self.ctr)
        return LazyRun(strategy, self.tree, self.messages, self.trace)


def run_lazy(
    diagram: InfluenceDiagram,
    evidence: Optional[Mapping] = None,
    ctr: Optional[OpCounter] = None,
    *,
    prune: bool = True,
    force_divide: bool = False,
    unity_rule: bool = True,
    visit_seed=None,
) -> LazyRun:
    """Solve ``diagram`` by lazy propagation and keep the intermediate results."""
    evidence = check_evidence(diagram, evidence)
    ctr = OpCounter() if ctr is None else ctr
    return _Collector(
        diagram, evidence, ctr, prune, force_divide, unity_rule, visit_seed
    ).run()


def solve_lazy(
    diagram: InfluenceDiagram,
    evidence: Optional[Mapping] = None,
    ctr: Optional[OpCounter] = None,
    **options,
) -> Strategy:
    return run_lazy(diagram, evidence, ctr, **options).strategy
