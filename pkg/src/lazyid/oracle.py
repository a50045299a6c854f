"""Reference solvers used to check the propagation engines.

``brute_force_solve`` works on the full joint table and needs no junction
tree; ``bucket_eliminate`` runs plain variable elimination with immediate
division; ``evaluate_strategy`` scores any strategy exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping, Optional, Sequence

import numpy as np

from .jtree import build_for, relevant_past
from .model import DECISION, InfluenceDiagram, ModelError, check_evidence, information_partition
from .potential import (
    TIE_RTOL,
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
from .strategy import DecisionRule, Strategy, arbitrary_rule, rule_from_record

DEFAULT_CAP = 10**7


class OracleCapExceeded(RuntimeError):
    """The problem is too large for exhaustive evaluation."""


class ProjectionError(AssertionError):
    """An optimal full-past rule depends on variables outside the relevant past."""


@dataclass(frozen=True, eq=False)
class FullPastRule:
    """Optimal choices indexed by the whole observed past (``variables`` in axis order)."""

    decision: int
    variables: tuple
    table: np.ndarray
    values: np.ndarray  # utility mass per (past..., decision state)
    reach: np.ndarray  # probability mass of each past configuration


class _Joint:
    """Dense tables over all non-evidence variables in temporal order."""

    def __init__(self, diagram: InfluenceDiagram, evidence: Mapping[int, int], cap: int):
        ranks = information_partition(diagram).ranks()
        self.axes = tuple(
            sorted((v for v in range(diagram.n_variables) if v not in evidence),
                   key=lambda v: (ranks[v], v))
        )
        self.shape = tuple(diagram.cards[v] for v in self.axes)
        cells = int(np.prod(self.shape, dtype=np.int64))
        if cells > cap:
            raise OracleCapExceeded(f"{cells} joint configurations exceed the cap of {cap}")
        self.ranks = ranks
        self.prob = np.ones(self.shape)
        for p in diagram.cpts:
            self.prob = self.prob * self.lift(restrict(p, evidence))
        self.util = np.zeros(self.shape)
        for u in diagram.utilities:
            self.util = self.util + self.lift(restrict(u, evidence))

    def lift(self, p: Potential) -> np.ndarray:
        """Broadcast a potential (or an array over sorted variables) onto the axes."""
        return self.lift_table(p.variables, p.values())

    def lift_table(self, variables: Sequence[int], table: np.ndarray) -> np.ndarray:
        pos = [self.axes.index(v) for v in variables]
        perm = np.argsort(pos)
        shape = [1] * len(self.axes)
        for v in variables:
            shape[self.axes.index(v)] = self.shape[self.axes.index(v)]
        return np.transpose(table, perm).reshape(shape)


def full_past_rules(
    diagram: InfluenceDiagram, evidence: Optional[Mapping] = None, cap: int = DEFAULT_CAP
) -> tuple:
    """Backward induction over the joint table; returns ``(meu, rules)``.

    Maximizing every decision at every configuration of its full past is the
    same as searching all combinations of full-past rules, and ties go to
    the lowest state.
    """
    evidence = check_evidence(diagram, evidence)
    joint = _Joint(diagram, evidence, cap)
    value = joint.prob * joint.util
    reach = joint.prob
    rules = {}
    for j in reversed(range(len(joint.axes))):
        v = joint.axes[j]
        if diagram.variables[v].kind == DECISION:
            rules[v] = FullPastRule(
                v, joint.axes[:j], value.argmax(axis=j), value, reach.take(0, axis=j)
            )
            value = value.max(axis=j)
            reach = reach.take(0, axis=j)
        else:
            value = value.sum(axis=j)
            reach = reach.sum(axis=j)
    total = float(reach)
    if total <= 0:
        raise ModelError("the evidence has probability zero")
    ordered = {d: rules[d] for d in diagram.decision_order}
    return float(value) / total, ordered


def project_rule(rule: FullPastRule, variables: Sequence[int], cards: Sequence[int]) -> DecisionRule:
    """Express a full-past rule on the subset ``variables`` of its past.

    For every configuration of ``variables`` the chosen state must be optimal
    at every reachable past configuration consistent with it.
    """
    variables, cards = tuple(variables), tuple(cards)
    j = len(rule.variables)
    values = np.moveaxis(rule.values, j, -1)
    best = values.max(axis=-1, keepdims=True)
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    optimal = values >= best - 1e-9 * scale
    reachable = rule.reach > 0
    keep = [rule.variables.index(v) for v in variables]
    drop = tuple(i for i in range(j) if i not in keep)
    # A state is admissible for a projected configuration if it is optimal
    # wherever that configuration is reachable.
    admissible = np.where(reachable[..., None], optimal, True)
    admissible = admissible.all(axis=drop) if drop else admissible
    any_reach = reachable.any(axis=drop) if drop else reachable
    # Remaining axes are the kept ones in past order; reorder to ``variables``.
    kept_sorted = sorted(keep)
    perm = [kept_sorted.index(i) for i in keep]
    admissible = np.transpose(admissible, perm + [len(keep)])
    any_reach = np.transpose(any_reach, perm)
    if not admissible.any(axis=-1).all():
        raise ProjectionError(
            f"optimal choice for decision {rule.decision} depends on variables"
            f" outside {list(variables)}"
        )
    table = admissible.argmax(axis=-1)
    ties = admissible.sum(axis=-1) > 1
    table = np.where(any_reach, table, 0).reshape(cards)
    return DecisionRule(rule.decision, variables, cards, table, ties.reshape(cards))


def _rule_domains(diagram: InfluenceDiagram, evidence: Mapping[int, int]) -> dict:
    partition = information_partition(diagram)
    ranks = partition.ranks()
    tree = build_for(diagram, partition)
    out = {}
    for d in diagram.decision_order:
        vd = tuple(v for v in relevant_past(tree, d, ranks) if v not in evidence)
        out[d] = (vd, tuple(diagram.cards[v] for v in vd))
    return out


def brute_force_solve(
    diagram: InfluenceDiagram, evidence: Optional[Mapping] = None, cap: int = DEFAULT_CAP
) -> Strategy:
    """Exhaustive solve on the joint table; rules are projected onto the relevant past."""
    evidence = check_evidence(diagram, evidence)
    meu, full = full_past_rules(diagram, evidence, cap)
    domains = _rule_domains(diagram, evidence)
    rules = {d: project_rule(r, *domains[d]) for d, r in full.items()}
    return Strategy(rules, meu, OpCounter(), extras={"full_past": full})


def evaluate_strategy(
    diagram: InfluenceDiagram,
    strategy,
    evidence: Optional[Mapping] = None,
    cap: int = DEFAULT_CAP,
) -> float:
    """Expected utility of following ``strategy`` (a Strategy or a dict of rules)."""
    evidence = check_evidence(diagram, evidence)
    joint = _Joint(diagram, evidence, cap)
    rules = strategy.rules if isinstance(strategy, Strategy) else strategy
    weight = joint.prob
    for d, rule in rules.items():
        card = diagram.cards[d]
        choice = np.asarray(rule.table)[..., None] == np.arange(card)
        weight = weight * joint.lift_table(rule.variables + (d,), choice.astype(float))
    mass = weight.sum()
    if mass <= 0:
        raise ModelError("the evidence has probability zero")
    return float((weight * joint.util).sum() / mass)


def enumerate_strategies(
    diagram: InfluenceDiagram,
    evidence: Optional[Mapping] = None,
    limit: int = 100_000,
) -> Strategy:
    """Best strategy among all combinations of relevant-past rules.

    Candidates are visited in lexicographic order of their rule tables and
    the first maximizer wins.  Only for tiny diagrams.
    """
    evidence = check_evidence(diagram, evidence)
    domains = _rule_domains(diagram, evidence)
    spaces = []
    for d, (vd, cards) in domains.items():
        cells = int(np.prod(cards, dtype=np.int64))
        spaces.append(list(product(range(diagram.cards[d]), repeat=cells)))
    count = int(np.prod([len(s) for s in spaces], dtype=np.int64))
    if count > limit:
        raise OracleCapExceeded(f"{count} strategies exceed the limit of {limit}")
    best, best_rules = -np.inf, None
    for combo in product(*spaces):
        rules = {}
        for (d, (vd, cards)), tab in zip(domains.items(), combo):
            table = np.array(tab, dtype=int).reshape(cards)
            rules[d] = DecisionRule(d, vd, cards, table, np.zeros(cards, dtype=bool))
        eu = evaluate_strategy(diagram, rules, evidence)
        scale = max(1.0, abs(best)) if np.isfinite(best) else 1.0
        if eu > best + TIE_RTOL * scale:
            best, best_rules = eu, rules
    return Strategy(best_rules, float(best))


def bucket_eliminate(
    diagram: InfluenceDiagram,
    order: Optional[Sequence[int]] = None,
    evidence: Optional[Mapping] = None,
    ctr: Optional[OpCounter] = None,
) -> tuple:
    """Plain variable elimination along ``order`` with immediate division.

    Returns ``(strategy, meu)``.  Without an explicit order the strong
    elimination order of the junction tree is used.
    """
    evidence = check_evidence(diagram, evidence)
    ctr = OpCounter() if ctr is None else ctr
    partition = information_partition(diagram)
    ranks = partition.ranks()
    tree = build_for(diagram, partition)
    if order is None:
        order = tree.order
    decisions = set(diagram.decisions)
    phi = [restrict(p, evidence) for p in diagram.cpts]
    psi = [restrict(u, evidence) for u in diagram.utilities]
    records = {}
    for y in order:
        if y in evidence:
            continue
        phi_y = [p for p in phi if y in p.domain]
        psi_y = [u for u in psi if y in u.domain]
        phi = [p for p in phi if y not in p.domain]
        psi = [u for u in psi if y not in u.domain]
        prob = None
        phi_star = None
        if phi_y and (psi_y or not is_structural_unity(phi_y, y)):
            prob = multiply_all(phi_y, ctr)
        if y in decisions:
            if prob is not None:
                phi_star, _ = max_out(prob, y, ctr)
        elif prob is not None:
            phi_star = sum_out(prob, y, ctr)
        if phi_star is not None and not phi_star.unity:
            phi.append(phi_star)
        if psi_y:
            total = add_all(psi_y, ctr)
            val = multiply(prob, total, ctr) if prob is not None else total
            if y in decisions:
                out, records[y] = max_out(val, y, ctr)
            else:
                out = sum_out(val, y, ctr)
            if phi_star is not None:
                out = divide(out, phi_star, ctr)
            ctr.divisions_introduced += 0 if phi_star is None or phi_star.unity else out.size
            psi.append(out)
    total = add_all(psi, ctr)
    meu = 0.0 if total is None else float(total.table)
    rules = {}
    for d in diagram.decision_order:
        vd = [v for v in relevant_past(tree, d, ranks) if v not in evidence]
        rec = records.get(d)
        if rec is not None:
            vd = sorted(set(vd) | set(rec.variables))
        cards = tuple(diagram.cards[v] for v in vd)
        rules[d] = arbitrary_rule(d, vd, cards) if rec is None else rule_from_record(rec, vd, cards)
    strategy = Strategy(rules, meu, ctr)
    return strategy, meu
