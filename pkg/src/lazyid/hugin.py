"""Eager HUGIN-style collect propagation on the strong junction tree.

Every clique first combines its potentials into one probability table and one
utility table over the whole clique (the compile phase, counted separately).
Messages to the parent are the generalized marginals of the product and of
probability times utility; the parent absorbs them by multiplication,
division and addition.  No pruning, no unity detection, no lazy division.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .jtree import CliqueBinding, StrongJunctionTree, assign_potentials, build_for, relevant_past
from .model import InfluenceDiagram, check_evidence, information_partition
from .potential import (
    PROBABILITY,
    UTILITY,
    OpCounter,
    Potential,
    add,
    divide,
    expand,
    max_out,
    multiply,
    restrict,
    sum_out,
)
from .strategy import Strategy, arbitrary_rule, rule_from_record


@dataclass(frozen=True)
class CliqueTables:
    """One probability and one utility table per clique."""

    phi: tuple
    psi: tuple


def _clique_combine(pots, variables, cards, kind, ctr: OpCounter) -> Potential:
    if kind == PROBABILITY:
        table = np.ones(cards)
        head = frozenset().union(*(p.head for p in pots)) if pots else frozenset()
    else:
        table = np.zeros(cards)
    for k, p in enumerate(pots):
        block = np.broadcast_to(expand(p, variables), cards)
        if k == 0:
            table = block.copy()
        elif kind == PROBABILITY:
            table = table * block
            ctr.multiplies += table.size
        else:
            table = table + block
            ctr.additions += table.size
    if kind == PROBABILITY:
        return Potential(PROBABILITY, variables, cards, table, head=head)
    return Potential(UTILITY, variables, cards, table)


def compile_cliques(
    binding: CliqueBinding,
    tree: StrongJunctionTree,
    cards,
    ctr: OpCounter,
    evidence: Optional[Mapping[int, int]] = None,
) -> CliqueTables:
    """Multiply (add) each clique's probability (utility) potentials over the clique.

    Broadcasting a single potential is free; every further combination costs
    one operation per clique cell.
    """
    evidence = evidence or {}
    phis, psis = [], []
    for i, clique in enumerate(tree.cliques):
        variables = tuple(sorted(v for v in clique if v not in evidence))
        cc = tuple(cards[v] for v in variables)
        probs = [restrict(p, evidence) for p in binding.probability[i]]
        utils = [restrict(u, evidence) for u in binding.utility[i]]
        phis.append(_clique_combine(probs, variables, cc, PROBABILITY, ctr))
        psis.append(_clique_combine(utils, variables, cc, UTILITY, ctr))
    return CliqueTables(tuple(phis), tuple(psis))


@dataclass
class HuginRun:
    strategy: Strategy
    tree: StrongJunctionTree
    compile_ops: OpCounter


def run_hugin(
    diagram: InfluenceDiagram,
    evidence: Optional[Mapping] = None,
    ctr: Optional[OpCounter] = None,
    compile_ctr: Optional[OpCounter] = None,
) -> HuginRun:
    evidence = check_evidence(diagram, evidence)
    ctr = OpCounter() if ctr is None else ctr
    compile_ctr = OpCounter() if compile_ctr is None else compile_ctr
    partition = information_partition(diagram)
    ranks = partition.ranks()
    decisions = set(diagram.decisions)
    tree = build_for(diagram, partition)
    tables = compile_cliques(assign_potentials(diagram, tree), tree, diagram.cards, compile_ctr, evidence)
    position = {v: i for i, v in enumerate(tree.order)}
    records = {}

    def collect(i):
        phi, psi = tables.phi[i], tables.psi[i]
        for c in tree.children(i):
            phi_s, psi_s = collect(c)
            phi = multiply(phi, phi_s, ctr)
            psi = add(psi, divide(psi_s, phi_s, ctr), ctr)
        joint = multiply(phi, psi, ctr)
        todo = sorted(
            (v for v in tree.eliminated[i] if v not in evidence), key=position.__getitem__
        )
        for y in todo:
            if y in decisions:
                joint, records[y] = max_out(joint, y, ctr)
                phi, _ = max_out(phi, y, ctr)
            else:
                joint = sum_out(joint, y, ctr, unity_rule=False)
                phi = sum_out(phi, y, ctr, unity_rule=False)
        return phi, joint

    phi_r, joint_r = collect(tree.root)
    meu = float(divide(joint_r, phi_r, ctr).table)
    rules = {}
    for d in diagram.decision_order:
        vd = tuple(v for v in relevant_past(tree, d, ranks) if v not in evidence)
        cc = tuple(diagram.cards[v] for v in vd)
        rec = records.get(d)
        rules[d] = arbitrary_rule(d, vd, cc) if rec is None else rule_from_record(rec, vd, cc)
    strategy = Strategy(rules, meu, ctr, compile_ctr)
    return HuginRun(strategy, tree, compile_ctr)


def solve_hugin(
    diagram: InfluenceDiagram,
    evidence: Optional[Mapping] = None,
    ctr: Optional[OpCounter] = None,
) -> Strategy:
    """Solve by eager propagation; ``ctr`` receives propagation ops only."""
    return run_hugin(diagram, evidence, ctr).strategy
