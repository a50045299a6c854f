import random

import numpy as np
import pytest

from conftest import diagram
from lazyid.datasets import make_random_diagram, random_evidence
from lazyid.jtree import build_for
from lazyid.lazy import solve_lazy
from lazyid.model import information_partition
from lazyid.oracle import (
    OracleCapExceeded,
    ProjectionError,
    brute_force_solve,
    bucket_eliminate,
    enumerate_strategies,
    evaluate_strategy,
    project_rule,
)
from lazyid.potential import OpCounter
from lazyid.strategy import DecisionRule


class TestBruteForce:
    def test_example_network(self, ex61):
        s = brute_force_solve(ex61)
        assert s.meu == pytest.approx(9.9, abs=1e-12)
        assert s.rule(2).choose({0: 0}) == 1
        assert s.rule(2).choose({0: 1}) == 0

    def test_deterministic_cpt(self):
        d = diagram(
            [("A", "chance"), ("D", "decision", 3)],
            cpts=[(["A"], [], [0.0, 1.0])],
            utilities=[("U", ["A", "D"], [9, 9, 9, 4, 7, 5])],
        )
        s = brute_force_solve(d)
        assert s.meu == 7
        assert s.decide({}) == {1: 1}

    def test_no_decisions(self):
        d = diagram(
            [("A", "chance"), ("B", "chance")],
            arcs=[("A", "B")],
            cpts=[(["A"], [], [0.3, 0.7]), (["B"], ["A"], [0.9, 0.1, 0.2, 0.8])],
            utilities=[("U", ["B"], [0, 10])],
        )
        assert brute_force_solve(d).meu == pytest.approx(10 * (0.3 * 0.1 + 0.7 * 0.8))

    def test_cap(self, ex52):
        with pytest.raises(OracleCapExceeded):
            brute_force_solve(ex52, cap=1000)

    def test_full_past_rule_cannot_drop_an_observation(self, ex61):
        full = brute_force_solve(ex61).extras["full_past"]
        assert full[2].variables == (0,)
        with pytest.raises(ProjectionError):
            project_rule(full[2], (), ())

    def test_evidence_is_conditional(self, ex61):
        assert brute_force_solve(ex61, {"C1": "t"}).meu == pytest.approx(
            (5 * 0.4 + 1 * 0.1) / 0.5, abs=1e-12
        )


class TestEvaluateStrategy:
    def test_constant_rule(self, ex61):
        rule = DecisionRule(2, (), (), np.array(0), np.array(False))
        # always d0: 0.5*10 + (0.2+0.4)*5 + (0.3+0.1)*1
        assert evaluate_strategy(ex61, {2: rule}) == pytest.approx(5 + 3 + 0.4)

    def test_enumeration_agrees_on_example(self, ex61):
        s = enumerate_strategies(ex61)
        assert s.meu == pytest.approx(9.9)
        assert s.rule(2).same_choices(brute_force_solve(ex61).rule(2))

    def test_enumeration_limit(self, ex52):
        with pytest.raises(OracleCapExceeded):
            enumerate_strategies(ex52, limit=10)


class TestBucketEliminate:
    def test_example_network_counts(self, ex61):
        ctr = OpCounter()
        strategy, meu = bucket_eliminate(ex61, ctr=ctr)
        assert meu == pytest.approx(9.9, abs=1e-12)
        assert ctr.total == 25
        assert ctr.divisions == 4
        assert strategy.rule(2).same_choices(solve_lazy(ex61).rule(2))

    def test_single_chance_variable(self):
        d = diagram([("A", "chance")], cpts=[(["A"], [], [0.25, 0.75])],
                    utilities=[("U", ["A"], [4, 8])])
        ctr = OpCounter()
        _, meu = bucket_eliminate(d, ctr=ctr)
        assert meu == pytest.approx(7.0)
        assert ctr.divisions == 0

    def test_block_permutation(self, ex52):
        part = information_partition(ex52)
        ranks = part.ranks()
        order = list(build_for(ex52, part).order)
        _, base = bucket_eliminate(ex52, order)
        rng = random.Random(0)
        for _ in range(5):
            blocks = {}
            for v in order:
                blocks.setdefault(ranks[v], []).append(v)
            for b in blocks.values():
                rng.shuffle(b)
            perm = [v for r in sorted(blocks, reverse=True) for v in blocks[r]]
            assert bucket_eliminate(ex52, perm)[1] == pytest.approx(base, abs=1e-9)


@pytest.mark.parametrize("seed", range(30))
class TestRandomDiagrams:
    def test_engines_agree(self, seed):
        d = make_random_diagram(seed)
        ev = random_evidence(d, seed)
        for evidence in ({}, ev):
            meu = brute_force_solve(d, evidence).meu
            strategy, ve = bucket_eliminate(d, evidence=evidence)
            assert ve == pytest.approx(meu, abs=1e-9)
            assert evaluate_strategy(d, strategy, evidence) == pytest.approx(meu, abs=1e-9)

    def test_single_entry_changes_never_help(self, seed):
        d = make_random_diagram(seed)
        s = solve_lazy(d)
        for dec, rule in s.rules.items():
            flat = np.asarray(rule.table).reshape(-1)
            for i, state in enumerate(flat):
                for other in range(d.cards[dec]):
                    if other == state:
                        continue
                    table = flat.copy()
                    table[i] = other
                    changed = DecisionRule(dec, rule.variables, rule.cards,
                                           table.reshape(np.shape(rule.table)), rule.ties)
                    rules = {**s.rules, dec: changed}
                    assert evaluate_strategy(d, rules) <= s.meu + 1e-9

    def test_enumeration_matches(self, seed):
        d = make_random_diagram(seed)
        try:
            best = enumerate_strategies(d, limit=5000)
        except OracleCapExceeded:
            pytest.skip("too many strategies for exhaustive search")
        assert best.meu == pytest.approx(brute_force_solve(d).meu, abs=1e-9)
