import itertools

import numpy as np
import pytest

from _oracles import all_dags, d_connected_by_paths
from conftest import diagram
from lazyid.model import (
    ModelError,
    check_evidence,
    information_partition,
    moral_graph,
)
from lazyid.potential import probability, restrict, utility
from lazyid.relevance import classify_barren, d_connected_targets


class TestBuildDiagram:
    def test_single_chance_variable(self):
        d = diagram([("A", "chance")], cpts=[(["A"], [], [0.3, 0.7])])
        part = information_partition(d)
        assert part.n == 0
        assert part.sets == (frozenset({0}),)

    def test_inconsistent_decision_order(self):
        with pytest.raises(ModelError, match="order inconsistent"):
            diagram(
                [("D1", "decision"), ("D2", "decision")],
                arcs=[("D2", "D1")],
                order=["D1", "D2"],
            )

    def test_example_network(self, ex61):
        part = information_partition(ex61)
        assert part.sets == (frozenset({0}), frozenset({1}))
        assert ex61.decision_order == (2,)

    def test_missing_order_with_two_decisions(self):
        with pytest.raises(ModelError, match="@order"):
            diagram([("D1", "decision"), ("D2", "decision")])

    def test_cycle(self):
        with pytest.raises(ModelError, match="cycle"):
            diagram(
                [("A", "chance"), ("B", "chance")],
                arcs=[("A", "B"), ("B", "A")],
                cpts=[(["A"], ["B"], [0.5] * 4), (["B"], ["A"], [0.5] * 4)],
            )

    def test_row_sum(self):
        with pytest.raises(ModelError, match="row 2"):
            diagram(
                [("A", "chance"), ("B", "chance")],
                arcs=[("A", "B")],
                cpts=[(["A"], [], [0.5, 0.5]), (["B"], ["A"], [0.5, 0.5, 0.4, 0.5])],
            )

    def test_cpt_parents_must_match_arcs(self):
        with pytest.raises(ModelError, match="arc parents"):
            diagram(
                [("A", "chance"), ("B", "chance")],
                cpts=[(["A"], [], [0.5, 0.5]), (["B"], ["A"], [0.5] * 4)],
            )

    def test_chance_without_cpt(self):
        with pytest.raises(ModelError, match="no CPT"):
            diagram([("A", "chance")])

    def test_observation_depending_on_later_decision(self):
        # X informs D1 but is caused by D2
        with pytest.raises(ModelError, match="order inconsistent"):
            diagram(
                [("X", "chance"), ("D1", "decision"), ("D2", "decision")],
                arcs=[("D2", "X"), ("X", "D1")],
                cpts=[(["X"], ["D2"], [0.5] * 4)],
                order=["D1", "D2"],
            )


class TestInformationPartition:
    def test_no_decisions(self):
        d = diagram(
            [("A", "chance"), ("B", "chance")],
            arcs=[("A", "B")],
            cpts=[(["A"], [], [0.5, 0.5]), (["B"], ["A"], [0.5] * 4)],
        )
        assert information_partition(d).sets == (frozenset({0, 1}),)

    def test_chain(self):
        d = diagram(
            [("A", "chance"), ("D1", "decision"), ("B", "chance"), ("D2", "decision")],
            arcs=[("A", "D1"), ("D1", "B"), ("B", "D2")],
            cpts=[(["A"], [], [0.5, 0.5]), (["B"], ["D1"], [0.5] * 4)],
            order=["D1", "D2"],
        )
        part = information_partition(d)
        assert part.sets == (frozenset({0}), frozenset({2}), frozenset())
        assert part.rank(0) < part.rank(1) < part.rank(2) < part.rank(3)


class TestMoralGraph:
    def test_family_is_married(self):
        d = diagram(
            [("A", "chance"), ("B", "chance"), ("C", "chance")],
            arcs=[("A", "B"), ("C", "B")],
            cpts=[(["A"], [], [0.5, 0.5]), (["C"], [], [0.5, 0.5]),
                  (["B"], ["A", "C"], [0.5] * 8)],
        )
        assert {frozenset(e) for e in moral_graph(d).edges} == {
            frozenset(p) for p in [(0, 1), (1, 2), (0, 2)]
        }

    def test_utility_edge_and_no_information_edge(self, ex61):
        edges = {frozenset(e) for e in moral_graph(ex61).edges}
        assert frozenset((1, 2)) in edges  # U(D, C2)
        # C1 -> D is informational only; C1 and D meet through no potential
        assert frozenset((0, 2)) not in edges


class TestEvidence:
    def test_labels_and_indices(self, ex61):
        assert check_evidence(ex61, {"C1": "t"}) == {0: 1}
        assert check_evidence(ex61, {0: 0}) == {0: 0}

    def test_unobserved_variable_rejected(self, ex61):
        with pytest.raises(ModelError, match="cannot be instantiated"):
            check_evidence(ex61, {"C2": "f"})

    def test_decision_rejected(self, ex61):
        with pytest.raises(ModelError):
            check_evidence(ex61, {"D": "d0"})


def _cpts(g):
    return [
        probability(sorted(g.predecessors(v)) + [v], [2] * (g.in_degree(v) + 1),
                    np.full(2 ** (g.in_degree(v) + 1), 0.5), head=[v])
        for v in g
    ]


class TestDConnection:
    A, B, C = 0, 1, 2

    def chain(self):
        return [
            probability([0], [2], [0.5, 0.5]),
            probability([0, 1], [2, 2], [0.5] * 4, head=[1]),
            probability([1, 2], [2, 2], [0.5] * 4, head=[2]),
        ]

    def collider(self):
        return [
            probability([0], [2], [0.5, 0.5]),
            probability([1], [2], [0.5, 0.5]),
            probability([0, 1, 2], [2, 2, 2], [0.5] * 8, head=[2]),
        ]

    def test_blocked_chain(self):
        assert 0 not in d_connected_targets(self.chain(), {2}, {1})

    def test_open_chain(self):
        assert d_connected_targets(self.chain(), {2}) == {0, 1, 2}

    def test_blocked_collider(self):
        assert 1 not in d_connected_targets(self.collider(), {0})

    def test_opened_collider(self):
        assert 1 in d_connected_targets(self.collider(), {0}, {2})

    def test_evidence_on_head_opens_collider(self):
        pots = self.collider()
        pots[2] = restrict(pots[2], {2: 1})
        assert 1 in d_connected_targets(pots, {0})

    def test_utility_sink_is_a_target(self):
        pots = self.chain() + [utility([2], [2], [1, 2])]
        assert 0 in d_connected_targets(pots, set(), utility_targets=True)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_path_enumeration(self, n):
        for g in all_dags(n):
            pots = _cpts(g)
            for t in range(n):
                others = [v for v in range(n) if v != t]
                for k in range(len(others) + 1):
                    for obs in itertools.combinations(others, k):
                        got = d_connected_targets(pots, {t}, obs)
                        assert got == d_connected_by_paths(g, {t}, obs), (g.edges, t, obs)


class TestBarren:
    def test_leaf_without_utility(self):
        pots = [probability([0], [2], [0.5, 0.5]),
                probability([0, 1], [2, 2], [0.5] * 4, head=[1])]
        barren, pb = classify_barren(pots, [], required={0})
        assert 1 in barren and 1 in pb and 0 not in barren

    def test_leaf_with_utility_is_only_probabilistic_barren(self):
        pots = [probability([3, 8, 11], [2, 2, 2], [0.5] * 8, head=[11])]
        utils = [utility([11], [2], [1, 2])]
        barren, pb = classify_barren(pots, utils, required={3, 8})
        assert 11 not in barren
        assert 11 in pb
