"""Strong triangulation and strong junction trees."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import networkx as nx

from .model import InfluenceDiagram, InformationPartition


def _fill_in(g: nx.Graph, v) -> int:
    nbrs = list(g.adj[v])
    return sum(1 for a, b in combinations(nbrs, 2) if not g.has_edge(a, b))


def min_fill_order(g: nx.Graph, block: Sequence[int]) -> list:
    """Eliminate ``block`` from ``g`` in place by minimum fill-in, lowest id on ties."""
    out = []
    left = set(block)
    while left:
        v = min(left, key=lambda u: (_fill_in(g, u), u))
        nbrs = list(g.adj[v])
        g.add_edges_from(combinations(nbrs, 2))
        g.remove_node(v)
        left.remove(v)
        out.append(v)
    return out


def strong_elimination_order(moral: nx.Graph, partition: InformationPartition) -> tuple:
    """Elimination order (first eliminated first) that respects the temporal order.

    Blocks go I_n, D_n, I_{n-1}, ..., D_1, I_0; inside a block variables are
    picked by minimum fill-in with fill edges accumulated across blocks.
    """
    g = moral.copy()
    order = []
    for block in reversed(partition.blocks()):
        order.extend(min_fill_order(g, sorted(block)))
    missing = set(moral.nodes) - set(order)
    if missing:
        raise ValueError(f"variables outside the partition: {sorted(missing)}")
    return tuple(order)


@dataclass(frozen=True)
class StrongJunctionTree:
    """Cliques with parent links toward the strong root.

    Cliques are numbered by the elimination position of the last variable
    they eliminate, so the root has the highest number.  ``eliminated[i]``
    is the clique minus its separator to the parent.
    """

    cliques: tuple
    parent: tuple
    separators: tuple
    eliminated: tuple
    order: tuple

    @property
    def root(self) -> int:
        return len(self.cliques) - 1

    def children(self, i: int) -> list:
        return [j for j, p in enumerate(self.parent) if p == i]

    def home(self, var: int) -> int:
        """The clique closest to the root that contains ``var``."""
        for i, e in enumerate(self.eliminated):
            if var in e:
                return i
        raise KeyError(var)

    def dump(self, names: Optional[Sequence[str]] = None) -> str:
        """Indented text, one clique per line, separators in brackets."""

        def label(vs):
            return " ".join(names[v] if names else str(v) for v in sorted(vs))

        lines = []

        def walk(i, depth):
            sep = self.separators[i]
            tag = "" if self.parent[i] is None else f"  [sep: {label(sep) or '-'}]"
            lines.append(f"{'  ' * depth}C{i}: {label(self.cliques[i])}{tag}")
            for c in self.children(i):
                walk(c, depth + 1)

        walk(self.root, 0)
        return "\n".join(lines) + "\n"


def build_strong_tree(moral: nx.Graph, order: Sequence[int]) -> StrongJunctionTree:
    """Triangulate ``moral`` along ``order`` and assemble the strong junction tree."""
    order = list(order)
    pos = {v: i for i, v in enumerate(order)}
    g = moral.copy()
    elim_clique, elim_parent = [], []
    for v in order:
        nbrs = set(g.adj[v])
        g.add_edges_from(combinations(nbrs, 2))
        g.remove_node(v)
        elim_clique.append(frozenset(nbrs | {v}))
        elim_parent.append(min((pos[u] for u in nbrs), default=None))

    # Collapse each non-maximal elimination clique into the child containing it.
    owner = list(range(len(order)))
    kids = [[] for _ in order]
    for i, p in enumerate(elim_parent):
        if p is not None:
            kids[p].append(i)
    members = {}
    for i in range(len(order)):
        host = next(
            (owner[c] for c in kids[i] if elim_clique[i] <= elim_clique[owner[c]]),
            None,
        )
        if host is None:
            members[i] = [i]
        else:
            owner[i] = host
            members[host].append(i)

    # Number cliques by the position of their top (last eliminated) member.
    reps = sorted(members, key=lambda r: members[r][-1])
    top_roots = [r for r in reps if elim_parent[members[r][-1]] is None]
    strong_root = owner[len(order) - 1]
    number = {r: k for k, r in enumerate(reps)}
    cliques, parent, seps, elim = [], [], [], []
    for r in reps:
        top = members[r][-1]
        cliques.append(elim_clique[r])
        p = elim_parent[top]
        if p is not None:
            parent.append(number[owner[p]])
            seps.append(elim_clique[top] - {order[top]})
        elif r == strong_root:
            parent.append(None)
            seps.append(frozenset())
        else:
            parent.append(number[strong_root])
            seps.append(frozenset())
        elim.append(frozenset(order[m] for m in members[r]))
    assert top_roots and number[strong_root] == len(reps) - 1
    return StrongJunctionTree(
        cliques=tuple(cliques),
        parent=tuple(parent),
        separators=tuple(seps),
        eliminated=tuple(elim),
        order=tuple(order),
    )


@dataclass(frozen=True)
class CliqueBinding:
    """Model potentials bound, uncombined, to their home cliques."""

    probability: tuple
    utility: tuple


def assign_potentials(diagram: InfluenceDiagram, tree: StrongJunctionTree) -> CliqueBinding:
    prob = [[] for _ in tree.cliques]
    util = [[] for _ in tree.cliques]
    for bucket, pots in ((prob, diagram.cpts), (util, diagram.utilities)):
        for p in pots:
            home = next((i for i, c in enumerate(tree.cliques) if p.domain <= c), None)
            if home is None:
                raise RuntimeError(f"potential {p!r} fits no clique; triangulation bug")
            bucket[home].append(p)
    return CliqueBinding(tuple(map(tuple, prob)), tuple(map(tuple, util)))


def relevant_past(tree: StrongJunctionTree, decision: int, ranks: dict) -> tuple:
    """Members of the decision's top clique that strictly precede it."""
    clique = tree.cliques[tree.home(decision)]
    r = ranks[decision]
    return tuple(sorted(v for v in clique if ranks[v] < r))


def running_intersection_holds(tree: StrongJunctionTree) -> bool:
    variables = set().union(*tree.cliques) if tree.cliques else set()
    for v in variables:
        holding = {i for i, c in enumerate(tree.cliques) if v in c}
        tops = [i for i in holding if tree.parent[i] not in holding]
        if len(tops) != 1:
            return False
    return True


def strong_property_holds(tree: StrongJunctionTree, ranks: dict) -> bool:
    """Each separator can be ordered before the rest of its child clique."""
    for i, p in enumerate(tree.parent):
        if p is None:
            continue
        sep = tree.separators[i]
        if sep != tree.cliques[i] & tree.cliques[p]:
            return False
        rest = tree.cliques[i] - sep
        if sep and rest and max(ranks[s] for s in sep) > min(ranks[x] for x in rest):
            return False
    return True


def build_for(diagram: InfluenceDiagram, partition: InformationPartition):
    """Moral graph, strong order and tree for ``diagram``."""
    from .model import moral_graph

    moral = moral_graph(diagram)
    order = strong_elimination_order(moral, partition)
    return build_strong_tree(moral, order)
