"""d-separation and barren-variable analysis on the domain graph of potentials.

The domain graph has an arc from every tail variable to every head variable of
each probability potential (joint heads are chained in id order).  Two kinds
of synthetic nodes are added:

* an *evidence node* per probability potential that lost a head variable to
  evidence (or has no head at all), with arcs from its whole domain; these
  nodes are always instantiated;
* a *utility sink* per utility potential, with arcs from its domain.
"""

from __future__ import annotations

from collections import defaultdict, deque
from typing import Iterable

from .potential import PROBABILITY, UTILITY, Potential


class DomainGraph:
    """Parent/child adjacency over variable ids and synthetic nodes."""

    def __init__(self, potentials: Iterable[Potential]):
        self.parents = defaultdict(set)
        self.children = defaultdict(set)
        self.nodes = set()
        self.evidence_nodes = set()
        self.utility_sinks = set()
        for i, p in enumerate(potentials):
            self.nodes.update(p.variables)
            if p.kind == UTILITY:
                sink = ("utility", i)
                self.utility_sinks.add(sink)
                self._fan_in(p.variables, sink)
                continue
            if p.unity:
                continue
            head = sorted(p.head)
            for h in head:
                for t in p.tail:
                    self._arc(t, h)
            for j, b in enumerate(head):
                for a in head[:j]:
                    self._arc(a, b)
            if p.tainted or not p.head:
                node = ("evidence", i)
                self.evidence_nodes.add(node)
                self._fan_in(p.variables, node)

    def _arc(self, u, v):
        self.parents[v].add(u)
        self.children[u].add(v)
        self.nodes.update((u, v))

    def _fan_in(self, variables, node):
        self.nodes.add(node)
        for v in variables:
            self._arc(v, node)

    def ancestors(self, nodes: Iterable) -> set:
        """Ancestors of ``nodes``, inclusive."""
        seen = set()
        stack = list(nodes)
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            stack.extend(self.parents.get(u, ()))
        return seen

    def reachable(self, sources: Iterable, observed: Iterable) -> set:
        """Nodes joined to some source by an active trail given ``observed``.

        Linear-time reachability over (node, direction) pairs: a trail may
        pass a non-collider only if it is unobserved and a collider only if
        it or one of its descendants is observed.
        """
        observed = set(observed)
        anc = self.ancestors(observed)
        up, down = 0, 1
        queue = deque((s, up) for s in sources)
        visited = set()
        found = set()
        while queue:
            y, d = queue.popleft()
            if (y, d) in visited:
                continue
            visited.add((y, d))
            if y not in observed:
                found.add(y)
            if d == up and y not in observed:
                queue.extend((z, up) for z in self.parents.get(y, ()))
                queue.extend((z, down) for z in self.children.get(y, ()))
            elif d == down:
                if y not in observed:
                    queue.extend((z, down) for z in self.children.get(y, ()))
                if y in anc:
                    queue.extend((z, up) for z in self.parents.get(y, ()))
        return found


def d_connected_targets(
    potentials: Iterable[Potential],
    targets: Iterable[int],
    instantiated: Iterable[int] = (),
    *,
    utility_targets: bool = False,
) -> set:
    """Variables d-connected to some target given ``instantiated``.

    Targets are in the result unless instantiated; instantiated variables
    never are.  With ``utility_targets`` every utility sink counts as a
    target too, which is what relevance for expected utility needs.
    """
    g = DomainGraph(potentials)
    sources = set(targets)
    if utility_targets:
        sources |= g.utility_sinks
    observed = set(instantiated) | g.evidence_nodes
    found = g.reachable(sources - observed, observed)
    return {v for v in found if not isinstance(v, tuple)}


def classify_barren(
    potentials: Iterable[Potential],
    utilities: Iterable[Potential],
    required: Iterable[int] = (),
) -> tuple:
    """Return ``(barren, probabilistic_barren)`` variable sets.

    A variable is probabilistic barren when it is neither required nor an
    ancestor of a required variable or of evidence; it is barren when, in
    addition, it has no directed path into a utility domain.  Evidence enters
    through the potentials it instantiated.
    """
    potentials = [p for p in potentials if p.kind == PROBABILITY]
    utilities = [u for u in utilities if u.kind == UTILITY]
    g = DomainGraph(potentials + utilities)
    variables = {v for v in g.nodes if not isinstance(v, tuple)}
    required = set(required)
    keep_prob = g.ancestors(required | g.evidence_nodes)
    keep = keep_prob | g.ancestors(g.utility_sinks)
    barren = {v for v in variables if v not in keep}
    prob_barren = {v for v in variables if v not in keep_prob}
    return barren, prob_barren
