"""Influence diagram representation and its graph-theoretic views."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Optional, Sequence

import networkx as nx
import numpy as np

from .potential import Potential, probability, utility

CHANCE = "chance"
DECISION = "decision"

ROW_TOL = 1e-9


class ModelError(ValueError):
    """An influence diagram violates one of its structural invariants."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    kind: str
    states: tuple

    @property
    def card(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class InformationPartition:
    """Chance variables split into I_0 ... I_n around the decisions.

    ``sets[k]`` holds the chance variables observed after decision k and
    before decision k+1 (1-based decisions); ``sets[n]`` is never observed.
    """

    sets: tuple
    decisions: tuple

    @property
    def n(self) -> int:
        return len(self.decisions)

    def rank(self, var: int) -> int:
        """Position in the temporal order I_0 < D_1 < I_1 < ... < D_n < I_n."""
        for k, d in enumerate(self.decisions):
            if d == var:
                return 2 * k + 1
        for k, s in enumerate(self.sets):
            if var in s:
                return 2 * k
        raise KeyError(var)

    def ranks(self) -> dict:
        out = {}
        for k, s in enumerate(self.sets):
            out.update(dict.fromkeys(s, 2 * k))
        for k, d in enumerate(self.decisions):
            out[d] = 2 * k + 1
        return out

    def blocks(self) -> list:
        """Temporal blocks, earliest first: I_0, {D_1}, I_1, ..., {D_n}, I_n."""
        out = [frozenset(self.sets[0])]
        for k, d in enumerate(self.decisions):
            out.append(frozenset([d]))
            out.append(frozenset(self.sets[k + 1]))
        return out


@dataclass(frozen=True, eq=False)
class InfluenceDiagram:
    """A symmetric decision problem: DAG, CPT families, additive utilities.

    ``cpts`` holds one probability potential per family; every chance
    variable is a head of exactly one of them.  Usually the head is a single
    variable, but a family may carry a joint head such as P(C1, C2).
    No-forgetting arcs are implied by ``decision_order`` and never stored.
    """

    variables: tuple
    parents: tuple
    cpts: tuple
    utilities: tuple
    decision_order: tuple
    utility_names: tuple = ()

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def cards(self) -> tuple:
        return tuple(v.card for v in self.variables)

    @property
    def chance(self) -> tuple:
        return tuple(v.id for v in self.variables if v.kind == CHANCE)

    @property
    def decisions(self) -> tuple:
        return tuple(v.id for v in self.variables if v.kind == DECISION)

    def index(self, name) -> int:
        if isinstance(name, (int, np.integer)):
            return int(name)
        for v in self.variables:
            if v.name == name:
                return v.id
        raise KeyError(name)

    def name(self, var: int) -> str:
        return self.variables[var].name

    def children(self, var: int) -> tuple:
        return tuple(v for v, pa in enumerate(self.parents) if var in pa)

    def ancestors(self, var: int) -> set:
        seen, stack = set(), list(self.parents[var])
        while stack:
            u = stack.pop()
            if u not in seen:
                seen.add(u)
                stack.extend(self.parents[u])
        return seen


def _digraph(n: int, parents: Sequence[Sequence[int]]) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((p, v) for v, pa in enumerate(parents) for p in pa)
    return g


def build_diagram(desc: Mapping) -> InfluenceDiagram:
    """Validate a parsed model description and build the diagram.

    ``desc`` has keys ``variables`` (dicts with name/kind/states), ``arcs``
    (parent, child) pairs, ``cpts`` (dicts with head/parents/values),
    ``utilities`` (dicts with name/variables/values) and ``order`` (decision
    names, may be None when there is at most one decision).  Any entry may
    carry a ``line`` used in diagnostics.
    """
    variables = []
    index = {}
    for i, v in enumerate(desc.get("variables", ())):
        line = v.get("line")
        name, kind, states = v["name"], v["kind"], tuple(v["states"])
        if name in index:
            raise ModelError(f"duplicate variable {name!r}", line)
        if kind not in (CHANCE, DECISION):
            raise ModelError(f"variable {name!r} has unknown kind {kind!r}", line)
        if not states:
            raise ModelError(f"variable {name!r} has no states", line)
        if len(set(states)) != len(states):
            raise ModelError(f"variable {name!r} has repeated state labels", line)
        index[name] = i
        variables.append(Variable(i, name, kind, states))
    n = len(variables)

    def resolve(name, line):
        try:
            return index[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}", line) from None

    parents = [[] for _ in range(n)]
    for arc in desc.get("arcs", ()):
        p, c = resolve(arc[0], _line(arc)), resolve(arc[1], _line(arc))
        if p == c:
            raise ModelError(f"self loop on {arc[0]!r}", _line(arc))
        if p in parents[c]:
            raise ModelError(f"duplicate arc {arc[0]} -> {arc[1]}", _line(arc))
        parents[c].append(p)
    g = _digraph(n, parents)
    if not nx.is_directed_acyclic_graph(g):
        cycle = nx.find_cycle(g)
        names = " -> ".join(variables[u].name for u, _ in cycle)
        raise ModelError(f"cycle detected: {names}")

    cards = [v.card for v in variables]
    cpts, covered = [], {}
    for fam in desc.get("cpts", ()):
        line = fam.get("line")
        head = [resolve(h, line) for h in fam["head"]]
        tail = [resolve(t, line) for t in fam.get("parents", ())]
        for h in head:
            if variables[h].kind != CHANCE:
                raise ModelError(f"decision {variables[h].name!r} has a CPT", line)
            if h in covered:
                raise ModelError(f"second CPT for {variables[h].name!r}", line)
            covered[h] = line
        expected = set().union(*(parents[h] for h in head)) - set(head)
        if set(tail) != expected or len(tail) != len(set(tail)):
            want = ", ".join(sorted(variables[u].name for u in expected)) or "none"
            raise ModelError(
                f"CPT parents for {', '.join(fam['head'])} must be the arc parents"
                f" ({want})",
                line,
            )
        rows = int(np.prod([cards[t] for t in tail], dtype=np.int64))
        width = int(np.prod([cards[h] for h in head], dtype=np.int64))
        values = np.asarray(fam["values"], dtype=float).ravel()
        if values.size != rows * width:
            raise ModelError(
                f"CPT for {', '.join(fam['head'])} has {values.size} numbers,"
                f" expected {rows * width}",
                line,
            )
        values = values.reshape(rows, width)
        if (values < 0).any():
            raise ModelError("negative probability", line)
        sums = values.sum(axis=1)
        for r, s in enumerate(sums):
            if abs(s - 1.0) > ROW_TOL:
                raise ModelError(
                    f"CPT for {', '.join(fam['head'])} row {r + 1} sums to {s:.12g}",
                    fam.get("row_lines", {}).get(r, line),
                )
        dom = tail + head
        cpts.append(probability(dom, [cards[u] for u in dom], values, head=head))
    for v in variables:
        if v.kind == CHANCE and v.id not in covered:
            raise ModelError(f"chance variable {v.name!r} has no CPT")

    utilities, unames = [], []
    for u in desc.get("utilities", ()):
        line = u.get("line")
        dom = [resolve(x, line) for x in u.get("variables", ())]
        if len(set(dom)) != len(dom):
            raise ModelError(f"utility {u['name']!r} repeats a variable", line)
        size = int(np.prod([cards[x] for x in dom], dtype=np.int64))
        values = np.asarray(u["values"], dtype=float).ravel()
        if values.size != size:
            raise ModelError(
                f"utility {u['name']!r} has {values.size} numbers, expected {size}",
                line,
            )
        if not np.isfinite(values).all():
            raise ModelError(f"utility {u['name']!r} has a non-finite value", line)
        utilities.append(utility(dom, [cards[x] for x in dom], values))
        unames.append(u["name"])

    decisions = [v.id for v in variables if v.kind == DECISION]
    order = desc.get("order")
    if order is None:
        if len(decisions) > 1:
            raise ModelError("missing @order section for a diagram with several decisions")
        order_ids = decisions
    else:
        order_ids = [resolve(x, desc.get("order_line")) for x in order]
        if sorted(order_ids) != sorted(decisions) or len(set(order_ids)) != len(order_ids):
            raise ModelError(
                "decision order must list every decision exactly once",
                desc.get("order_line"),
            )
    pos = {d: i for i, d in enumerate(order_ids)}
    for d in order_ids:
        for p in parents[d]:
            if p in pos and pos[p] > pos[d]:
                raise ModelError(
                    f"decision order inconsistent: {variables[p].name} informs"
                    f" {variables[d].name} but comes later",
                    desc.get("order_line"),
                )
    diagram = InfluenceDiagram(
        variables=tuple(variables),
        parents=tuple(tuple(p) for p in parents),
        cpts=tuple(cpts),
        utilities=tuple(utilities),
        decision_order=tuple(order_ids),
        utility_names=tuple(unames),
    )
    _check_causal(diagram)
    return diagram


def _line(arc):
    return arc[2] if len(arc) > 2 else None


def _check_causal(diagram: InfluenceDiagram) -> None:
    """A chance variable observed before D_j cannot depend on D_j."""
    part = information_partition(diagram)
    pos = {d: k for k, d in enumerate(diagram.decision_order, start=1)}
    for k, s in enumerate(part.sets[:-1]):
        for x in s:
            late = [a for a in diagram.ancestors(x) if pos.get(a, 0) > k]
            if late:
                raise ModelError(
                    f"decision order inconsistent: {diagram.name(x)} is observed"
                    f" before {diagram.name(late[0])} but depends on it"
                )
    for d in diagram.decision_order:
        late = [a for a in diagram.ancestors(d) if pos.get(a, 0) > pos[d]]
        if late:
            raise ModelError(
                f"decision order inconsistent: {diagram.name(d)} precedes its"
                f" ancestor {diagram.name(late[0])}"
            )


def information_partition(diagram: InfluenceDiagram) -> InformationPartition:
    n = len(diagram.decision_order)
    chance = set(diagram.chance)
    seen = set()
    sets = []
    for d in diagram.decision_order:
        obs = {p for p in diagram.parents[d] if p in chance} - seen
        sets.append(frozenset(obs))
        seen |= obs
    sets.append(frozenset(chance - seen))
    assert len(sets) == n + 1
    return InformationPartition(tuple(sets), tuple(diagram.decision_order))


def moral_graph(diagram: InfluenceDiagram) -> nx.Graph:
    """Undirected graph joining every CPT family and every utility domain.

    Informational arcs contribute nothing; utility nodes are not vertices.
    """
    g = nx.Graph()
    g.add_nodes_from(range(diagram.n_variables))
    for p in diagram.cpts + diagram.utilities:
        g.add_edges_from(combinations(p.variables, 2))
    return g


def check_evidence(diagram: InfluenceDiagram, evidence: Optional[Mapping]) -> dict:
    """Resolve names/labels and reject evidence the temporal order forbids.

    Only variables observed before the first decision can be instantiated
    when the whole strategy is computed.
    """
    if not evidence:
        return {}
    part = information_partition(diagram)
    out = {}
    for key, state in evidence.items():
        try:
            var = diagram.index(key)
            v = diagram.variables[var]
        except (KeyError, IndexError):
            raise ModelError(f"evidence on unknown variable {key!r}") from None
        if v.kind != CHANCE:
            raise ModelError(f"evidence on decision {v.name!r}")
        if part.n > 0 and var not in part.sets[0]:
            raise ModelError(
                f"{v.name!r} is not observed before the first decision and"
                " cannot be instantiated by evidence"
            )
        if isinstance(state, str):
            if state in v.states:
                idx = v.states.index(state)
            elif state.isdigit() and int(state) < v.card:
                idx = int(state)
            else:
                raise ModelError(f"{v.name!r} has no state {state!r}")
        else:
            idx = int(state)
            if not 0 <= idx < v.card:
                raise ModelError(f"state index {idx} out of range for {v.name!r}")
        out[var] = idx
    return out


def probability_family(diagram: InfluenceDiagram, var: int) -> Potential:
    for p in diagram.cpts:
        if var in p.head:
            return p
    raise KeyError(var)

