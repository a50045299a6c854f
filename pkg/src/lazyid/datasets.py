"""Bundled example models and a seeded random influence-diagram generator."""

from __future__ import annotations

from importlib import resources

import numpy as np
from sklearn.utils import check_random_state

from .io import parse_model
from .model import CHANCE, DECISION, InfluenceDiagram, build_diagram

EXAMPLES = ("ex61", "ex52")


def example_path(name: str):
    if name not in EXAMPLES:
        raise KeyError(f"unknown example {name!r}; choose from {EXAMPLES}")
    return resources.files("lazyid") / "data" / f"{name}.id"


def load_example(name: str) -> InfluenceDiagram:
    return parse_model(example_path(name).read_text(encoding="utf-8"))


def _random_rows(rng, rows: int, width: int, zero_prob: float) -> np.ndarray:
    table = rng.dirichlet(np.ones(width), size=rows)
    for r in range(rows):
        if width > 1 and rng.random_sample() < zero_prob:
            table[r, rng.randint(width)] = 0.0
            table[r] /= table[r].sum()
    return table


def make_random_diagram(
    random_state=None,
    *,
    max_chance: int = 6,
    max_decisions: int = 2,
    max_utilities: int = 3,
    max_arity: int = 3,
    max_parents: int = 3,
    arc_prob: float = 0.4,
    zero_prob: float = 0.15,
) -> InfluenceDiagram:
    """Random diagram that respects the temporal order of its decisions.

    Variables are laid out as I_0, D_1, I_1, ..., D_n, I_n and arcs only go
    forward in that sequence, so no observation depends on a later decision.
    Each chance variable in I_k informs D_{k+1}.
    """
    rng = check_random_state(random_state)
    n_chance = rng.randint(1, max_chance + 1)
    n_dec = rng.randint(0, max_decisions + 1)
    block = np.sort(rng.randint(0, n_dec + 1, size=n_chance))

    seq = []  # (name, kind, block)
    for k in range(n_dec + 1):
        if k > 0:
            seq.append((f"D{k}", DECISION, k))
        for i in np.flatnonzero(block == k):
            seq.append((f"X{i}", CHANCE, k))
    arity = {name: rng.randint(2, max_arity + 1) for name, _, _ in seq}
    variables = [
        {"name": name, "kind": kind, "states": [f"s{j}" for j in range(arity[name])]}
        for name, kind, _ in seq
    ]

    arcs, parents = [], {name: [] for name, _, _ in seq}
    for j, (name, kind, k) in enumerate(seq):
        if kind == DECISION:
            for other, okind, ok in seq[:j]:
                if okind == CHANCE and ok == k - 1:
                    parents[name].append(other)
            continue
        for other, _, _ in seq[:j]:
            if len(parents[name]) < max_parents and rng.random_sample() < arc_prob:
                parents[name].append(other)
    for child, pa in parents.items():
        arcs.extend((p, child) for p in pa)

    cpts = []
    for name, kind, _ in seq:
        if kind != CHANCE:
            continue
        rows = int(np.prod([arity[p] for p in parents[name]]))
        values = _random_rows(rng, rows, arity[name], zero_prob)
        cpts.append({"head": [name], "parents": list(parents[name]), "values": values})

    names = [name for name, _, _ in seq]
    decisions = [name for name, kind, _ in seq if kind == DECISION]
    utilities = []
    for u in range(rng.randint(1, max_utilities + 1)):
        size = rng.randint(1, min(3, len(names)) + 1)
        dom = list(rng.choice(names, size=size, replace=False))
        if decisions and u == 0 and not set(dom) & set(decisions):
            dom[0] = decisions[rng.randint(len(decisions))]
            dom = list(dict.fromkeys(dom))
        cells = int(np.prod([arity[v] for v in dom]))
        values = np.round(rng.uniform(-10, 10, size=cells), 2)
        utilities.append({"name": f"U{u}", "variables": dom, "values": values})

    return build_diagram(
        {
            "variables": variables,
            "arcs": arcs,
            "cpts": cpts,
            "utilities": utilities,
            "order": decisions,
        }
    )


def random_evidence(diagram: InfluenceDiagram, random_state=None) -> dict:
    """Evidence on a random subset of the variables observed before the first decision.

    States come from one forward sample, so the evidence is always possible.
    """
    import networkx as nx

    from .model import information_partition

    rng = check_random_state(random_state)
    g = nx.DiGraph()
    g.add_nodes_from(range(diagram.n_variables))
    g.add_edges_from((p, v) for v, pa in enumerate(diagram.parents) for p in pa)
    sample = {}
    for v in nx.lexicographical_topological_sort(g):
        if diagram.variables[v].kind == DECISION:
            sample[v] = rng.randint(diagram.cards[v])
            continue
        cpt = next(p for p in diagram.cpts if v in p.head)
        idx = tuple(sample[u] if u != v else slice(None) for u in cpt.variables)
        probs = cpt.table[idx]
        sample[v] = int(rng.choice(len(probs), p=probs / probs.sum()))
    part = information_partition(diagram)
    pool = sorted(part.sets[0]) if part.n else sorted(diagram.chance)
    return {v: sample[v] for v in pool if rng.random_sample() < 0.5}
