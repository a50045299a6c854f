"""Independent reference checks shared by the unit and acceptance tests."""

from itertools import product

import networkx as nx


def all_dags(n):
    """Every labelled DAG on nodes 0..n-1 (each unordered pair: none, ->, <-)."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for choice in product(range(3), repeat=len(pairs)):
        g = nx.DiGraph()
        g.add_nodes_from(range(n))
        for (i, j), c in zip(pairs, choice):
            if c == 1:
                g.add_edge(i, j)
            elif c == 2:
                g.add_edge(j, i)
        if nx.is_directed_acyclic_graph(g):
            yield g


def d_connected_by_paths(g: nx.DiGraph, targets, observed):
    """Nodes joined to a target by some active simple path (explicit enumeration)."""
    observed = set(observed)
    desc_obs = {v for v in g if v in observed or nx.descendants(g, v) & observed}
    und = g.to_undirected()
    found = {t for t in targets if t not in observed}

    def extend(path):
        last = path[-1]
        for nxt in und.adj[last]:
            if nxt in path:
                continue
            if len(path) >= 2:
                prev, mid = path[-2], last
                collider = g.has_edge(prev, mid) and g.has_edge(nxt, mid)
                if collider and mid not in desc_obs:
                    continue
                if not collider and mid in observed:
                    continue
            if nxt not in observed:
                found.add(nxt)
            extend(path + [nxt])

    for t in targets:
        if t not in observed:
            extend([t])
    return found
