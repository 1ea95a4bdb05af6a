"""Shared instance corpora.

The graph corpus is fixed for the whole suite: named families (paths,
cycles, complete graphs, stars) plus 50 seeded Erdos-Renyi draws per size,
redrawn until connected and deduplicated by exact edge set. Seeds are
frozen so every run checks the same instances.
"""

from __future__ import annotations

import random
from itertools import combinations

import pytest

from polylift import Graph, Poset


def _connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    seen, stack = {0}, [0]
    while stack:
        v = stack.pop()
        for u in g.neighbors(v):
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == g.n


def random_connected_graph(n: int, seed: int) -> Graph:
    rng = random.Random(seed)
    while True:
        edges = [(i, j) for i, j in combinations(range(n), 2) if rng.random() < 0.5]
        g = Graph.of(n, edges)
        if _connected(g):
            return g


def named_graphs(n: int) -> list[tuple[str, Graph]]:
    out = [("path%d" % n, Graph.of(n, [(i, i + 1) for i in range(n - 1)]))]
    if n >= 3:
        out.append(("cycle%d" % n, Graph.of(n, [(i, (i + 1) % n) for i in range(n)])))
    out.append(("complete%d" % n, Graph.of(n, list(combinations(range(n), 2)))))
    if n >= 3:
        out.append(("star%d" % n, Graph.of(n, [(0, i) for i in range(1, n)])))
    return out


def build_corpus(max_n: int, random_per_n: int = 50) -> list[tuple[str, Graph]]:
    corpus: list[tuple[str, Graph]] = []
    seen: set = set()
    for n in range(2, max_n + 1):
        candidates = named_graphs(n)
        for k in range(random_per_n):
            candidates.append(
                ("rand%d_%d" % (n, k), random_connected_graph(n, 20240 + 100 * n + k))
            )
        for name, g in candidates:
            key = g.edge_key()
            if key not in seen:
                seen.add(key)
                corpus.append((name, g))
    return corpus


def random_bipartite_graph(n: int, seed: int) -> Graph:
    rng = random.Random(seed)
    left = rng.randint(1, n - 1)
    edges = [
        (i, j) for i in range(left) for j in range(left, n) if rng.random() < 0.5
    ]
    return Graph.of(n, edges)


def random_poset(n: int, seed: int) -> Poset:
    # random linear extension, then keep each forward pair with prob 1/2;
    # Poset.of closes transitively
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    relations = [
        (order[i], order[j])
        for i, j in combinations(range(n), 2)
        if rng.random() < 0.5
    ]
    return Poset.of(n, relations)


def poset_corpus(count: int = 30, max_n: int = 8) -> list[Poset]:
    out = []
    for k in range(count):
        rng = random.Random(4800 + k)
        out.append(random_poset(rng.randint(2, max_n), 4900 + k))
    return out


def bipartite_corpus(max_n: int = 8, per_n: int = 6) -> list[tuple[str, Graph]]:
    return [
        ("bip%d_%d" % (n, k), random_bipartite_graph(n, 3100 + 100 * n + k))
        for n in range(2, max_n + 1)
        for k in range(per_n)
    ]


_CORPUS_CACHE: dict[int, list[tuple[str, Graph]]] = {}


def corpus_upto(max_n: int) -> list[tuple[str, Graph]]:
    if max_n not in _CORPUS_CACHE:
        _CORPUS_CACHE[max_n] = build_corpus(max_n)
    return _CORPUS_CACHE[max_n]


@pytest.fixture(scope="session")
def small_corpus() -> list[tuple[str, Graph]]:
    """Named families + 50 random draws per size, n <= 5; quick suites."""
    return corpus_upto(5)


@pytest.fixture(scope="session")
def p3() -> Graph:
    return Graph.of(3, [(0, 1), (1, 2)], names=("a", "b", "c"))
