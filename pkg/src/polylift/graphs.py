"""Finite graphs and posets with a fixed vertex order.

The vertex order is significant everywhere downstream: protocols pick the
smallest-index vertex with a property, decompositions peel vertices in order,
and variable names are derived from vertex names. Induced subgraphs keep the
names and the relative order of the vertices they retain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .core import VarName

__all__ = [
    "Graph",
    "Poset",
    "PosetError",
    "vertex_var",
    "vertex_vars",
    "graph_from_text",
]


def _check_name(name: str) -> str:
    # Vertex names become VarName components; reuse that validation.
    VarName((), name)
    return name


def vertex_var(name: str) -> VarName:
    """The ambient-space variable attached to one vertex."""
    return VarName(("x",), name)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph; vertices are 0..n-1 with distinct names."""

    names: tuple[str, ...]
    adj: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate vertex names")
        for name in self.names:
            _check_name(name)
        for v, nbrs in enumerate(self.adj):
            if v in nbrs:
                raise ValueError("loop at vertex %d" % v)
            for u in nbrs:
                if not 0 <= u < len(self.names):
                    raise ValueError("edge endpoint %d out of range" % u)
                if v not in self.adj[u]:
                    raise ValueError("asymmetric adjacency at (%d, %d)" % (u, v))

    @classmethod
    def of(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]] = (),
        names: Sequence[str] | None = None,
    ) -> "Graph":
        if names is None:
            names = tuple("v%d" % i for i in range(n))
        else:
            names = tuple(names)
            if len(names) != n:
                raise ValueError("expected %d names, got %d" % (n, len(names)))
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError("loop at vertex %d" % u)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("edge (%d, %d) out of range" % (u, v))
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(names, tuple(frozenset(s) for s in nbrs))

    # ------------------------------------------------------------------
    # basic queries

    @property
    def n(self) -> int:
        return len(self.names)

    def vertices(self) -> range:
        return range(self.n)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def adjacent(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def neighbors(self, v: int) -> frozenset[int]:
        return self.adj[v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in self.vertices() for v in self.adj[u] if u < v]

    def edge_key(self) -> tuple[int, frozenset[frozenset[int]]]:
        """Hashable identity (order-insensitive edge set) for corpus dedup."""
        return (self.n, frozenset(frozenset(e) for e in self.edges()))

    def is_clique(self, vs: Iterable[int]) -> bool:
        vs = list(vs)
        return all(self.adjacent(u, v) for u, v in combinations(vs, 2))

    def is_stable(self, vs: Iterable[int]) -> bool:
        vs = list(vs)
        return not any(self.adjacent(u, v) for u, v in combinations(vs, 2))

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = {0}
        frontier = [0]
        while frontier:
            v = frontier.pop()
            for u in self.adj[v]:
                if u not in seen:
                    seen.add(u)
                    frontier.append(u)
        return len(seen) == self.n

    # ------------------------------------------------------------------
    # derived graphs

    def complement(self) -> "Graph":
        full = set(range(self.n))
        return Graph(
            self.names,
            tuple(frozenset(full - self.adj[v] - {v}) for v in self.vertices()),
        )

    def induced(self, subset: Iterable[int]) -> "Graph":
        """Induced subgraph; keeps names and relative vertex order."""
        keep = sorted(set(subset))
        pos = {v: i for i, v in enumerate(keep)}
        names = tuple(self.names[v] for v in keep)
        adj = tuple(
            frozenset(pos[u] for u in self.adj[v] if u in pos) for v in keep
        )
        return Graph(names, adj)

    def low_high_split(self) -> tuple[frozenset[int], frozenset[int]]:
        """Vertices with 2*deg <= n versus the rest (exact comparison)."""
        low = frozenset(v for v in self.vertices() if 2 * self.degree(v) <= self.n)
        return low, frozenset(self.vertices()) - low

    # ------------------------------------------------------------------
    # subset enumeration, ordered by (size, index tuple)

    def _enumerate(self, test, max_size: int | None, include_empty: bool) -> list[tuple[int, ...]]:
        top = self.n if max_size is None else min(max_size, self.n)
        out: list[tuple[int, ...]] = [()] if include_empty else []
        for size in range(1, top + 1):
            for combo in combinations(self.vertices(), size):
                if test(combo):
                    out.append(combo)
        return out

    def enumerate_cliques(
        self, max_size: int | None = None, include_empty: bool = False
    ) -> list[tuple[int, ...]]:
        return self._enumerate(self.is_clique, max_size, include_empty)

    def enumerate_stable_sets(
        self, max_size: int | None = None, include_empty: bool = False
    ) -> list[tuple[int, ...]]:
        return self._enumerate(self.is_stable, max_size, include_empty)

    # ------------------------------------------------------------------
    # induced subgraph search

    def find_induced_copy(self, pattern: "Graph") -> tuple[int, ...] | None:
        """Vertices of self inducing `pattern` (respecting pattern's order),
        or None. Exhaustive backtracking; meant for small patterns."""
        h = pattern.n
        if h > self.n:
            return None
        chosen: list[int] = []

        def extend() -> bool:
            i = len(chosen)
            if i == h:
                return True
            for cand in self.vertices():
                if cand in chosen:
                    continue
                ok = all(
                    self.adjacent(chosen[j], cand) == pattern.adjacent(j, i)
                    for j in range(i)
                )
                if ok:
                    chosen.append(cand)
                    if extend():
                        return True
                    chosen.pop()
            return False

        return tuple(chosen) if extend() else None

    def contains_induced(self, pattern: "Graph") -> bool:
        return self.find_induced_copy(pattern) is not None

    # ------------------------------------------------------------------
    # serialization

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "edges": [[u, v] for u, v in sorted(self.edges())],
            "names": list(self.names),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Graph":
        n = int(obj["n"])
        edges = [(int(u), int(v)) for u, v in obj.get("edges", [])]
        names = obj.get("names")
        return cls.of(n, edges, names)


def vertex_vars(graph: Graph) -> tuple[VarName, ...]:
    return tuple(vertex_var(name) for name in graph.names)


def _from_dimacs(text: str) -> Graph:
    n = None
    edges: list[tuple[int, int]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        fields = line.split()
        if fields[0] == "p":
            n = int(fields[2])
        elif fields[0] == "e":
            u, v = int(fields[1]), int(fields[2])
            edges.append((u - 1, v - 1))
        else:
            raise ValueError("unrecognized line in graph file: %r" % line)
    if n is None:
        raise ValueError("graph file has no 'p' line")
    return Graph.of(n, edges)


def graph_from_text(text: str) -> Graph:
    """Parse a graph from JSON, or from DIMACS-like 'p'/'e' lines."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return Graph.from_json(json.loads(text))
    return _from_dimacs(text)


class PosetError(ValueError):
    """Input relations are not a partial order."""


@dataclass(frozen=True)
class Poset:
    """Partial order on named elements, stored as its strict relation."""

    names: tuple[str, ...]
    strict: frozenset[tuple[int, int]]  # (a, b) with a strictly below b

    def __post_init__(self) -> None:
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate element names")
        for name in self.names:
            _check_name(name)

    @classmethod
    def of(
        cls,
        n: int,
        relations: Iterable[tuple[int, int]],
        names: Sequence[str] | None = None,
    ) -> "Poset":
        if names is None:
            names = tuple("v%d" % i for i in range(n))
        else:
            names = tuple(names)
        below: list[set[int]] = [set() for _ in range(n)]  # below[b] = {a : a < b}
        for a, b in relations:
            if not (0 <= a < n and 0 <= b < n):
                raise PosetError("relation (%d, %d) out of range" % (a, b))
            if a != b:
                below[b].add(a)
        # transitive closure
        changed = True
        while changed:
            changed = False
            for b in range(n):
                grow = set()
                for a in below[b]:
                    grow |= below[a] - below[b]
                if grow:
                    below[b] |= grow
                    changed = True
        strict = set()
        for b in range(n):
            for a in below[b]:
                if b in below[a]:
                    raise PosetError(
                        "antisymmetry violated between %s and %s" % (names[a], names[b])
                    )
                strict.add((a, b))
        return cls(names, frozenset(strict))

    @property
    def n(self) -> int:
        return len(self.names)

    def less(self, a: int, b: int) -> bool:
        return (a, b) in self.strict

    def comparable(self, a: int, b: int) -> bool:
        return a != b and ((a, b) in self.strict or (b, a) in self.strict)

    def comparability_graph(self) -> Graph:
        edges = [(min(a, b), max(a, b)) for a, b in self.strict]
        return Graph.of(self.n, edges, self.names)

    def sort_chain(self, chain: Iterable[int]) -> tuple[int, ...]:
        """Order a set of pairwise comparable elements from bottom to top."""
        elems = list(chain)
        for u, v in combinations(elems, 2):
            if not self.comparable(u, v):
                raise PosetError("%s and %s are incomparable" % (self.names[u], self.names[v]))
        return tuple(sorted(elems, key=lambda v: sum(1 for u in elems if self.less(u, v))))

    def chains(self, include_empty: bool = False) -> list[tuple[int, ...]]:
        """All chains as bottom-to-top tuples, ordered by (size, index tuple)."""
        comp = self.comparability_graph()
        return [
            self.sort_chain(c)
            for c in comp.enumerate_cliques(include_empty=include_empty)
        ]

    def antichains(self, include_empty: bool = False) -> list[tuple[int, ...]]:
        return self.comparability_graph().enumerate_stable_sets(include_empty=include_empty)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "relations": [[a, b] for a, b in sorted(self.strict)],
            "names": list(self.names),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Poset":
        return cls.of(
            int(obj["n"]),
            [(int(a), int(b)) for a, b in obj.get("relations", [])],
            obj.get("names"),
        )
