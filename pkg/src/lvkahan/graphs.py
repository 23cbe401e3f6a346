"""Labeled graphs, trees and block graphs.

Vertices are 1..n.  The order of a graph's edge list matters: it fixes the
indexing of the edge Darboux polynomials built on top of it.
"""

from __future__ import annotations

import itertools
import json
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra.linalg import det_bareiss


class GraphError(ValueError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class VertexOutOfRange(GraphError):
    pass


class Disconnected(GraphError):
    pass


class NotCycleClosed(GraphError):
    pass


class NotATree(GraphError):
    pass


Edge = tuple[int, int]


@dataclass(frozen=True)
class LabeledGraph:
    n: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if not (1 <= u < v <= self.n):
                raise GraphError(f"edge {(u, v)} not normalised for n={self.n}")
            if (u, v) in seen:
                raise DuplicateEdge((u, v))
            seen.add((u, v))

    @property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edge_set

    def edge_index(self, u: int, v: int) -> int:
        """1-based position of edge {u, v} in the edge list."""
        return self.edges.index((min(u, v), max(u, v))) + 1

    def neighbours(self) -> dict[int, set[int]]:
        adj = {v: set() for v in range(1, self.n + 1)}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def degrees(self) -> tuple[int, ...]:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u - 1] += 1
            deg[v - 1] += 1
        return tuple(deg)

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        adj = self.neighbours()
        seen = {1}
        queue = deque([1])
        while queue:
            u = queue.popleft()
            for w in adj[u] - seen:
                seen.add(w)
                queue.append(w)
        return len(seen) == self.n

    def sorted(self) -> "LabeledGraph":
        return LabeledGraph(self.n, tuple(sorted(self.edges)))

    def with_edges(self, extra) -> "LabeledGraph":
        return LabeledGraph(self.n, self.edges + tuple(extra))

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "LabeledGraph":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            n = int(data["n"])
            edges = [tuple(int(v) for v in e) for e in data["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"malformed graph description: {exc}") from exc
        if any(len(e) != 2 for e in edges):
            raise GraphError("edges must be pairs")
        return from_edge_list(n, edges)


@dataclass(frozen=True)
class TreeData:
    graph: LabeledGraph
    degrees: tuple[int, ...]
    # 1-based positions of the tree's edges in a parent graph, if extracted from one
    parent_edge_ids: tuple[int, ...] | None = field(default=None, compare=False)

    @classmethod
    def from_graph(cls, g: LabeledGraph, parent_edge_ids=None) -> "TreeData":
        if len(g.edges) != g.n - 1 or not g.is_connected():
            raise NotATree(f"{g.edges} is not a spanning tree on {g.n} vertices")
        return cls(g, g.degrees(), parent_edge_ids)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.graph.edges


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple[frozenset[int], ...]
    block_sizes: tuple[int, ...]


def from_edge_list(n: int, edges) -> LabeledGraph:
    """Normalise pairs to u < v, keeping order; reject loops and repeats."""
    if n < 1:
        raise VertexOutOfRange(f"vertex count {n} < 1")
    out = []
    seen = set()
    for pair in edges:
        u, v = (int(w) for w in pair)
        for w in (u, v):
            if not 1 <= w <= n:
                raise VertexOutOfRange(f"vertex {w} not in 1..{n}")
        if u == v:
            raise SelfLoop(f"self-loop at vertex {u}")
        e = (min(u, v), max(u, v))
        if e in seen:
            raise DuplicateEdge(f"duplicate edge {e}")
        seen.add(e)
        out.append(e)
    return LabeledGraph(n, tuple(out))


def complete_graph(n: int) -> LabeledGraph:
    return LabeledGraph(n, tuple(itertools.combinations(range(1, n + 1), 2)))


def path_graph(n: int) -> LabeledGraph:
    return LabeledGraph(n, tuple((i, i + 1) for i in range(1, n)))


def star_graph(n: int, centre: int = 1) -> LabeledGraph:
    return from_edge_list(n, [(centre, v) for v in range(1, n + 1) if v != centre]).sorted()


# -- trees -------------------------------------------------------------------


def prufer_to_edges(seq, n: int) -> list[Edge]:
    degree = [1] * (n + 1)
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = next(u for u in range(1, n + 1) if degree[u] == 1)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = (x for x in range(1, n + 1) if degree[x] == 1)
    edges.append((u, w))
    return sorted(edges)


def enumerate_labeled_trees(n: int) -> list[TreeData]:
    """All n**(n-2) labeled trees on 1..n, edges sorted lexicographically."""
    if n < 2:
        raise ValueError("need at least two vertices")
    if n == 2:
        return [TreeData.from_graph(LabeledGraph(2, ((1, 2),)))]
    return [
        TreeData.from_graph(LabeledGraph(n, tuple(prufer_to_edges(seq, n))))
        for seq in itertools.product(range(1, n + 1), repeat=n - 2)
    ]


def random_labeled_tree(n: int, rng: random.Random) -> TreeData:
    if n == 2:
        return TreeData.from_graph(LabeledGraph(2, ((1, 2),)))
    seq = [rng.randint(1, n) for _ in range(n - 2)]
    return TreeData.from_graph(LabeledGraph(n, tuple(prufer_to_edges(seq, n))))


def tree_path_edges(t: TreeData, source: int) -> dict[int, int]:
    """For every vertex i != source: index (1-based) of the edge at ``source``
    on the tree path from ``source`` to i."""
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(1, t.n + 1)}
    for k, (u, v) in enumerate(t.edges, start=1):
        adj[u].append((v, k))
        adj[v].append((u, k))
    first: dict[int, int] = {}
    queue = deque()
    for w, k in adj[source]:
        first[w] = k
        queue.append(w)
    while queue:
        u = queue.popleft()
        for w, _ in adj[u]:
            if w != source and w not in first:
                first[w] = first[u]
                queue.append(w)
    return first


# -- spanning trees ------------------------------------------------------------


def _forms_spanning_tree(n: int, edges) -> bool:
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def matrix_tree_count(g: LabeledGraph) -> int:
    """Number of spanning trees: any cofactor of the graph Laplacian."""
    if g.n == 1:
        return 1
    lap = [[0] * g.n for _ in range(g.n)]
    for u, v in g.edges:
        lap[u - 1][u - 1] += 1
        lap[v - 1][v - 1] += 1
        lap[u - 1][v - 1] -= 1
        lap[v - 1][u - 1] -= 1
    reduced = [row[1:] for row in lap[1:]]
    return int(Fraction(det_bareiss(reduced)))


def spanning_trees(g: LabeledGraph) -> list[TreeData]:
    """Every spanning tree of ``g``; ``parent_edge_ids`` index into g.edges."""
    if not g.is_connected():
        raise Disconnected(f"graph {g.edges} is not connected")
    out = []
    for combo in itertools.combinations(range(len(g.edges)), g.n - 1):
        edges = [g.edges[i] for i in combo]
        if _forms_spanning_tree(g.n, edges):
            order = sorted(range(len(combo)), key=lambda k: edges[k])
            tree = LabeledGraph(g.n, tuple(edges[k] for k in order))
            out.append(TreeData.from_graph(tree, tuple(combo[k] + 1 for k in order)))
    count = matrix_tree_count(g)
    if len(out) != count:
        raise AssertionError(f"enumerated {len(out)} spanning trees, Kirchhoff gives {count}")
    return out


# -- cycles and blocks -------------------------------------------------------------


def _connected_avoiding(adj, u, v, avoid) -> bool:
    seen = {u, avoid}
    stack = [u]
    while stack:
        a = stack.pop()
        if a == v:
            return True
        for w in adj[a]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def _on_common_cycle(g: LabeledGraph, adj, u: int, v: int) -> bool:
    # Menger: non-adjacent u, v share a cycle iff no single vertex separates them
    if not _connected_avoiding(adj, u, v, 0):
        return False
    return all(
        _connected_avoiding(adj, u, v, w) for w in range(1, g.n + 1) if w not in (u, v)
    )


def cycle_closure(g: LabeledGraph) -> LabeledGraph:
    """Add chords between vertices sharing a cycle until nothing changes.

    New edges are appended (sorted) after the original ones.
    """
    if not g.is_connected():
        raise Disconnected(f"graph {g.edges} is not connected")
    current = g
    while True:
        adj = current.neighbours()
        chords = [
            (u, v)
            for u, v in itertools.combinations(range(1, g.n + 1), 2)
            if v not in adj[u] and _on_common_cycle(current, adj, u, v)
        ]
        if not chords:
            return current
        current = current.with_edges(chords)


def is_cycle_closed(g: LabeledGraph) -> bool:
    return cycle_closure(g).edge_set == g.edge_set


def biconnected_components(g: LabeledGraph) -> list[frozenset[int]]:
    """Vertex sets of the biconnected components (Hopcroft-Tarjan)."""
    adj = g.neighbours()
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    stack: list[Edge] = []
    comps: list[frozenset[int]] = []
    counter = itertools.count()

    def visit(u: int, parent: int):
        disc[u] = low[u] = next(counter)
        for w in sorted(adj[u]):
            if w not in disc:
                stack.append((u, w))
                visit(w, u)
                low[u] = min(low[u], low[w])
                if low[w] >= disc[u]:
                    comp = set()
                    while True:
                        e = stack.pop()
                        comp.update(e)
                        if e == (u, w):
                            break
                    comps.append(frozenset(comp))
            elif w != parent and disc[w] < disc[u]:
                stack.append((u, w))
                low[u] = min(low[u], disc[w])

    for v in range(1, g.n + 1):
        if v not in disc and adj[v]:
            visit(v, 0)
    return comps


def block_decompose(g: LabeledGraph) -> BlockDecomposition:
    """Biconnected components of a cycle-closed graph, each checked complete."""
    if not g.is_connected():
        raise Disconnected(f"graph {g.edges} is not connected")
    comps = sorted(biconnected_components(g), key=lambda c: (-len(c), sorted(c)))
    edges = g.edge_set
    for comp in comps:
        for u, v in itertools.combinations(sorted(comp), 2):
            if (u, v) not in edges:
                raise NotCycleClosed(f"block {sorted(comp)} misses edge {(u, v)}")
    return BlockDecomposition(tuple(comps), tuple(len(c) for c in comps))


def independence_count(bd: BlockDecomposition) -> int:
    """Lower bound on independent Kahan-map integrals: sum of (size - 2) over blocks >= 3."""
    return sum(size - 2 for size in bd.block_sizes if size >= 3)


# -- isomorphism classes ---------------------------------------------------------------


def canonical_form(g: LabeledGraph) -> tuple[Edge, ...]:
    """Lexicographically least sorted edge tuple over all relabelings."""
    best = None
    for perm in itertools.permutations(range(1, g.n + 1)):
        relabeled = tuple(
            sorted(
                (min(perm[u - 1], perm[v - 1]), max(perm[u - 1], perm[v - 1]))
                for u, v in g.edges
            )
        )
        if best is None or relabeled < best:
            best = relabeled
    return best


def _block_graphs_labeled(n: int) -> list[LabeledGraph]:
    """Connected block graphs on n vertices, one per isomorphism class.

    Every block graph arises from a smaller one by gluing a clique at a
    single vertex, so classes are grown by size and deduplicated canonically.
    """
    classes: dict[int, list[tuple[Edge, ...]]] = {1: [()]}
    for size in range(2, n + 1):
        found: set[tuple[Edge, ...]] = set()
        for clique in range(2, size + 1):
            base_n = size - clique + 1
            for base in classes[base_n]:
                for anchor in range(1, base_n + 1):
                    new = list(range(base_n + 1, size + 1))
                    members = [anchor] + new
                    edges = list(base) + list(itertools.combinations(sorted(members), 2))
                    found.add(canonical_form(LabeledGraph(size, tuple(sorted(edges)))))
        classes[size] = sorted(found)
    return [LabeledGraph(n, edges) for edges in classes[n]]


def enumerate_gsystem_classes(n: int) -> list[tuple[LabeledGraph, int]]:
    """Canonical representatives of connected block graphs with a block of size >= 3,
    paired with their independent-integral counts."""
    if not 4 <= n <= 7:
        raise ValueError("enumeration supported for 4 <= n <= 7")
    out = []
    for g in _block_graphs_labeled(n):
        bd = block_decompose(g)
        if max(bd.block_sizes) >= 3:
            out.append((g, independence_count(bd)))
    return out


def random_connected_graph(n: int, rng: random.Random, extra: float = 0.3) -> LabeledGraph:
    tree = random_labeled_tree(n, rng)
    edges = set(tree.edges)
    for e in itertools.combinations(range(1, n + 1), 2):
        if e not in edges and rng.random() < extra:
            edges.add(e)
    return LabeledGraph(n, tuple(sorted(edges)))
