"""Homogeneous Lotka-Volterra systems attached to trees and block graphs.

The coefficient matrix of a tree-system is built from the path-incidence rule:
for i != j, let e_k be the edge at j on the tree path from j to i; then
A[i][j] = c_k if j is the smaller endpoint of e_k, else b_k.  Diagonal entries
are a_i.  A block-graph system starts from one spanning tree and identifies
parameter symbols so that rows i, k agree off columns i, k for every edge.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .algebra import Factored, MultiPoly, PolyRing, RatFunc, adjugate, det
from .algebra.linalg import matmul
from .graphs import (
    LabeledGraph,
    TreeData,
    block_decompose,
    spanning_trees,
    tree_path_edges,
)


class InconsistentUnification(AssertionError):
    pass


class SingularA(ArithmeticError):
    pass


def _is_zero(v) -> bool:
    return v.is_zero() if isinstance(v, MultiPoly) else v == 0


# -- parameter bookkeeping --------------------------------------------------------


def _symbol_key(name: str) -> tuple[int, str]:
    return (int(name[1:]), name[0])


class ParamUniverse:
    """Union-find over parameter symbols; class representative is the lowest index."""

    def __init__(self, n: int):
        self.n = n
        self.symbols = (
            [f"a{i}" for i in range(1, n + 1)]
            + [f"b{i}" for i in range(1, n)]
            + [f"c{i}" for i in range(1, n)]
        )
        self._parent = {s: s for s in self.symbols}

    def find(self, s: str) -> str:
        root = s
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[s] != root:
            self._parent[s], s = root, self._parent[s]
        return root

    def union(self, s: str, t: str) -> None:
        rs, rt = self.find(s), self.find(t)
        if rs == rt:
            return
        if (rs[0] == "a") != (rt[0] == "a"):
            raise InconsistentUnification(f"cannot identify {s} with {t}")
        if _symbol_key(rt) < _symbol_key(rs):
            rs, rt = rt, rs
        self._parent[rt] = rs

    def representatives(self) -> list[str]:
        reps = {self.find(s) for s in self.symbols}
        return sorted(reps, key=lambda s: (s[0] != "a", s[0], int(s[1:])))

    def classes(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for s in self.symbols:
            out.setdefault(self.find(s), []).append(s)
        return out


# -- system data ------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeDP:
    index: int
    u: int
    v: int
    poly: MultiPoly
    cofactor_row: tuple

    @property
    def name(self) -> str:
        return f"P{self.index}"


@dataclass(frozen=True)
class DensityMonomial:
    """d = prod x_i^vertex_exponents[i] * prod P_j^edge_exponents[j]."""

    vertex_exponents: tuple[int, ...]
    edge_exponents: Mapping[int, int]
    tree: TreeData | None = field(default=None, compare=False)

    def named_exponents(self) -> dict[str, int]:
        out = {f"x{i}": e for i, e in enumerate(self.vertex_exponents, start=1) if e}
        out.update({f"P{j}": e for j, e in sorted(self.edge_exponents.items()) if e})
        return out

    def __truediv__(self, other: "DensityMonomial") -> "DensityMonomial":
        verts = tuple(a - b for a, b in zip(self.vertex_exponents, other.vertex_exponents))
        edges = dict(self.edge_exponents)
        for j, e in other.edge_exponents.items():
            edges[j] = edges.get(j, 0) - e
        return DensityMonomial(verts, {j: e for j, e in sorted(edges.items()) if e})

    def factored(self, sys: "LVSystem") -> Factored:
        items = [(sys.x[i], e) for i, e in enumerate(self.vertex_exponents)]
        items += [(sys.dp(j).poly, e) for j, e in self.edge_exponents.items()]
        return Factored.of(*items)

    def ratfunc(self, sys: "LVSystem") -> RatFunc:
        return self.factored(sys).expand(sys.ring)

    def evaluate(self, values_x: Sequence, dp_values: Mapping[int, object]):
        val = Fraction(1) if not isinstance(values_x[0], float) else 1.0
        for xi, e in zip(values_x, self.vertex_exponents):
            if e:
                val = val * xi ** e if e > 0 else val / xi ** -e
        for j, e in self.edge_exponents.items():
            p = dp_values[j]
            val = val * p ** e if e > 0 else val / p ** -e
        return val

    def pretty(self) -> str:
        parts = []
        for name, e in self.named_exponents().items():
            parts.append(name if e == 1 else f"{name}^{e}")
        return "*".join(parts) or "1"


@dataclass
class LVSystem:
    graph: LabeledGraph
    tree: TreeData
    ring: PolyRing
    A: list
    dps: list[EdgeDP]
    universe: ParamUniverse

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def x(self) -> list[MultiPoly]:
        return [self.ring.gen(f"x{i}") for i in range(1, self.n + 1)]

    @property
    def B(self) -> list[tuple]:
        return [dp.cofactor_row for dp in self.dps]

    def dp(self, index: int) -> EdgeDP:
        return self.dps[index - 1]

    def dp_for_edge(self, u: int, v: int) -> EdgeDP:
        return self.dps[self.graph.edge_index(u, v) - 1]

    def parameters(self) -> list[str]:
        return self.universe.representatives()

    def free_parameter_count(self) -> int:
        return len(self.parameters())

    def Ax(self) -> list[MultiPoly]:
        x = self.x
        return [
            sum((self.A[i][j] * x[j] for j in range(self.n)), self.ring.zero)
            for i in range(self.n)
        ]

    def tree_edge_ids(self, tree: TreeData | None = None) -> list[int]:
        tree = tree or self.tree
        return [self.graph.edge_index(u, v) for u, v in tree.edges]

    def numeric_A(self, params: Mapping[str, object]) -> list[list]:
        return specialise_matrix(self.A, params)

    def to_dict(self) -> dict:
        d = density(self)
        return {
            "n": self.n,
            "graph": self.graph.to_dict(),
            "tree": self.tree.graph.to_dict(),
            "A": [[entry.pretty() for entry in row] for row in self.A],
            "dps": [
                {"index": dp.index, "edge": [dp.u, dp.v], "poly": dp.poly.pretty()}
                for dp in self.dps
            ],
            "B": [[entry.pretty() for entry in row] for row in self.B],
            "density": d.named_exponents(),
            "parameters": self.parameters(),
            "free_parameters": self.free_parameter_count(),
        }


def specialise_matrix(A, params: Mapping[str, object]) -> list[list]:
    out = []
    for row in A:
        new = []
        for entry in row:
            if isinstance(entry, MultiPoly):
                new.append(entry.eval(params))
            else:
                new.append(entry)
        out.append(new)
    return out


# -- construction ---------------------------------------------------------------------------


def _tree_symbol_matrix(t: TreeData) -> list[list[str]]:
    n = t.n
    names = [[""] * n for _ in range(n)]
    for j in range(1, n + 1):
        names[j - 1][j - 1] = f"a{j}"
        first = tree_path_edges(t, j)
        for i, k in first.items():
            u, _ = t.edges[k - 1]
            names[i - 1][j - 1] = f"c{k}" if j == u else f"b{k}"
    return names


def _dp_from_matrix(A, index: int, u: int, v: int, x) -> EdgeDP:
    i, k = u - 1, v - 1
    poly = (A[k][i] - A[i][i]) * x[i] + (A[k][k] - A[i][k]) * x[k]
    row = tuple(A[p][p] if p in (i, k) else A[i][p] for p in range(len(A)))
    return EdgeDP(index, u, v, poly, row)


def _assemble(graph: LabeledGraph, tree: TreeData, names, universe, ring) -> LVSystem:
    n = graph.n
    A = [[ring.gen(universe.find(names[i][j])) for j in range(n)] for i in range(n)]
    x = [ring.gen(f"x{i}") for i in range(1, n + 1)]
    dps = [_dp_from_matrix(A, k, u, v, x) for k, (u, v) in enumerate(graph.edges, start=1)]
    return LVSystem(graph, tree, ring, A, dps, universe)


def tree_adjacency(t: TreeData, ring: PolyRing | None = None) -> LVSystem:
    """Tree-system with 3n-2 free parameters; DPs follow the tree's edge order."""
    ring = ring or PolyRing.for_system(t.n)
    universe = ParamUniverse(t.n)
    return _assemble(t.graph, t, _tree_symbol_matrix(t), universe, ring)


def gsystem_adjacency(
    g: LabeledGraph, t: TreeData | None = None, ring: PolyRing | None = None
) -> LVSystem:
    """System for a cycle-closed graph, built on the spanning tree ``t``.

    The graph's edges are put in lexicographic order; DP j belongs to the
    j-th edge in that order.  The default tree is the first spanning tree.
    """
    g = g.sorted()
    block_decompose(g)
    if t is None:
        t = spanning_trees(g)[0]
    if not t.graph.edge_set <= g.edge_set:
        raise ValueError("tree is not a subgraph of the graph")
    ring = ring or PolyRing.for_system(g.n)
    universe = ParamUniverse(g.n)
    names = _tree_symbol_matrix(t)
    for u, v in g.edges:
        if t.graph.has_edge(u, v):
            continue
        for j in range(g.n):
            if j not in (u - 1, v - 1):
                universe.union(names[u - 1][j], names[v - 1][j])
    sys = _assemble(g, t, names, universe, ring)
    pairs = set(lemma1_pairs(sys.A))
    if not g.edge_set <= pairs:
        raise InconsistentUnification("row conditions fail after unification")
    return sys


def lemma1_pairs(A) -> list[tuple[int, int]]:
    """1-based pairs (i, k) for which alpha*x_i + beta*x_k is a Darboux polynomial."""
    n = len(A)
    out = []
    for i in range(n):
        for k in range(i + 1, n):
            if any(A[i][j] != A[k][j] for j in range(n) if j not in (i, k)):
                continue
            if _is_zero((A[k][k] - A[i][k]) * (A[k][i] - A[i][i])):
                continue
            out.append((i + 1, k + 1))
    return out


# -- continuous-time structure -----------------------------------------------------------


def vector_field(sys: LVSystem) -> list[MultiPoly]:
    return [xi * axi for xi, axi in zip(sys.x, sys.Ax())]


def divergence(sys: LVSystem) -> MultiPoly:
    f = vector_field(sys)
    return sum((f[i].diff(f"x{i + 1}") for i in range(sys.n)), sys.ring.zero)


def lie_derivative(sys: LVSystem, p: MultiPoly, field_=None) -> MultiPoly:
    f = field_ or vector_field(sys)
    return sum((f[k] * p.diff(f"x{k + 1}") for k in range(sys.n)), sys.ring.zero)


def density(sys: LVSystem, tree: TreeData | None = None) -> DensityMonomial:
    """Invariant density x^(2-m) * prod of the tree's edge DPs."""
    tree = tree or sys.tree
    verts = tuple(2 - m for m in tree.degrees)
    edges = {j: 1 for j in sorted(sys.tree_edge_ids(tree))}
    return DensityMonomial(verts, edges, tree)


@dataclass
class CheckReport:
    ok: bool
    failures: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def verify_density_ode(sys: LVSystem, tree: TreeData | None = None) -> CheckReport:
    """K = (1 - m).A + 1.B_tree - diag(A) must vanish column by column."""
    tree = tree or sys.tree
    n = sys.n
    ids = sys.tree_edge_ids(tree)
    K = []
    for p in range(n):
        acc = -sys.A[p][p]
        for i in range(n):
            acc = acc + sys.A[i][p] * (1 - tree.degrees[i])
        for j in ids:
            acc = acc + sys.dp(j).cofactor_row[p]
        K.append(acc)
    bad = [p + 1 for p, k in enumerate(K) if not k.is_zero()]
    return CheckReport(not bad, bad, {"K": [k.pretty() for k in K]})


def verify_density_ode_direct(sys: LVSystem, tree: TreeData | None = None) -> CheckReport:
    """Differentiate d along the flow and compare with div(f)*d."""
    d = density(sys, tree).ratfunc(sys)
    f = vector_field(sys)
    ddot = sum((d.diff(f"x{k + 1}") * f[k] for k in range(sys.n)), RatFunc(sys.ring.zero))
    ok = ddot == d * divergence(sys)
    return CheckReport(ok, [] if ok else ["density"])


def verify_dp_ode(sys: LVSystem) -> CheckReport:
    """x_i' = (Ax)_i x_i and P_j' = (B_j . x) P_j as polynomial identities."""
    f = vector_field(sys)
    x = sys.x
    Ax = sys.Ax()
    failures = []
    for i in range(sys.n):
        if lie_derivative(sys, x[i], f) != Ax[i] * x[i]:
            failures.append(f"x{i + 1}")
    for dp in sys.dps:
        cof = sum((c * xi for c, xi in zip(dp.cofactor_row, x)), sys.ring.zero)
        if lie_derivative(sys, dp.poly, f) != cof * dp.poly:
            failures.append(f"{dp.name} (edge {dp.u},{dp.v})")
    return CheckReport(not failures, failures)


@dataclass
class ODEIntegral:
    """I = P_index^dp_exponent * prod x_k^x_exponents[k] (exponents are polynomials)."""

    index: int
    dp_exponent: MultiPoly
    x_exponents: list


def ode_integrals(sys: LVSystem, tree: TreeData | None = None) -> list[ODEIntegral]:
    """n-1 integrals from the tree DPs, with Z = -B adj(A)."""
    ids = sys.tree_edge_ids(tree)
    detA = det(sys.A)
    if _is_zero(detA):
        raise SingularA("coefficient matrix is singular")
    adjA = adjugate(sys.A)
    B = [list(sys.dp(j).cofactor_row) for j in ids]
    Z = [[-v for v in row] for row in matmul(B, adjA)]
    ZA = matmul(Z, sys.A)
    for r, row in enumerate(ZA):
        for c, v in enumerate(row):
            if not (v + detA * B[r][c]).is_zero():
                raise AssertionError("cofactor cancellation |A| B + Z A = 0 failed")
    return [ODEIntegral(j, detA, Z[r]) for r, j in enumerate(ids)]


# -- numeric parameter draws ----------------------------------------------------------------


def is_degenerate(sys: LVSystem, params: Mapping[str, object]) -> bool:
    A = sys.numeric_A(params)
    for dp in sys.dps:
        i, k = dp.u - 1, dp.v - 1
        if (A[k][k] - A[i][k]) * (A[k][i] - A[i][i]) == 0:
            return True
    if det(A) == 0:
        return True
    return False


def random_parameters(
    sys: LVSystem,
    rng: random.Random,
    bound: int = 9,
    den_bound: int = 4,
    max_tries: int = 1000,
) -> dict[str, Fraction]:
    """Small random rationals for the free parameters, resampled while degenerate."""
    for _ in range(max_tries):
        params = {}
        for s in sys.parameters():
            num = 0
            while num == 0:
                num = rng.randint(-bound, bound)
            params[s] = Fraction(num, rng.randint(1, den_bound))
        if not is_degenerate(sys, params):
            return params
    raise RuntimeError("could not draw nondegenerate parameters")


def expand_params(sys: LVSystem, params: Mapping[str, object]) -> dict[str, object]:
    """Give every symbol of the universe the value of its class representative."""
    out = dict(params)
    for s in sys.universe.symbols:
        rep = sys.universe.find(s)
        if rep in params:
            out[s] = params[rep]
    return out
