"""Kahan discretisation of LV tree- and block-graph systems.

The Kahan map x -> x' solves M x' = x with
    M = I - h/2 (diag(x) A + diag(A x)),
and for these systems factorises as x'_i = x_i prod_{j != i} K_ij / |M|.
All table builders are written against plain ``+ - *`` so the same code runs
on MultiPoly (symbolic), Fraction (exact point) and float entries.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .algebra import Factored, MultiPoly, RatFunc, det
from .algebra.identity import IdentityResult, check_pointwise, random_rational
from .algebra.linalg import solve
from .algebra.poly import product
from .graphs import TreeData
from .lvsys import CheckReport, LVSystem, density

DET_M = "|M|"


class SingularStep(ZeroDivisionError):
    """The point lies on the exceptional hypersurface |M| = 0."""

    def __init__(self, message: str, det_value=None, step: int | None = None):
        super().__init__(message)
        self.det_value = det_value
        self.step = step


def _half(h):
    return h * 0.5 if isinstance(h, float) else h * Fraction(1, 2)


def _one_like(v):
    if isinstance(v, MultiPoly):
        return v.ring.one
    return 1.0 if isinstance(v, float) else 1


def _dot(row, x):
    acc = None
    for a, b in zip(row, x):
        t = a * b
        acc = t if acc is None else acc + t
    return acc


# -- generic tables ---------------------------------------------------------------


def kahan_tables(A, x, h, edges: Sequence[tuple[int, int]]):
    """Return (Ax, K, L, M, Q) for entries of any ring-like type.

    K[i][j] = 1 - h/2 ((Ax)_j + (A_jj - A_ij) x_j)
    L_e     = 1 - h/2 ((Ax)_u - (A_uu - A_vu) x_u)  for e = (u, v)
    """
    n = len(A)
    hh = _half(h)
    one = _one_like(x[0]) if not isinstance(h, MultiPoly) else h.ring.one
    Ax = [_dot(A[i], x) for i in range(n)]
    K = [
        [one - hh * (Ax[j] + (A[j][j] - A[i][j]) * x[j]) for j in range(n)] for i in range(n)
    ]
    L = []
    for u, v in edges:
        i, k = u - 1, v - 1
        L.append(one - hh * (Ax[i] - (A[i][i] - A[k][i]) * x[i]))
    M = [
        [
            (one - hh * (A[i][i] * x[i] + Ax[i])) if i == j else -(hh * x[i] * A[i][j])
            for j in range(n)
        ]
        for i in range(n)
    ]
    Q = [
        [
            (one + hh * (A[i][i] * x[i] - Ax[i])) if i == j else hh * x[i] * A[i][j]
            for j in range(n)
        ]
        for i in range(n)
    ]
    return Ax, K, L, M, Q


@dataclass
class KahanArtifacts:
    sys: LVSystem
    h: object
    M: list
    Q: list
    K: list
    L: list
    Ax: list

    @cached_property
    def detM(self) -> MultiPoly:
        return det(self.M)

    def tree_L(self, tree: TreeData | None = None) -> list:
        """L factors of the edges of ``tree`` (default: the system's tree)."""
        return [self.L[j - 1] for j in self.sys.tree_edge_ids(tree)]

    def numerators(self) -> list[MultiPoly]:
        """N_i = x_i * prod_{j != i} K_ij, so that x'_i = N_i / |M|."""
        x = self.sys.x
        n = self.sys.n
        return [
            product(self.sys.ring, [x[i]] + [self.K[i][j] for j in range(n) if j != i])
            for i in range(n)
        ]

    def check_invariants(self) -> CheckReport:
        failures = []
        n = self.sys.n
        for u, v in self.sys.graph.edges:
            for j in range(n):
                if j not in (u - 1, v - 1) and self.K[u - 1][j] != self.K[v - 1][j]:
                    failures.append(f"K[{u}][{j + 1}] != K[{v}][{j + 1}]")
        A, x, hh = self.sys.A, self.sys.x, _half(self.h)
        for dp, Lval in zip(self.sys.dps, self.L):
            i, k = dp.u - 1, dp.v - 1
            swapped = 1 - hh * (self.Ax[k] - (A[k][k] - A[i][k]) * x[k])
            if swapped != Lval:
                failures.append(f"L{dp.index} not symmetric")
        return CheckReport(not failures, failures)


def tree_edges(sys: LVSystem, tree: TreeData | None = None) -> list[tuple[int, int]]:
    """DP orientations of the tree's edges; the Jacobian uses only these L factors."""
    return [(sys.dp(j).u, sys.dp(j).v) for j in sys.tree_edge_ids(tree)]


def _symbolic_h(sys: LVSystem, h):
    if h is None or h == "h":
        return sys.ring.gen("h")
    if isinstance(h, MultiPoly):
        return h
    return sys.ring.const(Fraction(h))


def build_artifacts(sys: LVSystem, h=None) -> KahanArtifacts:
    """Symbolic M, Q, K, L for ``sys``; ``h`` is the symbol h or a rational."""
    hs = _symbolic_h(sys, h)
    Ax, K, L, M, Q = kahan_tables(sys.A, sys.x, hs, [(dp.u, dp.v) for dp in sys.dps])
    art = KahanArtifacts(sys, hs, M, Q, K, L, Ax)
    report = art.check_invariants()
    if not report:
        raise AssertionError(f"Kahan table invariants failed: {report.failures}")
    return art


# -- point evaluation -------------------------------------------------------------------


@dataclass
class StepResult:
    x_new: list
    detM: object
    K: list = field(repr=False, default_factory=list)
    L: list = field(repr=False, default_factory=list)


def step_point(A, x, h, edges=(), check: bool = False) -> StepResult:
    """One explicit Kahan step at a numeric point (Fraction or float entries)."""
    n = len(A)
    _, K, L, M, _ = kahan_tables(A, x, h, edges)
    if isinstance(x[0], float):
        d = float(np.linalg.det(np.array(M, dtype=float)))
    else:
        d = det(M)
    if d == 0:
        raise SingularStep("|M| vanishes at this point", d)
    x_new = []
    for i in range(n):
        val = x[i]
        for j in range(n):
            if j != i:
                val = val * K[i][j]
        x_new.append(val / d)
    if check and not isinstance(x[0], float):
        solved = solve(M, x)
        if solved != x_new:
            raise AssertionError("explicit Kahan step disagrees with the linear solve")
    return StepResult(x_new, d, K, L)


def jacobian_point(A, x, h, edges) -> object:
    """Closed-form Jacobian determinant at a numeric point."""
    n = len(A)
    _, K, L, M, _ = kahan_tables(A, x, h, edges)
    d = float(np.linalg.det(np.array(M, dtype=float))) if isinstance(x[0], float) else det(M)
    if d == 0:
        raise SingularStep("|M| vanishes at this point", d)
    num = 1.0 if isinstance(x[0], float) else Fraction(1)
    for Lval in L:
        num = num * Lval
    for i in range(n):
        for j in range(n):
            if j != i:
                num = num * K[i][j]
    return num / d ** (n + 1)


def density_point(sys: LVSystem, A, x, tree: TreeData | None = None):
    dmono = density(sys, tree)
    dp_values = {}
    for j in dmono.edge_exponents:
        dp = sys.dp(j)
        i, k = dp.u - 1, dp.v - 1
        dp_values[j] = (A[k][i] - A[i][i]) * x[i] + (A[k][k] - A[i][k]) * x[k]
    return dmono.evaluate(x, dp_values)


def dp_point(A, x, u: int, v: int):
    i, k = u - 1, v - 1
    return (A[k][i] - A[i][i]) * x[i] + (A[k][k] - A[i][k]) * x[k]


# -- symbolic identities -------------------------------------------------------------------


def explicit_step(sys: LVSystem, h=None, x=None, params: Mapping | None = None):
    """Symbolic mode (x None): list of RatFunc N_i/|M|.  Point mode: StepResult."""
    if x is None:
        art = build_artifacts(sys, h)
        den = art.detM
        return [RatFunc(N, den) for N in art.numerators()]
    A = sys.numeric_A(params or {})
    return step_point(A, list(x), h, [(dp.u, dp.v) for dp in sys.dps], check=True)


def verify_linear_system(art: KahanArtifacts) -> CheckReport:
    """M x' = x, i.e. sum_j M_ij N_j == x_i |M| for each row."""
    N = art.numerators()
    x = art.sys.x
    failures = []
    for i, row in enumerate(art.M):
        lhs = art.sys.ring.zero
        for Mij, Nj in zip(row, N):
            lhs = lhs + Mij * Nj
        if lhs != x[i] * art.detM:
            failures.append(f"row {i + 1}")
    return CheckReport(not failures, failures)


def dp_cofactor_factored(art: KahanArtifacts, index: int) -> Factored:
    """L_j prod_{k != u,v} K_{u,k} / |M| with |M| kept opaque."""
    dp = art.sys.dp(index)
    n = art.sys.n
    u, v = dp.u - 1, dp.v - 1
    items = [(art.L[index - 1], 1), (DET_M, -1)]
    items += [(art.K[u][k], 1) for k in range(n) if k not in (u, v)]
    return Factored.of(*items)


def verify_dp_cofactor(art: KahanArtifacts, index: int) -> bool:
    """P_j(x') |M| == L_j P_j prod K_{u,k}, a polynomial identity in all symbols."""
    dp = art.sys.dp(index)
    n = art.sys.n
    u, v = dp.u - 1, dp.v - 1
    x = art.sys.x
    alpha = dp.poly.coefficient_in(f"x{dp.u}", 1)
    beta = dp.poly.coefficient_in(f"x{dp.v}", 1)
    ring = art.sys.ring
    Nu = product(ring, [x[u]] + [art.K[u][k] for k in range(n) if k != u])
    Nv = product(ring, [x[v]] + [art.K[v][k] for k in range(n) if k != v])
    lhs = alpha * Nu + beta * Nv
    rhs = product(ring, [art.L[index - 1], dp.poly] + [art.K[u][k] for k in range(n) if k not in (u, v)])
    return lhs == rhs


def dp_cofactor(sys: LVSystem, h, index: int, mode: str = "symbolic", seed: int = 0):
    """Cofactor of edge DP ``index`` under the Kahan map, after checking it."""
    art = build_artifacts(sys, h)
    cof = dp_cofactor_factored(art, index)
    if mode == "symbolic":
        if not verify_dp_cofactor(art, index):
            raise AssertionError(f"cofactor identity fails for edge DP {index}")
    else:
        res = probabilistic_dp_check(sys, index, seed=seed)
        if not res:
            raise AssertionError(f"cofactor identity fails for edge DP {index}: {res.witness}")
    return cof


def cofactor_as_ratfunc(art: KahanArtifacts, cof: Factored) -> RatFunc:
    return cof.expand(art.sys.ring, {DET_M: art.detM})


def det_Q(sys: LVSystem, h=None, mode: str = "symbolic", seed: int = 0, trials: int = 10):
    """|Q| (symbolic) after asserting |Q| == prod L_i."""
    if mode == "symbolic":
        art = build_artifacts(sys, h)
        dq = det(art.Q)
        prodL = product(sys.ring, art.tree_L())
        if dq != prodL:
            raise AssertionError("|Q| != prod L_i")
        return dq
    rng = random.Random(seed)
    edges = tree_edges(sys)

    def sample(point):
        A, x, hv = _split_point(sys, point)
        _, _, L, _, Q = kahan_tables(A, x, hv, edges)
        prodL = Fraction(1)
        for Lv in L:
            prodL *= Lv
        return det(Q), prodL

    res = check_pointwise(
        lambda p: sample(p)[0], lambda p: sample(p)[1], _point_variables(sys), trials, rng
    )
    if not res:
        raise AssertionError(f"|Q| != prod L_i at {res.witness}")
    return res


def jacobian_factored(art: KahanArtifacts) -> Factored:
    """prod L_i * prod_i prod_{j != i} K_ij / |M|^(n+1)."""
    n = art.sys.n
    items = [(Lv, 1) for Lv in art.tree_L()]
    items += [(art.K[i][j], 1) for i in range(n) for j in range(n) if j != i]
    items.append((DET_M, -(n + 1)))
    return Factored.of(*items)


def jacobian_det(sys: LVSystem, h=None, expand: bool = False):
    art = build_artifacts(sys, h)
    J = jacobian_factored(art)
    return cofactor_as_ratfunc(art, J) if expand else J


def _specialised_tables(sys: LVSystem, h, params: Mapping | None):
    """Kahan tables with system parameters (and h) optionally fixed to rationals."""
    params = dict(params or {})
    hs = _symbolic_h(sys, params.pop("h", h))
    A = sys.A
    if params:
        A = [[a.subs(params) for a in row] for row in A]
    return kahan_tables(A, sys.x, hs, tree_edges(sys))


def _step_derivative_rows(sys: LVSystem, K, M):
    n = sys.n
    x = sys.x
    N = [product(sys.ring, [x[i]] + [K[i][j] for j in range(n) if j != i]) for i in range(n)]
    D = det(M)
    dD = [D.diff(f"x{k + 1}") for k in range(n)]
    rows = [[N[i].diff(f"x{k + 1}") * D - N[i] * dD[k] for k in range(n)] for i in range(n)]
    return rows, D


def jacobian_symbolic(sys: LVSystem, h=None, params: Mapping | None = None) -> RatFunc:
    """det(d x'/d x) obtained by differentiating the explicit map.

    ``params`` optionally fixes system parameters (and h) to rationals first,
    which keeps the expansion small.
    """
    _, K, _, M, _ = _specialised_tables(sys, h, params)
    rows, D = _step_derivative_rows(sys, K, M)
    return RatFunc(det(rows), D ** (2 * sys.n))


def verify_jacobian_symbolic(sys: LVSystem, h=None, params: Mapping | None = None) -> bool:
    """det(N' |M| - N |M|') == prod L prod K |M|^(n-1) as a polynomial identity."""
    n = sys.n
    _, K, L, M, _ = _specialised_tables(sys, h, params)
    rows, D = _step_derivative_rows(sys, K, M)
    factors = list(L) + [K[i][j] for i in range(n) for j in range(n) if j != i]
    return det(rows) == product(sys.ring, factors) * D ** (n - 1)


def verify_jacobian_at_points(
    sys: LVSystem, params: Mapping | None = None, trials: int = 5, seed: int = 0, h=None
) -> IdentityResult:
    """Differentiate the explicit map symbolically, then compare det(d x'/d x)
    with the closed form exactly at random rational points.

    Symbols not fixed by ``params`` stay symbolic through the differentiation
    and are sampled along with x."""
    params = dict(params or {})
    _, K, _, M, _ = _specialised_tables(sys, h, params)
    n = sys.n
    x = sys.x
    N = [product(sys.ring, [x[i]] + [K[i][j] for j in range(n) if j != i]) for i in range(n)]
    D = det(M)
    names = [f"x{k + 1}" for k in range(n)]
    dN = [[Ni.diff(v) for v in names] for Ni in N]
    dD = [D.diff(v) for v in names]
    edges = tree_edges(sys)
    variables = list(names) + [p for p in sys.parameters() if p not in params]
    if h is None and "h" not in params:
        variables.append("h")

    def lhs(point):
        Dv = D.eval(point)
        if Dv == 0:
            raise SingularStep("|M| vanishes at this point", Dv)
        Nv = [Ni.eval(point) for Ni in N]
        dDv = [g.eval(point) for g in dD]
        rows = [
            [(dN[i][k].eval(point) * Dv - Nv[i] * dDv[k]) / Dv**2 for k in range(n)]
            for i in range(n)
        ]
        return det(rows)

    def rhs(point):
        full = {**params, **point}
        hv = full.get("h", h)
        xv = [point[v] for v in names]
        return jacobian_point(sys.numeric_A(full), xv, Fraction(hv), edges)

    return check_pointwise(lhs, rhs, variables, trials, seed=seed)


# -- measure preservation --------------------------------------------------------------------


def density_cofactor(art: KahanArtifacts, exponents_x, exponents_p: Mapping[int, int]) -> Factored:
    """Cofactor of prod x_i^e_i prod P_j^f_j under the Kahan map (|M| opaque)."""
    n = art.sys.n
    total = Factored()
    for i, e in enumerate(exponents_x):
        if e:
            ratio = Factored.of(*[(art.K[i][j], 1) for j in range(n) if j != i], (DET_M, -1))
            total = total * ratio ** e
    for j, e in exponents_p.items():
        if e:
            total = total * dp_cofactor_factored(art, j) ** e
    return total


def _point_variables(sys: LVSystem) -> list[str]:
    return [f"x{i}" for i in range(1, sys.n + 1)] + sys.parameters() + ["h"]


def _split_point(sys: LVSystem, point: Mapping):
    A = sys.numeric_A(point)
    x = [point[f"x{i}"] for i in range(1, sys.n + 1)]
    return A, x, point["h"]


def probabilistic_dp_check(sys: LVSystem, index: int, trials: int = 10, seed: int = 0):
    dp = sys.dp(index)
    edges = [(d.u, d.v) for d in sys.dps]

    def lhs(point):
        A, x, h = _split_point(sys, point)
        res = step_point(A, x, h, edges)
        return dp_point(A, res.x_new, dp.u, dp.v)

    def rhs(point):
        A, x, h = _split_point(sys, point)
        res = step_point(A, x, h, edges)
        u, v = dp.u - 1, dp.v - 1
        c = res.L[index - 1]
        for k in range(sys.n):
            if k not in (u, v):
                c *= res.K[u][k]
        return c / res.detM * dp_point(A, x, dp.u, dp.v)

    return check_pointwise(lhs, rhs, _point_variables(sys), trials, seed=seed)


def verify_measure_step(
    sys: LVSystem,
    h=None,
    tree: TreeData | None = None,
    mode: str = "symbolic",
    trials: int = 20,
    seed: int = 0,
    check_step: bool = False,
) -> IdentityResult:
    """d(x') == J(x) d(x) for the density of ``tree`` (default: the system's tree).

    Symbolic mode proves the identity from exact polynomial identities: each
    DP cofactor identity is expanded and checked, then the cofactor of d is
    assembled in factored form and compared factor by factor with the closed
    Jacobian.  If the factor bookkeeping disagrees, a random evaluation
    supplies a witness.  Probabilistic mode evaluates both sides at random
    rational points, including the explicit step itself.
    """
    tree = tree or sys.tree
    dmono = density(sys, tree)
    if mode == "symbolic":
        art = build_artifacts(sys, h)
        bad = [j for j in dmono.edge_exponents if not verify_dp_cofactor(art, j)]
        step_ok = True
        if check_step:
            step_ok = bool(verify_linear_system(art))
        if not bad and step_ok:
            cof = density_cofactor(art, dmono.vertex_exponents, dmono.edge_exponents)
            if cof == jacobian_factored(art):
                return IdentityResult(True, "symbolic")
        witness = probabilistic_measure_check(sys, tree, trials, seed)
        witness.mode = "symbolic"
        witness.ok = False
        witness.detail = {"failed_dp_identities": bad, "step_ok": step_ok}
        return witness
    return probabilistic_measure_check(sys, tree, trials, seed)


def probabilistic_measure_check(
    sys: LVSystem, tree: TreeData | None = None, trials: int = 20, seed: int = 0, h=None
) -> IdentityResult:
    edges = tree_edges(sys)
    variables = _point_variables(sys)
    if h is not None:
        variables.remove("h")

    def parts(point):
        A, x, hv = _split_point(sys, {**point, "h": h if h is not None else point["h"]})
        res = step_point(A, x, hv, edges)
        return A, x, hv, res

    def lhs(point):
        A, x, hv, res = parts(point)
        return density_point(sys, A, res.x_new, tree)

    def rhs(point):
        A, x, hv, res = parts(point)
        return jacobian_point(A, x, hv, edges) * density_point(sys, A, x, tree)

    return check_pointwise(lhs, rhs, variables, trials, seed=seed)


def random_exact_point(sys: LVSystem, rng: random.Random) -> dict:
    return {v: random_rational(rng) for v in _point_variables(sys)}


# -- float finite differences --------------------------------------------------------------------


def float_step(A: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    n = len(x)
    Ax = A @ x
    diagA = np.diag(A)
    K = 1.0 - 0.5 * h * (Ax[None, :] + (diagA[None, :] - A) * x[None, :])
    M = np.eye(n) - 0.5 * h * (x[:, None] * A + np.diag(Ax))
    d = np.linalg.det(M)
    np.fill_diagonal(K, 1.0)
    return x * np.prod(K, axis=1) / d


def float_jacobian_formula(A: np.ndarray, x: np.ndarray, h: float, edges) -> float:
    n = len(x)
    Ax = A @ x
    diagA = np.diag(A)
    K = 1.0 - 0.5 * h * (Ax[None, :] + (diagA[None, :] - A) * x[None, :])
    np.fill_diagonal(K, 1.0)
    M = np.eye(n) - 0.5 * h * (x[:, None] * A + np.diag(Ax))
    L = [1.0 - 0.5 * h * (Ax[u - 1] - (A[u - 1, u - 1] - A[v - 1, u - 1]) * x[u - 1]) for u, v in edges]
    return float(np.prod(L) * np.prod(K) / np.linalg.det(M) ** (n + 1))


def finite_difference_jacobian(A: np.ndarray, x: np.ndarray, h: float, eps: float = 1e-6) -> float:
    n = len(x)
    cols = []
    for k in range(n):
        step = eps * max(1.0, abs(x[k]))
        xp, xm = x.copy(), x.copy()
        xp[k] += step
        xm[k] -= step
        cols.append((float_step(A, xp, h) - float_step(A, xm, h)) / (2 * step))
    return float(np.linalg.det(np.column_stack(cols)))
