"""First integrals of Kahan maps of G-systems.

A G-system carries one invariant density per spanning tree, and every such
density is preserved by the same Kahan map.  Ratios of densities are
therefore integrals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .algebra import MultiPoly, RatFunc, nullspace, row_reduce
from .algebra.identity import IdentityResult, SingularSample, MAX_RETRIES, check_pointwise
from .graphs import spanning_trees
from .kahan import (
    build_artifacts,
    density_cofactor,
    dp_point,
    step_point,
    verify_dp_cofactor,
)
from .lvsys import DensityMonomial, LVSystem, density


class NotInBlock(ValueError):
    """The requested vertex triple is not inside one complete block."""


@dataclass(frozen=True)
class IntegralRatio:
    numerator: DensityMonomial
    denominator: DensityMonomial
    reduced: DensityMonomial

    @classmethod
    def from_reduced(cls, reduced: DensityMonomial) -> "IntegralRatio":
        one = DensityMonomial((0,) * len(reduced.vertex_exponents), {})
        return cls(reduced, one, reduced)

    @property
    def is_constant(self) -> bool:
        return not self.reduced.named_exponents()

    def exponents(self) -> dict[str, int]:
        return self.reduced.named_exponents()

    def ratfunc(self, sys: LVSystem) -> RatFunc:
        return self.reduced.ratfunc(sys)

    def evaluate(self, sys: LVSystem, A, x):
        dp_values = {
            j: dp_point(A, x, sys.dp(j).u, sys.dp(j).v) for j in self.reduced.edge_exponents
        }
        return self.reduced.evaluate(x, dp_values)

    def pretty(self) -> str:
        num = [k if e == 1 else f"{k}^{e}" for k, e in self.exponents().items() if e > 0]
        den = [k if e == -1 else f"{k}^{-e}" for k, e in self.exponents().items() if e < 0]
        top = "*".join(num) or "1"
        return top if not den else f"{top}/({'*'.join(den)})"

    def to_dict(self, sys: LVSystem | None = None) -> dict:
        out = {"exponents": self.exponents(), "reduced": self.pretty()}
        if sys is not None:
            out["expanded"] = self.ratfunc(sys).pretty()
        return out


def spanning_densities(sys: LVSystem) -> list[DensityMonomial]:
    """One density per spanning tree of the system's graph, in enumeration order."""
    return [density(sys, t) for t in spanning_trees(sys.graph)]


def ratio_integral(d_a: DensityMonomial, d_b: DensityMonomial) -> IntegralRatio:
    return IntegralRatio(d_a, d_b, d_a / d_b)


def edge_integral(sys: LVSystem, i: int, j: int, k: int) -> IntegralRatio:
    """x_i P_beta / (x_k P_alpha) for alpha = (i, j), beta = (j, k)."""
    g = sys.graph
    if len({i, j, k}) != 3 or not (g.has_edge(i, j) and g.has_edge(j, k) and g.has_edge(i, k)):
        raise NotInBlock(f"({i},{j},{k}) is not a triangle of the graph")
    verts = [0] * sys.n
    verts[i - 1] += 1
    verts[k - 1] -= 1
    alpha = g.edge_index(i, j)
    beta = g.edge_index(j, k)
    reduced = DensityMonomial(tuple(verts), {beta: 1, alpha: -1})
    return IntegralRatio.from_reduced(reduced)


def chain_integrals(sys: LVSystem, cycle: Sequence[int] | None = None) -> list[IntegralRatio]:
    """The l-2 integrals x_c1 P_(c2,c3) / (x_c3 P_(c1,c2)), ... along a cycle."""
    if cycle is None:
        cycle = list(range(1, sys.n + 1))
    return [edge_integral(sys, *cycle[s : s + 3]) for s in range(len(cycle) - 2)]


def verify_integral_step(
    sys: LVSystem,
    I: IntegralRatio,
    h=None,
    mode: str = "symbolic",
    trials: int = 20,
    seed: int = 0,
) -> IdentityResult:
    """I(x') == I(x) under the Kahan map.

    Symbolic mode checks each DP cofactor identity involved by expansion and
    then shows that the factored cofactor of I is exactly 1.  Failures come
    with a random witness point.
    """
    if mode == "symbolic":
        art = build_artifacts(sys, h)
        bad = [j for j in I.reduced.edge_exponents if not verify_dp_cofactor(art, j)]
        cof = density_cofactor(art, I.reduced.vertex_exponents, I.reduced.edge_exponents)
        if not bad and cof.is_one():
            return IdentityResult(True, "symbolic")
        res = _probabilistic_integral_check(sys, I, trials, seed, h)
        res.ok = False
        res.mode = "symbolic"
        res.detail = {"failed_dp_identities": bad, "cofactor": cof.pretty()}
        return res
    return _probabilistic_integral_check(sys, I, trials, seed, h)


def _probabilistic_integral_check(sys, I, trials, seed, h=None) -> IdentityResult:
    variables = [f"x{i}" for i in range(1, sys.n + 1)] + sys.parameters()
    if h is None:
        variables.append("h")
    edges = [(dp.u, dp.v) for dp in sys.dps]

    def split(point):
        A = sys.numeric_A(point)
        x = [point[f"x{i}"] for i in range(1, sys.n + 1)]
        return A, x, point["h"] if h is None else Fraction(h)

    def lhs(point):
        A, x, hv = split(point)
        return I.evaluate(sys, A, step_point(A, x, hv, edges).x_new)

    def rhs(point):
        A, x, _ = split(point)
        return I.evaluate(sys, A, x)

    return check_pointwise(lhs, rhs, variables, trials, seed=seed)


# -- independence ------------------------------------------------------------------------------


def _small_rational(rng: random.Random, bound: int = 50) -> Fraction:
    num = 0
    while num == 0:
        num = rng.randint(-bound, bound)
    return Fraction(num, rng.randint(1, bound))


def independence_rank(
    sys: LVSystem,
    integrals: Sequence[IntegralRatio],
    point: Mapping | None = None,
    seed: int = 0,
) -> int:
    """Rank of the exact Jacobian matrix d I_r / d x_k at a random generic point.

    Derivatives are taken symbolically; parameters are sampled with x unless
    fixed in ``point``.  Points where some integral is singular are resampled.
    """
    rng = random.Random(seed)
    names = [f"x{i}" for i in range(1, sys.n + 1)]
    funcs = [I.ratfunc(sys) for I in integrals]
    grads = [[f.diff(v) for v in names] for f in funcs]
    fixed = dict(point or {})
    for _ in range(MAX_RETRIES):
        sample = {v: _small_rational(rng) for v in names + sys.parameters() if v not in fixed}
        sample.update(fixed)
        try:
            rows = [[g.eval(sample) for g in row] for row in grads]
        except ZeroDivisionError:
            fixed = {k: v for k, v in (point or {}).items() if k not in names}
            continue
        return len(row_reduce(rows)[1]) if rows else 0
    raise SingularSample("no regular point for the integrals")


# -- affine relations ------------------------------------------------------------------------------


@dataclass
class AffineRelation:
    """sum_i coefficients[i] * I_i == rhs with coefficients affine in the parameters."""

    coefficients: list[MultiPoly]
    rhs: MultiPoly
    trivial: bool = False
    verified: bool = False

    def pretty(self) -> str:
        terms = []
        for k, c in enumerate(self.coefficients, start=1):
            if not c.is_zero():
                terms.append(f"({c.pretty()})*I{k}")
        return f"{' + '.join(terms) or '0'} = {self.rhs.pretty()}"

    def to_dict(self) -> dict:
        return {
            "coefficients": [c.pretty() for c in self.coefficients],
            "rhs": self.rhs.pretty(),
            "trivial": self.trivial,
            "verified": self.verified,
            "relation": self.pretty(),
        }


def linear_relation_detect(
    integrals: Sequence[IntegralRatio],
    sys: LVSystem,
    seed: int = 0,
    extra_points: int = 5,
) -> list[AffineRelation]:
    """Affine relations sum lambda_i I_i = lambda_0 with each lambda of degree <= 1
    in the system parameters.

    The unknown coefficients are found from the nullspace of an evaluation
    matrix at random points, then every candidate is checked as a rational
    function identity.  An empty list means no relation of this form.
    """
    ring = sys.ring
    params = sys.parameters()
    names = [f"x{i}" for i in range(1, sys.n + 1)]
    if all(I.is_constant for I in integrals):
        coeffs = [ring.one] + [ring.zero] * (len(integrals) - 1)
        rel = AffineRelation(coeffs, ring.one, trivial=True, verified=True)
        return [rel]
    basis = [ring.one] + [ring.gen(p) for p in params]
    m = len(integrals)
    unknowns = (m + 1) * len(basis)
    rng = random.Random(seed)
    rows = []
    while len(rows) < unknowns + extra_points:
        point = {v: _small_rational(rng) for v in names + params}
        A = sys.numeric_A(point)
        x = [point[v] for v in names]
        try:
            values = [I.evaluate(sys, A, x) for I in integrals]
        except ZeroDivisionError:
            continue
        monomials = [Fraction(1)] + [point[p] for p in params]
        row = []
        for val in values + [Fraction(-1)]:
            row.extend(val * mono for mono in monomials)
        rows.append(row)
    relations = []
    for vec in nullspace(rows):
        polys = []
        for k in range(m + 1):
            chunk = vec[k * len(basis) : (k + 1) * len(basis)]
            poly = ring.zero
            for c, b in zip(chunk, basis):
                if c:
                    poly = poly + b.scale(c)
            polys.append(poly)
        scale, _ = next(p for p in polys if not p.is_zero()).primitive()
        polys = [p.scale(Fraction(1) / scale) for p in polys]
        rel = AffineRelation(polys[:m], polys[m])
        rel.verified = verify_relation(rel, integrals, sys)
        rel.trivial = all(c.is_zero() for c in rel.coefficients)
        relations.append(rel)
    return relations


def verify_relation(rel: AffineRelation, integrals: Sequence[IntegralRatio], sys: LVSystem) -> bool:
    total = RatFunc(-rel.rhs)
    for c, I in zip(rel.coefficients, integrals):
        if not c.is_zero():
            total = total + I.ratfunc(sys) * RatFunc(c)
    return total.is_zero()
