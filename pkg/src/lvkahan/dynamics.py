"""Exact iteration, degree growth along a line, and float drift experiments."""

from __future__ import annotations

import csv
import io
import math
import os
import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Mapping, Sequence

import numpy as np
from flint import nmod_mat, nmod_poly

from .algebra.linalg import det_minors
from .algebra.unipoly import content, int_exquo, int_gcd, int_mul
from .kahan import SingularStep, density_point, tree_edges, dp_point, jacobian_point, step_point
from .lvsys import LVSystem, density

DEFAULT_DEGREE_CAP = 2000
ENTROPY_THRESHOLD = 0.1
MIN_ENTROPY_STEPS = 8
MODULUS = 2**61 - 1


class DegreeOverflow(RuntimeError):
    def __init__(self, degree: int, cap: int, step: int, degrees: Sequence[int] = ()):
        super().__init__(f"degree {degree} exceeds cap {cap} at step {step}")
        self.degree = degree
        self.cap = cap
        self.step = step
        self.degrees = list(degrees)


def degree_cap() -> int:
    return int(os.environ.get("LVKAHAN_DEGREE_CAP", DEFAULT_DEGREE_CAP))


def _edges(sys: LVSystem):
    return tree_edges(sys)


# -- exact iteration -----------------------------------------------------------------


@dataclass
class Trace:
    states: list[list]
    detM: list
    jacobians: list
    h: object = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = len(self.states[0])
        w.writerow(["step"] + [f"x{i}" for i in range(1, n + 1)] + ["detM"])
        for k, state in enumerate(self.states):
            d = self.detM[k] if k < len(self.detM) else ""
            w.writerow([k] + [_fmt(v) for v in state] + [_fmt(d) if d != "" else ""])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def iterate_exact(
    sys: LVSystem,
    h,
    params: Mapping,
    x0: Sequence,
    steps: int,
    check_zero_sets: bool = True,
) -> Trace:
    """Exact Kahan trajectory; detM[k] and jacobians[k] belong to the step from x_k."""
    A = sys.numeric_A(params)
    h = Fraction(h)
    edges = _edges(sys)
    x = [Fraction(v) for v in x0]
    zero_dps = {dp.index for dp in sys.dps if dp_point(A, x, dp.u, dp.v) == 0}
    states, dets, jacs = [x], [], []
    for k in range(steps):
        try:
            res = step_point(A, x, h, edges)
        except SingularStep as exc:
            exc.step = k
            raise
        dets.append(res.detM)
        jacs.append(jacobian_point(A, x, h, edges))
        x = res.x_new
        if check_zero_sets:
            for j in zero_dps:
                dp = sys.dp(j)
                if dp_point(A, x, dp.u, dp.v) != 0:
                    raise AssertionError(f"zero set of P{j} left at step {k + 1}")
        states.append(x)
    return Trace(states, dets, jacs, h)


def telescoping_check(sys: LVSystem, params: Mapping, trace: Trace, tree=None) -> bool:
    """d(x_K) / d(x_0) == prod_k J(x_k) exactly."""
    A = sys.numeric_A(params)
    lhs = density_point(sys, A, trace.states[-1], tree) / density_point(sys, A, trace.states[0], tree)
    rhs = Fraction(1)
    for J in trace.jacobians:
        rhs *= J
    return lhs == rhs


# -- iteration over F_p ----------------------------------------------------------------
#
# Point heights grow by a factor of about deg(map) per step, so exact rational
# trajectories stop being practical after 6-8 steps.  Reducing everything
# modulo a large prime keeps exact arithmetic at fixed cost per step; any
# rational identity between the map, J and the densities survives reduction.


@dataclass
class ModularTrace:
    states: list[list[int]]
    jacobians: list[int]
    modulus: int = MODULUS


def _modular_kahan(A, x, hh, edges, p):
    """(x', J) for one Kahan step with every quantity reduced mod p."""
    n = len(x)
    Ax = [sum(A[i][k] * x[k] for k in range(n)) % p for i in range(n)]
    K = [[(1 - hh * (Ax[j] + (A[j][j] - A[i][j]) * x[j])) % p for j in range(n)] for i in range(n)]
    entries = [
        (1 - hh * (A[i][i] * x[i] + Ax[i])) % p if i == j else -(hh * x[i] * A[i][j]) % p
        for i in range(n)
        for j in range(n)
    ]
    d = int(nmod_mat(n, n, entries, p).det())
    if d == 0:
        raise SingularStep("|M| vanishes modulo the prime", d)
    inv = pow(d, -1, p)
    x_new = []
    prodK = 1
    for i in range(n):
        v = x[i]
        for j in range(n):
            if j != i:
                v = v * K[i][j] % p
                prodK = prodK * K[i][j] % p
        x_new.append(v * inv % p)
    prodL = 1
    for u, v in edges:
        prodL = prodL * (1 - hh * (Ax[u - 1] - (A[u - 1][u - 1] - A[v - 1][u - 1]) * x[u - 1])) % p
    return x_new, prodL * prodK * pow(inv, n + 1, p) % p


def iterate_modular(
    sys: LVSystem, h, params: Mapping, x0: Sequence, steps: int, modulus: int = MODULUS
) -> ModularTrace:
    """Kahan trajectory of the reduction of (h, params, x0) modulo ``modulus``."""
    A = [[_mod(v, modulus) for v in row] for row in sys.numeric_A(params)]
    hh = _mod(Fraction(h) / 2, modulus)
    x = [_mod(v, modulus) for v in x0]
    edges = _edges(sys)
    states, jacs = [x], []
    for k in range(steps):
        try:
            x, J = _modular_kahan(A, x, hh, edges, modulus)
        except SingularStep as exc:
            exc.step = k
            raise
        jacs.append(J)
        states.append(x)
    return ModularTrace(states, jacs, modulus)


def monomial_mod(sys: LVSystem, mono, A_mod, x, p: int = MODULUS) -> int:
    """Value mod p of prod x_i^e_i prod P_j^f_j (a density or an integral)."""
    val = 1
    for xi, e in zip(x, mono.vertex_exponents):
        if e:
            val = val * pow(xi, e, p) % p
    for j, e in mono.edge_exponents.items():
        dp = sys.dp(j)
        val = val * pow(dp_point(A_mod, x, dp.u, dp.v) % p, e, p) % p
    return val


def telescoping_check_modular(sys: LVSystem, params: Mapping, trace: ModularTrace, tree=None) -> bool:
    """d(x_K) == d(x_0) prod_k J(x_k) in F_p."""
    p = trace.modulus
    A = [[_mod(v, p) for v in row] for row in sys.numeric_A(params)]
    dmono = density(sys, tree)
    rhs = monomial_mod(sys, dmono, A, trace.states[0], p)
    for J in trace.jacobians:
        rhs = rhs * J % p
    return monomial_mod(sys, dmono, A, trace.states[-1], p) == rhs


# -- degree growth ---------------------------------------------------------------------


@dataclass
class DegreeSequence:
    degrees: list[int]
    entropy: float
    verdict: str
    overflow: bool = False
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"degrees": self.degrees, "entropy": self.entropy, "verdict": self.verdict}

    def to_csv(self) -> str:
        lines = ["k,degree"] + [f"{k},{d}" for k, d in enumerate(self.degrees)]
        return "\n".join(lines) + "\n"


def entropy_estimate(degrees: Sequence[int]) -> float:
    """Least-squares slope of log d_k over the last ceil(K/2) points."""
    K = len(degrees) - 1
    m = max(2, math.ceil(K / 2))
    ks = list(range(len(degrees)))[-m:]
    ys = [math.log(d) for d in degrees[-m:]]
    return float(np.polyfit(ks, ys, 1)[0])


def verdict_for(degrees: Sequence[int], slope: float) -> str:
    if len(degrees) - 1 < MIN_ENTROPY_STEPS:
        return "inconclusive"
    return "exponential" if slope > ENTROPY_THRESHOLD else "subexponential"


def _poly_det(matrix: list[list[tuple]]) -> tuple:
    """Determinant of a matrix of integer polynomials by memoised minors."""
    n = len(matrix)
    memo: dict[tuple[int, int], tuple] = {}

    def add(p, q):
        if len(p) < len(q):
            p, q = q, p
        out = list(p)
        for i, c in enumerate(q):
            out[i] += c
        while out and not out[-1]:
            out.pop()
        return tuple(out)

    def minor(row: int, cols: int) -> tuple:
        if row == n:
            return (1,)
        key = (row, cols)
        if key in memo:
            return memo[key]
        total: tuple = ()
        sign = 1
        for j in range(n):
            if cols >> j & 1:
                entry = matrix[row][j]
                if entry:
                    term = int_mul(entry, minor(row + 1, cols & ~(1 << j)))
                    total = add(total, term if sign > 0 else tuple(-c for c in term))
                sign = -sign
        memo[key] = total
        return total

    return minor(0, (1 << n) - 1)


def _lin_comb(coeffs: Sequence[int], polys: Sequence[tuple], const: tuple = ()) -> tuple:
    length = max([len(const)] + [len(p) for c, p in zip(coeffs, polys) if c])
    out = list(const) + [0] * (length - len(const))
    for c, p in zip(coeffs, polys):
        if c:
            for i, v in enumerate(p):
                out[i] += c * v
    while out and not out[-1]:
        out.pop()
    return tuple(out)


def _kahan_line_step(A_int, S: int, hS: int, num: list[tuple], den: tuple):
    """One projective Kahan step on integer polynomials in t.

    With x = num/den and all quantities scaled by S (so that S*h/2 = hS/2 is
    handled as the integer hS and a factor 2), returns unreduced (num', den').
    """
    n = len(num)
    # Ax numerators: (A x)_i * den = sum_j A_ij num_j, with A scaled to integers
    Ax = [_lin_comb(A_int[i], num) for i in range(n)]
    twoS_den = tuple(2 * S * c for c in den)
    # 2 S den K_ij = 2 S den - hS ((Ax)_j + (A_jj - A_ij) x_j) den
    K = [
        [
            _lin_comb([-hS, -hS * (A_int[j][j] - A_int[i][j])], [Ax[j], num[j]], twoS_den)
            if j != i
            else None
            for j in range(n)
        ]
        for i in range(n)
    ]
    M = []
    for i in range(n):
        row = []
        for j in range(n):
            if i == j:
                row.append(_lin_comb([-hS * A_int[i][i], -hS], [num[i], Ax[i]], twoS_den))
            else:
                row.append(tuple(-hS * A_int[i][j] * c for c in num[i]))
        M.append(row)
    new_den = _poly_det(M)
    new_num = []
    for i in range(n):
        p = tuple(2 * S * c for c in num[i])
        for j in range(n):
            if j != i:
                p = int_mul(p, K[i][j])
        new_num.append(p)
    return new_num, new_den


def _reduce(num: list[tuple], den: tuple) -> tuple[list[tuple], tuple]:
    g = den
    for p in num:
        if p:
            g = int_gcd(g, p)
            if len(g) == 1:
                break
    if len(g) > 1:
        num = [int_exquo(p, g) if p else p for p in num]
        den = int_exquo(den, g)
    c = content(den)
    for p in num:
        c = gcd(c, content(p)) if p else c
    if den[-1] < 0:
        c = -c
    if c not in (0, 1):
        num = [tuple(v // c for v in p) for p in num]
        den = tuple(v // c for v in den)
    return num, den


def _scaled_integer_matrix(A: Sequence[Sequence[Fraction]], h: Fraction):
    """Integers A_int, S, hS with A = A_int / a_den and S h = hS * a_den ... chosen so
    that h/2 * A_ij * (.) becomes hS * A_int_ij / (2 S)."""
    a_den = 1
    for row in A:
        for v in row:
            a_den = lcm(a_den, Fraction(v).denominator)
    A_int = [[int(Fraction(v) * a_den) for v in row] for row in A]
    # h A = (h / a_den) A_int; write h / a_den = hS / S with integers
    q = Fraction(h) / a_den
    return A_int, q.denominator, q.numerator



def _mod(v, modulus: int = MODULUS) -> int:
    v = Fraction(v)
    if v.denominator % modulus == 0:
        raise ZeroDivisionError("denominator vanishes modulo the prime")
    return v.numerator * pow(v.denominator, -1, modulus) % modulus


def _modular_line_step(A, hh, num, den):
    """Projective Kahan step over F_p[t]: returns unreduced (num', den').

    With x = num/den: den*K_ij and den*M_ij are polynomials, and
    x'_i = num_i prod_{j != i} (den K_ij) / det(den M).
    """
    n = len(num)
    Ax = [sum((num[k] * A[i][k] for k in range(n) if A[i][k]), num[0] * 0) for i in range(n)]
    new_num = []
    for i in range(n):
        p = num[i]
        for j in range(n):
            if j != i:
                p = p * (den - (Ax[j] + num[j] * ((A[j][j] - A[i][j]) % MODULUS)) * hh)
        new_num.append(p)
    M = [
        [
            den - (num[i] * A[i][i] + Ax[i]) * hh if i == j else -(num[i] * (A[i][j] * hh % MODULUS))
            for j in range(n)
        ]
        for i in range(n)
    ]
    return new_num, det_minors(M)


def _modular_reduce(num, den):
    g = den
    for p in num:
        if g.degree() == 0:
            break
        if p != 0:
            g = g.gcd(p)
    if g.degree() > 0:
        num = [p // g for p in num]
        den = den // g
    return num, den


def _line_degree(num, den) -> int:
    return max(den.degree(), *(p.degree() for p in num))


def degree_growth(
    sys: LVSystem,
    h,
    params: Mapping,
    line: tuple[Sequence, Sequence] | None = None,
    K: int = 8,
    seed: int = 0,
    cap: int | None = None,
    method: str = "modular",
) -> DegreeSequence:
    """Degrees of the iterates restricted to the line x = p + t q.

    Each iterate is a vector of polynomial numerators and a common
    denominator in t; after every step their collective gcd is divided out
    and the maximum degree recorded.  ``method="modular"`` works over F_p with
    p = 2^61 - 1 (fast; exact up to an unlucky-prime event of negligible
    probability); ``method="exact"`` works over Z and is only practical for
    the first few steps.
    """
    cap = degree_cap() if cap is None else cap
    rng = random.Random(seed)
    if line is None:
        p = [Fraction(rng.randint(1, 30), rng.randint(1, 30)) for _ in range(sys.n)]
        q = [Fraction(rng.randint(-30, 30) or 1, rng.randint(1, 30)) for _ in range(sys.n)]
    else:
        p, q = [Fraction(v) for v in line[0]], [Fraction(v) for v in line[1]]
    A = sys.numeric_A(params)
    if method == "modular":
        Am = [[_mod(v) for v in row] for row in A]
        hh = _mod(Fraction(h) / 2)
        num = [nmod_poly([_mod(pi), _mod(qi)], MODULUS) for pi, qi in zip(p, q)]
        den = nmod_poly([1], MODULUS)

        def step(num, den):
            num, den = _modular_line_step(Am, hh, num, den)
            if den == 0:
                raise SingularStep("the line lies in the exceptional set")
            return _modular_reduce(num, den)

        def degree(num, den):
            return _line_degree(num, den)

    elif method == "exact":
        A_int, S, hS = _scaled_integer_matrix(A, Fraction(h))
        den_pq = 1
        for v in p + q:
            den_pq = lcm(den_pq, v.denominator)
        num = [_trim((int(pi * den_pq), int(qi * den_pq))) for pi, qi in zip(p, q)]
        num, den = _reduce(num, (den_pq,))

        def step(num, den):
            num, den = _kahan_line_step(A_int, S, hS, num, den)
            if not den:
                raise SingularStep("the line lies in the exceptional set")
            return _reduce(num, den)

        def degree(num, den):
            return max(len(den), *(len(v) for v in num)) - 1

    else:
        raise ValueError(f"unknown method {method!r}")
    degrees = [degree(num, den)]
    notes = []
    for k in range(1, K + 1):
        try:
            num, den = step(num, den)
        except SingularStep as exc:
            exc.step = k
            raise
        d = degree(num, den)
        if d < degrees[-1]:
            msg = f"degree dropped from {degrees[-1]} to {d} at step {k}"
            notes.append(msg)
            warnings.warn(msg)
        degrees.append(d)
        if d > cap:
            raise DegreeOverflow(d, cap, k, degrees)
    slope = entropy_estimate(degrees) if any(d > 1 for d in degrees) else 0.0
    return DegreeSequence(degrees, slope, verdict_for(degrees, slope), warnings=notes)


def _trim(p: tuple) -> tuple:
    out = list(p)
    while out and not out[-1]:
        out.pop()
    return tuple(out)


# -- float drift -------------------------------------------------------------------------


def _float_density_log(sys: LVSystem, A: np.ndarray, x: np.ndarray, tree=None) -> float:
    """log |d(x)| for the tree density."""
    d = density(sys, tree)
    val = 0.0
    for xi, e in zip(x, d.vertex_exponents):
        if e:
            val += e * math.log(abs(xi))
    for j, e in d.edge_exponents.items():
        dp = sys.dp(j)
        val += e * math.log(abs(dp_point(A, x, dp.u, dp.v)))
    return val


def _lv_field(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    return x * (A @ x)


def _lv_jac(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.diag(A @ x) + x[:, None] * A


def _rk4_step(A: np.ndarray, x: np.ndarray, h: float) -> tuple[np.ndarray, float]:
    """Classical RK4 step and its Jacobian determinant (variational equations)."""
    n = len(x)
    I = np.eye(n)
    k1 = _lv_field(A, x)
    J1 = _lv_jac(A, x)
    x2 = x + 0.5 * h * k1
    k2 = _lv_field(A, x2)
    J2 = _lv_jac(A, x2) @ (I + 0.5 * h * J1)
    x3 = x + 0.5 * h * k2
    k3 = _lv_field(A, x3)
    J3 = _lv_jac(A, x3) @ (I + 0.5 * h * J2)
    x4 = x + h * k3
    k4 = _lv_field(A, x4)
    J4 = _lv_jac(A, x4) @ (I + h * J3)
    x_new = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    D = I + h / 6 * (J1 + 2 * J2 + 2 * J3 + J4)
    return x_new, float(np.linalg.det(D))


def _kahan_float_step(A: np.ndarray, x: np.ndarray, h: float, edges) -> tuple[np.ndarray, float]:
    res = step_point(A.tolist(), [float(v) for v in x], float(h), edges)
    return np.array(res.x_new), float(jacobian_point(A.tolist(), [float(v) for v in x], float(h), edges))


@dataclass
class DriftSeries:
    integrator: str
    drift: list[float]
    terminated: bool = False

    @property
    def max_abs(self) -> float:
        return max((abs(v) for v in self.drift), default=0.0)

    def to_csv(self) -> str:
        lines = ["k,drift"] + [f"{k},{v!r}" for k, v in enumerate(self.drift)]
        return "\n".join(lines) + "\n"


def measure_drift_float(
    sys: LVSystem,
    h: float,
    params: Mapping,
    x0: Sequence[float],
    steps: int,
    integrator: str = "kahan",
    tree=None,
) -> DriftSeries:
    """log d(x_k) - log d(x_0) - sum_{i<k} log |J(x_i)| along a float trajectory."""
    A = np.array([[float(v) for v in row] for row in sys.numeric_A(params)])
    x = np.array([float(v) for v in x0])
    edges = _edges(sys)
    base = _float_density_log(sys, A, x, tree)
    logJ = 0.0
    series = [0.0]
    for _ in range(steps):
        if integrator == "kahan":
            x_new, J = _kahan_float_step(A, x, h, edges)
        elif integrator == "rk4":
            x_new, J = _rk4_step(A, x, h)
        else:
            raise ValueError(f"unknown integrator {integrator!r}")
        if not np.all(np.isfinite(x_new)) or J == 0 or not math.isfinite(J):
            return DriftSeries(integrator, series, terminated=True)
        logJ += math.log(abs(J))
        x = x_new
        try:
            val = _float_density_log(sys, A, x, tree) - base - logJ
        except ValueError:
            return DriftSeries(integrator, series, terminated=True)
        series.append(val)
    return DriftSeries(integrator, series)
