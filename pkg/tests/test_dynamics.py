import random
from fractions import Fraction

import pytest

from lvkahan.graphs import TreeData, complete_graph, from_edge_list, path_graph, random_labeled_tree
from lvkahan.integrals import chain_integrals
from lvkahan.dynamics import (
    DegreeOverflow,
    degree_growth,
    entropy_estimate,
    _mod,
    iterate_exact,
    iterate_modular,
    measure_drift_float,
    monomial_mod,
    telescoping_check,
    telescoping_check_modular,
    verdict_for,
)
from lvkahan.kahan import SingularStep, dp_point
from lvkahan.lvsys import gsystem_adjacency, random_parameters, tree_adjacency

BUSHY = TreeData.from_graph(from_edge_list(4, [(1, 2), (2, 3), (2, 4)]))


@pytest.fixture(scope="module")
def k4():
    sys_ = gsystem_adjacency(complete_graph(4))
    return sys_, random_parameters(sys_, random.Random(0))


def random_x(rng, n):
    return [Fraction(rng.randint(1, 9), rng.randint(1, 9)) for _ in range(n)]


def test_h_zero_trace_is_constant():
    rng = random.Random(1)
    sys_ = tree_adjacency(BUSHY)
    params = random_parameters(sys_, rng)
    x0 = random_x(rng, 4)
    trace = iterate_exact(sys_, 0, params, x0, 5)
    assert all(s == x0 for s in trace.states)
    assert all(J == 1 for J in trace.jacobians)


def test_telescoping_on_random_tree_trajectories():
    rng = random.Random(7)
    for _ in range(3):
        sys_ = tree_adjacency(random_labeled_tree(4, rng))
        params = random_parameters(sys_, rng)
        trace = iterate_exact(sys_, Fraction(1, 10), params, random_x(rng, 4), 6)
        assert telescoping_check(sys_, params, trace)


def test_integrals_constant_along_exact_trace(k4):
    sys_, params = k4
    rng = random.Random(3)
    trace = iterate_exact(sys_, Fraction(1, 20), params, random_x(rng, 4), 6)
    A = sys_.numeric_A(params)
    for I in chain_integrals(sys_):
        vals = {I.evaluate(sys_, A, x) for x in trace.states}
        assert len(vals) == 1


def test_modular_trace_reduces_the_exact_trace(k4):
    sys_, params = k4
    x0 = random_x(random.Random(5), 4)
    exact = iterate_exact(sys_, Fraction(1, 10), params, x0, 5)
    modular = iterate_modular(sys_, Fraction(1, 10), params, x0, 5)
    assert modular.states == [[_mod(v) for v in s] for s in exact.states]
    assert modular.jacobians == [_mod(J) for J in exact.jacobians]


def test_modular_telescoping_and_integrals_over_long_trace(k4):
    sys_, params = k4
    trace = iterate_modular(sys_, Fraction(1, 10), params, random_x(random.Random(6), 4), 20)
    assert telescoping_check_modular(sys_, params, trace)
    A = [[_mod(v) for v in row] for row in sys_.numeric_A(params)]
    for I in chain_integrals(sys_):
        assert len({monomial_mod(sys_, I.reduced, A, x) for x in trace.states}) == 1
    trace.jacobians[7] = (trace.jacobians[7] + 1) % trace.modulus
    assert not telescoping_check_modular(sys_, params, trace)


def test_zero_set_of_dp_is_invariant():
    rng = random.Random(9)
    sys_ = tree_adjacency(BUSHY)
    params = random_parameters(sys_, rng)
    A = sys_.numeric_A(params)
    dp = sys_.dp(1)
    x = random_x(rng, 4)
    i, k = dp.u - 1, dp.v - 1
    x[k] = -(A[k][i] - A[i][i]) * x[i] / (A[k][k] - A[i][k])
    assert dp_point(A, x, dp.u, dp.v) == 0
    trace = iterate_exact(sys_, Fraction(1, 10), params, x, 5)  # raises if the zero set is left
    assert all(dp_point(A, s, dp.u, dp.v) == 0 for s in trace.states)


def test_singular_step_reports_step_index():
    sys_ = tree_adjacency(TreeData.from_graph(from_edge_list(2, [(1, 2)])))
    params = {"a1": 1, "a2": 1, "b1": 0, "c1": 0}
    with pytest.raises(SingularStep) as info:
        iterate_exact(sys_, 1, params, [1, 1], 3)
    assert info.value.step == 0


def test_trace_csv():
    rng = random.Random(4)
    sys_ = tree_adjacency(BUSHY)
    params = random_parameters(sys_, rng)
    trace = iterate_exact(sys_, Fraction(1, 10), params, random_x(rng, 4), 2)
    lines = trace.to_csv().splitlines()
    assert lines[0] == "step,x1,x2,x3,x4,detM"
    assert len(lines) == 4
    assert lines[1].startswith("0,")


@pytest.mark.parametrize(
    "param_seed,expected",
    [(0, [1, 4, 16, 64, 256]), (3, [1, 4, 16, 61, 232])],  # seed 3 hits a cancellation
)
def test_modular_and_exact_degree_growth_agree(k4, param_seed, expected):
    sys_ = k4[0]
    params = random_parameters(sys_, random.Random(param_seed))
    modular = degree_growth(sys_, Fraction(1, 3), params, K=4, seed=2)
    exact = degree_growth(sys_, Fraction(1, 3), params, K=4, seed=2, method="exact")
    assert modular.degrees == exact.degrees == expected


@pytest.mark.parametrize("n,K", [(2, 4), (3, 2)])
def test_degree_growth_matches_sympy_oracle(n, K):
    import sympy as sp

    t = sp.Symbol("t")
    sys_ = tree_adjacency(TreeData.from_graph(path_graph(n)))
    params = random_parameters(sys_, random.Random(0))
    A = sp.Matrix([[sp.Rational(v.numerator, v.denominator) for v in row] for row in sys_.numeric_A(params)])
    h = sp.Rational(1, 3)
    p = [Fraction(1, 2), Fraction(2, 3), Fraction(3, 5)][:n]
    q = [Fraction(1), Fraction(-2), Fraction(1, 3)][:n]
    x = sp.Matrix([sp.Rational(a.numerator, a.denominator) + sp.Rational(b.numerator, b.denominator) * t for a, b in zip(p, q)])
    degrees = [1]
    for _ in range(K):
        # solve M x' = x directly, independent of the explicit product formula
        M = sp.eye(n) - h / 2 * (sp.diag(*x) * A + sp.diag(*(A * x)))
        x = sp.Matrix([sp.cancel(sp.together(v)) for v in M.LUsolve(x)])
        D = sp.lcm([sp.fraction(v)[1] for v in x])
        degrees.append(max([sp.degree(D, t)] + [sp.degree(sp.cancel(v * D), t) for v in x]))
    assert degree_growth(sys_, Fraction(1, 3), params, line=(p, q), K=K).degrees == degrees


def test_degrees_do_not_depend_on_line_scaling(k4):
    sys_, params = k4
    p = [Fraction(1, 2), Fraction(2, 3), Fraction(3, 4), Fraction(5, 7)]
    q = [Fraction(1), Fraction(-2), Fraction(3, 5), Fraction(1, 3)]
    a = degree_growth(sys_, Fraction(1, 3), params, line=(p, q), K=5)
    b = degree_growth(sys_, Fraction(1, 3), params, line=(p, [7 * v for v in q]), K=5)
    assert a.degrees == b.degrees


def test_h_zero_degrees_are_flat(k4):
    sys_, params = k4
    seq = degree_growth(sys_, 0, params, K=8)
    assert seq.degrees == [1] * 9
    assert seq.entropy == 0.0
    assert seq.verdict == "subexponential"


def test_degree_cap_overflow(k4, monkeypatch):
    sys_, params = k4
    monkeypatch.setenv("LVKAHAN_DEGREE_CAP", "50")
    with pytest.raises(DegreeOverflow) as info:
        degree_growth(sys_, Fraction(1, 3), params, K=8)
    assert info.value.step == 3 and info.value.degrees == [1, 4, 16, 64]


def test_entropy_estimate_and_verdict():
    assert entropy_estimate([2**k for k in range(9)]) == pytest.approx(0.6931, abs=1e-3)
    assert entropy_estimate([k + 1 for k in range(9)]) < 0.2
    assert verdict_for([1, 2, 3], 1.0) == "inconclusive"
    assert verdict_for(list(range(1, 10)), 0.05) == "subexponential"


def test_float_drift_series_shapes():
    sys_ = tree_adjacency(BUSHY)
    params = random_parameters(sys_, random.Random(2))
    x0 = [1.0, 1.1, 0.9, 1.2]
    kahan = measure_drift_float(sys_, 1e-3, params, x0, 50, "kahan")
    rk4 = measure_drift_float(sys_, 1e-3, params, x0, 50, "rk4")
    assert len(kahan.drift) == len(rk4.drift) == 51
    assert kahan.max_abs < 1e-10
    assert kahan.to_csv().splitlines()[0] == "k,drift"
    with pytest.raises(ValueError):
        measure_drift_float(sys_, 1e-3, params, x0, 1, "euler")
