"""Deciding rational-function identities, symbolically or by random evaluation."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .poly import MultiPoly
from .ratfunc import RatFunc

SAMPLE_BOUND = 2 ** 32
MAX_RETRIES = 20


class SingularSample(ArithmeticError):
    """Random evaluation kept hitting a zero denominator."""


@dataclass
class IdentityResult:
    ok: bool
    mode: str
    witness: dict | None = None
    lhs_value: object = None
    rhs_value: object = None
    trials: int = 0
    error_bound: float = 0.0
    detail: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def random_rational(rng: random.Random, bound: int = SAMPLE_BOUND) -> Fraction:
    return Fraction(rng.randint(1, bound), rng.randint(1, bound))


def random_point(variables: Iterable[str], rng: random.Random, bound: int = SAMPLE_BOUND) -> dict:
    return {v: random_rational(rng, bound) for v in sorted(variables)}


def check_pointwise(
    lhs: Callable[[Mapping], object],
    rhs: Callable[[Mapping], object],
    variables: Iterable[str],
    trials: int = 5,
    rng: random.Random | None = None,
    seed: int = 0,
    degree_bound: int | None = None,
) -> IdentityResult:
    """Compare two exact evaluators at ``trials`` random rational points.

    Either side may raise ZeroDivisionError at an unlucky point; such points
    are resampled up to MAX_RETRIES times per trial before SingularSample.
    """
    rng = rng if rng is not None else random.Random(seed)
    variables = sorted(variables)
    bound = 0.0
    if degree_bound is not None:
        bound = min(1.0, degree_bound / SAMPLE_BOUND) ** trials
    for _ in range(trials):
        for _attempt in range(MAX_RETRIES):
            point = random_point(variables, rng)
            try:
                lv = lhs(point)
                rv = rhs(point)
            except ZeroDivisionError:
                continue
            break
        else:
            raise SingularSample(f"no regular sample after {MAX_RETRIES} attempts")
        if lv != rv:
            return IdentityResult(False, "probabilistic", point, lv, rv, trials, bound)
    return IdentityResult(True, "probabilistic", trials=trials, error_bound=bound)


def _as_ratfunc(value, ring) -> RatFunc:
    if isinstance(value, RatFunc):
        return value
    if isinstance(value, MultiPoly):
        return RatFunc(value)
    return RatFunc(ring.const(value))


def identity_check(
    lhs,
    rhs,
    mode: str = "symbolic",
    trials: int = 5,
    seed: int = 0,
    rng: random.Random | None = None,
) -> IdentityResult:
    """Decide ``lhs == rhs`` for RatFunc/MultiPoly operands.

    Symbolic mode expands ``num1*den2 - num2*den1``.  Probabilistic mode is a
    Schwartz-Zippel test whose per-trial failure probability is bounded by the
    degree of that difference over the sample-set size.
    """
    ring = (lhs if isinstance(lhs, (RatFunc, MultiPoly)) else rhs).ring
    lhs = _as_ratfunc(lhs, ring)
    rhs = _as_ratfunc(rhs, ring)
    if mode == "symbolic":
        diff = lhs.num * rhs.den - rhs.num * lhs.den
        if diff.is_zero():
            return IdentityResult(True, "symbolic")
        # produce a concrete witness for the caller
        rng = rng if rng is not None else random.Random(seed)
        variables = sorted(diff.variables() | lhs.variables() | rhs.variables())
        for _ in range(MAX_RETRIES):
            point = random_point(variables, rng)
            try:
                lv, rv = lhs.eval(point), rhs.eval(point)
            except ZeroDivisionError:
                continue
            if lv != rv:
                return IdentityResult(False, "symbolic", point, lv, rv)
        return IdentityResult(False, "symbolic", detail={"difference": diff.pretty()})
    if mode == "probabilistic":
        degree = max(
            lhs.num.degree() + rhs.den.degree(), rhs.num.degree() + lhs.den.degree(), 0
        )
        return check_pointwise(
            lhs.eval,
            rhs.eval,
            lhs.variables() | rhs.variables(),
            trials=trials,
            rng=rng,
            seed=seed,
            degree_bound=degree,
        )
    raise ValueError(f"unknown mode {mode!r}")
