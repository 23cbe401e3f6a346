"""Rational functions and factored products of polynomials."""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Mapping

from .poly import MultiPoly, PolyRing


class RatFunc:
    """Quotient ``num/den`` of polynomials.

    No multivariate gcd is taken; equality is decided by cross-multiplication.
    The denominator is scaled so that its lex-leading coefficient is 1.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: MultiPoly, den: MultiPoly | None = None):
        if den is None:
            den = num.ring.one
        if isinstance(den, (int, Fraction)):
            den = num.ring.const(den)
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if den.is_constant():
            num = num.scale(Fraction(1) / Fraction(den.constant_term()))
            den = num.ring.one
        else:
            lc, den = den.primitive()
            if lc != 1:
                num = num.scale(1 / lc)
        self.num = num
        self.den = den

    @property
    def ring(self) -> PolyRing:
        return self.num.ring

    @classmethod
    def lift(cls, value, ring: PolyRing) -> "RatFunc":
        if isinstance(value, RatFunc):
            return value
        return cls(ring.coerce(value))

    def _lift(self, other):
        if isinstance(other, RatFunc):
            return other
        if isinstance(other, MultiPoly):
            return RatFunc(other)
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return RatFunc(self.ring.const(other))
        return None

    def __add__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den)

    def __sub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return other / self

    def __pow__(self, k: int):
        if k >= 0:
            return RatFunc(self.num ** k, self.den ** k)
        return RatFunc(self.den ** -k, self.num ** -k)

    def __eq__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return self.num * other.den == other.num * self.den

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def diff(self, var: str) -> "RatFunc":
        return RatFunc(
            self.num.diff(var) * self.den - self.num * self.den.diff(var), self.den * self.den
        )

    def eval(self, assignment):
        d = self.den.eval(assignment)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at evaluation point")
        return self.num.eval(assignment) / d

    def subs(self, mapping) -> "RatFunc":
        return RatFunc(self.num.subs(mapping), self.den.subs(mapping))

    def variables(self) -> set[str]:
        return self.num.variables() | self.den.variables()

    def pretty(self) -> str:
        if self.den == 1:
            return self.num.pretty()
        return f"({self.num.pretty()})/({self.den.pretty()})"

    __str__ = pretty

    def __repr__(self):
        return f"RatFunc({self.pretty()})"


class Factored:
    """A scalar times a product of named or polynomial factors to integer powers.

    Polynomial factors are stored monic in the lex order so that factors equal
    up to a scalar share a key; the scalar is absorbed into ``coeff``.  String
    keys stand for opaque factors (for example a determinant that is never
    expanded).
    """

    __slots__ = ("coeff", "factors")

    def __init__(self, coeff=1, factors: Mapping[Hashable, int] | None = None):
        self.coeff = Fraction(coeff)
        self.factors: dict = {}
        if factors:
            for f, e in factors.items():
                self._absorb(f, e)

    def _absorb(self, f, e: int):
        if not e:
            return
        if isinstance(f, MultiPoly):
            if f.is_zero():
                raise ZeroDivisionError("zero factor") if e < 0 else ValueError("zero factor")
            lc, f = f.primitive()
            self.coeff *= lc ** e
            if f.is_constant():
                return
        new = self.factors.get(f, 0) + e
        if new:
            self.factors[f] = new
        else:
            self.factors.pop(f, None)

    @classmethod
    def of(cls, *items) -> "Factored":
        """Build from ``(factor, exponent)`` pairs."""
        out = cls()
        for f, e in items:
            out._absorb(f, e)
        return out

    def copy(self) -> "Factored":
        out = Factored(self.coeff)
        out.factors = dict(self.factors)
        return out

    def __mul__(self, other):
        if not isinstance(other, Factored):
            if isinstance(other, (int, Fraction)):
                out = self.copy()
                out.coeff *= other
                return out
            return NotImplemented
        out = self.copy()
        out.coeff *= other.coeff
        for f, e in other.factors.items():
            out._absorb(f, e)
        return out

    def __truediv__(self, other):
        if not isinstance(other, Factored):
            return NotImplemented
        return self * other ** -1

    def __pow__(self, k: int):
        out = Factored(self.coeff ** k)
        out.factors = {f: e * k for f, e in self.factors.items()} if k else {}
        return out

    def __eq__(self, other):
        if not isinstance(other, Factored):
            return NotImplemented
        return self.coeff == other.coeff and self.factors == other.factors

    __hash__ = None

    def is_one(self) -> bool:
        return self.coeff == 1 and not self.factors

    def exponent(self, f) -> int:
        if isinstance(f, MultiPoly):
            f = f.primitive()[1]
        return self.factors.get(f, 0)

    def expand(self, ring: PolyRing, opaque: Mapping[str, MultiPoly] | None = None) -> RatFunc:
        """Multiply out into a RatFunc, replacing opaque keys via ``opaque``."""
        num = ring.const(self.coeff)
        den = ring.one
        for f, e in self.factors.items():
            if isinstance(f, str):
                if opaque is None or f not in opaque:
                    raise KeyError(f"no polynomial supplied for opaque factor {f!r}")
                f = opaque[f]
            if e > 0:
                num = num * f ** e
            else:
                den = den * f ** -e
        return RatFunc(num, den)

    def eval(self, assignment, opaque_values: Mapping[str, object] | None = None):
        val = self.coeff
        for f, e in self.factors.items():
            if isinstance(f, str):
                v = opaque_values[f]
            else:
                v = f.eval(assignment)
            val = val * v ** e if e > 0 else val / v ** -e
        return val

    def pretty(self) -> str:
        parts = [] if self.coeff == 1 else [str(self.coeff)]
        for f, e in sorted(self.factors.items(), key=lambda kv: str(kv[0])):
            name = f if isinstance(f, str) else f"({f.pretty()})"
            parts.append(name if e == 1 else f"{name}^{e}")
        return " * ".join(parts) or "1"

    def __repr__(self):
        return f"Factored({self.pretty()})"


def factored_product(items: Iterable[tuple[Hashable, int]]) -> Factored:
    return Factored.of(*items)
