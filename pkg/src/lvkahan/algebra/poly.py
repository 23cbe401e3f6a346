"""Sparse multivariate polynomials over the rationals.

Monomials are dense exponent vectors packed into a single Python int, one
16-bit field per variable with the first ring variable in the most
significant field.  Integer comparison of packed keys is therefore pure lex
order, which is what exact division uses; the graded lex order used for
printing is derived from it.  The top bit of every field is kept clear so that
the product of two valid monomials never carries into a neighbouring field.
"""

from __future__ import annotations

import heapq
import json
import re
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

FIELD_BITS = 16
MAX_EXPONENT = (1 << (FIELD_BITS - 1)) - 1


class UnboundVariable(KeyError):
    """An evaluation point does not assign a value to some variable."""


def as_rational(value) -> Fraction | int:
    """Normalise an int/Fraction/str coefficient; integral values become int."""
    if isinstance(value, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        value = Fraction(value)
    if isinstance(value, Rational):
        value = Fraction(value)
        return value.numerator if value.denominator == 1 else value
    raise TypeError(f"not an exact rational: {value!r}")


class PolyRing:
    """An ordered universe of variable names shared by a family of polynomials."""

    def __init__(self, names: Sequence[str]):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        self.names = names
        self.nvars = len(names)
        self.index = {name: i for i, name in enumerate(names)}
        self._shifts = [(self.nvars - 1 - i) * FIELD_BITS for i in range(self.nvars)]
        self._field_mask = (1 << FIELD_BITS) - 1
        guard = 0
        for s in self._shifts:
            guard |= 1 << (s + FIELD_BITS - 1)
        self.guard_mask = guard
        self.zero = MultiPoly(self, {})
        self.one = MultiPoly(self, {0: 1})

    @classmethod
    def for_system(cls, n: int, extra: Sequence[str] = ()) -> "PolyRing":
        """Ring x1..xn, a1..an, b1..b(n-1), c1..c(n-1), h (plus ``extra``)."""
        names = [f"x{i}" for i in range(1, n + 1)]
        names += [f"a{i}" for i in range(1, n + 1)]
        names += [f"b{i}" for i in range(1, n)]
        names += [f"c{i}" for i in range(1, n)]
        names.append("h")
        names.extend(extra)
        return cls(names)

    def __eq__(self, other):
        return isinstance(other, PolyRing) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"PolyRing({', '.join(self.names)})"

    def pack(self, exponents: Sequence[int]) -> int:
        if len(exponents) != self.nvars:
            raise ValueError("exponent vector has wrong arity")
        m = 0
        for e, s in zip(exponents, self._shifts):
            if not 0 <= e <= MAX_EXPONENT:
                raise OverflowError(f"exponent {e} out of range")
            m |= e << s
        return m

    def unpack(self, m: int) -> tuple[int, ...]:
        mask = self._field_mask
        return tuple((m >> s) & mask for s in self._shifts)

    def var_key(self, name: str) -> int:
        try:
            return 1 << self._shifts[self.index[name]]
        except KeyError:
            raise UnboundVariable(name) from None

    def gen(self, name: str) -> "MultiPoly":
        return MultiPoly(self, {self.var_key(name): 1})

    def gens(self, *names: str) -> list["MultiPoly"]:
        return [self.gen(name) for name in names]

    def const(self, c) -> "MultiPoly":
        c = as_rational(c)
        return MultiPoly(self, {0: c} if c else {})

    def coerce(self, value) -> "MultiPoly":
        if isinstance(value, MultiPoly):
            if value.ring != self:
                raise ValueError("polynomials from different rings")
            return value
        return self.const(value)

    def monomial_degree(self, m: int) -> int:
        return sum(self.unpack(m))

    def grlex_key(self, m: int) -> tuple[int, int]:
        return (self.monomial_degree(m), m)

    # -- parsing ---------------------------------------------------------

    def parse(self, text: str) -> "MultiPoly":
        """Inverse of :meth:`MultiPoly.to_text`."""
        text = text.strip()
        if text == "0":
            return self.zero
        terms: dict[int, Fraction | int] = {}
        for chunk in text.split(" + "):
            factors = [f.strip() for f in chunk.split("*")]
            coef = as_rational(factors[0])
            exps = [0] * self.nvars
            for f in factors[1:]:
                name, _, e = f.partition("^")
                if name not in self.index:
                    raise UnboundVariable(name)
                exps[self.index[name]] += int(e) if e else 1
            m = self.pack(exps)
            c = terms.get(m, 0) + coef
            if c:
                terms[m] = c
            else:
                terms.pop(m, None)
        return MultiPoly(self, terms)

    def parse_expr(self, text: str) -> "MultiPoly":
        """Parse a human-written expression such as ``(c1 - a1)*x1 + 2/3*h^2``."""
        tokens = re.findall(r"\d+(?:/\d+)?|[A-Za-z_]\w*|\*\*|[-+*^()]", text)
        pos = 0

        def peek():
            return tokens[pos] if pos < len(tokens) else None

        def take():
            nonlocal pos
            pos += 1
            return tokens[pos - 1]

        def expr():
            out = term()
            while peek() in ("+", "-"):
                op = take()
                out = out + term() if op == "+" else out - term()
            return out

        def term():
            out = factor()
            while peek() == "*":
                take()
                out = out * factor()
            return out

        def factor():
            if peek() == "-":
                take()
                return -factor()
            if peek() == "+":
                take()
                return factor()
            base = atom()
            if peek() in ("^", "**"):
                take()
                return base ** int(take())
            return base

        def atom():
            tok = take()
            if tok == "(":
                out = expr()
                if take() != ")":
                    raise ValueError("unbalanced parentheses")
                return out
            if tok[0].isdigit():
                return self.const(Fraction(tok))
            return self.gen(tok)

        result = expr()
        if pos != len(tokens):
            raise ValueError(f"trailing tokens in {text!r}")
        return result

    def from_json(self, data) -> "MultiPoly":
        if isinstance(data, str):
            data = json.loads(data)
        names = data["vars"]
        terms: dict[int, Fraction | int] = {}
        for exps, coef in data["terms"]:
            full = [0] * self.nvars
            for name, e in zip(names, exps):
                if e:
                    if name not in self.index:
                        raise UnboundVariable(name)
                    full[self.index[name]] = e
            terms[self.pack(full)] = as_rational(coef)
        return MultiPoly(self, {m: c for m, c in terms.items() if c})


class MultiPoly:
    """Immutable polynomial: a map from packed monomial to nonzero rational."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: PolyRing, terms: dict):
        self.ring = ring
        self.terms = terms
        self._hash = None

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and 0 in self.terms)

    def constant_term(self):
        return self.terms.get(0, 0)

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def degree(self, var: str | None = None) -> int:
        """Total degree, or degree in ``var``; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        if var is None:
            return max(self.ring.monomial_degree(m) for m in self.terms)
        i = self.ring.index[var]
        return max(self.ring.unpack(m)[i] for m in self.terms)

    def variables(self) -> set[str]:
        used = 0
        for m in self.terms:
            used |= m
        mask = self.ring._field_mask
        return {
            name
            for name, s in zip(self.ring.names, self.ring._shifts)
            if (used >> s) & mask
        }

    def iter_terms(self):
        """(exponent tuple, coefficient) pairs in descending grlex order."""
        ring = self.ring
        for m in sorted(self.terms, key=ring.grlex_key, reverse=True):
            yield ring.unpack(m), self.terms[m]

    def leading_term(self):
        """Lex-leading (packed monomial, coefficient)."""
        m = max(self.terms)
        return m, self.terms[m]

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other.ring is not self.ring and other.ring != self.ring:
                raise ValueError("polynomials from different rings")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.ring.const(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if len(self.terms) < len(other.terms):
            small, big = self.terms, other.terms
        else:
            small, big = other.terms, self.terms
        res = dict(big)
        for m, c in small.items():
            s = res.get(m)
            if s is None:
                res[m] = c
            else:
                s += c
                if s:
                    res[m] = s
                else:
                    del res[m]
        return MultiPoly(self.ring, res)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.ring, {m: -c for m, c in self.terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        res = dict(self.terms)
        for m, c in other.terms.items():
            s = res.get(m)
            if s is None:
                res[m] = -c
            else:
                s -= c
                if s:
                    res[m] = s
                else:
                    del res[m]
        return MultiPoly(self.ring, res)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def scale(self, c) -> "MultiPoly":
        c = as_rational(c)
        if not c:
            return self.ring.zero
        if c == 1:
            return self
        return MultiPoly(self.ring, {m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        a, b = self.terms, other.terms
        if not a or not b:
            return self.ring.zero
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            (mb, cb), = b.items()
            if mb == 0:
                res = {ma: ca * cb for ma, ca in a.items()}
            else:
                res = {ma + mb: ca * cb for ma, ca in a.items()}
                self._check_overflow(res)
            return MultiPoly(self.ring, res)
        res: dict = {}
        get = res.get
        for mb, cb in b.items():
            for ma, ca in a.items():
                m = ma + mb
                c = get(m)
                res[m] = ca * cb if c is None else c + ca * cb
        res = {m: c for m, c in res.items() if c}
        self._check_overflow(res)
        return MultiPoly(self.ring, res)

    __rmul__ = __mul__

    def _check_overflow(self, terms):
        guard = self.ring.guard_mask
        for m in terms:
            if m & guard:
                raise OverflowError("exponent exceeds representable range")

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = self.ring.one
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(Fraction(1) / Fraction(other))
        if isinstance(other, MultiPoly):
            from .ratfunc import RatFunc

            return RatFunc(self, other)
        return NotImplemented

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        from .ratfunc import RatFunc

        return RatFunc(other, self)

    def exquo(self, divisor: "MultiPoly") -> "MultiPoly":
        """Exact quotient; raises ArithmeticError if ``divisor`` does not divide."""
        divisor = self._coerce(divisor)
        if not divisor.terms:
            raise ZeroDivisionError("polynomial division by zero")
        if not self.terms:
            return self.ring.zero
        if len(divisor.terms) == 1:
            (md, cd), = divisor.terms.items()
            inv = Fraction(1) / Fraction(cd)
            guard = self.ring.guard_mask
            res = {}
            for m, c in self.terms.items():
                if ((m | guard) - md) & guard != guard:
                    raise ArithmeticError("inexact polynomial division")
                res[m - md] = as_rational(c * inv)
            return MultiPoly(self.ring, res)
        guard = self.ring.guard_mask
        lm, lc = divisor.leading_term()
        inv_lc = Fraction(1) / Fraction(lc)
        rest = [(m, c) for m, c in divisor.terms.items() if m != lm]
        rem = dict(self.terms)
        heap = [-m for m in rem]
        heapq.heapify(heap)
        quot = {}
        while rem:
            while True:
                m = -heapq.heappop(heap)
                if m in rem:
                    break
            c = rem.pop(m)
            if ((m | guard) - lm) & guard != guard:
                raise ArithmeticError("inexact polynomial division")
            qm = m - lm
            qc = as_rational(c * inv_lc)
            quot[qm] = qc
            for md, cd in rest:
                t = qm + md
                v = rem.get(t)
                if v is None:
                    rem[t] = -qc * cd
                    heapq.heappush(heap, -t)
                else:
                    v -= qc * cd
                    if v:
                        rem[t] = v
                    else:
                        del rem[t]
        return MultiPoly(self.ring, quot)

    def divides(self, other: "MultiPoly") -> bool:
        try:
            other.exquo(self)
        except ArithmeticError:
            return False
        return True

    # -- comparison ----------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.ring == other.ring and self.terms == other.terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if not other:
                return not self.terms
            return self.terms == {0: other}
        return NotImplemented

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- calculus and substitution ---------------------------------------------

    def diff(self, var: str) -> "MultiPoly":
        ring = self.ring
        i = ring.index[var]
        shift = ring._shifts[i]
        unit = 1 << shift
        mask = ring._field_mask
        res = {}
        for m, c in self.terms.items():
            e = (m >> shift) & mask
            if e:
                res[m - unit] = c * e
        return MultiPoly(ring, res)

    def eval(self, assignment: Mapping[str, object]):
        """Exact value at a point; every occurring variable must be assigned."""
        ring = self.ring
        used = self.variables()
        missing = used.difference(assignment)
        if missing:
            raise UnboundVariable(", ".join(sorted(missing)))
        order = [ring.index[v] for v in sorted(used, key=ring.index.get)]
        powers = {}
        for i in order:
            powers[i] = [1]
        total = 0
        for m, c in self.terms.items():
            exps = ring.unpack(m)
            val = c
            for i in order:
                e = exps[i]
                if e:
                    table = powers[i]
                    while len(table) <= e:
                        table.append(table[-1] * assignment[ring.names[i]])
                    val = val * table[e]
            total = total + val
        return total

    def subs(self, mapping: Mapping[str, object]) -> "MultiPoly":
        """Substitute scalars or polynomials (same ring) for some variables."""
        ring = self.ring
        items = [(ring.index[k], v) for k, v in mapping.items() if k in ring.index]
        if not items:
            return self
        shifts = ring._shifts
        mask = ring._field_mask
        scalar = all(not isinstance(v, MultiPoly) for _, v in items)
        cache: dict = {}

        def power(i, v, e):
            key = (i, e)
            if key not in cache:
                cache[key] = v ** e
            return cache[key]

        if scalar:
            res: dict = {}
            for m, c in self.terms.items():
                val = c
                rest = m
                for i, v in items:
                    e = (m >> shifts[i]) & mask
                    if e:
                        val = val * power(i, v, e)
                        rest -= e << shifts[i]
                if val:
                    s = res.get(rest, 0) + val
                    if s:
                        res[rest] = as_rational(s)
                    else:
                        res.pop(rest, None)
            return MultiPoly(ring, res)
        out = ring.zero
        for m, c in self.terms.items():
            rest = m
            term = ring.const(c)
            for i, v in items:
                e = (m >> shifts[i]) & mask
                if e:
                    term = term * power(i, ring.coerce(v), e)
                    rest -= e << shifts[i]
            out = out + term * MultiPoly(ring, {rest: 1})
        return out

    def coefficient_in(self, var: str, e: int) -> "MultiPoly":
        """Coefficient of ``var**e`` viewed as a polynomial in the other variables."""
        ring = self.ring
        shift = ring._shifts[ring.index[var]]
        mask = ring._field_mask
        return MultiPoly(
            ring,
            {m - (e << shift): c for m, c in self.terms.items() if (m >> shift) & mask == e},
        )

    def primitive(self) -> tuple[Fraction, "MultiPoly"]:
        """Split into (scalar, poly) with the poly's lex-leading coefficient 1."""
        if not self.terms:
            return Fraction(0), self
        _, lc = self.leading_term()
        return Fraction(lc), self.scale(Fraction(1) / Fraction(lc))

    # -- serialisation -----------------------------------------------------------

    def to_text(self) -> str:
        """Canonical text: ``coef * x1^e1 * ...`` terms in descending grlex order."""
        if not self.terms:
            return "0"
        names = self.ring.names
        chunks = []
        for exps, coef in self.iter_terms():
            parts = [str(coef)]
            for name, e in zip(names, exps):
                if e == 1:
                    parts.append(name)
                elif e:
                    parts.append(f"{name}^{e}")
            chunks.append(" * ".join(parts))
        return " + ".join(chunks)

    def to_json(self) -> dict:
        return {
            "vars": list(self.ring.names),
            "terms": [[list(exps), str(coef)] for exps, coef in self.iter_terms()],
        }

    def pretty(self) -> str:
        """Compact human-readable form, e.g. ``-a1*x1 + c1*x1 + a2*x2``."""
        if not self.terms:
            return "0"
        names = self.ring.names
        out = []
        for exps, coef in self.iter_terms():
            mono = "*".join(
                name if e == 1 else f"{name}^{e}" for name, e in zip(names, exps) if e
            )
            if not mono:
                body, sign = str(abs(coef)), "-" if coef < 0 else "+"
            elif abs(coef) == 1:
                body, sign = mono, "-" if coef < 0 else "+"
            else:
                body, sign = f"{abs(coef)}*{mono}", "-" if coef < 0 else "+"
            out.append((sign, body))
        first_sign, first = out[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in out[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"MultiPoly({self.pretty()})"

    __str__ = pretty


def poly_eval(p: MultiPoly, assignment: Mapping[str, object]):
    return p.eval(assignment)


def sum_polys(ring: PolyRing, polys: Iterable[MultiPoly]) -> MultiPoly:
    res: dict = {}
    for p in polys:
        for m, c in p.terms.items():
            s = res.get(m)
            if s is None:
                res[m] = c
            else:
                s += c
                if s:
                    res[m] = s
                else:
                    del res[m]
    return MultiPoly(ring, res)


def product(ring: PolyRing, polys: Iterable[MultiPoly]) -> MultiPoly:
    out = ring.one
    for p in sorted(polys, key=len):
        out = out * p
    return out
