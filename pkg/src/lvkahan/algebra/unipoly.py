"""Dense univariate polynomials over the rationals.

A polynomial is a tuple of coefficients, constant term first, with no trailing
zeros; the zero polynomial is ``()``.  Integer-coefficient polynomials get a
separate fast path (Kronecker-substitution multiplication and heuristic gcd)
because the degree-growth iteration lives almost entirely in Z[t].
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

UniPoly = tuple


def trim(coeffs: Sequence) -> UniPoly:
    coeffs = list(coeffs)
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    return tuple(coeffs)


def degree(p: UniPoly) -> int:
    return len(p) - 1


def add(p: UniPoly, q: UniPoly) -> UniPoly:
    if len(p) < len(q):
        p, q = q, p
    out = list(p)
    for i, c in enumerate(q):
        out[i] += c
    return trim(out)


def neg(p: UniPoly) -> UniPoly:
    return tuple(-c for c in p)


def sub(p: UniPoly, q: UniPoly) -> UniPoly:
    return add(p, neg(q))


def scale(p: UniPoly, c) -> UniPoly:
    if not c:
        return ()
    return tuple(x * c for x in p)


def mul(p: UniPoly, q: UniPoly) -> UniPoly:
    if not p or not q:
        return ()
    if all(type(c) is int for c in p) and all(type(c) is int for c in q):
        return int_mul(p, q)
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return trim(out)


def evaluate(p: UniPoly, t):
    val = 0
    for c in reversed(p):
        val = val * t + c
    return val


def divmod_poly(p: UniPoly, q: UniPoly) -> tuple[UniPoly, UniPoly]:
    if not q:
        raise ZeroDivisionError("division by the zero polynomial")
    rem = [Fraction(c) for c in p]
    dq = len(q) - 1
    lc = Fraction(q[-1])
    quot = [Fraction(0)] * max(len(p) - dq, 0)
    for k in range(len(p) - 1 - dq, -1, -1):
        c = rem[k + dq] / lc
        quot[k] = c
        if c:
            for j in range(dq + 1):
                rem[k + j] -= c * q[j]
    return trim(quot), trim(rem[:dq])


def monic(p: UniPoly) -> UniPoly:
    if not p:
        return ()
    lc = Fraction(p[-1])
    return tuple(_norm(Fraction(c) / lc) for c in p)


def _norm(c: Fraction):
    return c.numerator if c.denominator == 1 else c


# -- integer polynomials -----------------------------------------------------


def content(p: UniPoly) -> int:
    g = 0
    for c in p:
        g = gcd(g, c)
        if g == 1:
            break
    return g


def primitive_part(p: UniPoly) -> UniPoly:
    """Divide by the content and make the leading coefficient positive."""
    if not p:
        return ()
    g = content(p)
    if p[-1] < 0:
        g = -g
    return tuple(c // g for c in p)


def clear_denominators(p: UniPoly) -> UniPoly:
    den = 1
    for c in p:
        if isinstance(c, Fraction):
            den = lcm(den, c.denominator)
    return tuple(int(c * den) for c in p)


def _pack(p: UniPoly, k: int) -> int:
    """Evaluate at 2**k for a polynomial with non-negative coefficients."""
    nbytes = k // 8
    return int.from_bytes(b"".join(c.to_bytes(nbytes, "little") for c in p), "little")


def _pack_signed(p: UniPoly, k: int) -> int:
    pos = _pack(tuple(c if c > 0 else 0 for c in p), k)
    negv = _pack(tuple(-c if c < 0 else 0 for c in p), k)
    return pos - negv


def _unpack_signed(value: int, k: int, length: int) -> UniPoly:
    half = 1 << (k - 1)
    nbytes = k // 8
    offset = _pack((half,) * length, k)
    raw = (value + offset).to_bytes(nbytes * length + 1, "little")
    out = []
    for i in range(length):
        chunk = int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little")
        out.append(chunk - half)
    return trim(out)


def int_mul(p: UniPoly, q: UniPoly) -> UniPoly:
    """Product in Z[t] by Kronecker substitution (one big-integer multiply)."""
    if not p or not q:
        return ()
    if len(p) < 8 or len(q) < 8:
        out = [0] * (len(p) + len(q) - 1)
        for i, a in enumerate(p):
            if a:
                for j, b in enumerate(q):
                    out[i + j] += a * b
        return trim(out)
    bound = max(abs(c) for c in p) * max(abs(c) for c in q) * min(len(p), len(q))
    k = bound.bit_length() + 2
    k += -k % 8
    prod = _pack_signed(p, k) * _pack_signed(q, k)
    return _unpack_signed(prod, k, len(p) + len(q) - 1)


def int_exquo(p: UniPoly, q: UniPoly) -> UniPoly:
    """Exact quotient in Z[t]; raises ArithmeticError when not exact."""
    if not q:
        raise ZeroDivisionError("division by the zero polynomial")
    if not p:
        return ()
    dq = len(q) - 1
    if len(p) - 1 < dq:
        raise ArithmeticError("inexact polynomial division")
    if dq == 0:
        c = q[0]
        if any(x % c for x in p):
            raise ArithmeticError("inexact polynomial division")
        return tuple(x // c for x in p)
    rem = list(p)
    lc = q[-1]
    quot = [0] * (len(p) - dq)
    for k in range(len(p) - 1 - dq, -1, -1):
        top = rem[k + dq]
        if top:
            c, r = divmod(top, lc)
            if r:
                raise ArithmeticError("inexact polynomial division")
            quot[k] = c
            for j in range(dq):
                rem[k + j] -= c * q[j]
    if any(rem[:dq]):
        raise ArithmeticError("inexact polynomial division")
    return trim(quot)


def prem(p: UniPoly, q: UniPoly) -> UniPoly:
    """Pseudo-remainder lc(q)**(deg p - deg q + 1) * p mod q over Z."""
    dq = len(q) - 1
    lc = q[-1]
    rem = list(p)
    while len(rem) - 1 >= dq and rem:
        top = rem[-1]
        shift = len(rem) - 1 - dq
        rem = [c * lc for c in rem]
        for j in range(dq + 1):
            rem[shift + j] -= top * q[j]
        rem = list(trim(rem))
    return tuple(rem)


def int_gcd_prs(p: UniPoly, q: UniPoly) -> UniPoly:
    """Primitive gcd in Z[t] via the primitive pseudo-remainder sequence."""
    if not p:
        return primitive_part(q)
    if not q:
        return primitive_part(p)
    a, b = primitive_part(p), primitive_part(q)
    if len(a) < len(b):
        a, b = b, a
    while b:
        r = prem(a, b)
        a, b = b, primitive_part(r)
    return primitive_part(a) if len(a) > 1 else (1,)


def _heu_reconstruct(value: int, xi: int) -> UniPoly:
    """Symmetric xi-adic digits of ``value``."""
    out = []
    half = xi // 2
    while value:
        d = value % xi
        if d > half:
            d -= xi
        out.append(d)
        value = (value - d) // xi
    return tuple(out)


def int_gcd(p: UniPoly, q: UniPoly) -> UniPoly:
    """Primitive gcd in Z[t]: heuristic evaluation gcd, PRS as fallback."""
    if not p:
        return primitive_part(q)
    if not q:
        return primitive_part(p)
    if len(p) == 1 or len(q) == 1:
        return (1,)
    a, b = primitive_part(p), primitive_part(q)
    # xi > 2*min norm + 2 makes a candidate dividing both provably the gcd
    norm = min(max(abs(c) for c in a), max(abs(c) for c in b))
    xi = 2 * norm + 29
    for _ in range(6):
        ga = evaluate(a, xi)
        gb = evaluate(b, xi)
        g = gcd(ga, gb)
        cand = primitive_part(_heu_reconstruct(g, xi))
        if cand:
            try:
                int_exquo(a, cand)
                int_exquo(b, cand)
                return cand
            except ArithmeticError:
                pass
        xi = xi * 73794 // 27011
    return int_gcd_prs(a, b)


def unipoly_gcd(p: Sequence, q: Sequence) -> UniPoly:
    """Monic gcd over Q; gcd(p, 0) is p made monic."""
    p, q = trim(p), trim(q)
    if not p and not q:
        raise ValueError("gcd(0, 0) is undefined")
    g = int_gcd(clear_denominators(p), clear_denominators(q))
    return monic(g)


def resultant(p: UniPoly, q: UniPoly) -> Fraction:
    """Resultant via the Euclidean remainder sequence over Q."""
    p, q = trim(p), trim(q)
    if not p or not q:
        return Fraction(0)
    res = Fraction(1)
    while True:
        dp, dq = len(p) - 1, len(q) - 1
        if dq == 0:
            return res * Fraction(q[0]) ** dp
        _, r = divmod_poly(p, q)
        if not r:
            return Fraction(0)
        dr = len(r) - 1
        if dp % 2 == 1 and dq % 2 == 1:
            res = -res
        res *= Fraction(q[-1]) ** (dp - dr)
        p, q = q, r
