"""Exact linear algebra over Q and over the polynomial ring."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .poly import MultiPoly

Matrix = list


def _is_zero(v) -> bool:
    return v.is_zero() if isinstance(v, MultiPoly) else v == 0


def _exact_div(a, b):
    if isinstance(a, MultiPoly):
        return a.exquo(b)
    if isinstance(a, int) and isinstance(b, int):
        q, r = divmod(a, b)
        if r:
            return Fraction(a, b)
        return q
    return a / b


def det_bareiss(matrix: Sequence[Sequence]):
    """Fraction-free Bareiss determinant.

    Works over any integral domain whose elements support ``+ - *`` and where
    the Bareiss quotients are exact: ints, Fractions, MultiPoly.
    """
    n = len(matrix)
    if n == 0:
        return 1
    a = [list(row) for row in matrix]
    if any(len(row) != n for row in a):
        raise ValueError("determinant of a non-square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if _is_zero(a[k][k]):
            for r in range(k + 1, n):
                if not _is_zero(a[r][k]):
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return a[0][0] * 0
        pivot = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                num = pivot * row_i[j] - aik * row_k[j]
                row_i[j] = num if prev == 1 else _exact_div(num, prev)
        prev = pivot
    det = a[n - 1][n - 1]
    return det if sign == 1 else -det


def det_minors(matrix: Sequence[Sequence]):
    """Division-free Laplace expansion with memoised minors (O(n 2^n) products)."""
    n = len(matrix)
    if n == 0:
        return 1
    memo: dict[tuple[int, int], object] = {}

    def minor(row: int, cols: int):
        # determinant of rows row..n-1 restricted to the column set ``cols``
        if row == n:
            return 1
        key = (row, cols)
        if key in memo:
            return memo[key]
        total = None
        sign = 1
        for j in range(n):
            if cols >> j & 1:
                entry = matrix[row][j]
                if not _is_zero(entry):
                    sub = minor(row + 1, cols & ~(1 << j))
                    if not _is_zero(sub):
                        term = entry * sub
                        if sign < 0:
                            term = -term
                        total = term if total is None else total + term
                sign = -sign
        if total is None:
            total = matrix[0][0] * 0
        memo[key] = total
        return total

    return minor(0, (1 << n) - 1)


def det(matrix: Sequence[Sequence]):
    """Minor expansion for polynomial entries, Bareiss for scalars."""
    if any(isinstance(v, MultiPoly) for row in matrix for v in row):
        return det_minors(matrix)
    return det_bareiss(matrix)


def adjugate(matrix: Sequence[Sequence]) -> Matrix:
    """Classical adjoint: adj(A)[j][i] = (-1)^(i+j) * minor_{i,j}(A)."""
    n = len(matrix)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [
                [matrix[r][c] for c in range(n) if c != j] for r in range(n) if r != i
            ]
            d = det(sub) if sub else 1
            out[j][i] = d if (i + j) % 2 == 0 else -d
    return out


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> Matrix:
    inner = len(b)
    cols = len(b[0]) if b else 0
    out = []
    for row in a:
        new = []
        for j in range(cols):
            acc = None
            for k in range(inner):
                if _is_zero(row[k]) or _is_zero(b[k][j]):
                    continue
                t = row[k] * b[k][j]
                acc = t if acc is None else acc + t
            new.append(acc if acc is not None else row[0] * 0)
        out.append(new)
    return out


def matvec(a: Sequence[Sequence], v: Sequence) -> list:
    out = []
    for row in a:
        acc = None
        for x, y in zip(row, v):
            t = x * y
            acc = t if acc is None else acc + t
        out.append(acc)
    return out


def row_reduce(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q; returns (rref, pivot columns)."""
    a = [[Fraction(v) for v in row] for row in rows]
    if not a:
        return a, []
    m, ncols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, m) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        for i in range(m):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return a, pivots


def rank(rows: Sequence[Sequence]) -> int:
    return len(row_reduce(rows)[1])


def nullspace(rows: Sequence[Sequence]) -> list[list[Fraction]]:
    """Basis of {v : rows * v = 0} over Q."""
    if not rows:
        return []
    ncols = len(rows[0])
    rref, pivots = row_reduce(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -rref[r][f]
        basis.append(v)
    return basis


def solve(matrix: Sequence[Sequence], rhs: Sequence) -> list[Fraction]:
    """Unique solution of a square nonsingular system over Q (Gauss-Jordan)."""
    n = len(matrix)
    aug = [list(row) + [b] for row, b in zip(matrix, rhs)]
    rref, pivots = row_reduce(aug)
    if pivots != list(range(n)):
        raise ZeroDivisionError("singular linear system")
    return [rref[i][n] for i in range(n)]
