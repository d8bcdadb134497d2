"""Exact rational linear algebra on lists of :class:`fractions.Fraction`.

Matrices are lists of rows.  Nothing here touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Iterable, Sequence

Vector = tuple
Matrix = list


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def to_matrix(rows: Iterable[Iterable]) -> Matrix:
    return [[frac(x) for x in row] for row in rows]


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def zeros(m: int, n: int) -> Matrix:
    return [[Fraction(0)] * n for _ in range(m)]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return [[dot(row, col) for col in bt] for row in a]


def matvec(a: Matrix, v: Sequence) -> list:
    return [dot(row, v) for row in a]


def dot(u: Sequence, v: Sequence) -> Fraction:
    s = 0
    for x, y in zip(u, v):
        if x and y:
            s += x * y
    return s if isinstance(s, Fraction) else Fraction(s)


def scale(c, a: Matrix) -> Matrix:
    return [[c * x for x in row] for row in a]


def rref(a: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    m = [list(map(frac, row)) for row in a]
    if not m:
        return [], []
    n_rows, n_cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        piv = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        if p != 1:
            m[r] = [x / p for x in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m[:r], pivots


def rank(a: Matrix) -> int:
    return len(rref(a)[1]) if a else 0


def nullspace(a: Matrix, n_cols: int | None = None) -> Matrix:
    """Basis (as rows) of {x : a x = 0}."""
    if not a:
        if n_cols is None:
            raise ValueError("n_cols required for an empty matrix")
        return identity(n_cols)
    n_cols = len(a[0])
    r, pivots = rref(a)
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n_cols
        v[f] = Fraction(1)
        for row, pc in zip(r, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(map(frac, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    r, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(r) < n:
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in r]


def det(a: Matrix) -> Fraction:
    m = [list(map(frac, row)) for row in a]
    n = len(m)
    d = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            d = -d
        p = m[c][c]
        d *= p
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / p
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return d


def primitive(v: Sequence) -> tuple[int, ...]:
    """Primitive integer vector on the line of ``v`` with positive leading entry."""
    v = [frac(x) for x in v]
    if all(x == 0 for x in v):
        raise ValueError("zero vector has no canonical direction")
    lcm = reduce(lambda a, b: a * b // gcd(a, b), (x.denominator for x in v), 1)
    ints = [int(x * lcm) for x in v]
    g = reduce(gcd, (abs(i) for i in ints if i), 0)
    ints = [i // g for i in ints]
    lead = next(i for i in ints if i)
    if lead < 0:
        ints = [-i for i in ints]
    return tuple(ints)


def proportional(u: Sequence, v: Sequence) -> bool:
    """True iff u and v span the same line (both nonzero)."""
    return primitive(u) == primitive(v)


def fmt(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse(s: str) -> Fraction:
    num, den = s.split("/")
    return Fraction(int(num), int(den))


def solve(a: Matrix, b: Sequence) -> list:
    """Unique solution of a x = b for full-column-rank ``a``; raises if inconsistent."""
    n = len(a[0])
    aug = [list(map(frac, row)) + [frac(y)] for row, y in zip(a, b)]
    r, pivots = rref(aug)
    if n in pivots:
        raise ValueError("inconsistent system")
    if len(pivots) < n:
        raise ValueError("solution is not unique")
    x = [Fraction(0)] * n
    for row, pc in zip(r, pivots):
        x[pc] = row[n]
    return x
