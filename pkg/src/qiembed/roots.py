"""Positive-root tables in standard coordinates.

Each entry returns ``(vectors, basis)``: positive roots as integer (or
half-integer) vectors in some R^N, and a rational basis (list of column
vectors in R^N) of the span of the roots.  The arrangement builder turns
these into normals in basis coordinates.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product

from . import exact

HALF = Fraction(1, 2)


def _unit(n, i, c=1):
    v = [Fraction(0)] * n
    v[i] = Fraction(c)
    return v


def _std_basis(n):
    return [_unit(n, i) for i in range(n)]


def _sum_zero_basis(n_plus_1):
    # b_k = e_k - e_last, k < last
    m = n_plus_1
    return [[Fraction(int(i == k)) - Fraction(int(i == m - 1)) for i in range(m)] for k in range(m - 1)]


def type_a(n):
    m = n + 1
    roots = []
    for i, j in combinations(range(m), 2):
        v = [Fraction(0)] * m
        v[i], v[j] = Fraction(1), Fraction(-1)
        roots.append(v)
    return roots, _sum_zero_basis(m)


def _d_roots(n):
    roots = []
    for i, j in combinations(range(n), 2):
        for s in (1, -1):
            v = [Fraction(0)] * n
            v[i], v[j] = Fraction(1), Fraction(s)
            roots.append(v)
    return roots


def type_d(n):
    return _d_roots(n), _std_basis(n)


def type_bc(n):
    return _d_roots(n) + [_unit(n, i) for i in range(n)], _std_basis(n)


def type_f4():
    roots = _d_roots(4) + [_unit(4, i) for i in range(4)]
    for signs in product((1, -1), repeat=3):
        roots.append([HALF] + [HALF * s for s in signs])
    return roots, _std_basis(4)


def type_g2():
    short = [[Fraction(1), Fraction(-1), Fraction(0)],
             [Fraction(1), Fraction(0), Fraction(-1)],
             [Fraction(0), Fraction(1), Fraction(-1)]]
    long_ = [[Fraction(2), Fraction(-1), Fraction(-1)],
             [Fraction(-1), Fraction(2), Fraction(-1)],
             [Fraction(-1), Fraction(-1), Fraction(2)]]
    return short + long_, _sum_zero_basis(3)


def _e8_roots():
    roots = _d_roots(8)
    # half-integer roots with leading +1/2 and an even number of minus signs
    for signs in product((1, -1), repeat=7):
        if sum(1 for s in signs if s < 0) % 2 == 0:
            roots.append([HALF] + [HALF * s for s in signs])
    return roots


def _orthogonal_subsystem(roots, ambient_dim, killers):
    kept = [r for r in roots if all(exact.dot(r, k) == 0 for k in killers)]
    basis = exact.nullspace([list(k) for k in killers], ambient_dim)
    return kept, basis


def type_e(n):
    roots = _e8_roots()
    if n == 8:
        return roots, _std_basis(8)
    a7 = _unit(8, 6, 1)
    a7[7] = Fraction(-1)  # e7 - e8
    killers = [a7]
    if n == 6:
        b = _unit(8, 5, 1)
        b[6] = Fraction(-1)  # e6 - e7
        killers.append(b)
    return _orthogonal_subsystem(roots, 8, killers)


VALID = {
    "A": lambda n: n >= 1,
    "BC": lambda n: n >= 2,
    "D": lambda n: n >= 4,
    "E6": lambda n: n == 6,
    "E7": lambda n: n == 7,
    "E8": lambda n: n == 8,
    "F4": lambda n: n == 4,
    "G2": lambda n: n == 2,
}

ALIASES = {"B": "BC", "C": "BC", "F": "F4", "G": "G2"}


def normalize_type(type_tag: str, rank: int) -> str:
    tag = type_tag.upper()
    tag = ALIASES.get(tag, tag)
    if tag == "E":
        tag = f"E{rank}"
    if tag not in VALID:
        raise ValueError(f"unknown root system type {type_tag!r}")
    if not VALID[tag](rank):
        if tag == "D" and rank in (2, 3):
            raise ValueError(f"D{rank} is treated as type A (D2 = A1xA1, D3 = A3); use 'A'")
        raise ValueError(f"invalid (type, rank) pair: ({type_tag!r}, {rank})")
    return tag


def root_table(tag: str, rank: int):
    if tag == "A":
        return type_a(rank)
    if tag == "BC":
        return type_bc(rank)
    if tag == "D":
        return type_d(rank)
    if tag == "F4":
        return type_f4()
    if tag == "G2":
        return type_g2()
    return type_e(rank)
