"""Certified restricted-pattern facts: type A restrictions and D-chains.

Every function here returns explicit witnesses (matrices, index maps)
checked in exact arithmetic, so callers can re-verify them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import exact
from .arrangements import (Arrangement, SingularSubspace, build_d_like,
                           build_irreducible, hyperplane_count, restrict,
                           subspace_from_normals)


def hyperplane_correspondence(matrix, src: Arrangement, dst: Arrangement, *, onto: bool = True):
    """Index map i -> j with ``matrix`` carrying src hyperplane i onto dst hyperplane j.

    ``matrix`` maps src coordinates to dst coordinates and must be square
    and invertible.  Returns ``None`` when some src hyperplane has no image
    hyperplane, when two src hyperplanes collide, or (``onto=True``) when
    the correspondence misses a dst hyperplane.
    """
    mt = exact.transpose(matrix)
    images = {}
    for j, h in enumerate(dst.hyperplanes):
        pulled = exact.matvec(mt, h.normal)
        if any(pulled):
            images.setdefault(exact.primitive(pulled), j)
    out = {}
    for i, h in enumerate(src.hyperplanes):
        j = images.get(h.normal)
        if j is None:
            return None
        out[i] = j
    if len(set(out.values())) != len(out):
        return None
    if onto and len(out) != len(dst.hyperplanes):
        return None
    return out


def ambient_from_root(arr: Arrangement, x) -> list:
    return exact.solve([list(r) for r in arr.embedding], x)


def coords_in_subspace(sub: SingularSubspace, w) -> list:
    """Coordinates of ``w`` in the RREF basis of ``sub``; raises if w is outside."""
    _, pivots = exact.rref([list(b) for b in sub.basis])
    y = [w[p] for p in pivots]
    back = [sum((c * b[k] for c, b in zip(y, sub.basis)), Fraction(0)) for k in range(len(w))]
    if back != list(w):
        raise ValueError("vector is not in the subspace")
    return y


def _map_matrix(columns_root, arr: Arrangement, sub: SingularSubspace):
    """Matrix of a map given by root-coordinate images of basis vectors."""
    cols = [coords_in_subspace(sub, ambient_from_root(arr, c)) for c in columns_root]
    return exact.transpose(cols)


def type_a_restriction_map(n: int, i: int, j: int):
    """Map from canonical A_{n-1} coordinates onto ``restrict(A_n, {x_i = x_j})``.

    Built from f(y) = (y1, y1, (n+1)/n y2 - y1/n, ...) composed with a
    coordinate permutation moving slots 1, 2 to i, j (1-based, i < j).
    Returns ``(matrix, restricted_arrangement, subspace)``.
    """
    if not 1 <= i < j <= n + 1:
        raise ValueError("need 1 <= i < j <= n+1")
    big = build_irreducible("A", n)
    sub = subspace_from_normals(big, _a_normal(big, i, j))
    rest = restrict(big, sub)
    small = build_irreducible("A", n - 1) if n >= 2 else None
    perm = [i - 1, j - 1] + [k for k in range(n + 1) if k not in (i - 1, j - 1)]
    cols = []
    for c in range(n - 1):
        z = [Fraction(int(k == c)) for k in range(n - 1)]
        y = exact.matvec([list(r) for r in small.embedding], z)  # point of U in R^n
        fy = [y[0], y[0]] + [Fraction(n + 1, n) * y[k] - Fraction(1, n) * y[0] for k in range(1, n)]
        x = [Fraction(0)] * (n + 1)
        for slot, val in zip(perm, fy):
            x[slot] = val
        cols.append(x)
    return _map_matrix(cols, big, sub), rest, sub


def _a_normal(arr, i, j):
    v = [Fraction(0)] * len(arr.embedding)
    v[i - 1], v[j - 1] = Fraction(1), Fraction(-1)
    return [[sum((v[r] * arr.embedding[r][c] for r in range(len(v))), Fraction(0))
             for c in range(arr.ambient_dim)]]


def check_type_a_restrictions(n: int) -> dict:
    """For every hyperplane x_i = x_j of A_n, certify the A_{n-1} identification."""
    if n < 2:
        raise ValueError("n >= 2 required")
    small = build_irreducible("A", n - 1)
    out = {}
    for i in range(1, n + 2):
        for j in range(i + 1, n + 2):
            m, rest, _ = type_a_restriction_map(n, i, j)
            corr = hyperplane_correspondence(m, small, rest, onto=True)
            if corr is None or exact.det(m) == 0:
                raise AssertionError(f"A{n}: restriction to x{i}=x{j} not identified with A{n - 1}")
            out[(i, j)] = corr
    return out


@dataclass(frozen=True)
class ChainLevel:
    dim: int
    subspace: SingularSubspace
    embedding_matrix: tuple  # D-like coordinates -> subspace coordinates
    restricted_count: int
    d_count: int
    correspondence: dict


@dataclass(frozen=True)
class ChainWitness:
    label: str
    levels: tuple  # ordered by increasing dimension


CHAIN_TYPES = ("BC", "D", "F4", "E8")


def d_chain(arr: Arrangement) -> ChainWitness:
    """Successive chain V_2 < ... < V_{n-1} with embedded D-patterns.

    V_k = {x_1 = ... = x_{n-k+1}}; the D_k pattern enters through
    y -> (y1, ..., y1, y2, ..., yk).  Needs root coordinates containing
    all x_i = +-x_j, i.e. types BC, D, F4 and E8.
    """
    if len(arr.factors) != 1 or arr.factors[0].type_tag not in CHAIN_TYPES:
        raise ValueError(f"D-chain witness only for irreducible types {CHAIN_TYPES}")
    n = arr.ambient_dim
    levels = []
    prev = None
    for k in range(2, n):
        reps = n - k + 1
        normals = []
        for a in range(1, reps):
            v = [Fraction(0)] * n
            v[0], v[a] = Fraction(1), Fraction(-1)
            normals.append(exact.matvec(exact.transpose([list(r) for r in arr.embedding]), v))
        sub = subspace_from_normals(arr, normals)
        if sub.dim != k:
            raise AssertionError("unexpected chain dimension")
        if prev is not None and not all(sub.contains_vector(b) for b in prev.basis):
            raise AssertionError("chain is not nested")
        cols = []
        for c in range(k):
            x = [Fraction(0)] * n
            if c == 0:
                for a in range(reps):
                    x[a] = Fraction(1)
            else:
                x[reps + c - 1] = Fraction(1)
            cols.append(x)
        matrix = _map_matrix(cols, arr, sub)
        rest = restrict(arr, sub)
        d_small = build_d_like(k)
        corr = hyperplane_correspondence(matrix, d_small, rest, onto=False)
        if corr is None:
            raise AssertionError(f"no embedded D{k} pattern at level {k}")
        levels.append(ChainLevel(k, sub, tuple(map(tuple, matrix)), hyperplane_count(rest),
                                 hyperplane_count(d_small), corr))
        prev = sub
    return ChainWitness(arr.label(), tuple(levels))
