"""Weyl hyperplane arrangements, singular subspaces and restricted patterns.

An :class:`Arrangement` lives in coordinates ``y`` on a rational vector
space of dimension ``ambient_dim``.  Hyperplanes are stored by canonical
normal (primitive integer vector, positive leading entry), so that
``H = {y : normal . y = 0}``.  ``gram`` is the inner product in these
coordinates and ``embedding`` is the matrix taking ``y`` to the root
coordinates ``x`` that the equations ``x1=x2`` etc. refer to.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import exact, roots

DEFAULT_MAX_DIM = 8
DEFAULT_MAX_SUBSPACES = 250_000


@dataclass(frozen=True, order=True)
class Hyperplane:
    normal: tuple  # canonical primitive integer normal

    @classmethod
    def from_normal(cls, v: Sequence) -> "Hyperplane":
        return cls(exact.primitive(v))

    @property
    def canonical(self) -> tuple:
        return self.normal

    def contains(self, vec: Sequence) -> bool:
        return exact.dot(self.normal, vec) == 0


@dataclass(frozen=True)
class Factor:
    type_tag: str
    rank: int
    block: tuple  # coordinate indices


@dataclass(frozen=True)
class Arrangement:
    ambient_dim: int
    hyperplanes: tuple
    factors: tuple
    gram: tuple
    embedding: tuple  # rows: root-coordinate index, columns: ambient coordinate

    def __post_init__(self):
        normals = [h.normal for h in self.hyperplanes]
        if len(set(normals)) != len(normals):
            raise ValueError("hyperplanes must be pairwise distinct")
        if sum(len(f.block) for f in self.factors) != self.ambient_dim:
            raise ValueError("factor blocks must partition the ambient coordinates")
        for f in self.factors:
            outside = [i for i in range(self.ambient_dim) if i not in f.block]
            for h in self.factor_hyperplanes(f):
                if any(h.normal[i] for i in outside):
                    raise ValueError("factor hyperplane leaves its coordinate block")

    def factor_hyperplanes(self, f: Factor) -> list:
        block = set(f.block)
        return [h for h in self.hyperplanes
                if all(i in block for i, c in enumerate(h.normal) if c)]

    @property
    def normals(self) -> list:
        return [h.normal for h in self.hyperplanes]

    @property
    def is_irreducible(self) -> bool:
        return len(self.factors) == 1 and self.factors[0].type_tag != "restricted"

    def label(self) -> str:
        return "x".join(f"{f.type_tag}{f.rank}" if f.type_tag not in ("E6", "E7", "E8", "F4", "G2")
                        else f.type_tag for f in self.factors)


@dataclass(frozen=True)
class SingularSubspace:
    basis: tuple  # RREF rows, tuple of tuples of Fraction
    defining: frozenset  # indices of hyperplanes containing the subspace

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains_vector(self, v) -> bool:
        return exact.rank([list(b) for b in self.basis] + [list(v)]) == self.dim


def _make(normals, factors, gram, embedding) -> Arrangement:
    hyps = sorted({Hyperplane.from_normal(n) for n in normals})
    return Arrangement(
        ambient_dim=len(gram),
        hyperplanes=tuple(hyps),
        factors=tuple(factors),
        gram=tuple(tuple(exact.frac(x) for x in row) for row in gram),
        embedding=tuple(tuple(exact.frac(x) for x in row) for row in embedding),
    )


@lru_cache(maxsize=None)
def build_irreducible(type_tag: str, rank: int) -> Arrangement:
    """Canonical arrangement of an irreducible crystallographic root system.

    Raises ``ValueError`` for invalid pairs, including D2 and D3 which are
    treated as type A.
    """
    tag = roots.normalize_type(type_tag, rank)
    vecs, basis = roots.root_table(tag, rank)
    bmat = exact.transpose(basis)  # N x rank, columns = basis vectors
    normals = [exact.matvec(basis, r) for r in vecs]  # B^T r
    gram = exact.matmul(basis, bmat)
    return _make(normals, [Factor(tag, rank, tuple(range(rank)))], gram, bmat)


def build_d_like(n: int) -> Arrangement:
    """Hyperplanes x_i = +-x_j in R^n for any n >= 2 (D2, D3 included).

    Used as the embedded sub-pattern in restricted-pattern chains.
    """
    vecs = roots._d_roots(n)
    eye = exact.identity(n)
    return _make(vecs, [Factor("D", n, tuple(range(n)))], eye, eye)


def _block_diag(mats, dims):
    total = sum(dims)
    out = exact.zeros(total, total)
    off = 0
    for m, d in zip(mats, dims):
        for i in range(d):
            for j in range(d):
                out[off + i][off + j] = m[i][j]
        off += d
    return out


def build_product(factors: Sequence[Arrangement]) -> Arrangement:
    if not factors:
        raise ValueError("product of an empty list")
    if len(factors) == 1:
        return factors[0]
    dims = [a.ambient_dim for a in factors]
    total = sum(dims)
    normals, new_factors = [], []
    emb_rows = []
    off = 0
    for a in factors:
        for h in a.hyperplanes:
            v = [0] * total
            v[off:off + a.ambient_dim] = h.normal
            normals.append(v)
        for f in a.factors:
            new_factors.append(Factor(f.type_tag, f.rank, tuple(off + i for i in f.block)))
        for row in a.embedding:
            r = [Fraction(0)] * total
            r[off:off + a.ambient_dim] = row
            emb_rows.append(r)
        off += a.ambient_dim
    gram = _block_diag([a.gram for a in factors], dims)
    return _make(normals, new_factors, gram, emb_rows)


def parse_label(label: str) -> Arrangement:
    """Build from labels like ``A2``, ``G2``, ``BC2xA1``, ``A1xA1xA1``, ``D4``."""
    parts = [p for p in re.split(r"[x×*]", label.strip()) if p]
    arrs = []
    for p in parts:
        m = re.fullmatch(r"(BC|[ABCDEFG])(\d+)", p.upper())
        if not m:
            raise ValueError(f"cannot parse arrangement label {p!r}")
        arrs.append(build_irreducible(m.group(1), int(m.group(2))))
    return build_product(arrs)


def hyperplane_count(arr: Arrangement) -> int:
    return len(arr.hyperplanes)


# -- subspaces -------------------------------------------------------------

def _canonical_basis(rows) -> tuple:
    r, _ = exact.rref([list(x) for x in rows]) if rows else ([], [])
    return tuple(tuple(x) for x in r)


def _defining(arr: Arrangement, basis) -> frozenset:
    return frozenset(i for i, h in enumerate(arr.hyperplanes)
                     if all(exact.dot(h.normal, b) == 0 for b in basis))


def subspace_from_normals(arr: Arrangement, normals) -> SingularSubspace:
    """Intersection of the hyperplanes with the given normals (ambient coords)."""
    normals = [list(n) for n in normals]
    if normals:
        basis = exact.nullspace(normals)
    else:
        basis = exact.identity(arr.ambient_dim)
    basis = _canonical_basis(basis)
    return SingularSubspace(basis, _defining(arr, basis))


def subspace_from_indices(arr: Arrangement, indices: Iterable[int]) -> SingularSubspace:
    return subspace_from_normals(arr, [arr.hyperplanes[i].normal for i in indices])


def ambient(arr: Arrangement) -> SingularSubspace:
    return subspace_from_normals(arr, [])


def is_singular(arr: Arrangement, sub: SingularSubspace) -> bool:
    closure = subspace_from_indices(arr, _defining(arr, sub.basis))
    return closure.basis == _canonical_basis(sub.basis)


def _intersect(basis, normal) -> tuple:
    coeffs = [[exact.dot(normal, b) for b in basis]]
    if all(c == 0 for c in coeffs[0]):
        return tuple(basis)
    null = exact.nullspace(coeffs)
    rows = [[sum((c * b[k] for c, b in zip(vec, basis)), Fraction(0)) for k in range(len(basis[0]))]
            for vec in null]
    return _canonical_basis(rows)


def singular_subspaces(arr: Arrangement, min_dim: int = 0, *,
                       max_dim: int = DEFAULT_MAX_DIM,
                       max_count: int = DEFAULT_MAX_SUBSPACES) -> list:
    """All distinct intersections of hyperplanes with dimension >= ``min_dim``.

    Ordered by decreasing dimension, then by canonical basis.  Includes the
    ambient space.
    """
    if not 0 <= min_dim <= arr.ambient_dim:
        raise ValueError("min_dim out of range")
    if arr.ambient_dim > max_dim:
        raise ValueError(f"ambient dimension {arr.ambient_dim} exceeds cap {max_dim}")
    start = ambient(arr).basis
    seen = {start}
    layer = [start]
    while layer:
        nxt = []
        for basis in layer:
            if len(basis) - 1 < min_dim or not basis:
                continue
            for h in arr.hyperplanes:
                if all(exact.dot(h.normal, b) == 0 for b in basis):
                    continue
                sub = _intersect(basis, h.normal)
                if sub not in seen:
                    seen.add(sub)
                    nxt.append(sub)
                    if len(seen) > max_count:
                        raise RuntimeError(f"more than {max_count} singular subspaces; raise max_count")
        layer = nxt
    out = [SingularSubspace(b, _defining(arr, b)) for b in seen if len(b) >= min_dim]
    out.sort(key=lambda s: (-s.dim, s.basis))
    return out


# -- restriction -----------------------------------------------------------

def _as_subspace(arr: Arrangement, sub) -> SingularSubspace:
    if isinstance(sub, SingularSubspace):
        return sub
    if isinstance(sub, str):
        return subspace_from_equations(arr, sub)
    return subspace_from_indices(arr, sub)


def restrict(arr: Arrangement, sub) -> Arrangement:
    """Restricted pattern on a singular subspace, in its RREF basis coordinates."""
    sub = _as_subspace(arr, sub)
    if not is_singular(arr, sub):
        raise ValueError("subspace is not singular (not an intersection of hyperplanes)")
    if sub.dim == arr.ambient_dim:
        return arr
    if sub.dim == 0:
        raise ValueError("cannot restrict to the zero subspace")
    basis = [list(b) for b in sub.basis]
    normals = []
    for h in arr.hyperplanes:
        v = [exact.dot(h.normal, b) for b in basis]
        if any(v):
            normals.append(v)
    bmat = exact.transpose(basis)
    gram = exact.matmul(exact.matmul(basis, [list(r) for r in arr.gram]), bmat)
    emb = exact.matmul([list(r) for r in arr.embedding], bmat)
    return _make(normals, [Factor("restricted", sub.dim, tuple(range(sub.dim)))], gram, emb)


def restricted_subspaces(arr: Arrangement, sub) -> list:
    """Restricted hyperplanes of ``sub`` as singular subspaces of ``arr``."""
    sub = _as_subspace(arr, sub)
    out = {}
    for h in arr.hyperplanes:
        if any(exact.dot(h.normal, b) for b in sub.basis):
            b = _intersect(sub.basis, h.normal)
            out[b] = SingularSubspace(b, _defining(arr, b))
    return sorted(out.values(), key=lambda s: s.basis)


def codim1_residual_dim(arr: Arrangement) -> int:
    """Largest dimension of the intersection of all hyperplanes but one."""
    if len(arr.hyperplanes) < 2:
        raise ValueError("need at least two hyperplanes")
    best = 0
    normals = arr.normals
    for k in range(len(normals)):
        rest = [list(n) for i, n in enumerate(normals) if i != k]
        best = max(best, arr.ambient_dim - exact.rank(rest))
    return best


# -- equations in root coordinates -----------------------------------------

_EQ_SIDE = re.compile(r"^([+-]?)(?:x(\d+)|(0))$")


def _parse_side(side: str, n: int):
    side = side.replace(" ", "")
    m = _EQ_SIDE.match(side)
    if not m:
        raise ValueError(f"cannot parse term {side!r}")
    v = [Fraction(0)] * n
    if m.group(3) is not None:
        return v
    i = int(m.group(2)) - 1
    if not 0 <= i < n:
        raise ValueError(f"coordinate x{i + 1} out of range")
    v[i] = Fraction(-1 if m.group(1) == "-" else 1)
    return v


def equation_normals(arr: Arrangement, text: str) -> list:
    """Normals (ambient coordinates) of chained equations like ``x1=x2=-x3``.

    Several chains may be joined by ``&``, ``,`` or ``and``.
    """
    n = len(arr.embedding)
    out = []
    for chain in re.split(r"\s*(?:&|,|\band\b|∧)\s*", text.strip()):
        sides = [_parse_side(s, n) for s in chain.split("=")]
        if len(sides) < 2:
            raise ValueError(f"not an equation: {chain!r}")
        for a, b in zip(sides, sides[1:]):
            root = [x - y for x, y in zip(a, b)]
            # pull back along the embedding: (E^T root) . y = root . (E y)
            normal = [sum((root[r] * arr.embedding[r][c] for r in range(n)), Fraction(0))
                      for c in range(arr.ambient_dim)]
            if any(normal):
                out.append(normal)
    return out


def subspace_from_equations(arr: Arrangement, text: str) -> SingularSubspace:
    return subspace_from_normals(arr, equation_normals(arr, text))


# -- serialization ----------------------------------------------------------

SCHEMA_TAG = "qiembed.arrangement.v1"


def to_dict(arr: Arrangement) -> dict:
    f = exact.fmt
    return {
        "schema": SCHEMA_TAG,
        "ambient_dim": arr.ambient_dim,
        "factors": [{"type": x.type_tag, "rank": x.rank, "block": list(x.block)} for x in arr.factors],
        "gram": [[f(x) for x in row] for row in arr.gram],
        "embedding": [[f(x) for x in row] for row in arr.embedding],
        "hyperplanes": [[f(Fraction(c)) for c in h.normal] for h in arr.hyperplanes],
    }


def from_dict(d: dict) -> Arrangement:
    if d.get("schema") != SCHEMA_TAG:
        raise ValueError("not an arrangement document")
    p = exact.parse
    return _make(
        [[p(c) for c in row] for row in d["hyperplanes"]],
        [Factor(x["type"], x["rank"], tuple(x["block"])) for x in d["factors"]],
        [[p(c) for c in row] for row in d["gram"]],
        [[p(c) for c in row] for row in d["embedding"]],
    )


def dumps(arr: Arrangement) -> str:
    return json.dumps(to_dict(arr), indent=1, sort_keys=True) + "\n"


def loads(text: str) -> Arrangement:
    return from_dict(json.loads(text))


# -- reflections -------------------------------------------------------------

def reflection(arr: Arrangement, h: Hyperplane) -> list:
    """Orthogonal reflection (w.r.t. ``arr.gram``) across ``h``, as a matrix."""
    g = [list(r) for r in arr.gram]
    ginv = exact.inverse(g)
    n = list(map(Fraction, h.normal))
    root = exact.matvec(ginv, n)  # G^{-1} n
    denom = exact.dot(n, root)
    d = arr.ambient_dim
    return [[Fraction(int(i == j)) - 2 * root[i] * n[j] / denom for j in range(d)] for i in range(d)]


def map_hyperplane(matrix, h: Hyperplane):
    """Normal of the image hyperplane T(H) for invertible T: T^{-T} n."""
    tinv_t = exact.transpose(exact.inverse(matrix))
    return Hyperplane.from_normal(exact.matvec(tinv_t, h.normal))
