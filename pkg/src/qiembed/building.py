"""Vertices of the Bruhat-Tits tree (n = 2) and the A2 building (n = 3) of PGL_n(Q_p).

A vertex is a homothety class of Z_p-lattices in Q_p^n, stored as the
upper-triangular column Hermite form of a basis: diagonal p^{a_i} with
min a_i = 0 and each off-diagonal entry (i, j) reduced modulo p^{a_i}
to its digits below p^{a_i}, an exact element of Z[1/p].
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .padic import PadicScalar, PrecisionError, is_zero, reduce_mod, valuation

MAX_PRIME = 7


def _check_prime(p: int) -> None:
    if p not in (2, 3, 5, 7):
        raise ValueError(f"p must be a prime <= {MAX_PRIME}, got {p}")


# -- lattice classes --------------------------------------------------------------

@dataclass(frozen=True)
class LatticeClass:
    p: int
    n: int
    a: tuple  # diagonal exponents, min 0
    off: tuple  # upper entries (i < j) in row-major order, as Fractions

    def matrix(self) -> list:
        q = Fraction(self.p)
        m = [[Fraction(0)] * self.n for _ in range(self.n)]
        it = iter(self.off)
        for i in range(self.n):
            m[i][i] = q ** self.a[i]
            for j in range(i + 1, self.n):
                m[i][j] = next(it)
        return m

    def to_dict(self) -> dict:
        return {"p": self.p, "n": self.n, "a": list(self.a),
                "off": [f"{x.numerator}/{x.denominator}" for x in self.off]}

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeClass":
        return lattice_normal_form(
            LatticeClass(d["p"], d["n"], tuple(d["a"]), tuple(Fraction(s) for s in d["off"])).matrix(),
            d["p"])


def base_class(p: int = 2, n: int = 3) -> LatticeClass:
    _check_prime(p)
    return LatticeClass(p, n, (0,) * n, (Fraction(0),) * (n * (n - 1) // 2))


def _as_scalar(x, p):
    if isinstance(x, PadicScalar):
        if x.p != p:
            raise ValueError("mixed primes")
        return x
    return Fraction(x)


def lattice_normal_form(matrix, p: int = 2) -> LatticeClass:
    """Canonical class of the lattice spanned by the columns of ``matrix``."""
    _check_prime(p)
    m = [[_as_scalar(x, p) for x in row] for row in matrix]
    n = len(m)
    if n not in (2, 3) or any(len(r) != n for r in m):
        raise ValueError("need a square 2x2 or 3x3 matrix")
    a = [0] * n
    for r in range(n - 1, -1, -1):
        cols = [c for c in range(r + 1) if not is_zero(m[r][c])]
        if not cols:
            raise PrecisionError("matrix is singular at working precision")
        c = min(cols, key=lambda c: valuation(m[r][c], p))
        if c != r:
            for row in m:
                row[c], row[r] = row[r], row[c]
        piv = m[r][r]
        a[r] = valuation(piv, p)
        for j in range(r):
            if not is_zero(m[r][j]):
                q = m[r][j] / piv
                for i in range(n):
                    m[i][j] = m[i][j] - q * m[i][r]
        scale = Fraction(p) ** a[r] / piv
        for i in range(n):
            m[i][r] = m[i][r] * scale
    shift = min(a)
    a = [x - shift for x in a]
    s = Fraction(p) ** (-shift)
    m = [[x * s for x in row] for row in m]
    for j in range(1, n):
        for i in range(j - 1, -1, -1):
            rem = reduce_mod(m[i][j], a[i], p)
            q = (m[i][j] - rem) / Fraction(p) ** a[i]
            for k in range(i):
                m[k][j] = m[k][j] - q * m[k][i]
            m[i][j] = rem
    off = tuple(Fraction(m[i][j]) if isinstance(m[i][j], Fraction) else m[i][j]
                for i in range(n) for j in range(i + 1, n))
    return LatticeClass(p, n, tuple(a), off)


def diag_class(exponents, p: int = 2) -> LatticeClass:
    n = len(exponents)
    q = Fraction(p)
    return lattice_normal_form([[q ** e if i == j else 0 for j in range(n)]
                                for i, e in enumerate(exponents)], p)


# -- exact linear algebra helpers ----------------------------------------------

def matmul(x, y):
    return [[sum((x[i][k] * y[k][j] for k in range(len(y))), Fraction(0))
             for j in range(len(y[0]))] for i in range(len(x))]


def det(m) -> Fraction:
    if len(m) == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def inverse(m) -> list:
    n = len(m)
    d = det(m)
    if d == 0:
        raise ValueError("singular matrix")
    if n == 2:
        return [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
    cof = [[(m[(j + 1) % 3][(i + 1) % 3] * m[(j + 2) % 3][(i + 2) % 3]
             - m[(j + 1) % 3][(i + 2) % 3] * m[(j + 2) % 3][(i + 1) % 3]) / d
            for j in range(3)] for i in range(3)]
    return cof


def _vmin(values, p):
    vs = [valuation(x, p) for x in values if x != 0]
    return min(vs) if vs else math.inf


def determinantal_valuations(m, p: int) -> tuple:
    """(min valuation of k x k minors) for k = 1..n; exact for Fraction matrices."""
    n = len(m)
    out = [_vmin([x for row in m for x in row], p)]
    if n == 3:
        minors = [m[i][j] * m[k][l] - m[i][l] * m[k][j]
                  for i, k in ((0, 1), (0, 2), (1, 2)) for j, l in ((0, 1), (0, 2), (1, 2))]
        out.append(_vmin(minors, p))
    out.append(valuation(det(m), p))
    return tuple(out)


# -- relative position and distances --------------------------------------------

@dataclass(frozen=True)
class RelPosition:
    exponents: tuple  # sorted descending

    @property
    def normalized(self) -> tuple:
        mean = Fraction(sum(self.exponents), len(self.exponents))
        return tuple(e - mean for e in self.exponents)

    @property
    def cat0(self) -> float:
        return math.sqrt(sum(x * x for x in self.normalized))

    @property
    def comb(self) -> int:
        return self.exponents[0] - self.exponents[-1]

    def reverse_negate(self) -> "RelPosition":
        return RelPosition(tuple(-e for e in reversed(self.exponents)))


def _elementary_exponents(m, p: int) -> tuple:
    dv = determinantal_valuations(m, p)
    ds = [dv[0]] + [dv[k] - dv[k - 1] for k in range(1, len(dv))]
    return tuple(sorted(ds, reverse=True))


def relative_position(l1: LatticeClass, l2: LatticeClass) -> RelPosition:
    """Elementary-divisor exponents of the transition matrix B1^{-1} B2."""
    if (l1.p, l1.n) != (l2.p, l2.n):
        raise ValueError("lattice classes must share p and n")
    return RelPosition(_elementary_exponents(matmul(inverse(l1.matrix()), l2.matrix()), l1.p))


def cat0_distance(l1: LatticeClass, l2: LatticeClass) -> float:
    return relative_position(l1, l2).cat0


def comb_distance(l1: LatticeClass, l2: LatticeClass) -> int:
    """Graph distance from the relative position: a_1 - a_n."""
    return relative_position(l1, l2).comb


# A2 vertex geometry: cat0 / comb lies in [1/sqrt(2), sqrt(2/3)]
CAT0_COMB_LOWER = 1 / math.sqrt(2)
CAT0_COMB_UPPER = math.sqrt(2 / 3)


# -- integer lattices and the BFS oracle -----------------------------------------

def _int_vp(x: int, p: int) -> int:
    if x == 0:
        return 1 << 30
    if p == 2:
        return (x & -x).bit_length() - 1
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _int_det(m) -> int:
    if len(m) == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def integral_key(cols, p: int) -> tuple:
    """Canonical key of the class of the integral lattice spanned by ``cols`` (list of columns).

    The lattice must have p-power index in Z^n.  The class representative
    inside Z^n but not inside pZ^n contains p^N Z^n (N the valuation of its
    index), so its Hermite form can be computed modulo p^{N+1}.
    """
    n = len(cols)
    while all(x % p == 0 for c in cols for x in c):
        cols = [[x // p for x in c] for c in cols]
    rows = [[cols[j][i] for j in range(n)] for i in range(n)]
    mod = p ** (_int_vp(_int_det(rows), p) + 1)
    m = [[x % mod for x in r] for r in rows]
    a = [0] * n
    for r in range(n - 1, -1, -1):
        c = min(range(r + 1), key=lambda c: _int_vp(m[r][c], p))
        if c != r:
            for row in m:
                row[c], row[r] = row[r], row[c]
        v = _int_vp(m[r][r], p)
        a[r] = v
        pv = p ** v
        uinv = pow(m[r][r] // pv, -1, mod)
        for i in range(n):
            m[i][r] = m[i][r] * uinv % mod
        for j in range(r):
            x = m[r][j]
            if x:
                q = x // pv
                for i in range(n):
                    m[i][j] = (m[i][j] - q * m[i][r]) % mod
    key = list(a)
    for j in range(1, n):
        for i in range(j - 1, -1, -1):
            x = m[i][j] % p ** a[i]
            q = (m[i][j] - x) // p ** a[i]
            if q:
                for k in range(i):
                    m[k][j] = (m[k][j] - q * m[k][i]) % mod
            m[i][j] = x
    key.extend(m[i][j] for i in range(n) for j in range(i + 1, n))
    return tuple(key), [[m[i][j] for i in range(n)] for j in range(n)]


def _neighbor_patterns(p: int, n: int) -> list:
    """Bases (as column lists) of the lattices strictly between pZ^n and Z^n."""
    pats = []
    vecs = [v for v in itertools.product(range(p), repeat=n) if any(v)]
    lines = [v for v in vecs if v[next(i for i in range(n) if v[i])] == 1]
    for v in lines:  # span(v) + pZ^n
        k = next(i for i in range(n) if v[i])
        pats.append([list(v)] + [[p if i == j else 0 for i in range(n)] for j in range(n) if j != k])
    if n == 3:
        for f in lines:  # kernel of the functional f, plus pZ^3
            k = next(i for i in range(n) if f[i])
            basis = []
            for j in range(n):
                if j == k:
                    continue
                w = [0] * n
                w[j] = 1
                w[k] = (-f[j] * pow(f[k], -1, p)) % p
                basis.append(w)
            e = [0] * n
            e[k] = p
            pats.append(basis + [e])
    return pats


_PATTERNS: dict = {}


def integral_neighbors(cols, p: int) -> list:
    """Keys and bases of all neighbors of the integral lattice class spanned by ``cols``."""
    n = len(cols)
    pats = _PATTERNS.setdefault((p, n), _neighbor_patterns(p, n))
    out = []
    for pat in pats:
        new = [[sum(cols[k][i] * w[k] for k in range(n)) for i in range(n)] for w in pat]
        out.append(integral_key(new, p))
    return out


def integral_basis(lc: LatticeClass) -> list:
    """Integral column basis of a representative of ``lc``."""
    m = lc.matrix()
    den = 1
    for row in m:
        for x in row:
            den = max(den, x.denominator)
    scale = 1
    while any((x * scale).denominator != 1 for row in m for x in row):
        scale *= lc.p
    return [[int(m[i][j] * scale) for i in range(lc.n)] for j in range(lc.n)]


class BfsCapExceeded(RuntimeError):
    pass


def comb_distance_bfs(l1: LatticeClass, l2: LatticeClass, cap: int = 10) -> int:
    """Graph distance by bidirectional breadth-first search over neighbor generation."""
    if (l1.p, l1.n) != (l2.p, l2.n):
        raise ValueError("lattice classes must share p and n")
    p = l1.p
    k1, b1 = integral_key(integral_basis(l1), p)
    k2, b2 = integral_key(integral_basis(l2), p)
    if k1 == k2:
        return 0
    sides = [({k1: 0}, [(k1, b1)]), ({k2: 0}, [(k2, b2)])]
    radius = [0, 0]
    while radius[0] + radius[1] < cap:
        s = 0 if len(sides[0][1]) <= len(sides[1][1]) else 1
        seen, frontier = sides[s]
        other = sides[1 - s][0]
        radius[s] += 1
        nxt = []
        best = None
        for _, b in frontier:
            for k, nb in integral_neighbors(b, p):
                if k in seen:
                    continue
                seen[k] = radius[s]
                nxt.append((k, nb))
                if k in other:
                    d = radius[s] + other[k]
                    best = d if best is None else min(best, d)
        if best is not None:
            return best
        sides[s] = (seen, nxt)
    raise BfsCapExceeded(f"distance exceeds the BFS cap {cap}")


class BallOracle:
    """Breadth-first ball around the base class, reused for many distance queries.

    ``distance(l1, l2)`` moves l1 to the base by the linear map B1^{-1} (a graph
    automorphism) and then searches outward from the image of l2 until it
    meets the stored ball.
    """

    def __init__(self, p: int = 2, n: int = 3, radius: int = 6):
        self.p, self.n, self.radius = p, n, radius
        k0, b0 = integral_key([[int(i == j) for i in range(n)] for j in range(n)], p)
        self.dist = {k0: 0}
        frontier = [b0]
        for r in range(1, radius + 1):
            nxt = []
            for b in frontier:
                for k, nb in integral_neighbors(b, p):
                    if k not in self.dist:
                        self.dist[k] = r
                        nxt.append(nb)
            frontier = nxt

    def distance_from_base_basis(self, cols, cap: int) -> int:
        p, R = self.p, self.radius
        k, b = integral_key(cols, p)
        if k in self.dist:
            return self.dist[k]
        seen = {k}
        frontier = [b]
        best = math.inf
        j = 0
        while j < best - R:
            j += 1
            if j + R > cap:
                raise BfsCapExceeded(f"distance exceeds the BFS cap {cap}")
            nxt = []
            for fb in frontier:
                for nk, nb in integral_neighbors(fb, p):
                    if nk in seen:
                        continue
                    seen.add(nk)
                    nxt.append(nb)
                    d = self.dist.get(nk)
                    if d is not None:
                        best = min(best, d + j)
            frontier = nxt
        return int(best)

    def distance(self, l1: LatticeClass, l2: LatticeClass, cap: int = 12) -> int:
        t = matmul(inverse(l1.matrix()), l2.matrix())
        lc = lattice_normal_form(t, self.p)
        return self.distance_from_base_basis(integral_basis(lc), cap)


def random_walk(start: LatticeClass, steps: int, rng) -> LatticeClass:
    """Endpoint of a non-backtracking-free random walk in the vertex graph."""
    p = start.p
    b = integral_basis(start)
    for _ in range(steps):
        nbs = integral_neighbors(b, p)
        b = nbs[int(rng.integers(len(nbs)))][1]
    return lattice_normal_form([[Fraction(b[j][i]) for j in range(start.n)]
                                for i in range(start.n)], p)


def random_unimodular(rng, steps: int = 12) -> list:
    """Product of random elementary integral matrices (determinant 1)."""
    m = [[Fraction(int(i == j)) for j in range(3)] for i in range(3)]
    for _ in range(steps):
        i, j = rng.choice(3, size=2, replace=False)
        c = int(rng.integers(-3, 4))
        for row in m:
            row[j] += c * row[i]
    return m


def stratified_pairs(rng, n_pairs: int, max_comb: int = 10, p: int = 2) -> list:
    """Pairs (l1, l2) of rank-3 classes whose comb distance is uniform on 0..max_comb.

    l1 is a short random walk from the base; l2 is the class of B1 U diag(p^lam)
    with U unimodular and the spread of lam drawn uniformly.  Random walks
    alone concentrate on small distances.
    """
    out = []
    for _ in range(n_pairs):
        l1 = random_walk(base_class(p), int(rng.integers(0, 5)), rng)
        c = int(rng.integers(0, max_comb + 1))
        lam = [c, int(rng.integers(0, c + 1)), 0]
        rng.shuffle(lam)
        d = [[Fraction(p) ** lam[i] if i == j else Fraction(0) for j in range(3)] for i in range(3)]
        g = matmul(matmul(l1.matrix(), random_unimodular(rng)), d)
        out.append((l1, lattice_normal_form(g, p)))
    return out


# -- the tree T_{p+1} and its horospherical chart ----------------------------------

@dataclass(frozen=True)
class TreeVertex:
    """Chart coordinates relative to the end xi fixed by upper-triangular matrices.

    (m, x) is the class of [[1, x p^m], [0, p^m]] with x in Z[1/p] reduced to
    [0, p^{-m}); the level m is the Busemann function toward xi.
    """
    m: int
    x: Fraction
    p: int = 2

    def __post_init__(self):
        object.__setattr__(self, "x", reduce_mod(Fraction(self.x), -self.m, self.p))

    @property
    def lattice(self) -> LatticeClass:
        q = Fraction(self.p) ** self.m
        return lattice_normal_form([[1, self.x * q], [0, q]], self.p)

    @classmethod
    def from_lattice(cls, lc: LatticeClass) -> "TreeVertex":
        if lc.n != 2:
            raise ValueError("tree vertices have n = 2")
        a0, a1 = lc.a
        c = lc.off[0]
        if a0 == 0:
            return cls(a1, c / Fraction(lc.p) ** a1, lc.p)
        return cls(-a0, c, lc.p)


def tree_chart(v) -> tuple:
    if isinstance(v, LatticeClass):
        v = TreeVertex.from_lattice(v)
    return v.m, v.x


def tree_neighbors(v: TreeVertex) -> list:
    q = Fraction(v.p) ** (-v.m)
    return [TreeVertex(v.m + 1, v.x, v.p)] + [TreeVertex(v.m - 1, v.x + k * q, v.p)
                                                 for k in range(v.p)]


def tree_distance(u: TreeVertex, w: TreeVertex) -> int:
    top = max(u.m, w.m)
    d = u.x - w.x
    if d != 0:
        top = max(top, -valuation(d, u.p))
    return 2 * top - u.m - w.m


def tree_distance_matrix(vertices) -> np.ndarray:
    """Pairwise chart distances, exact in int64 arithmetic (p = 2)."""
    if any(v.p != 2 for v in vertices):
        raise ValueError("vectorized distances are implemented for p = 2")
    shift = max(max(0, -valuation(v.x, 2)) if v.x else 0 for v in vertices)
    m = np.array([v.m for v in vertices], dtype=np.int64)
    xs = [int(v.x * 2 ** shift) for v in vertices]
    if max(xs, default=0) >= 2 ** 62:
        raise OverflowError("chart coordinates exceed int64")
    x = np.array(xs, dtype=np.int64)
    d = x[:, None] - x[None, :]
    low = d & -d  # lowest set bit of the difference
    nz = d != 0
    vd = np.zeros_like(d)
    vd[nz] = np.log2(low[nz].astype(float)).astype(np.int64) - shift
    top = np.maximum(m[:, None], m[None, :])
    top = np.where(nz, np.maximum(top, -vd), top)
    return 2 * top - m[:, None] - m[None, :]


def tree_ball(center: TreeVertex, radius: int) -> dict:
    """Vertices within ``radius`` by breadth-first search, with their distances."""
    dist = {center: 0}
    queue = deque([center])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for w in tree_neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


# -- the discrete AN-map -------------------------------------------------------------

def an_map_p(u: TreeVertex, w: TreeVertex) -> LatticeClass:
    """Class of N(x, z) diag(1, p^t, p^s) for charts u = (t, x), w = (s, z)."""
    if u.p != w.p:
        raise ValueError("vertices from different trees")
    return lattice_normal_form(an_map_matrix(u, w), u.p)


def an_map_matrix(u: TreeVertex, w: TreeVertex) -> list:
    q = Fraction(u.p)
    dt, ds = q ** u.m, q ** w.m
    return [[Fraction(1), u.x * dt, w.x * ds], [Fraction(0), dt, Fraction(0)],
            [Fraction(0), Fraction(0), ds]]


# -- the tree self-embedding avoiding xi -------------------------------------------

def phi_distortion_pairs(radius: int = 10) -> tuple:
    """(d_src, d_dst) over all pairs of the radius ball about the base vertex."""
    ball = list(tree_ball(TreeVertex(0, 0), radius))
    img = [qi_self_embedding_tree(v) for v in ball]
    iu = np.triu_indices(len(ball), 1)
    return tree_distance_matrix(ball)[iu], tree_distance_matrix(img)[iu]


def qi_self_embedding_tree(v: TreeVertex) -> TreeVertex:
    """Vertex map of T_3 induced by the prefix code Q_2 -> Z_2.

    Boundary points x in Z_2 get code "0" followed by the digits of x, and
    x = 2^{-k} u (u a unit) gets "1"^k "0" followed by the digits of u.  A
    vertex is a ball of boundary points and goes to the ball of codes; the
    vertices (m, 0) with m >= 1, whose balls contain 0 and have radius
    above 1, follow the code ray of ...111.  Every image lies at level <= -1.
    """
    if v.p != 2:
        raise ValueError("the prefix-code embedding is defined for p = 2")
    m, x = v.m, v.x
    if x == 0:
        if m <= 0:
            return TreeVertex(m - 1, Fraction(0))
        return TreeVertex(-m, Fraction(2 ** m - 1))
    k = -valuation(x, 2)
    if k <= 0:
        return TreeVertex(m - 1, 2 * x)
    u = x * 2 ** k
    return TreeVertex(m - 2 * k - 1, (2 ** k - 1) + 2 ** (k + 1) * u)
