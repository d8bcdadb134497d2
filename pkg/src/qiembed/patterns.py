"""Pattern-preserving linear maps between Weyl arrangements.

Maps act on ambient coordinates: ``T`` is a ``dst.ambient_dim x
src.ambient_dim`` matrix.  In the square case a map preserves patterns
iff it carries every source hyperplane onto a target hyperplane; with a
smaller source it must carry every source hyperplane onto a singular
subspace of the target of the same dimension.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Optional

from . import exact
from .arrangements import Arrangement, Hyperplane, singular_subspaces, subspace_from_normals

DEFAULT_RANK_CAP = 4


@dataclass(frozen=True)
class RationalLinearMap:
    matrix: tuple
    src: Arrangement = field(repr=False, compare=False)
    dst: Arrangement = field(repr=False, compare=False)

    def __post_init__(self):
        m = [list(r) for r in self.matrix]
        if len(m) != self.dst.ambient_dim or len(m[0]) != self.src.ambient_dim:
            raise ValueError("matrix shape does not match the arrangements")
        if exact.rank(m) != self.src.ambient_dim:
            raise ValueError("map is not injective")

    @classmethod
    def of(cls, matrix, src, dst) -> "RationalLinearMap":
        return cls(tuple(tuple(exact.frac(x) for x in r) for r in matrix), src, dst)

    @property
    def rows(self) -> list:
        return [list(r) for r in self.matrix]

    def compose(self, other: "RationalLinearMap") -> "RationalLinearMap":
        """``self o other``."""
        return RationalLinearMap.of(exact.matmul(self.rows, other.rows), other.src, self.dst)

    def scaled(self, c) -> "RationalLinearMap":
        return RationalLinearMap.of(exact.scale(exact.frac(c), self.rows), self.src, self.dst)

    def inverse(self) -> "RationalLinearMap":
        return RationalLinearMap.of(exact.inverse(self.rows), self.dst, self.src)


@dataclass(frozen=True)
class Decision:
    preserving: bool
    assignment: Optional[dict]  # src hyperplane index -> dst hyperplane index or subspace basis
    failed: Optional[int] = None  # first src hyperplane without a valid image

    def __bool__(self):
        return self.preserving


@dataclass(frozen=True)
class FactorImage:
    mapping: dict  # src factor index -> dst factor index
    violations: tuple  # (src factor index, dst factor indices met)

    @property
    def total(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class PreserverCertificate:
    map: RationalLinearMap
    assignment: tuple  # assignment[i] = target id of src hyperplane i
    factor_image: dict
    family_dim: int = 0  # dimension of the solution space this map represents

    def to_dict(self) -> dict:
        def target(t):
            if isinstance(t, int):
                return t
            return [[exact.fmt(x) for x in row] for row in t]

        return {
            "matrix": [[exact.fmt(x) for x in row] for row in self.map.matrix],
            "assignment": {str(i): target(t) for i, t in enumerate(self.assignment)},
            "factor_image": {str(k): v for k, v in sorted(self.factor_image.items())},
            "family_dim": self.family_dim,
        }


def _as_map(T, src, dst) -> RationalLinearMap:
    if isinstance(T, RationalLinearMap):
        return T
    return RationalLinearMap.of(T, src, dst)


def _hyperplane_basis(h: Hyperplane) -> list:
    return exact.nullspace([list(h.normal)])


def is_pattern_preserving(T, src: Arrangement, dst: Arrangement) -> Decision:
    """Decide whether T preserves patterns; the witness is the hyperplane assignment."""
    if src.ambient_dim > dst.ambient_dim:
        raise ValueError("source dimension exceeds target dimension; no injective map exists")
    t = _as_map(T, src, dst)
    mt = exact.transpose(t.rows)
    if src.ambient_dim == dst.ambient_dim:
        pulled = {}
        for j, h in enumerate(dst.hyperplanes):
            pulled.setdefault(exact.primitive(exact.matvec(mt, h.normal)), j)
        assignment = {}
        for i, h in enumerate(src.hyperplanes):
            j = pulled.get(h.normal)
            if j is None:
                return Decision(False, None, i)
            assignment[i] = j
        return Decision(True, assignment)
    assignment = {}
    for i, h in enumerate(src.hyperplanes):
        img = exact.transpose(exact.matmul(t.rows, exact.transpose(_hyperplane_basis(h))))
        containing = [list(g.normal) for g in dst.hyperplanes
                      if all(exact.dot(g.normal, v) == 0 for v in img)]
        if not containing:
            return Decision(False, None, i)
        closure = subspace_from_normals(dst, containing)
        if closure.dim != src.ambient_dim - 1:
            return Decision(False, None, i)
        assignment[i] = closure.basis
    return Decision(True, assignment)


def factor_image(T, src: Arrangement, dst: Arrangement, *, check: bool = True) -> FactorImage:
    """Target factor containing the image of each source factor."""
    t = _as_map(T, src, dst)
    if check and not is_pattern_preserving(t, src, dst):
        raise ValueError("map is not pattern-preserving")
    rows = t.rows
    mapping, violations = {}, []
    for si, sf in enumerate(src.factors):
        met = []
        for di, df in enumerate(dst.factors):
            if any(rows[r][c] for r in df.block for c in sf.block):
                met.append(di)
        if len(met) == 1:
            mapping[si] = met[0]
        else:
            violations.append((si, tuple(met)))
    return FactorImage(mapping, tuple(violations))


def is_conformal_per_factor(T, src: Arrangement, dst: Arrangement) -> list:
    """Per source factor: does T restricted to it scale the inner product by some c > 0?"""
    t = _as_map(T, src, dst)
    fi = factor_image(t, src, dst)
    if not fi.total:
        raise ValueError(f"factor image is not total: {fi.violations}")
    rows = t.rows
    g_dst = [list(r) for r in dst.gram]
    out = []
    for sf in src.factors:
        block = [[rows[r][c] for c in sf.block] for r in range(len(rows))]
        pulled = exact.matmul(exact.matmul(exact.transpose(block), g_dst), block)
        g_src = [[src.gram[a][b] for b in sf.block] for a in sf.block]
        c = pulled[0][0] / g_src[0][0]
        out.append(c > 0 and pulled == exact.scale(c, g_src))
    return out


# -- canonical forms ------------------------------------------------------------

def normalize_per_factor(matrix, src: Arrangement) -> tuple:
    """Scale each source-factor column block so its first nonzero entry is 1."""
    m = [list(r) for r in matrix]
    for sf in src.factors:
        lead = next((m[r][c] for r in range(len(m)) for c in sf.block if m[r][c]), None)
        if lead is None:
            continue
        for r in range(len(m)):
            for c in sf.block:
                m[r][c] = m[r][c] / lead
    return tuple(tuple(r) for r in m)


def scaling_classes(maps, src: Arrangement) -> list:
    """Distinct classes of maps up to nonzero scaling on each source factor."""
    return sorted({normalize_per_factor(m.matrix if isinstance(m, RationalLinearMap) else m, src)
                   for m in maps})


# -- exhaustive search ----------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    rank_cap: int = DEFAULT_RANK_CAP
    injective: bool = False
    seed: int = 0
    probes: int = 3


@dataclass(frozen=True)
class SearchResult:
    certificates: tuple
    exhaustive: bool
    nodes: int
    mode: str

    def __iter__(self):
        return iter(self.certificates)

    def __len__(self):
        return len(self.certificates)

    def __getitem__(self, i):
        return self.certificates[i]


def _combo(basis, coeffs):
    n = len(basis[0])
    return [sum((c * b[k] for c, b in zip(coeffs, basis) if c), Fraction(0)) for k in range(n)]


def _full_column_rank_exists(basis, shape, rng, probes) -> Optional[list]:
    """Find an element of span(basis) whose matrix has full column rank.

    Random integer probes first; if they all fail, an exact symbolic test
    decides whether every element is rank deficient.  Returns a witness
    coefficient vector or None.
    """
    rows, cols = shape
    k = len(basis)
    if k == 0:
        return None
    for _ in range(probes):
        coeffs = [Fraction(rng.randint(-10**6, 10**6)) for _ in range(k)]
        m = _reshape(_combo(basis, coeffs), rows, cols)
        if exact.rank(m) == cols:
            return coeffs
    return _symbolic_witness(basis, rows, cols)


def _symbolic_witness(basis, rows, cols):
    import sympy

    xs = sympy.symbols(f"c0:{len(basis)}")
    flat = [sum((sympy.Rational(b[i].numerator, b[i].denominator) * x
                 for b, x in zip(basis, xs) if b[i]), sympy.Integer(0))
            for i in range(rows * cols)]
    m = sympy.Matrix(rows, cols, flat)
    if rows == cols:
        polys = [sympy.expand(m.det(method="berkowitz"))]
    else:
        from itertools import combinations
        polys = [sympy.expand(m.extract(list(rs), list(range(cols))).det(method="berkowitz"))
                 for rs in combinations(range(rows), cols)]
    for p in polys:
        if p != 0:
            # a nonzero polynomial of degree <= cols per variable does not vanish on the grid
            poly = sympy.Poly(p, *xs)
            for point in _grid(len(xs), cols + 1):
                if poly.eval(dict(zip(xs, point))) != 0:
                    return [Fraction(v) for v in point]
    return None


def _deterministic_witness(basis, shape):
    """Smallest-grid coefficient vector giving a full-column-rank element."""
    from itertools import product
    rows, cols = shape
    k = len(basis)
    for size in range(2, cols + 3):
        for point in product(range(1, size + 1), repeat=k):
            if max(point) < size and size > 2:
                continue
            coeffs = [Fraction(v) for v in point]
            if exact.rank(_reshape(_combo(basis, coeffs), rows, cols)) == cols:
                return coeffs
    return _symbolic_witness(basis, rows, cols)


def _grid(k, size):
    from itertools import product
    return product(range(size), repeat=k)


def _reshape(flat, rows, cols):
    return [flat[r * cols:(r + 1) * cols] for r in range(rows)]


def _annihilator(vecs, n):
    return exact.nullspace([list(v) for v in vecs], n) if vecs else exact.identity(n)


def search_preservers(src: Arrangement, dst: Arrangement,
                      config: SearchConfig = SearchConfig()) -> SearchResult:
    """Exhaustive backtracking search for pattern-preserving maps.

    Square mode: unknown S = T^{-T} with S u_i parallel to v_sigma(i) for
    every source normal u_i.  Injective mode (``config.injective``): unknown
    T with T(H_i) inside a target singular subspace of dimension d_src - 1.
    Each certificate is normalized up to nonzero scaling per source factor;
    an empty result is a proof of nonexistence.
    """
    ds, dt = src.ambient_dim, dst.ambient_dim
    if ds > config.rank_cap or dt > config.rank_cap:
        raise ValueError(f"rank cap {config.rank_cap} exceeded (src {ds}, dst {dt}); "
                         "raise rank_cap to search larger arrangements")
    if ds > dt:
        raise ValueError("source dimension exceeds target dimension")
    if ds < dt and not config.injective:
        raise ValueError("dimensions differ; enable injective mode")
    rng = random.Random(config.seed)
    if ds == dt:
        return _search_square(src, dst, rng, config)
    return _search_injective(src, dst, rng, config)


def _square_rows(u, v, d):
    # w . (S u) = 0 for every w orthogonal to v; S flattened row-major
    rows = []
    for w in _annihilator([v], d):
        rows.append([w[r] * u[c] for r in range(d) for c in range(d)])
    return rows


def _search_square(src, dst, rng, config):
    d = src.ambient_dim
    m = len(src.hyperplanes)
    targets = [h.normal for h in dst.hyperplanes]
    order = _spanning_order(src)
    found = []
    nodes = 0
    if m > len(targets):
        return SearchResult((), True, 0, "square")

    def rec(pos, used, rows, sigma):
        nonlocal nodes
        nodes += 1
        if rows:
            basis = exact.nullspace(rows)
        else:
            basis = exact.identity(d * d)
        witness = _full_column_rank_exists(basis, (d, d), rng, config.probes)
        if witness is None:
            return
        if pos == m:
            s = _reshape(_combo(basis, _deterministic_witness(basis, (d, d))), d, d)
            if len(basis) != len(src.factors):
                raise AssertionError("solution space larger than per-factor scalings")
            t = exact.transpose(exact.inverse(s))
            t = normalize_per_factor(t, src)
            assignment = tuple(sigma[i] for i in range(m))
            found.append((assignment, t))
            return
        i = order[pos]
        u = src.hyperplanes[i].normal
        for j, v in enumerate(targets):
            if j in used:
                continue
            sigma[i] = j
            rec(pos + 1, used | {j}, rows + _square_rows(u, v, d), sigma)
            del sigma[i]

    rec(0, frozenset(), [], {})
    found.sort()
    certs = []
    for assignment, t in found:
        lm = RationalLinearMap(t, src, dst)
        fi = factor_image(lm, src, dst, check=False)
        dec = is_pattern_preserving(lm, src, dst)
        if not dec or tuple(dec.assignment[i] for i in range(m)) != assignment:
            raise AssertionError("certificate failed exact re-verification")
        certs.append(PreserverCertificate(lm, assignment, fi.mapping if fi.total else
                                          {**fi.mapping, "violations": fi.violations},
                                          len(src.factors)))
    return SearchResult(tuple(certs), True, nodes, "square")


def _spanning_order(src: Arrangement) -> list:
    """Hyperplane indices with a spanning set of normals first (prunes early)."""
    chosen, rest = [], []
    for i, h in enumerate(src.hyperplanes):
        if exact.rank([list(src.hyperplanes[k].normal) for k in chosen] + [list(h.normal)]) > len(chosen):
            chosen.append(i)
        else:
            rest.append(i)
    return chosen + rest


def _search_injective(src, dst, rng, config):
    ds, dt = src.ambient_dim, dst.ambient_dim
    m = len(src.hyperplanes)
    targets = [s for s in singular_subspaces(dst, ds - 1) if s.dim == ds - 1 and s.dim < dt]
    ann = [_annihilator(s.basis, dt) for s in targets]
    hbases = [_hyperplane_basis(h) for h in src.hyperplanes]
    order = _spanning_order(src)
    found = []
    nodes = 0

    def rows_for(i, j):
        # a . (T b) = 0 for a in annihilator(target j), b in basis(H_i); T flattened row-major
        out = []
        for a in ann[j]:
            for b in hbases[i]:
                out.append([a[r] * b[c] for r in range(dt) for c in range(ds)])
        return out

    def rec(pos, used, rows, sigma):
        nonlocal nodes
        nodes += 1
        basis = exact.nullspace(rows) if rows else exact.identity(dt * ds)
        witness = _full_column_rank_exists(basis, (dt, ds), rng, config.probes)
        if witness is None:
            return
        if pos == m:
            t = _reshape(_combo(basis, _deterministic_witness(basis, (dt, ds))), dt, ds)
            found.append((tuple(sigma[i] for i in range(m)), normalize_per_factor(t, src), len(basis)))
            return
        i = order[pos]
        for j in range(len(targets)):
            if j in used:
                continue
            sigma[i] = j
            rec(pos + 1, used | {j}, rows + rows_for(i, j), sigma)
            del sigma[i]

    rec(0, frozenset(), [], {})
    found.sort()
    certs, seen = [], set()
    for assignment, t, fdim in found:
        if t in seen:
            continue
        seen.add(t)
        lm = RationalLinearMap(t, src, dst)
        if not is_pattern_preserving(lm, src, dst):
            # generic solution may still collapse an image; skip non-certified candidates
            continue
        fi = factor_image(lm, src, dst, check=False)
        certs.append(PreserverCertificate(lm, tuple(targets[j].basis for j in assignment),
                                          fi.mapping if fi.total else
                                          {**fi.mapping, "violations": fi.violations}, fdim))
    return SearchResult(tuple(certs), True, nodes, "injective")


# -- symmetry oracle ---------------------------------------------------------------

def _group_closure(gens, limit=100_000):
    d = len(gens[0])
    key = lambda m: tuple(tuple(r) for r in m)
    ident = exact.identity(d)
    seen = {key(ident): ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for s in gens:
                h = exact.matmul(s, g)
                k = key(h)
                if k not in seen:
                    seen[k] = h
                    nxt.append(h)
                    if len(seen) > limit:
                        raise RuntimeError("group closure exceeded limit")
        frontier = nxt
    return list(seen.values())


def _factor_arrangement(arr: Arrangement, f) -> tuple:
    block = list(f.block)
    gram = [[arr.gram[a][b] for b in block] for a in block]
    hyps = [Hyperplane(tuple(h.normal[i] for i in block)) for h in arr.factor_hyperplanes(f)]
    return gram, hyps


def _reflection_from(gram, h):
    ginv = exact.inverse(gram)
    n = [Fraction(c) for c in h.normal]
    root = exact.matvec(ginv, n)
    denom = exact.dot(n, root)
    d = len(gram)
    return [[Fraction(int(i == j)) - 2 * root[i] * n[j] / denom for j in range(d)] for i in range(d)]


def _factor_group(arr, f, *, max_full_rank=4, samples=200, rng=None):
    gram, hyps = _factor_arrangement(arr, f)
    d = len(gram)
    refl = [_reflection_from(gram, h) for h in hyps]
    if f.rank <= max_full_rank:
        elems = _group_closure(refl)
    else:
        rng = rng or random.Random(0)
        elems = [exact.identity(d)]
        for _ in range(samples):
            g = exact.identity(d)
            for _ in range(rng.randint(1, 3 * d)):
                g = exact.matmul(rng.choice(refl), g)
            elems.append(g)
    extra = [exact.scale(Fraction(-1), exact.identity(d))]
    if f.type_tag == "D":
        flip = exact.identity(d)
        flip[d - 1][d - 1] = Fraction(-1)
        extra.append(flip)
    out = {}
    for g in elems:
        for e in [exact.identity(d)] + extra + ([exact.matmul(extra[0], extra[1])] if len(extra) > 1 else []):
            h = exact.matmul(e, g)
            out[tuple(tuple(r) for r in h)] = h
    return list(out.values())


def enumerate_symmetry_preservers(arr: Arrangement, *, seed: int = 0) -> list:
    """Weyl group elements, -I, diagram flips and permutations of isomorphic factors.

    Factors of rank <= 4 get their full group; larger ones are sampled by
    random words in reflections.  Each returned map is checked exactly.
    """
    rng = random.Random(seed)
    groups = [_factor_group(arr, f, rng=rng) for f in arr.factors]
    d = arr.ambient_dim
    perms = []
    kinds = [(f.type_tag, f.rank) for f in arr.factors]
    for p in permutations(range(len(arr.factors))):
        if all(kinds[p[i]] == kinds[i] for i in range(len(p))):
            perms.append(p)
    maps = {}

    def assemble(choice, perm):
        m = exact.zeros(d, d)
        for si, (f, g) in enumerate(zip(arr.factors, choice)):
            tf = arr.factors[perm[si]]
            for a, ra in enumerate(tf.block):
                for b, cb in enumerate(f.block):
                    m[ra][cb] = g[a][b]
        return m

    def rec(i, choice):
        if i == len(groups):
            for perm in perms:
                m = assemble(choice, perm)
                maps[tuple(tuple(r) for r in m)] = m
            return
        for g in groups[i]:
            rec(i + 1, choice + [g])

    rec(0, [])
    out = []
    for key in sorted(maps):
        lm = RationalLinearMap(key, arr, arr)
        if not is_pattern_preserving(lm, arr, arr):
            raise AssertionError("symmetry candidate is not pattern-preserving")
        out.append(lm)
    return out
