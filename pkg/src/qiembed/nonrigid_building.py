"""Non-rigidity of the composed map an_map_p o (phi, phi) on flats of T_3 x T_3.

A flat of T_3 x T_3 is a product of two bi-infinite geodesics.  Its image
under the composed map is compared with Weyl sectors and apartments of the
A2 building purely through valuations:

* the flag at infinity of a deep image point comes from the left factor of
  its local Smith form (columns ordered by increasing exponent);
* the graph distance from a lattice with basis B to the apartment of a
  frame g is the minimum over lambda of the exponent spread of
  diag(p^-lambda) g^-1 B.  Its determinantal valuations make this spread a
  maximum of terms K_ij + lambda_i - lambda_j, minimized exactly on Z^2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .building import (TreeVertex, an_map_matrix, det, inverse, matmul, random_unimodular,
                       qi_self_embedding_tree)
from .padic import valuation

P = 2
INF = math.inf


# -- geodesics and flats in T_3 x T_3 ------------------------------------------------

@dataclass(frozen=True)
class TreeGeodesic:
    """Bi-infinite geodesic; ``b is None`` means the second end is xi.

    With both ends a, b in Q_2 the origin is the top vertex of the geodesic
    and positive (negative) parameters descend toward a (b).  With b = xi
    the geodesic is the vertical line {(i, a)}.
    """
    a: Fraction
    b: Fraction | None = None

    def __post_init__(self):
        if self.b is not None and Fraction(self.a) == Fraction(self.b):
            raise ValueError("geodesic endpoints must differ")

    @property
    def top(self) -> int:
        return -valuation(Fraction(self.a) - Fraction(self.b), P)

    def __call__(self, i: int) -> TreeVertex:
        if self.b is None:
            return TreeVertex(i, Fraction(self.a))
        top = self.top
        return TreeVertex(top - abs(i), Fraction(self.a if i >= 0 else self.b))


@dataclass(frozen=True)
class TreeFlat:
    g1: TreeGeodesic
    g2: TreeGeodesic

    @classmethod
    def through_basepoints(cls) -> "TreeFlat":
        g = TreeGeodesic(Fraction(0), Fraction(1))
        return cls(g, g)

    @classmethod
    def vertical(cls, x0=0, z0=0) -> "TreeFlat":
        return cls(TreeGeodesic(Fraction(x0)), TreeGeodesic(Fraction(z0)))

    @classmethod
    def random(cls, rng) -> "TreeFlat":
        def geo():
            while True:
                a, b = (Fraction(int(rng.integers(-32, 33)), 4) for _ in range(2))
                if a != b:
                    return TreeGeodesic(a, b)
        return cls(geo(), geo())

    def to_dict(self) -> dict:
        def enc(g):
            return [str(g.a), None if g.b is None else str(g.b)]
        return {"g1": enc(self.g1), "g2": enc(self.g2)}


def _phi(v: TreeVertex) -> TreeVertex:
    return qi_self_embedding_tree(v)


def _identity(v: TreeVertex) -> TreeVertex:
    return v


MAPS = {"composed": _phi, "plain": _identity}


def image_basis(flat: TreeFlat, i: int, j: int, mapping: str = "composed") -> list:
    f = MAPS[mapping]
    return an_map_matrix(f(flat.g1(i)), f(flat.g2(j)))


# -- local Smith form and flags ---------------------------------------------------

def smith_left(m, p: int = P):
    """(U, exponents) with m = U diag(p^e) V, U, V in GL_3(Z_(p)), e nondecreasing."""
    a = [list(r) for r in m]
    n = len(a)
    u = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    exps = []
    for k in range(n):
        r, c = min(((r, c) for r in range(k, n) for c in range(k, n) if a[r][c] != 0),
                   key=lambda rc: valuation(a[rc[0]][rc[1]], p))
        a[k], a[r] = a[r], a[k]
        for row in u:
            row[k], row[r] = row[r], row[k]
        for row in a:
            row[k], row[c] = row[c], row[k]
        piv = a[k][k]
        for i in range(k + 1, n):
            q = a[i][k] / piv
            if q:
                for j in range(k, n):
                    a[i][j] -= q * a[k][j]
                for row in u:
                    row[k] += q * row[i]
        for j in range(k + 1, n):
            q = a[k][j] / piv
            if q:
                for i in range(k, n):
                    a[i][j] -= q * a[i][k]
        exps.append(valuation(piv, p))
    return u, tuple(exps)


def primitive(v, p: int = P) -> tuple:
    vs = [valuation(x, p) for x in v if x != 0]
    s = Fraction(p) ** (-min(vs))
    w = [x * s for x in v]
    # fix the scale within Z_p^x: first unit coordinate becomes 1
    k = next(i for i, x in enumerate(w) if x != 0 and valuation(x, p) == 0)
    return tuple(x / w[k] for x in w)


def cross(u, w) -> tuple:
    return (u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0])


def depth(u, w, p: int = P) -> float:
    """Agreement depth of two lines in P^2(Q_p): min valuation of the 2x2 minors."""
    vs = [valuation(x, p) for x in cross(u, w) if x != 0]
    return min(vs) if vs else INF


@dataclass(frozen=True)
class FlagP:
    line: tuple  # primitive vector
    normal: tuple  # primitive normal of the plane
    gaps: tuple  # Smith exponent gaps at the representative
    quadrant: tuple
    theta: float

    def depth_to(self, other: "FlagP") -> float:
        return min(depth(self.line, other.line), depth(self.normal, other.normal))


def flag_of(basis, p: int = P):
    u, e = smith_left(basis, p)
    cols = [tuple(u[i][k] for i in range(3)) for k in range(3)]
    line = primitive(cols[0], p)
    normal = primitive(cross(cols[0], cols[1]), p)
    return line, normal, (e[1] - e[0], e[2] - e[1])


QUADRANTS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
THETAS = (math.pi / 8, 3 * math.pi / 8)


def _sector_index(r: float, theta: float, quadrant) -> tuple:
    return (quadrant[0] * int(round(r * math.cos(theta))),
            quadrant[1] * int(round(r * math.sin(theta))))


def estimate_flags(flat: TreeFlat, radius: int, mapping: str = "composed"):
    flags = []
    for q in QUADRANTS:
        for th in THETAS:
            i, j = _sector_index(radius, th, q)
            line, normal, gaps = flag_of(image_basis(flat, i, j, mapping))
            flags.append(FlagP(line, normal, gaps, q, th))
    return flags


def dedup_flags(flags, min_depth: float) -> list:
    out = []
    for f in flags:
        if all(f.depth_to(g) < min_depth for g in out):
            out.append(f)
    return out


def distinct_lines(flags, min_depth: float) -> list:
    lines = []
    for f in flags:
        if all(depth(f.line, l) < min_depth for l in lines):
            lines.append(f.line)
    return lines


@dataclass(frozen=True)
class FrameVerdictP:
    common: bool
    best_depth: float  # best agreement depth of all flags with one frame
    certified_depth: float  # no frame reaches this depth (pigeonhole), or inf
    n_lines: int


def frame_match_depth(frame, flags) -> float:
    """Min over flags of the best depth at which the flag is (L_i, L_i + L_j)."""
    worst = INF
    for f in flags:
        best = -INF
        for i, j in itertools.permutations(range(3), 2):
            nij = primitive(cross(frame[i], frame[j]))
            best = max(best, min(depth(f.line, frame[i]), depth(f.normal, nij)))
        worst = min(worst, best)
    return worst


def common_frame_test(flags, min_depth: float) -> FrameVerdictP:
    lines = distinct_lines(flags, min_depth)
    best = -INF
    for tri in itertools.combinations(lines, 3):
        if det([list(v) for v in tri]) == 0:
            continue
        best = max(best, frame_match_depth(tri, flags))
    # an apartment carries 6 flags: 7 flags pairwise apart at depth d
    # cannot all match one frame at depth >= d (ultrametric pigeonhole)
    uniq = dedup_flags(flags, min_depth)
    if len(uniq) >= 7:
        cert = max(max(f.depth_to(g) for f, g in itertools.combinations(uniq, 2)) + 1, 1)
    else:
        cert = INF
    return FrameVerdictP(best >= min_depth, best, cert, len(lines))


# -- distances to apartments and sectors ------------------------------------------

def _vmin(values):
    vs = [valuation(x, P) for x in values if x != 0]
    return min(vs) if vs else INF


def _k_matrix(m) -> np.ndarray:
    """K with comb(diag(p^lam) apartment point, lattice) = max_ij K_ij + lam_i - lam_j."""
    e = [_vmin(row) for row in m]
    pairs = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
    m2 = {}
    for j, (r, s) in pairs.items():
        m2[j] = _vmin([m[r][a] * m[s][b] - m[r][b] * m[s][a]
                       for a, b in ((0, 1), (0, 2), (1, 2))])
    d = valuation(det(m), P)
    return np.array([[d - m2[j] - e[i] for j in range(3)] for i in range(3)], dtype=float)


def _min_spread(k: np.ndarray, cone: bool) -> int:
    """min over integer (x, y) of max_ij K_ij + lam_i - lam_j with lam = (x, y, 0).

    With ``cone`` the minimum runs over x <= y <= 0 only.
    """
    w = int(2 * (k.max() - k.min())) + 4
    x = np.arange(-w, 1 if cone else w + 1, dtype=float)
    c = np.maximum.reduce([np.full_like(x, max(k[0, 0], k[1, 1], k[2, 2])),
                           k[0, 2] + x, k[2, 0] - x])
    a = np.maximum(k[1, 2], k[1, 0] - x)  # coefficient +y
    b = np.maximum(k[2, 1], k[0, 1] + x)  # coefficient -y
    y0 = np.floor((b - a) / 2)
    if cone:
        best = np.full_like(x, np.inf)
        for y in (np.clip(y0, x, 0), np.clip(y0 + 1, x, 0)):
            best = np.minimum(best, np.maximum(a + y, b - y))
    else:
        best = np.maximum(a + y0, b - y0)
    return int(np.min(np.maximum(c, best)))


@dataclass
class Frame:
    """Apartment of the columns of g; with ``cone`` only its sector lam_1 <= lam_2 <= lam_3."""
    g: list
    cone: bool = False
    label: str = ""
    g_inv: list = field(init=False, repr=False)

    def __post_init__(self):
        self.g_inv = inverse(self.g)

    def distance(self, basis) -> int:
        return _min_spread(_k_matrix(matmul(self.g_inv, basis)), self.cone)


def sector_frame(tip_basis, flag: FlagP, label: str = "") -> Frame:
    """Frame whose sector starts at the lattice of ``tip_basis`` toward ``flag``."""
    bi = inverse(tip_basis)
    u1 = primitive([sum(bi[i][k] * flag.line[k] for k in range(3)) for i in range(3)])
    n = primitive([sum(tip_basis[k][i] * flag.normal[k] for k in range(3)) for i in range(3)])
    kk = next(i for i in range(3) if n[i] != 0 and valuation(n[i], P) == 0)
    rest = [j for j in range(3) if j != kk]
    w = {}
    for j in rest:
        v = [Fraction(0)] * 3
        v[j] = Fraction(1)
        v[kk] = -n[j] / n[kk]
        w[j] = v
    alpha = u1[rest[0]]
    u2 = w[rest[1]] if alpha != 0 and valuation(alpha, P) == 0 else w[rest[0]]
    u3 = [Fraction(int(i == kk)) for i in range(3)]
    local = [[u1[i], u2[i], u3[i]] for i in range(3)]
    return Frame(matmul(tip_basis, local), cone=True, label=label)


def apartment_of_flags(f: FlagP, g: FlagP, label: str = ""):
    """Apartment containing two opposite flags, or None when they are not opposite."""
    meet = cross(f.normal, g.normal)
    cols = [f.line, meet, g.line]
    if any(all(x == 0 for x in c) for c in cols):
        return None
    m = [[cols[j][i] for j in range(3)] for i in range(3)]
    if det(m) == 0:
        return None
    return Frame(m, label=label)


def random_apartments(tip_basis, n: int, rng) -> list:
    return [Frame(matmul(tip_basis, random_unimodular(rng)), label=f"random-{k}")
            for k in range(n)]


# -- report -------------------------------------------------------------------------

@dataclass(frozen=True)
class NonrigidConfigP:
    radii: tuple = (16, 32, 64, 128)
    flag_radius: int = 256
    flag_check_radius: int = 192
    flag_depth: int = 16  # flags agreeing to this depth are equal
    grid: int = 16  # sample spacing R / grid on the image R-ball
    random_apartments: int = 64
    sector_bound: int = 8
    apartment_ratio: float = 0.1


def ball_samples(radius: int, grid: int) -> list:
    step = max(1, radius // grid)
    pts = []
    for i in range(-radius, radius + 1, step):
        for j in range(-radius, radius + 1, step):
            if i * i + j * j <= radius * radius:
                pts.append((i, j))
    for th in np.linspace(0, 2 * math.pi, 4 * grid, endpoint=False):
        pts.append((int(round(radius * math.cos(th))), int(round(radius * math.sin(th)))))
    return sorted(set(pts))


@dataclass(frozen=True)
class RadiusRecord:
    radius: int
    n_samples: int
    sector_hausdorff: int
    best_apartment: str
    best_apartment_distance: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class FlatReportP:
    flat: dict
    mapping: str
    n_flags: int
    n_distinct_flags: int
    n_lines: int
    flag_drift_depth: float  # min agreement depth of flags at two radii
    verdict: FrameVerdictP
    n_candidates: int
    radii: tuple  # RadiusRecord per radius

    def to_dict(self) -> dict:
        v = self.verdict
        fin = (lambda x: None if x in (INF, -INF) else x)
        return {
            "flat": self.flat, "mapping": self.mapping, "n_flags": self.n_flags,
            "n_distinct_flags": self.n_distinct_flags, "n_lines": self.n_lines,
            "flag_drift_depth": fin(self.flag_drift_depth),
            "common_frame": v.common, "best_frame_depth": fin(v.best_depth),
            "certified_depth": fin(v.certified_depth),
            "n_candidate_apartments": self.n_candidates,
            "radii": [r.to_dict() for r in self.radii],
        }


def nonrigid_flat_report_p(flat: TreeFlat, config: NonrigidConfigP = NonrigidConfigP(),
                           seed: int = 0, mapping: str = "composed",
                           radii=None) -> FlatReportP:
    rng = np.random.default_rng(seed)
    radii = config.radii if radii is None else tuple(radii)
    flags = estimate_flags(flat, config.flag_radius, mapping)
    check = estimate_flags(flat, config.flag_check_radius, mapping)
    drift = min(f.depth_to(g) for f, g in zip(flags, check))
    uniq = dedup_flags(flags, config.flag_depth)
    verdict = common_frame_test(flags, config.flag_depth)
    tip = image_basis(flat, 0, 0, mapping)
    sectors = [sector_frame(tip, f, label=f"sector-{k}") for k, f in enumerate(flags)]
    candidates = []
    for k, f in enumerate(flags):
        for l, g in enumerate(flags):
            if g.quadrant == (-f.quadrant[0], -f.quadrant[1]) and k < l:
                a = apartment_of_flags(f, g, label=f"opposite-{k}-{l}")
                if a is not None:
                    candidates.append(a)
    candidates += random_apartments(tip, config.random_apartments, rng)
    if not candidates:
        raise ValueError("candidate apartment family is empty")
    records = []
    for r in radii:
        pts = ball_samples(r, config.grid)
        bases = [image_basis(flat, i, j, mapping) for i, j in pts]
        hs = max(min(s.distance(b) for s in sectors) for b in bases)
        best_label, best = None, INF
        for c in candidates:
            d = 0
            for b in bases:
                d = max(d, c.distance(b))
                if d >= best:
                    break
            if d < best:
                best, best_label = d, c.label
        records.append(RadiusRecord(r, len(pts), hs, best_label, int(best)))
    return FlatReportP(flat.to_dict(), mapping, len(flags), len(uniq),
                       verdict.n_lines, drift, verdict, len(candidates), tuple(records))
