"""Symmetric spaces SL(n, F)/K for n in {2, 3} and the explicit AN-map.

Points are stored as upper-triangular coset representatives with positive
diagonal and unit determinant.  The metric is the Euclidean norm of the
log singular values of ``p^{-1} q`` for every n and field, so
``d(I, diag(e, 1, 1/e)) = sqrt(2)`` and an H^2 point ``(t, x)`` sits at
distance ``sqrt(2)|t|`` from the basepoint when ``x = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

DET_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SymPoint:
    rep: np.ndarray

    def __post_init__(self):
        rep = np.asarray(self.rep)
        if rep.ndim != 2 or rep.shape[0] != rep.shape[1] or rep.shape[0] not in (2, 3):
            raise ValueError("representative must be a 2x2 or 3x3 matrix")
        if not np.all(np.isfinite(rep)):
            raise ValueError("non-finite entries")
        if np.any(np.abs(np.tril(rep, -1)) > 0):
            raise ValueError("representative must be upper triangular")
        diag = np.diag(rep)
        if np.any(np.abs(diag.imag) > 0) or np.any(diag.real <= 0):
            raise ValueError("diagonal must be real and positive")
        det = np.prod(diag.real)
        if abs(det - 1.0) > DET_TOL:
            rep = rep / det ** (1.0 / rep.shape[0])
        object.__setattr__(self, "rep", rep)

    @property
    def n(self) -> int:
        return self.rep.shape[0]

    @property
    def field(self) -> str:
        return "complex" if np.iscomplexobj(self.rep) else "real"

    @classmethod
    def from_matrix(cls, g) -> "SymPoint":
        """Point g.o for an invertible matrix g (Iwasawa decomposition g = rep k)."""
        return cls(_upper_factor(np.asarray(g) @ np.asarray(g).conj().T))

    def spd(self) -> np.ndarray:
        return self.rep @ self.rep.conj().T


def _upper_factor(p: np.ndarray) -> np.ndarray:
    """Upper-triangular U with positive diagonal and U U^* = p (p Hermitian positive definite)."""
    j = np.eye(p.shape[-1])[::-1]
    low = np.linalg.cholesky(j @ p @ j)
    u = j @ low @ j
    det = np.prod(np.real(np.diagonal(u, axis1=-2, axis2=-1)), axis=-1)
    return u / det[..., None, None] ** (1.0 / p.shape[-1])


def _as_rep(p) -> np.ndarray:
    return p.rep if isinstance(p, SymPoint) else np.asarray(p)


def dist_sym(p, q) -> float:
    a, b = _as_rep(p), _as_rep(q)
    if a.shape != b.shape:
        raise ValueError("points live in different spaces")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries")
    return float(dist_sym_batch(a, b))


def dist_sym_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized distance between stacks of representatives of shape (k, n, n).

    Both orders are evaluated and averaged, which makes the result exactly symmetric.
    """
    ab = np.linalg.norm(np.log(np.linalg.svd(np.linalg.solve(a, b), compute_uv=False)), axis=-1)
    ba = np.linalg.norm(np.log(np.linalg.svd(np.linalg.solve(b, a), compute_uv=False)), axis=-1)
    return (ab + ba) / 2


# -- H^2 and H^3 in horospherical coordinates ----------------------------------

@dataclass(frozen=True)
class HPoint:
    """(t, x): the matrix [[e^t, x e^-t], [0, e^-t]]; x complex gives a point of H^3."""
    t: float
    x: complex = 0.0

    @property
    def rep(self) -> np.ndarray:
        return h_rep(self.t, self.x)

    def sym(self) -> SymPoint:
        return SymPoint(self.rep)


def h_rep(t, x) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    x = np.asarray(x)
    out = np.zeros(t.shape + (2, 2), dtype=np.result_type(x, float))
    out[..., 0, 0] = np.exp(t)
    out[..., 0, 1] = x * np.exp(-t)
    out[..., 1, 1] = np.exp(-t)
    return out


def h_from_rep(rep: np.ndarray) -> HPoint:
    t = float(np.log(rep[0, 0].real))
    x = rep[0, 1] * rep[0, 0].real
    return HPoint(t, complex(x) if np.iscomplexobj(rep) else float(x.real))


def dist_h(p: HPoint, q: HPoint) -> float:
    return dist_sym(p.rep, q.rep)


def dist_h_batch(t1, x1, t2, x2) -> np.ndarray:
    """Closed form for stacks of H^2/H^3 points (hyperbolic distance divided by sqrt 2)."""
    # upper half-space: z = x + i e^{2t}; hyperbolic distance rho; d = rho / sqrt(2)
    h1, h2 = np.exp(2 * np.asarray(t1)), np.exp(2 * np.asarray(t2))
    num = np.abs(np.asarray(x1) - np.asarray(x2)) ** 2 + (h1 - h2) ** 2
    return _arccosh1p(num / (2 * h1 * h2)) / np.sqrt(2)


def _arccosh1p(y):
    # arccosh(1 + y) computed stably for small y
    return np.log1p(y + np.sqrt(y * (y + 2)))


# -- the AN-map ------------------------------------------------------------------

def an_exponents(t, s):
    t, s = np.asarray(t, dtype=float), np.asarray(s, dtype=float)
    return np.stack([2 * (t + s) / 3, 2 * (s - 2 * t) / 3, 2 * (t - 2 * s) / 3], axis=-1)


def an_map_rep(t, x, s, z) -> np.ndarray:
    """Vectorized AN-map on arrays of coordinates; returns (..., 3, 3) representatives."""
    e = np.exp(an_exponents(t, s))
    x, z = np.asarray(x), np.asarray(z)
    dtype = np.result_type(x, z, float)
    out = np.zeros(e.shape[:-1] + (3, 3), dtype=dtype)
    out[..., 0, 0] = e[..., 0]
    out[..., 0, 1] = x * e[..., 1]
    out[..., 0, 2] = z * e[..., 2]
    out[..., 1, 1] = e[..., 1]
    out[..., 2, 2] = e[..., 2]
    return out


def an_map(p: HPoint, q: HPoint) -> SymPoint:
    """f((t, x), (s, z)); complex x, z give the complexified map."""
    return SymPoint(an_map_rep(p.t, p.x, q.t, q.x))


def unipotent(x, z) -> np.ndarray:
    dtype = np.result_type(np.asarray(x), np.asarray(z), float)
    n = np.eye(3, dtype=dtype)
    n[0, 1], n[0, 2] = x, z
    return n


def vertical_flat_point(x0, z0, t, s) -> np.ndarray:
    return unipotent(x0, z0) @ np.diag(np.exp(an_exponents(t, s)))


@dataclass(frozen=True)
class PairSample:
    """Sampled pairs (p, q) in H^2 x H^2; rows of ``p`` and ``q`` are (t, x, s, z)."""
    p: np.ndarray
    q: np.ndarray
    d_src: np.ndarray
    d_dst: np.ndarray

    @property
    def pairs(self) -> np.ndarray:
        return np.column_stack([self.d_src, self.d_dst])


def sample_an_map_pairs(rng: np.random.Generator, n: int, box: float = 5.0) -> PairSample:
    """Uniform pairs in the box |t|, |x|, |s|, |z| <= box with source and image distances.

    The source metric is the product (l2) metric of the two H^2 factors.
    """
    p = rng.uniform(-box, box, (n, 4))
    q = rng.uniform(-box, box, (n, 4))
    d_src = np.hypot(dist_h_batch(p[:, 0], p[:, 1], q[:, 0], q[:, 1]),
                     dist_h_batch(p[:, 2], p[:, 3], q[:, 2], q[:, 3]))
    d_dst = dist_sym_batch(an_map_rep(*p.T), an_map_rep(*q.T))
    return PairSample(p, q, d_src, d_dst)


# -- boundary points and strong asymptote classes --------------------------------

@dataclass(frozen=True)
class BoundaryPointSpec:
    """Endpoint of the ray exp(t H) o for a diagonal H (stored with unit norm)."""
    label: str
    direction: tuple

    @property
    def h(self) -> np.ndarray:
        v = np.asarray(self.direction, dtype=float)
        return v / np.linalg.norm(v)

    @property
    def order(self) -> list:
        """Basis order with decreasing H; the stabilizer is upper triangular in it."""
        return sorted(range(len(self.direction)), key=lambda i: (-self.direction[i], i))

    def ray(self, t) -> np.ndarray:
        return np.diag(np.exp(np.asarray(t) * self.h))


XI1 = BoundaryPointSpec("xi1", (1.0, -2.0, 1.0))
XI2 = BoundaryPointSpec("xi2", (1.0, 1.0, -2.0))
BOUNDARY_POINTS = {"xi1": XI1, "xi2": XI2}

# which H^2 coordinate each projection recovers isometrically (found by computation)
PAIRING = {"xi1": "second", "xi2": "first"}


def stabilizer_factor(p, xi: BoundaryPointSpec) -> np.ndarray:
    """h in the stabilizer of xi with h.o = p."""
    rep = _as_rep(p)
    perm = xi.order
    spd = rep @ rep.conj().T
    u = _upper_factor(spd[np.ix_(perm, perm)])
    h = np.zeros_like(u)
    h[np.ix_(perm, perm)] = u
    return h


def ray_toward(p, xi: BoundaryPointSpec, t) -> np.ndarray:
    """Point at time t on the unit-speed ray from p asymptotic to xi."""
    return stabilizer_factor(p, xi) @ xi.ray(t)


def _levi_mask(xi: BoundaryPointSpec) -> np.ndarray:
    h = np.asarray(xi.direction)
    return np.isclose(h[:, None], h[None, :])


def projection(p, xi: BoundaryPointSpec) -> HPoint:
    """Strong asymptote class of the ray from p to xi, as a point of the rank-one Levi factor."""
    h = stabilizer_factor(p, xi)
    block = [i for i in xi.order if np.isclose(xi.direction[i], xi.direction[xi.order[0]])]
    if len(block) == 1:
        block = [i for i in xi.order if np.isclose(xi.direction[i], xi.direction[xi.order[-1]])]
    b = h[np.ix_(block, block)]
    b = b / np.sqrt(np.real(b[0, 0] * b[1, 1]))
    return h_from_rep(b)


def asymptote_distance_exact(p, q, xi: BoundaryPointSpec) -> float:
    """d_xi through the Levi block of h_p^{-1} h_q with the H-component projected out."""
    m = np.linalg.solve(stabilizer_factor(p, xi), stabilizer_factor(q, xi))
    levi = np.where(_levi_mask(xi), m, 0)
    logs = np.zeros(3)
    h = np.asarray(xi.direction, dtype=float)
    for value in sorted(set(h)):
        idx = [i for i in range(3) if h[i] == value]
        sv = np.linalg.svd(levi[np.ix_(idx, idx)], compute_uv=False)
        logs[idx] = np.log(sv)  # positions only matter through the H-weights below
    hu = h / np.linalg.norm(h)
    return float(np.linalg.norm(logs - (logs @ hu) * hu))


@dataclass(frozen=True)
class AsymptoteResult:
    value: float
    converged: bool
    value_at_three_quarters: float
    horizon: float
    argmin: tuple


def _ray_gap(m: np.ndarray, hv: np.ndarray, t1, t2) -> float:
    # d(h_p e^{t1 H} o, h_q e^{t2 H} o) = |log sigma(e^{-t1 H} M e^{t2 H})|, formed entrywise
    expo = -t1 * hv[:, None] + t2 * hv[None, :]
    with np.errstate(over="ignore"):
        scaled = np.where(m != 0, m * np.exp(np.where(m != 0, expo, 0.0)), 0)
    sv = np.linalg.svd(scaled, compute_uv=False)
    with np.errstate(divide="ignore"):  # a vanished singular value means an infinite gap
        return float(np.linalg.norm(np.log(sv)))


def _plateau(m, hv, horizon, grid):
    ts = np.linspace(0.0, horizon, grid)
    best = (np.inf, 0.0, 0.0)
    for t1 in ts:
        for t2 in ts:
            v = _ray_gap(m, hv, t1, t2)
            if v < best[0]:
                best = (v, t1, t2)
    # distances along the diagonal direction are nonincreasing; refine the offset at the far edge
    def along_edge(c):
        t1, t2 = (horizon, horizon - c) if c >= 0 else (horizon + c, horizon)
        return _ray_gap(m, hv, t1, t2)

    c0 = best[1] - best[2]
    step = 2 * horizon / (grid - 1)
    lo, hi = max(-horizon, c0 - step), min(horizon, c0 + step)
    res = optimize.minimize_scalar(along_edge, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-10})
    candidates = [best, (along_edge(c0), None, None), (float(res.fun), None, None)]
    val = min(c[0] for c in candidates)
    c_best = float(res.x) if val == res.fun else c0
    return val, c_best


def asymptote_distance(p, q, xi: BoundaryPointSpec, horizon: float = 40.0,
                       tol: float = 1e-4, grid: int = 41) -> AsymptoteResult:
    """Numeric d_xi: minimum of d(rho_p(t1), rho_q(t2)) over [0, T]^2.

    The convergence flag compares the values at horizons 0.75 T and T.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    m = np.linalg.solve(stabilizer_factor(p, xi), stabilizer_factor(q, xi))
    m = np.where(np.asarray(xi.direction)[:, None] >= np.asarray(xi.direction)[None, :] - 1e-12, m, 0)
    hv = xi.h
    v_full, c = _plateau(m, hv, horizon, grid)
    v_part, _ = _plateau(m, hv, 0.75 * horizon, grid)
    return AsymptoteResult(v_full, abs(v_full - v_part) < tol, v_part, horizon, (c,))


# -- H^2 into H^3 avoiding the end at infinity ---------------------------------------

CAYLEY = np.array([[1, -1j], [1, 1j]]) / np.sqrt(2j)


def embed_h2_in_h3(p: HPoint) -> HPoint:
    """Totally geodesic inclusion followed by the Cayley transform.

    The image boundary is the unit circle, so the end at infinity is avoided.
    """
    t, x = embed_h2_in_h3_batch(p.t, p.x)
    return HPoint(float(t), complex(x))


def embed_h2_in_h3_batch(t, x):
    """Poincare extension of the Cayley transform on upper half-space points (x, e^{2t})."""
    (a, b), (c, d) = CAYLEY
    w = np.asarray(x, dtype=complex)
    log_h = 2 * np.asarray(t, dtype=float)
    cwd = c * w + d
    # den = |cw + d|^2 + |c|^2 h^2, evaluated in log space to survive large |t|
    log_den = np.logaddexp(np.log(np.abs(cwd) ** 2), np.log(abs(c) ** 2) + 2 * log_h)
    den = np.exp(log_den)
    w2 = ((a * w + b) * np.conj(cwd)) / den + a * np.conj(c) * np.exp(2 * log_h - log_den)
    return (log_h - log_den) / 2, w2


def busemann_height(p: HPoint) -> float:
    """Horospherical height toward the end at infinity (grows along rays to infinity)."""
    return p.t


# -- vertical flats -----------------------------------------------------------------

def vertical_flat_residual(x0, z0, ts: Sequence[float], ss: Sequence[float]) -> float:
    """max over the grid of d(f(p), N(x0, z0) diag(...))."""
    t, s = np.meshgrid(np.asarray(ts, float), np.asarray(ss, float), indexing="ij")
    t, s = t.ravel(), s.ravel()
    f = an_map_rep(t, np.full_like(t, x0, dtype=np.result_type(x0, float)), s,
                   np.full_like(s, z0, dtype=np.result_type(z0, float)))
    target = np.stack([vertical_flat_point(x0, z0, a, b) for a, b in zip(t, s)])
    return float(np.max(dist_sym_batch(f, target)))


def wall_crossings(samples: int = 2001) -> int:
    """Walls crossed by the exponent path on the open quadrant t, s > 0."""
    theta = np.linspace(0, np.pi / 2, samples)[1:-1]
    e = an_exponents(np.cos(theta), np.sin(theta))
    count = 0
    for i, j in ((0, 1), (0, 2), (1, 2)):
        sign = np.sign(e[:, i] - e[:, j])
        count += int(np.sum(sign[1:] != sign[:-1]))
    return count
