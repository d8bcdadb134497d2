"""The composed map H^2 x H^2 -> H^3 x H^3 -> SL(3, C)/SU(3) and its flat images.

Each H^2 factor goes into H^3 through the Cayley transform (boundary
circle avoiding the end at infinity), then the complexified AN-map is
applied.  A flat of H^2 x H^2 is a product of two unit-speed geodesics.
Its image is diagnosed through limit flags of quadrant rays and through
the distance from image balls to candidate flats.

Image points at radius 40 lie about 35 units from the basepoint, past
what double precision resolves in horospherical coordinates, so points,
flags and frame coordinates are computed with mpmath.  Only the final
convex minimization (distance to a flat) runs in double precision, on
matrices rescaled to moderate condition number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import mpmath
import numpy as np

DPS = 60
mp = mpmath.mp


@dataclass(frozen=True)
class NonrigidConfig:
    flag_radius: float = 60.0
    flag_check_radius: float = 45.0
    flag_tol: float = 1e-3  # dedup / common-frame angle tolerance (rad)
    gap_min: float = 2.0  # minimal log singular-value gap for a well-defined flag
    radii: tuple = (5.0, 10.0, 20.0, 40.0)
    polar_rings: int = 6
    polar_angles: int = 24
    random_frames: int = 8
    refine_top: int = 1
    refine_step: float = 0.1
    newton_steps: int = 60


# -- mp helpers -------------------------------------------------------------------

def _mpf(x):
    return mp.mpf(float(x))


def _to_complex(a: np.ndarray) -> np.ndarray:
    return np.vectorize(complex, otypes=[complex])(a)


def _mp_array(a) -> np.ndarray:
    a = np.asarray(a)
    out = np.empty(a.shape, dtype=object)
    for idx in np.ndindex(a.shape):
        v = a[idx]
        out[idx] = v if isinstance(v, (mpmath.mpf, mpmath.mpc)) else mp.mpc(complex(v))
    return out


def _mp_inv3(g: np.ndarray) -> np.ndarray:
    m = mpmath.matrix(g.tolist())
    inv = m ** -1
    return np.array([[inv[i, j] for j in range(3)] for i in range(3)], dtype=object)


# -- the map ----------------------------------------------------------------------

@dataclass(frozen=True)
class H2Flat:
    """Product of the geodesics g1.i e^{sqrt2 u} and g2.i e^{sqrt2 v} (upper half-plane)."""
    g1: tuple
    g2: tuple

    @classmethod
    def random(cls, rng: np.random.Generator) -> "H2Flat":
        def one():
            theta, t, x = rng.uniform(0, np.pi), rng.uniform(-1, 1), rng.uniform(-2, 2)
            k = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
            g = np.array([[np.exp(t), x * np.exp(-t)], [0, np.exp(-t)]]) @ k
            return tuple(map(tuple, g))
        return cls(one(), one())

    @classmethod
    def vertical(cls, x0: float = 0.0, z0: float = 0.0) -> "H2Flat":
        return cls(((1.0, x0), (0.0, 1.0)), ((1.0, z0), (0.0, 1.0)))


def _geodesic_point(g, u):
    """(w, h): real boundary coordinate and height of g.(i e^{sqrt2 u})."""
    a, b = _mpf(g[0][0]), _mpf(g[0][1])
    c, d = _mpf(g[1][0]), _mpf(g[1][1])
    y = mp.exp(mp.sqrt(2) * _mpf(u))
    den = c * c * y * y + d * d
    w = (b * d + a * c * y * y) / den
    h = (a * d - b * c) * y / den
    return mp.mpc(w), h


def _cayley():
    s = mp.sqrt(mp.mpc(0, 2))
    return (mp.mpc(1) / s, mp.mpc(0, -1) / s, mp.mpc(1) / s, mp.mpc(0, 1) / s)


def _cayley_h3(w, h):
    """Poincare extension of the Cayley transform acting on upper half-space (w, h)."""
    a, b, c, d = _cayley()
    cwd = c * w + d
    den = abs(cwd) ** 2 + abs(c) ** 2 * h * h
    w2 = ((a * w + b) * mpmath.conj(cwd) + a * mpmath.conj(c) * h * h) / den
    return w2, h / den


def _an_rep(w1, h1, w2, h2):
    # t = log(h)/2, so e^{2(t+s)/3} = (h1 h2)^{1/3} and so on
    third = mp.mpf(1) / 3
    d1 = (h1 * h2) ** third
    d2 = (h2 / (h1 * h1)) ** third
    d3 = (h1 / (h2 * h2)) ** third
    zero = mp.mpc(0)
    return np.array([[mp.mpc(d1), w1 * d2, w2 * d3],
                     [zero, mp.mpc(d2), zero],
                     [zero, zero, mp.mpc(d3)]], dtype=object)


def composed_point(flat: H2Flat, u, v) -> np.ndarray:
    with mpmath.workdps(DPS):
        w1, h1 = _cayley_h3(*_geodesic_point(flat.g1, u))
        w2, h2 = _cayley_h3(*_geodesic_point(flat.g2, v))
        return _an_rep(w1, h1, w2, h2)


def plain_point(flat: H2Flat, u, v) -> np.ndarray:
    with mpmath.workdps(DPS):
        w1, h1 = _geodesic_point(flat.g1, u)
        w2, h2 = _geodesic_point(flat.g2, v)
        return _an_rep(w1, h1, w2, h2)


MAPS = {"composed": composed_point, "plain": plain_point}


def image_points(flat: H2Flat, us, vs, mapping=composed_point) -> np.ndarray:
    return np.stack([mapping(flat, u, v) for u, v in zip(us, vs)])


# -- flags -------------------------------------------------------------------------------

@dataclass(frozen=True)
class FlagC:
    line: np.ndarray  # unit vector (mp objects)
    normal: np.ndarray  # unit normal of the plane (mp objects)
    gaps: tuple  # log singular value gaps (sigma1/sigma2, sigma2/sigma3)
    quadrant: tuple
    theta: float

    @property
    def residual(self) -> float:
        return float(abs(_hdot(self.normal, self.line)))


def _hdot(u, w):
    return sum(mpmath.conj(a) * b for a, b in zip(u, w))


def line_angle(u, w) -> float:
    """Fubini-Study angle between complex lines."""
    with mpmath.workdps(DPS):
        c = abs(_hdot(u, w)) / mp.sqrt(abs(_hdot(u, u)) * abs(_hdot(w, w)))
        return float(mpmath.acos(min(c, mp.mpf(1))))


def flag_distance(f: FlagC, g: FlagC) -> float:
    return max(line_angle(f.line, g.line), line_angle(f.normal, g.normal))


def flag_of(rep: np.ndarray) -> tuple:
    """(top left singular vector, normal of the top-two plane, log gaps)."""
    with mpmath.workdps(DPS):
        m = mpmath.matrix(rep.tolist())
        u, s, _ = mpmath.svd_c(m)
        order = sorted(range(3), key=lambda i: -s[i])
        logs = [mpmath.log(s[i]) for i in order]
        line = np.array([u[k, order[0]] for k in range(3)], dtype=object)
        normal = np.array([u[k, order[2]] for k in range(3)], dtype=object)
        return line, normal, (float(logs[0] - logs[1]), float(logs[1] - logs[2]))


QUADRANTS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
THETAS = (np.pi / 8, 3 * np.pi / 8)


def estimate_flags(flat: H2Flat, mapping=composed_point, radius: float = 60.0) -> list:
    out = []
    for q in QUADRANTS:
        for th in THETAS:
            rep = mapping(flat, q[0] * radius * np.cos(th), q[1] * radius * np.sin(th))
            line, normal, gaps = flag_of(rep)
            out.append(FlagC(line, normal, gaps, q, float(th)))
    return out


def dedup_flags(flags: list, tol: float) -> list:
    kept = []
    for f in flags:
        if all(flag_distance(f, g) > tol for g in kept):
            kept.append(f)
    return kept


def distinct_lines(flags, tol):
    lines = []
    for f in flags:
        if all(line_angle(f.line, w) > tol for w in lines):
            lines.append(f.line)
    return lines


def _cross_conj(a, b):
    # normal (Hermitian sense) of the plane spanned by a and b
    return np.array([mpmath.conj(a[1] * b[2] - a[2] * b[1]),
                     mpmath.conj(a[2] * b[0] - a[0] * b[2]),
                     mpmath.conj(a[0] * b[1] - a[1] * b[0])], dtype=object)


def frame_residual(flag: FlagC, frame: list) -> float:
    """Distance from a flag to the nearest of the six flags of the frame's apartment."""
    best = np.inf
    with mpmath.workdps(DPS):
        for i in range(3):
            for j in range(3):
                if i != j:
                    r = max(line_angle(flag.line, frame[i]),
                            line_angle(flag.normal, _cross_conj(frame[i], frame[j])))
                    best = min(best, r)
    return float(best)


def _certified_margin(flags: list, lines: list) -> float:
    """Pigeonhole lower bound on the residual of every frame.

    An apartment boundary has 3 lines and 6 flags, so 4 lines (or 7
    flags) pairwise at angle >= delta force a residual >= delta / 2.
    """
    bound = 0.0
    if len(lines) >= 4:
        for sub in combinations(range(len(lines)), 4):
            d = min(line_angle(lines[a], lines[b]) for a, b in combinations(sub, 2))
            bound = max(bound, d / 2)
    if len(flags) >= 7:
        for sub in combinations(range(len(flags)), 7):
            d = min(flag_distance(flags[a], flags[b]) for a, b in combinations(sub, 2))
            bound = max(bound, d / 2)
    return bound


def _independent(lines) -> bool:
    with mpmath.workdps(DPS):
        m = mpmath.matrix([[ln[k] for ln in lines] for k in range(3)])
        return abs(mpmath.det(m)) > mp.mpf("1e-12")


@dataclass(frozen=True)
class CommonFrameVerdict:
    common: bool
    margin: float  # min over candidate frames (triples of flag lines) of the worst residual
    margin_certified: float  # pigeonhole lower bound valid for every frame
    n_lines: int


def common_frame_test(flags: list, tol: float = 1e-3) -> CommonFrameVerdict:
    lines = distinct_lines(flags, tol)
    candidates = [list(t) for t in combinations(lines, 3) if _independent(t)]
    margin = min((max(frame_residual(f, fr) for f in flags) for fr in candidates), default=np.inf)
    certified = _certified_margin(flags, lines)
    return CommonFrameVerdict(bool(margin <= tol), float(margin), float(certified), len(lines))


# -- distance to flats ---------------------------------------------------------------------

def _svd_objective(b: np.ndarray, a: np.ndarray):
    m = np.exp(-a)[..., :, None] * b
    u, s, _ = np.linalg.svd(m)
    logs = np.log(np.maximum(s, 1e-300))
    val = np.sum(logs ** 2, axis=-1)
    grad = -2 * np.einsum("...k,...ik->...i", logs, np.abs(u) ** 2)
    grad -= grad.mean(axis=-1, keepdims=True)
    return val, grad


def _minimize_double(b: np.ndarray, steps: int, gtol: float = 1e-10) -> tuple:
    a = np.zeros(b.shape[:-1])
    val, grad = _svd_objective(b, a)
    step = np.full(b.shape[:-2], 0.25)
    for _ in range(steps):
        if np.max(np.abs(grad)) < gtol:
            break
        trial = a - step[..., None] * grad
        tv, tg = _svd_objective(b, trial)
        better = tv <= val
        a = np.where(better[..., None], trial, a)
        val = np.where(better, tv, val)
        grad = np.where(better[..., None], tg, grad)
        step = np.where(better, np.minimum(step * 1.5, 0.5), step * 0.3)
    return np.sqrt(np.maximum(val, 0)), a


def distance_to_flat(points: np.ndarray, frame: np.ndarray, steps: int = 60, rounds: int = 2) -> np.ndarray:
    """Distance from each image point (mp reps, shape (k, 3, 3)) to the flat frame.A.o.

    g^{-1} y is formed in mp, rescaled by the current diagonal estimate so
    its condition number stays moderate, and the convex problem over the
    sum-zero diagonal is solved in double precision.
    """
    with mpmath.workdps(DPS):
        det = mpmath.det(mpmath.matrix(frame.tolist()))
        scale = abs(det) ** (mp.mpf(1) / 3)
        ginv = _mp_inv3(frame / scale)
        m = np.matmul(ginv, points)
        shift = np.empty(points.shape[:-1], dtype=object)
        for k in range(points.shape[0]):
            norms = [mp.sqrt(sum(abs(m[k, i, j]) ** 2 for j in range(3))) for i in range(3)]
            logn = [mpmath.log(x) for x in norms]
            mean = sum(logn) / 3
            for i in range(3):
                shift[k, i] = logn[i] - mean
        val = None
        for _ in range(rounds):
            ex = np.vectorize(lambda x: mpmath.exp(-x), otypes=[object])(shift)
            b = _to_complex(ex[..., :, None] * m)
            val, a = _minimize_double(b, steps)
            shift = shift + np.vectorize(mp.mpf, otypes=[object])(a)
    return val


def polar_grid(radius: float, rings: int, angles: int):
    rs = np.linspace(0, radius, rings + 1)[1:]
    th = np.linspace(0, 2 * np.pi, angles, endpoint=False)
    r, t = np.meshgrid(rs, th, indexing="ij")
    u = np.concatenate([[0.0], (r * np.cos(t)).ravel()])
    v = np.concatenate([[0.0], (r * np.sin(t)).ravel()])
    return u, v


def _random_unitary(rng, n=3):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _sup(points, frame, steps):
    return float(np.max(distance_to_flat(points, frame, steps)))


def _refine(frame, points, step, steps):
    """One coordinate-descent sweep over the complex frame entries."""
    best = _sup(points, frame, steps)
    cur = frame
    for i in range(3):
        for j in range(3):
            with mpmath.workdps(DPS):
                col = mp.sqrt(sum(abs(cur[k, j]) ** 2 for k in range(3)))
            for delta in (step, -step):
                trial = cur.copy()
                trial[i, j] = cur[i, j] + mp.mpc(delta) * col
                if not _independent([trial[:, c] for c in range(3)]):
                    continue
                val = _sup(points, trial, steps)
                if val < best:
                    best, cur = val, trial
    return best, cur


def opposite_flag_frames(flags: list) -> list:
    """Apartments through pairs of flags from opposite quadrants.

    Two flags (l, P) and (l', P') in general position span the apartment
    with lines l, l' and P meet P'.
    """
    out = []
    for f, g in combinations(flags, 2):
        if f.quadrant != tuple(-c for c in g.quadrant):
            continue
        third = _cross_conj(f.normal, g.normal)
        trip = (f.line, g.line, third)
        if _independent(trip):
            out.append(np.stack(trip, axis=1))
    return out


@dataclass
class HausdorffGrowth:
    radii: tuple
    distances: tuple
    slope: float
    n_candidates: int
    best_frames: list = field(default_factory=list, repr=False)


def hausdorff_growth(flat: H2Flat, flags: list, config: NonrigidConfig, rng: np.random.Generator,
                     mapping=composed_point, extra_frames=()) -> HausdorffGrowth:
    """Largest distance from image points of flat-balls to the best candidate flat."""
    lines = distinct_lines(flags, config.flag_tol)
    frames = [np.stack(t, axis=1) for t in combinations(lines, 3) if _independent(t)]
    frames += opposite_flag_frames(flags)
    base = mapping(flat, 0.0, 0.0)
    frames += [np.matmul(base, _mp_array(_random_unitary(rng))) for _ in range(config.random_frames)]
    frames += [_mp_array(f) for f in extra_frames]
    dists, chosen = [], []
    for radius in config.radii:
        u, v = polar_grid(radius, config.polar_rings, config.polar_angles)
        pts = image_points(flat, u, v, mapping)
        scored = sorted((_sup(pts, fr, config.newton_steps), k) for k, fr in enumerate(frames))
        best, best_frame = scored[0][0], frames[scored[0][1]]
        for _, k in scored[:config.refine_top]:
            val, fr = _refine(frames[k], pts, config.refine_step, config.newton_steps)
            if val < best:
                best, best_frame = val, fr
        dists.append(best)
        chosen.append(best_frame)
    slope = float(np.polyfit(np.asarray(config.radii), np.asarray(dists), 1)[0])
    return HausdorffGrowth(tuple(config.radii), tuple(dists), slope, len(frames), chosen)


@dataclass
class FlatReport:
    n_flags: int
    n_distinct_flags: int
    n_lines: int
    degenerate_flags: int
    flag_drift: float  # largest flag change between the check radius and the flag radius
    verdict: CommonFrameVerdict
    growth: HausdorffGrowth | None

    def to_dict(self) -> dict:
        out = {
            "n_flags": self.n_flags, "n_distinct_flags": self.n_distinct_flags,
            "n_lines": self.n_lines, "degenerate_flags": self.degenerate_flags,
            "flag_drift": self.flag_drift, "common_frame": self.verdict.common,
            "margin": self.verdict.margin, "margin_certified": self.verdict.margin_certified,
        }
        if self.growth is not None:
            out["radii"] = list(self.growth.radii)
            out["hausdorff"] = list(self.growth.distances)
            out["slope"] = self.growth.slope
            out["n_candidates"] = self.growth.n_candidates
        return out


def flat_report(flat: H2Flat, config: NonrigidConfig = NonrigidConfig(), *, seed: int = 0,
                mapping=composed_point, growth: bool = True, extra_frames=()) -> FlatReport:
    flags = estimate_flags(flat, mapping, config.flag_radius)
    check = estimate_flags(flat, mapping, config.flag_check_radius)
    drift = max(flag_distance(a, b) for a, b in zip(flags, check))
    degenerate = sum(1 for f in flags if min(f.gaps) < config.gap_min)
    distinct = dedup_flags(flags, config.flag_tol)
    verdict = common_frame_test(distinct, config.flag_tol)
    hg = None
    if growth:
        hg = hausdorff_growth(flat, distinct, config, np.random.default_rng(seed), mapping, extra_frames)
    return FlatReport(len(flags), len(distinct), verdict.n_lines, degenerate, float(drift), verdict, hg)


def random_flats(n: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    return [H2Flat.random(rng) for _ in range(n)]


def nonrigid_report(n_flats: int = 5, seed: int = 0, config: NonrigidConfig = NonrigidConfig(),
                    growth: bool = True) -> list:
    return [flat_report(f, config, seed=seed + i, growth=growth)
            for i, f in enumerate(random_flats(n_flats, seed))]
