"""Fitting quasi-isometry constants (L, C) to sampled distance pairs.

For a map f and sampled pairs with source distance a and target distance
b, (L, C) is admissible when a/L - C <= b <= L a + C for every pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_DENSITY = 16  # grid points per doubling of L
L_MAX = 64.0


@dataclass(frozen=True)
class QIFit:
    L: float
    C: float
    frontier: tuple  # (L, C(L)) for every grid value of L
    scale: float
    n_pairs: int
    worst_lower: float  # largest a/L - b at the knee
    worst_upper: float  # largest b - L a at the knee

    def to_dict(self) -> dict:
        return {
            "L": self.L, "C": self.C, "scale": self.scale, "n_pairs": self.n_pairs,
            "worst_lower": self.worst_lower, "worst_upper": self.worst_upper,
            "frontier": [list(p) for p in self.frontier],
        }


@dataclass(frozen=True)
class QICheck:
    violations: int
    lower_violations: int
    upper_violations: int
    max_excess: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _as_arrays(pairs):
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise ValueError("need a nonempty list of (d_src, d_dst) pairs")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("distances must be finite and nonnegative")
    return arr[:, 0], arr[:, 1]


def additive_constant(a, b, L: float) -> float:
    """Smallest C >= 0 making (L, C) admissible on the pairs."""
    return float(max(0.0, np.max(a / L - b), np.max(b - L * a)))


def fit_qi_constants(pairs, scale: float = 10.0, density: int = GRID_DENSITY,
                     l_max: float = L_MAX) -> QIFit:
    """Knee of the (L, C(L)) frontier, minimizing L + C/scale over L = 2^(k/density)."""
    a, b = _as_arrays(pairs)
    ks = np.arange(0, int(np.ceil(np.log2(l_max) * density)) + 1)
    ls = 2.0 ** (ks / density)
    cs = np.array([additive_constant(a, b, L) for L in ls])
    i = int(np.argmin(ls + cs / scale))
    L, C = float(ls[i]), float(cs[i])
    return QIFit(L, C, tuple(zip(ls.tolist(), cs.tolist())), scale, len(a),
                 float(np.max(a / L - b)), float(np.max(b - L * a)))


def check_qi(pairs, L: float, C: float) -> QICheck:
    """Count pairs violating either inequality for the given constants."""
    a, b = _as_arrays(pairs)
    low = a / L - C - b
    up = b - L * a - C
    lv, uv = int(np.sum(low > 0)), int(np.sum(up > 0))
    return QICheck(lv + uv, lv, uv, float(max(0.0, np.max(low), np.max(up))))
