import mpmath
import numpy as np
import pytest
from scipy import optimize

from qiembed.nonrigid_sym import (
    H2Flat, NonrigidConfig, common_frame_test, composed_point, dedup_flags, distance_to_flat,
    estimate_flags, flag_of, flat_report, line_angle, plain_point, polar_grid,
)
from qiembed.symspace import an_map_rep


def to_complex(a):
    return np.vectorize(complex, otypes=[complex])(a)


def test_plain_point_is_the_an_map():
    flat = H2Flat.vertical(0.4, -0.3)
    # vertical geodesic i e^{sqrt2 u}: H^2 coordinate t = u / sqrt2
    rep = to_complex(plain_point(flat, 0.8, -1.1))
    ref = an_map_rep(0.8 / np.sqrt(2), 0.4, -1.1 / np.sqrt(2), -0.3)
    assert np.allclose(rep, ref, atol=1e-12)


def test_flag_of_diagonal():
    rep = np.array([[mpmath.mpc(x) if i == j else mpmath.mpc(0) for j, x in enumerate(row)]
                    for i, row in enumerate([[1e6, 0, 0], [0, 1, 0], [0, 0, 1e-6]])], dtype=object)
    line, normal, gaps = flag_of(rep)
    assert line_angle(line, [1, 0, 0]) < 1e-12
    assert line_angle(normal, [0, 0, 1]) < 1e-12
    assert gaps[0] == pytest.approx(np.log(1e6))


def test_vertical_flat_flags_share_a_frame():
    flags = estimate_flags(H2Flat.vertical(0.5, 0.2), plain_point, radius=30)
    v = common_frame_test(dedup_flags(flags, 1e-3))
    assert v.common and v.n_lines == 3


def test_random_flat_flags_have_no_common_frame():
    flat = H2Flat.random(np.random.default_rng(0))
    flags = dedup_flags(estimate_flags(flat, composed_point, radius=60), 1e-3)
    v = common_frame_test(flags)
    assert len(flags) >= 7
    assert not v.common and v.margin >= 0.1 and v.margin_certified >= 0.1


def scipy_distance(point, frame):
    """Oracle: direct minimization over the sum-zero diagonal with scipy."""
    g = to_complex(frame)
    g = g / abs(np.linalg.det(g)) ** (1 / 3)
    y = to_complex(point)

    def f(a):
        d = np.diag(np.exp(np.r_[a, -a.sum()]))
        return np.linalg.norm(np.log(np.linalg.svd(np.linalg.solve(g @ d, y), compute_uv=False)))
    res = optimize.minimize(f, np.zeros(2), method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    return res.fun


def test_distance_to_flat_matches_scipy():
    rng = np.random.default_rng(1)
    flat = H2Flat.random(rng)
    u, v = polar_grid(3.0, 2, 4)
    pts = np.stack([composed_point(flat, a, b) for a, b in zip(u, v)])
    frame = np.array([[mpmath.mpc(complex(x)) for x in row]
                      for row in rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))], dtype=object)
    ours = distance_to_flat(pts, frame)
    ref = [scipy_distance(p, frame) for p in pts]
    assert np.allclose(ours, ref, atol=1e-6)


def test_distance_to_own_flat_vanishes():
    flat = H2Flat.vertical(0.3, -0.6)
    u, v = polar_grid(20.0, 3, 8)
    pts = np.stack([plain_point(flat, a, b) for a, b in zip(u, v)])
    frame = np.array([[mpmath.mpc(x) for x in row] for row in [[1, 0.3, -0.6], [0, 1, 0], [0, 0, 1]]],
                     dtype=object)
    assert np.max(distance_to_flat(pts, frame)) <= 1e-4


def test_flat_report_without_growth():
    d = flat_report(H2Flat.random(np.random.default_rng(0)), NonrigidConfig(), growth=False).to_dict()
    assert d["n_distinct_flags"] >= 7 and not d["common_frame"]
    assert d["degenerate_flags"] == 0 and d["flag_drift"] < 1e-3
    assert "slope" not in d
