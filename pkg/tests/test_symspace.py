import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from qiembed.symspace import (
    PAIRING, XI1, XI2, HPoint, SymPoint, an_map, an_map_rep, asymptote_distance,
    asymptote_distance_exact, busemann_height, dist_h, dist_h_batch, dist_sym, dist_sym_batch,
    embed_h2_in_h3, embed_h2_in_h3_batch, h_rep, projection, ray_toward, sample_an_map_pairs,
    vertical_flat_point, vertical_flat_residual, wall_crossings,
)


def random_upper(rng, n=3, complex_=False, k=None):
    shape = (n, n) if k is None else (k, n, n)
    m = rng.normal(size=shape)
    if complex_:
        m = m + 1j * rng.normal(size=shape)
    m = np.triu(m, 1)
    d = np.exp(rng.normal(size=shape[:-1]))
    idx = np.arange(n)
    m[..., idx, idx] = d
    return m


def spd_oracle(a, b):
    """Distance through the generalized eigenvalues of the positive-definite cosets."""
    pa, pb = a @ a.conj().T, b @ b.conj().T
    ev = linalg.eigh(pb, pa, eigvals_only=True)
    logs = np.log(ev) / 2
    return float(np.linalg.norm(logs - logs.mean()))


def test_distance_to_self_is_zero():
    assert dist_sym(np.eye(3), np.eye(3)) == 0.0


def test_diagonal_normalization():
    assert dist_sym(np.eye(3), np.diag([np.e, 1, 1 / np.e])) == pytest.approx(np.sqrt(2), abs=1e-14)


@pytest.mark.parametrize("n,complex_", [(2, False), (3, False), (2, True), (3, True)])
def test_distance_matches_eigenvalue_oracle(n, complex_):
    rng = np.random.default_rng(n + 10 * complex_)
    for _ in range(100):
        a = SymPoint(random_upper(rng, n, complex_)).rep
        b = SymPoint(random_upper(rng, n, complex_)).rep
        assert dist_sym(a, b) == pytest.approx(spd_oracle(a, b), abs=1e-9)


def test_symmetric_exactly():
    rng = np.random.default_rng(1)
    a, b = random_upper(rng, k=500), random_upper(rng, k=500)
    assert np.array_equal(dist_sym_batch(a, b), dist_sym_batch(b, a))


def test_triangle_inequality_10k_triples():
    rng = np.random.default_rng(2)
    a, b, c = (random_upper(rng, k=10_000) for _ in range(3))
    slack = dist_sym_batch(a, b) + dist_sym_batch(b, c) - dist_sym_batch(a, c)
    assert slack.min() >= -1e-9


def test_left_invariance():
    rng = np.random.default_rng(3)
    a, b, g = (random_upper(rng, k=1000) for _ in range(3))
    diff = dist_sym_batch(g @ a, g @ b) - dist_sym_batch(a, b)
    assert np.abs(diff).max() <= 1e-9


def test_sympoint_validation():
    with pytest.raises(ValueError):
        SymPoint(np.array([[1.0, 0], [1.0, 1.0]]))
    with pytest.raises(ValueError):
        SymPoint(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        SymPoint(np.diag([np.inf, 1.0]))
    p = SymPoint(np.diag([2.0, 3.0, 5.0]))
    assert abs(np.prod(np.diag(p.rep)) - 1) <= 1e-12


def test_from_matrix_is_the_orbit_point():
    rng = np.random.default_rng(4)
    g = rng.normal(size=(3, 3))
    k, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    assert dist_sym(SymPoint.from_matrix(g), SymPoint.from_matrix(g @ k)) <= 1e-9


def test_h2_closed_form_matches_svd():
    rng = np.random.default_rng(5)
    t1, x1, t2, x2 = rng.uniform(-3, 3, (4, 200))
    ref = [dist_sym(h_rep(a, b), h_rep(c, d)) for a, b, c, d in zip(t1, x1, t2, x2)]
    assert np.allclose(dist_h_batch(t1, x1, t2, x2), ref, atol=1e-9)


# -- the AN-map -----------------------------------------------------------------

def test_an_map_basepoint():
    assert np.array_equal(an_map(HPoint(0, 0), HPoint(0, 0)).rep, np.eye(3))


@pytest.mark.parametrize("t", [-2.0, -0.5, 0.7, 3.0])
def test_an_map_first_ray(t):
    expected = np.diag([np.exp(2 * t / 3), np.exp(-4 * t / 3), np.exp(2 * t / 3)])
    assert np.allclose(an_map(HPoint(t, 0), HPoint(0, 0)).rep, expected, rtol=1e-14)


@settings(max_examples=200, deadline=None)
@given(*(st.floats(-5, 5) for _ in range(4)))
def test_vertical_flat_identity(t, x, s, z):
    lhs = an_map_rep(t, x, s, z)
    rhs = vertical_flat_point(x, z, t, s)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_complex_an_map_uses_the_same_formula():
    rep = an_map(HPoint(0.3, 1 + 2j), HPoint(-0.4, -1j)).rep
    assert rep.dtype == complex
    assert np.allclose(rep, vertical_flat_point(1 + 2j, -1j, 0.3, -0.4), atol=1e-14)


def test_vertical_flat_residual_grid():
    ts = np.linspace(-5, 5, 10)
    assert vertical_flat_residual(0.7, -1.3, ts, ts) <= 1e-9
    t, u = np.meshgrid(ts, ts)
    # the image of the vertical flat through (0, 0) is exactly the diagonal flat
    assert np.array_equal(an_map_rep(t, 0.0, u, 0.0), np.stack(
        [vertical_flat_point(0.0, 0.0, a, b) for a, b in zip(t.ravel(), u.ravel())]).reshape(t.shape + (3, 3)))


def test_quadrant_crosses_one_wall():
    assert wall_crossings() == 1


def test_pair_sampler():
    s = sample_an_map_pairs(np.random.default_rng(0), 50)
    assert s.pairs.shape == (50, 2)
    assert np.all(np.abs(s.p) <= 5) and np.all(s.d_src >= 0)
    i = 7
    src = np.hypot(dist_h(HPoint(*s.p[i, :2]), HPoint(*s.q[i, :2])),
                   dist_h(HPoint(*s.p[i, 2:]), HPoint(*s.q[i, 2:])))
    assert s.d_src[i] == pytest.approx(src, abs=1e-9)
    dst = dist_sym(an_map(HPoint(*s.p[i, :2]), HPoint(*s.p[i, 2:])),
                   an_map(HPoint(*s.q[i, :2]), HPoint(*s.q[i, 2:])))
    assert s.d_dst[i] == pytest.approx(dst, abs=1e-9)


# -- H^2 into H^3 ------------------------------------------------------------------

def test_embedding_basepoint():
    e = embed_h2_in_h3(HPoint(0, 0))
    assert dist_h(e, e) == 0.0


def test_embedding_is_isometric():
    rng = np.random.default_rng(6)
    for _ in range(100):
        p, q = HPoint(*rng.uniform(-3, 3, 2)), HPoint(*rng.uniform(-3, 3, 2))
        assert dist_h(embed_h2_in_h3(p), embed_h2_in_h3(q)) == pytest.approx(dist_h(p, q), abs=1e-9)


def test_embedding_batch_matches_scalar():
    rng = np.random.default_rng(7)
    t, x = rng.uniform(-2, 2, (2, 20))
    tt, xx = embed_h2_in_h3_batch(t, x)
    for k in range(20):
        e = embed_h2_in_h3(HPoint(t[k], x[k]))
        assert tt[k] == pytest.approx(e.t, abs=1e-12) and xx[k] == pytest.approx(e.x, abs=1e-12)


def test_image_rays_stay_below_a_horosphere():
    """Busemann height toward infinity stays bounded along 20 image rays."""
    rng = np.random.default_rng(8)
    heights = []
    ts = np.linspace(0, 15, 61)
    for x0 in rng.uniform(-5, 5, 19):
        heights += [busemann_height(embed_h2_in_h3(HPoint(-t, x0))) for t in ts]
    heights += [busemann_height(embed_h2_in_h3(HPoint(t, 0.0))) for t in ts]
    # the image lies under the unit hemisphere, i.e. at height e^{2t} <= 1
    assert max(heights) <= 1e-9


# -- asymptote classes ---------------------------------------------------------

@pytest.mark.parametrize("xi", [XI1, XI2])
def test_same_ray_is_same_class(xi):
    p = an_map_rep(0.3, 0.5, -0.2, 1.1)
    q = ray_toward(p, xi, 2.5)
    assert asymptote_distance(p, q, xi).value <= 1e-6
    assert asymptote_distance_exact(p, q, xi) <= 1e-9


def test_pairing_recovers_factor_distances():
    rng = np.random.default_rng(9)
    for _ in range(20):
        t, x, s, z = rng.uniform(-2, 2, 4)
        t2, x2 = rng.uniform(-2, 2, 2)
        s2, z2 = rng.uniform(-2, 2, 2)
        p = an_map_rep(t, x, s, z)
        d_first = dist_h(HPoint(t, x), HPoint(t2, x2))
        d_second = dist_h(HPoint(s, z), HPoint(s2, z2))
        xi_first = XI1 if PAIRING["xi1"] == "first" else XI2
        xi_second = XI2 if xi_first is XI1 else XI1
        assert asymptote_distance_exact(p, an_map_rep(t2, x2, s, z), xi_first) == pytest.approx(d_first, abs=1e-9)
        assert asymptote_distance_exact(p, an_map_rep(t, x, s2, z2), xi_second) == pytest.approx(d_second, abs=1e-9)


@pytest.mark.parametrize("label", ["xi1", "xi2"])
def test_projection_isometry_numeric(label):
    xi = XI1 if label == "xi1" else XI2
    rng = np.random.default_rng(10)
    for _ in range(10):
        a, b, c, d, e, f = rng.uniform(-2, 2, 6)
        if PAIRING[label] == "first":
            p, q, ref = an_map_rep(a, b, c, d), an_map_rep(e, f, c, d), dist_h(HPoint(a, b), HPoint(e, f))
        else:
            p, q, ref = an_map_rep(a, b, c, d), an_map_rep(a, b, e, f), dist_h(HPoint(c, d), HPoint(e, f))
        res = asymptote_distance(p, q, xi, horizon=40)
        assert res.converged
        assert abs(res.value - ref) <= 1e-3


def test_projection_is_coordinate():
    p = an_map_rep(0.4, -0.7, 1.2, 0.9)
    xi_first = XI1 if PAIRING["xi1"] == "first" else XI2
    xi_second = XI2 if xi_first is XI1 else XI1
    a, b = projection(p, xi_first), projection(p, xi_second)
    assert dist_h(a, HPoint(0.4, -0.7)) <= 1e-9
    assert dist_h(b, HPoint(1.2, 0.9)) <= 1e-9


def test_injective_on_vertical_flats():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        x0, z0 = rng.uniform(-3, 3, 2)
        (t1, s1), (t2, s2) = rng.uniform(-4, 4, (2, 2))
        p, q = an_map_rep(t1, x0, s1, z0), an_map_rep(t2, x0, s2, z0)
        gap = max(dist_h(projection(p, XI1), projection(q, XI1)),
                  dist_h(projection(p, XI2), projection(q, XI2)))
        assert gap >= 1e-6


def test_asymptote_rejects_bad_horizon():
    with pytest.raises(ValueError):
        asymptote_distance(np.eye(3), np.eye(3), XI1, horizon=0)
