import math
from fractions import Fraction

import numpy as np
import pytest

from qiembed.building import (
    CAT0_COMB_LOWER, CAT0_COMB_UPPER, BallOracle, BfsCapExceeded, LatticeClass, RelPosition,
    TreeVertex, an_map_matrix, an_map_p, base_class, cat0_distance, comb_distance,
    comb_distance_bfs, diag_class, integral_basis, integral_key, integral_neighbors,
    lattice_normal_form, matmul, phi_distortion_pairs, qi_self_embedding_tree, random_walk,
    relative_position, tree_ball, tree_chart, tree_distance, tree_distance_matrix, tree_neighbors,
)
from qiembed.padic import PadicScalar, PrecisionError
from qiembed.qifit import fit_qi_constants

PRIMES = [2, 3, 5, 7]


def random_unimodular(rng, n, p):
    """Random integral matrix with determinant prime to p (invertible over Z_p)."""
    while True:
        m = rng.integers(-6, 7, (n, n))
        if round(np.linalg.det(m)) % p:
            return [[Fraction(int(x)) for x in row] for row in m]


def diag(exps, p):
    return [[Fraction(p) ** e if i == j else Fraction(0) for j in range(len(exps))]
            for i, e in enumerate(exps)]


# -- normal form ------------------------------------------------------------------

def test_identity_is_base():
    assert lattice_normal_form(diag((0, 0, 0), 2)) == base_class(2, 3)


def test_diag_p11():
    lc = lattice_normal_form(diag((1, 0, 0), 2))
    assert lc.a == (1, 0, 0) and all(x == 0 for x in lc.off)


def test_homothety():
    assert diag_class((3, 2, 2)) == diag_class((1, 0, 0))


@pytest.mark.parametrize("p", PRIMES)
@pytest.mark.parametrize("n", [2, 3])
def test_invariant_under_integral_change_of_basis(p, n):
    rng = np.random.default_rng(p * 10 + n)
    d = diag((2, 1, 0)[:n] if n == 3 else (1, 0), p)
    for _ in range(100):
        g = matmul(random_unimodular(rng, n, p), d)
        assert lattice_normal_form(matmul(g, random_unimodular(rng, n, p)), p) == lattice_normal_form(g, p)


@pytest.mark.parametrize("p", PRIMES)
def test_unimodular_times_diag_is_diag_class(p):
    rng = np.random.default_rng(p)
    target = diag_class((2, 1, 0), p)
    for _ in range(100):
        k = random_unimodular(rng, 3, p)
        assert lattice_normal_form(matmul(diag((2, 1, 0), p), k), p) == target


@pytest.mark.parametrize("p", PRIMES)
def test_idempotent(p):
    rng = np.random.default_rng(100 + p)
    for _ in range(100):
        m = [[Fraction(int(rng.integers(-20, 21)), p ** int(rng.integers(0, 3))) for _ in range(3)]
             for _ in range(3)]
        if np.linalg.matrix_rank(np.array(m, dtype=float)) < 3:
            continue
        lc = lattice_normal_form(m, p)
        assert min(lc.a) == 0
        assert lattice_normal_form(lc.matrix(), p) == lc
        for (i, j), x in zip([(0, 1), (0, 2), (1, 2)], lc.off):
            assert 0 <= x < Fraction(p) ** lc.a[i]


def test_padic_input_matches_rational_input():
    m = [[Fraction(1, 3), Fraction(5), Fraction(2, 7)], [Fraction(4), Fraction(-1, 5), Fraction(0)],
         [Fraction(6), Fraction(1), Fraction(3, 2)]]
    pm = [[PadicScalar.from_rational(x, 2, 40) for x in row] for row in m]
    assert lattice_normal_form(pm, 2) == lattice_normal_form(m, 2)


def test_padic_input_runs_out_of_digits():
    # the off-diagonal entry must be reduced modulo 2^10 but is only known modulo 2^8
    ps = lambda x: PadicScalar.from_rational(x, 2, 8)
    m = [[ps(2 ** 10), ps(Fraction(1, 3))], [ps(0), ps(1)]]
    with pytest.raises(PrecisionError, match="needs"):
        lattice_normal_form(m, 2)


@pytest.mark.parametrize("bad", [[[1, 2], [2, 4]], [[1, 0, 0], [0, 1, 0]], [[1]]])
def test_rejects_bad_matrices(bad):
    with pytest.raises((ValueError, PrecisionError)):
        lattice_normal_form(bad, 2)


def test_rejects_large_prime():
    with pytest.raises(ValueError):
        base_class(11)
    with pytest.raises(ValueError):
        lattice_normal_form(diag((0, 0), 11), 11)


def test_serialization_round_trip():
    lc = lattice_normal_form([[Fraction(1, 2), 3, 5], [0, 4, Fraction(1, 3)], [0, 0, 8]], 2)
    assert LatticeClass.from_dict(lc.to_dict()) == lc


# -- relative position and distances -------------------------------------------

def test_relative_position_examples():
    b = base_class()
    assert relative_position(b, b).exponents == (0, 0, 0)
    assert relative_position(b, diag_class((1, 0, 0))).exponents == (1, 0, 0)
    assert relative_position(diag_class((1, 0, 0)), b).exponents == (0, 0, -1)


@pytest.mark.parametrize("p", [2, 3])
def test_antisymmetry(p):
    rng = np.random.default_rng(p)
    b = base_class(p)
    for _ in range(50):
        l1 = random_walk(b, int(rng.integers(0, 6)), rng)
        l2 = random_walk(b, int(rng.integers(0, 6)), rng)
        assert relative_position(l2, l1) == relative_position(l1, l2).reverse_negate()


def test_cat0_on_an_apartment_is_euclidean():
    for a in [(0, 0, 0), (3, 1, 0), (5, 0, 2), (-2, 4, 1)]:
        for b in [(1, 0, 0), (0, 2, 7), (4, 4, 1)]:
            d = np.subtract(b, a)
            assert cat0_distance(diag_class(a), diag_class(b)) == pytest.approx(
                np.linalg.norm(d - d.mean()), abs=1e-12)


def test_adjacent_vertices():
    b, v = base_class(), diag_class((1, 0, 0))
    assert comb_distance_bfs(b, v) == 1 and comb_distance(b, v) == 1
    assert cat0_distance(b, v) == pytest.approx(math.sqrt(2 / 3))
    assert comb_distance_bfs(b, b) == 0 and cat0_distance(b, b) == 0


def test_relposition_normalization():
    r = RelPosition((2, 0, -1))
    assert sum(r.normalized) == 0 and r.comb == 3


def test_bfs_cap():
    with pytest.raises(BfsCapExceeded):
        comb_distance_bfs(base_class(), diag_class((4, 0, 0)), cap=3)


@pytest.mark.parametrize("p,n,count", [(2, 3, 14), (3, 3, 26), (2, 2, 3), (5, 2, 6)])
def test_neighbor_count(p, n, count):
    basis = [[int(i == j) for i in range(n)] for j in range(n)]
    nbs = integral_neighbors(basis, p)
    assert len({k for k, _ in nbs}) == count


def test_neighbor_relation_is_symmetric():
    b = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    k0, _ = integral_key(b, 2)
    for _, nb in integral_neighbors(b, 2):
        assert k0 in {k for k, _ in integral_neighbors(nb, 2)}


def test_formula_matches_bfs_and_bounds():
    rng = np.random.default_rng(0)
    oracle = BallOracle(radius=4)
    b = base_class()
    for _ in range(40):
        l1 = random_walk(b, int(rng.integers(0, 5)), rng)
        l2 = random_walk(l1, int(rng.integers(0, 7)), rng)
        c = comb_distance(l1, l2)
        assert oracle.distance(l1, l2, cap=12) == c == comb_distance_bfs(l1, l2, cap=12)
        cat = cat0_distance(l1, l2)
        assert CAT0_COMB_LOWER * c - 1e-12 <= cat <= CAT0_COMB_UPPER * c + 1e-12


def test_ball_sphere_sizes():
    # sphere sizes of the A2 building at p = 2
    from collections import Counter
    sizes = Counter(BallOracle(radius=3).dist.values())
    assert [sizes[r] for r in range(4)] == [1, 14, 98, 560]


def test_integral_basis_spans_the_class():
    lc = lattice_normal_form([[Fraction(1, 4), 1, 0], [0, 2, Fraction(1, 2)], [0, 0, 1]], 2)
    cols = integral_basis(lc)
    m = [[Fraction(cols[j][i]) for j in range(3)] for i in range(3)]
    assert lattice_normal_form(m, 2) == lc


# -- the tree ------------------------------------------------------------------

def test_tree_base():
    o = TreeVertex(0, 0)
    assert tree_chart(o) == (0, 0) and tree_chart(o.lattice) == (0, 0)
    assert len(tree_neighbors(o)) == 3


@pytest.mark.parametrize("p", [2, 3])
def test_tree_ball_counts(p):
    ball = tree_ball(TreeVertex(0, 0, p), 8 if p == 2 else 5)
    r = 8 if p == 2 else 5
    assert sum(1 for d in ball.values() if d == r) == (p + 1) * p ** (r - 1)
    edges = {frozenset((v, w)) for v in ball for w in tree_neighbors(v) if w in ball}
    assert len(edges) == len(ball) - 1  # connected and acyclic
    assert all(len(set(tree_neighbors(v))) == p + 1 for v in ball)


@pytest.mark.parametrize("p", [2, 3])
def test_chart_agrees_with_lattices(p):
    o = TreeVertex(0, 0, p)
    for v, d in tree_ball(o, 4).items():
        assert TreeVertex.from_lattice(v.lattice) == v
        assert tree_distance(o, v) == d
        nbs = {integral_key(integral_basis(w.lattice), p)[0] for w in tree_neighbors(v)}
        assert nbs == {k for k, _ in integral_neighbors(integral_basis(v.lattice), p)}
    for v in list(tree_ball(o, 3))[:20]:
        assert comb_distance_bfs(o.lattice, v.lattice, cap=8) == tree_distance(o, v)


def test_busemann_level_increases_toward_xi():
    v = TreeVertex(-3, Fraction(5))
    for _ in range(6):
        parent = tree_neighbors(v)[0]
        assert parent.m == v.m + 1
        v = parent


def test_vectorized_distances():
    ball = list(tree_ball(TreeVertex(0, 0), 5))
    d = tree_distance_matrix(ball)
    for i in range(0, len(ball), 9):
        for j in range(len(ball)):
            assert d[i, j] == tree_distance(ball[i], ball[j])


# -- the discrete AN-map ----------------------------------------------------------

def test_an_map_base():
    o = TreeVertex(0, 0)
    assert an_map_p(o, o) == base_class()


def test_an_map_ray_is_collinear():
    o = TreeVertex(0, 0)
    b = base_class()
    rps = [relative_position(b, an_map_p(TreeVertex(t, 0), o)).normalized for t in range(1, 7)]
    for t, r in enumerate(rps, start=1):
        assert r == tuple(t * x for x in rps[0])


def test_an_map_is_well_defined_on_chart_classes():
    for t, x in [(-2, Fraction(3)), (-3, Fraction(5, 2)), (1, Fraction(1, 4))]:
        u, w = TreeVertex(t, x), TreeVertex(-1, Fraction(1))
        shifted = an_map_matrix(u, w)
        shifted[0][1] += 7  # x -> x + 7 p^(-t) changes the entry x p^t by 7
        assert lattice_normal_form(shifted, 2) == an_map_p(u, w)


@pytest.mark.parametrize("x0,z0", [(0, 0), (Fraction(3, 2), Fraction(-5, 4))])
def test_vertical_flat_lies_in_one_apartment(x0, z0):
    pts = {(t, s): an_map_p(TreeVertex(t, x0), TreeVertex(s, z0)) for t in range(-4, 5) for s in range(-4, 5)}
    for (t1, s1), a in pts.items():
        for (t2, s2), b in pts.items():
            expected = tuple(sorted((0, t2 - t1, s2 - s1), reverse=True))
            shift = expected[-1]
            assert relative_position(a, b).comb == expected[0] - shift
            assert relative_position(a, b).normalized == RelPosition(expected).normalized


# -- the tree self-embedding -------------------------------------------------------

def test_phi_basepoint():
    assert qi_self_embedding_tree(TreeVertex(0, 0)) == TreeVertex(-1, 0)


def test_phi_avoids_xi():
    ball = tree_ball(TreeVertex(0, 0), 12)
    assert max(qi_self_embedding_tree(v).m for v in ball) <= 1
    assert max(qi_self_embedding_tree(v).m for v in ball) == -1


def test_phi_constants_on_radius_10_ball():
    a, b = phi_distortion_pairs(10)
    fit = fit_qi_constants(np.unique(np.c_[a, b], axis=0).astype(float))
    assert fit.L <= 3 and fit.C <= 8
    # every distance grows by 0, 1 or 2
    assert (b - a).min() == 0 and (b - a).max() == 2
    assert (fit.L, fit.C) == (1.0, 2.0)


def test_phi_is_injective():
    ball = list(tree_ball(TreeVertex(0, 0), 8))
    assert len({qi_self_embedding_tree(v) for v in ball}) == len(ball)


def test_phi_requires_p2():
    with pytest.raises(ValueError):
        qi_self_embedding_tree(TreeVertex(0, 0, 3))
