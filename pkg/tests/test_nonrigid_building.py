import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from qiembed import nonrigid_building as nb
from qiembed.building import comb_distance, det, lattice_normal_form, matmul, random_unimodular, tree_distance
from qiembed.nonrigid_building import (
    Frame, NonrigidConfigP, TreeFlat, TreeGeodesic, ball_samples, common_frame_test, cross,
    depth, estimate_flags, flag_of, image_basis, nonrigid_flat_report_p, primitive,
    sector_frame, smith_left,
)
from qiembed.padic import valuation

SMALL = NonrigidConfigP(radii=(4, 8), flag_radius=64, flag_check_radius=48, grid=4,
                        random_apartments=4)


def random_rational_matrix(rng):
    while True:
        m = [[Fraction(int(rng.integers(-9, 10)), 2 ** int(rng.integers(0, 4))) for _ in range(3)]
             for _ in range(3)]
        if det(m) != 0:
            return m


def test_geodesic_is_a_geodesic():
    g = TreeGeodesic(Fraction(3, 4), Fraction(-5, 2))
    pts = [g(i) for i in range(-12, 13)]
    for (i, a), (j, b) in itertools.combinations(enumerate(pts), 2):
        assert tree_distance(a, b) == j - i


@pytest.mark.parametrize("seed", range(5))
def test_smith_left_reconstructs(seed):
    rng = np.random.default_rng(seed)
    m = random_rational_matrix(rng)
    u, e = smith_left(m)
    assert list(e) == sorted(e)
    assert valuation(det(u), 2) == 0
    # u^{-1} m has the same elementary divisors and its column span is u diag(p^e) Z_p^3
    assert lattice_normal_form(m) == lattice_normal_form(
        matmul(u, [[Fraction(2) ** e[i] if i == j else 0 for j in range(3)] for i in range(3)]))


def test_primitive_and_depth():
    v = primitive((Fraction(4), Fraction(6), Fraction(8)))
    assert min(valuation(x, 2) for x in v if x) == 0
    assert depth(v, v) == math.inf
    assert depth((1, 0, 0), (1, 2 ** 5, 0)) == 5
    assert cross((1, 0, 0), (0, 1, 0)) == (0, 0, 1)


def test_flag_of_diagonal_lattice():
    d = [[Fraction(1), 0, 0], [0, Fraction(2), 0], [0, 0, Fraction(4)]]
    line, normal, gaps = flag_of(d)
    assert line == (1, 0, 0) and normal == (0, 0, 1) and gaps == (1, 1)


def brute_force_distance(frame, basis, box=6):
    target = lattice_normal_form(basis)
    best = math.inf
    for x, y in itertools.product(range(-box, box + 1), repeat=2):
        if frame.cone and not (x <= y <= 0):
            continue
        lam = [[Fraction(2) ** e if i == j else 0 for j in range(3)] for i, e in enumerate((x, y, 0))]
        best = min(best, comb_distance(lattice_normal_form(matmul(frame.g, lam)), target))
    return best


@pytest.mark.parametrize("cone", [False, True])
def test_apartment_distance_matches_brute_force(cone):
    rng = np.random.default_rng(11 + cone)
    for _ in range(12):
        frame = Frame(random_unimodular(rng, steps=4), cone=cone)
        basis = matmul(random_unimodular(rng, steps=3),
                       [[Fraction(2) ** int(rng.integers(-2, 3)) if i == j else 0 for j in range(3)]
                        for i in range(3)])
        assert frame.distance(basis) == brute_force_distance(frame, basis)


def test_vertical_flat_has_a_common_frame():
    flags = estimate_flags(TreeFlat.vertical(), 64, "plain")
    verdict = common_frame_test(flags, 16)
    assert verdict.common and verdict.n_lines == 3


def test_sector_contains_its_own_ray():
    flat = TreeFlat.random(np.random.default_rng(3))
    flags = estimate_flags(flat, 64)
    tip = image_basis(flat, 0, 0)
    f = flags[0]
    s = sector_frame(tip, f)
    assert s.distance(tip) == 0


def test_ball_samples_cover_the_boundary():
    pts = ball_samples(16, 4)
    assert (0, 0) in pts and (16, 0) in pts and (0, -16) in pts
    assert all(i * i + j * j <= 17 ** 2 for i, j in pts)


def test_small_report():
    rep = nonrigid_flat_report_p(TreeFlat.through_basepoints(), SMALL, seed=0)
    d = rep.to_dict()
    assert d["n_distinct_flags"] == 8 and d["n_lines"] == 4 and not d["common_frame"]
    assert [r["sector_hausdorff"] for r in d["radii"]] == [0, 0]
    assert all(r["best_apartment_distance"] >= 0.1 * r["radius"] for r in d["radii"])


def test_empty_candidate_family_is_an_error(monkeypatch):
    monkeypatch.setattr(nb, "apartment_of_flags", lambda *a, **k: None)
    cfg = NonrigidConfigP(radii=(4,), flag_radius=32, flag_check_radius=24, random_apartments=0)
    with pytest.raises(ValueError, match="empty"):
        nonrigid_flat_report_p(TreeFlat.through_basepoints(), cfg)
