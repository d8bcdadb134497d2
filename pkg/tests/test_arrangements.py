from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from qiembed import exact
from qiembed.oracles import positive_root_count, supported_types
from qiembed.arrangements import (Hyperplane, ambient, build_d_like, build_irreducible, build_product,
                                  codim1_residual_dim, dumps, equation_normals, hyperplane_count,
                                  is_singular, loads, map_hyperplane, parse_label, reflection, restrict,
                                  singular_subspaces, subspace_from_equations, subspace_from_normals)


@pytest.mark.parametrize("tag,rank", supported_types())
def test_hyperplane_count_matches_cartan_oracle(tag, rank):
    assert hyperplane_count(build_irreducible(tag, rank)) == positive_root_count(tag, rank)


@pytest.mark.parametrize("tag,rank,expected", [
    ("A", 1, 1), ("A", 2, 3), ("A", 5, 15), ("BC", 2, 4), ("BC", 4, 16), ("D", 4, 12), ("D", 6, 30),
    ("G2", 2, 6), ("F4", 4, 24), ("E6", 6, 36), ("E7", 7, 63), ("E8", 8, 120),
])
def test_hyperplane_count_formulas(tag, rank, expected):
    arr = build_irreducible(tag, rank)
    assert arr.ambient_dim == rank
    assert hyperplane_count(arr) == expected


def test_a1_is_the_origin_in_a_line():
    arr = build_irreducible("A", 1)
    assert arr.ambient_dim == 1 and arr.hyperplanes == (Hyperplane((1,)),)


@pytest.mark.parametrize("tag,rank", [("D", 2), ("D", 3), ("A", 0), ("BC", 1), ("G2", 3), ("E", 5), ("H", 3)])
def test_invalid_types_rejected(tag, rank):
    with pytest.raises(ValueError):
        build_irreducible(tag, rank)


def test_d2_d3_diagnostic_points_to_type_a():
    with pytest.raises(ValueError, match="type A"):
        build_irreducible("D", 3)


def test_b_and_c_merge():
    assert build_irreducible("B", 3) == build_irreducible("C", 3) == build_irreducible("BC", 3)


@pytest.mark.parametrize("tag,rank", [
    ("A", 1), ("A", 2), ("A", 3), ("A", 4), ("BC", 2), ("BC", 3), ("D", 4), ("D", 5),
    ("G2", 2), ("F4", 4), ("E6", 6), ("E7", 7), ("E8", 8),
])
def test_reflection_closure(tag, rank):
    arr = build_irreducible(tag, rank)
    hyps = set(arr.hyperplanes)
    for h in arr.hyperplanes:
        s = reflection(arr, h)
        assert exact.matmul(s, s) == exact.identity(arr.ambient_dim)
        st_ = exact.transpose(s)  # s is an involution, so s^{-T} = s^T
        assert {Hyperplane.from_normal(exact.matvec(st_, g.normal)) for g in arr.hyperplanes} == hyps


def test_map_hyperplane_general_inverse():
    arr = build_irreducible("A", 2)
    m = [[2, 1], [0, 1]]
    for h in arr.hyperplanes:
        img = map_hyperplane(m, h)
        basis = exact.nullspace([list(h.normal)])
        assert all(img.contains(exact.matvec(m, b)) for b in basis)


# -- products -----------------------------------------------------------------

def test_products():
    a1, a2 = build_irreducible("A", 1), build_irreducible("A", 2)
    p = build_product([a1, a1])
    assert (p.ambient_dim, hyperplane_count(p)) == (2, 2)
    assert build_product([a2]) == a2
    p = build_product([a2, a1])
    assert (p.ambient_dim, hyperplane_count(p)) == (3, 4)
    assert [f.block for f in p.factors] == [(0, 1), (2,)]


def test_parse_label():
    arr = parse_label("BC2xA1")
    assert arr.label() == "BC2xA1"
    assert hyperplane_count(arr) == 5
    assert parse_label("G2") == build_irreducible("G2", 2)


# -- singular subspaces ----------------------------------------------------------

def _brute_force_subspaces(arr):
    out = set()
    normals = arr.normals
    for k in range(len(normals) + 1):
        for subset in combinations(normals, k):
            out.add(subspace_from_normals(arr, subset).basis)
    return out


@pytest.mark.parametrize("label,expected", [("A1", 2), ("A2", 5), ("A1xA1", 4), ("BC2", 6), ("G2", 8), ("A3", 15)])
def test_singular_subspace_enumeration_matches_brute_force(label, expected):
    arr = parse_label(label)
    subs = singular_subspaces(arr, 0)
    assert len(subs) == expected
    assert {s.basis for s in subs} == _brute_force_subspaces(arr)
    assert all(is_singular(arr, s) for s in subs)


def test_d4_plane_present():
    d4 = build_irreducible("D", 4)
    plane = subspace_from_equations(d4, "x1=x2 & x3=x4")
    assert plane.dim == 2
    assert plane.basis in {s.basis for s in singular_subspaces(d4, 2)}


def test_min_dim_out_of_range():
    with pytest.raises(ValueError):
        singular_subspaces(build_irreducible("A", 2), 3)


# -- restriction ------------------------------------------------------------------

def test_d4_has_seven_restricted_hyperplanes():
    d4 = build_irreducible("D", 4)
    rest = restrict(d4, "x1=x2")
    assert hyperplane_count(rest) == 7
    assert rest.factors[0].type_tag == "restricted"


def test_d4_restricted_hyperplanes_are_the_expected_ones():
    # on {x1 = x2} with coordinates (a, x3, x4) = (x1, x3, x4)
    d4 = build_irreducible("D", 4)
    sub = subspace_from_equations(d4, "x1=x2")
    rest = restrict(d4, sub)
    expected_eqs = ["x1=0", "x1=x3", "x1=-x3", "x1=x4", "x1=-x4", "x3=x4", "x3=-x4"]
    expected = set()
    for eq in expected_eqs:
        inside = subspace_from_normals(d4, list(equation_normals(d4, eq)) + list(equation_normals(d4, "x1=x2")))
        assert inside.dim == 2
        expected.add(inside.basis)
    got = set()
    for h in rest.hyperplanes:
        # pull back the restricted hyperplane to a subspace of the ambient space
        null = exact.nullspace([list(h.normal)])
        vecs = [[sum((c * b[k] for c, b in zip(v, sub.basis)), Fraction(0)) for k in range(4)] for v in null]
        got.add(subspace_from_normals(d4, [g.normal for g in d4.hyperplanes
                                             if all(exact.dot(g.normal, x) == 0 for x in vecs)]).basis)
    assert got == expected


def test_a3_restriction_has_three_hyperplanes():
    assert hyperplane_count(restrict(build_irreducible("A", 3), "x1=x2")) == 3


def test_restrict_to_ambient_is_identity():
    arr = build_irreducible("BC", 3)
    assert restrict(arr, ambient(arr)) is arr


def test_restrict_rejects_nonsingular():
    arr = build_irreducible("A", 2)
    sub = subspace_from_normals(arr, [[1, 3]])
    assert not is_singular(arr, sub)
    with pytest.raises(ValueError):
        restrict(arr, sub)


def test_codim1_residual():
    assert codim1_residual_dim(build_irreducible("A", 2)) == 0
    assert codim1_residual_dim(parse_label("A1xA1")) == 1
    assert codim1_residual_dim(build_irreducible("D", 4)) == 0
    with pytest.raises(ValueError):
        codim1_residual_dim(build_irreducible("A", 1))


def test_d_like_small_ranks():
    assert hyperplane_count(build_d_like(2)) == 2
    assert hyperplane_count(build_d_like(3)) == 6


# -- canonical forms and serialization ------------------------------------------------

nonzero_ints = st.integers(-20, 20).filter(bool)


@given(st.lists(st.integers(-9, 9), min_size=1, max_size=6).filter(any), nonzero_ints, nonzero_ints)
def test_canonical_normal_is_scale_invariant(v, num, den):
    c = Fraction(num, den)
    h = Hyperplane.from_normal(v)
    assert Hyperplane.from_normal([c * x for x in v]) == h
    lead = next(x for x in h.normal if x)
    assert lead > 0


LABELS = ["A1", "A2", "A3", "BC2", "BC3", "D4", "G2", "F4", "E6", "A1xA1", "A2xA1", "BC2xA1", "A2xA2", "G2xA1"]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(LABELS), min_size=1, max_size=3))
def test_serialization_round_trip_byte_stable(labels):
    arr = build_product([parse_label(x) for x in labels])
    text = dumps(arr)
    back = loads(text)
    assert back == arr
    assert dumps(back) == text


def test_serialization_of_restriction():
    rest = restrict(build_irreducible("D", 4), "x1=x2")
    assert dumps(loads(dumps(rest))) == dumps(rest)


def test_loads_rejects_foreign_documents():
    with pytest.raises(ValueError):
        loads('{"schema": "something-else"}')
