from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from qiembed.padic import K_MIN, PadicScalar, PrecisionError, digits, reduce_mod, valuation

PRIMES = [2, 3, 5, 7]
rationals = st.fractions(max_denominator=10_000).filter(lambda x: x != 0)


def congruent(x: Fraction, y: Fraction, p: int, k: int) -> bool:
    d = x - y
    return d == 0 or valuation(d, p) >= k


@pytest.mark.parametrize("p", PRIMES)
@given(x=rationals)
def test_round_trip(p, x):
    a = PadicScalar.from_rational(x, p)
    assert a.v == valuation(x, p)
    assert congruent(a.to_fraction(), x, p, a.absolute_precision)


@pytest.mark.parametrize("p", PRIMES)
@given(x=rationals, y=rationals)
def test_product_and_quotient(p, x, y):
    a, b = PadicScalar.from_rational(x, p), PadicScalar.from_rational(y, p)
    prod, quot = a * b, a / b
    assert congruent(prod.to_fraction(), x * y, p, prod.absolute_precision)
    assert congruent(quot.to_fraction(), x / y, p, quot.absolute_precision)


@pytest.mark.parametrize("p", PRIMES)
@given(x=rationals, y=rationals)
def test_sum_tracks_precision(p, x, y):
    a, b = PadicScalar.from_rational(x, p), PadicScalar.from_rational(y, p)
    try:
        s = a + b
    except PrecisionError:
        assume(False)
    if x + y != 0 and not s.is_zero:
        assert congruent(s.to_fraction(), x + y, p, s.absolute_precision)
        assert s.prec >= K_MIN
    else:
        assert s.is_zero


def test_cancellation_is_loud():
    a = PadicScalar.from_rational(Fraction(1, 3), 2)
    b = PadicScalar.from_rational(Fraction(1, 3) + 2 ** 20, 2)
    with pytest.raises(PrecisionError, match="raise the working precision"):
        a - b


def test_mild_cancellation_keeps_digits():
    a = PadicScalar.from_rational(Fraction(1, 3), 2)
    b = PadicScalar.from_rational(Fraction(1, 3) + 2 ** 10, 2)
    d = a - b
    assert (d.v, d.prec) == (10, 14)
    assert d == -(2 ** 10)


def test_exact_cancellation_gives_zero_sentinel():
    a = PadicScalar.from_rational(5, 3)
    z = a - a
    assert z.is_zero and not z
    with pytest.raises(ZeroDivisionError):
        z.inverse()
    with pytest.raises(PrecisionError):
        valuation(z, 3)


def test_unit_digits_must_be_units():
    with pytest.raises(ValueError):
        PadicScalar(2, 0, 4)


@pytest.mark.parametrize("x,a,p,expected", [
    (Fraction(5, 8), 0, 2, Fraction(5, 8)),
    (Fraction(5, 8), -2, 2, Fraction(1, 8)),
    (Fraction(1, 3), 3, 2, Fraction(3)),
    (Fraction(-1), 4, 2, Fraction(15)),
    (Fraction(7, 2), -1, 2, Fraction(0)),
    (Fraction(10), 1, 5, Fraction(0)),
    (Fraction(11, 25), 1, 5, Fraction(11, 25)),
])
def test_reduce_mod_examples(x, a, p, expected):
    assert reduce_mod(x, a, p) == expected


@pytest.mark.parametrize("p", PRIMES)
@given(x=rationals, a=st.integers(-6, 6))
def test_reduce_mod_is_a_representative(p, x, a):
    r = reduce_mod(x, a, p)
    assert congruent(r, x, p, a)
    assert 0 <= r < Fraction(p) ** a
    assert reduce_mod(PadicScalar.from_rational(x, p, 40), a, p) == r


def test_reduce_mod_needs_enough_digits():
    a = PadicScalar.from_rational(Fraction(1, 3), 2, prec=10)
    with pytest.raises(PrecisionError, match="needs"):
        reduce_mod(a, 12, 2)


def test_digits():
    assert digits(Fraction(5, 8), 2, -3, 3) == [1, 0, 1, 0, 0, 0]
    assert digits(Fraction(-1), 3, 0, 4) == [2, 2, 2, 2]
