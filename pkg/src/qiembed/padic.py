"""p-adic scalars: exact rationals viewed in Q_p, and truncated p-adic numbers.

Two kinds of scalars flow through the building code:

* ``Fraction`` values, which embed exactly in Q_p (all constructions of
  the discrete AN-map and of the tree embedding have entries in Z[1/p]);
* ``PadicScalar`` values with a capped number of significant digits for
  genuinely p-adic input.  Arithmetic tracks the digits lost to
  cancellation and refuses to return a value with fewer than ``K_MIN``
  significant digits.

The helpers ``valuation``, ``is_zero``, ``reduce_mod`` and ``digits`` accept both.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

K_DEFAULT = 24
K_MIN = 8


class PrecisionError(ArithmeticError):
    """Raised when a p-adic computation runs out of significant digits."""


def _vp_int(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of zero")
    n = abs(n)
    if p == 2:
        return (n & -n).bit_length() - 1
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class PadicScalar:
    """p^v * unit with unit known modulo p^prec; ``unit == 0`` encodes zero known to p^v."""
    p: int
    v: int
    unit: int
    prec: int = K_DEFAULT

    def __post_init__(self):
        if self.unit and self.unit % self.p == 0:
            raise ValueError("unit digits must be coprime to p")
        if self.unit:
            object.__setattr__(self, "unit", self.unit % self.p ** self.prec)

    # -- construction ---------------------------------------------------------
    @classmethod
    def from_rational(cls, x, p: int, prec: int = K_DEFAULT) -> "PadicScalar":
        x = Fraction(x)
        if x == 0:
            return cls.zero(p, prec)
        v = valuation(x, p)
        u = x / Fraction(p) ** v
        mod = p ** prec
        return cls(p, v, u.numerator * pow(u.denominator, -1, mod) % mod, prec)

    @classmethod
    def zero(cls, p: int, absolute: int) -> "PadicScalar":
        """Zero known modulo p^absolute."""
        return cls(p, absolute, 0, 0)

    @property
    def is_zero(self) -> bool:
        return self.unit == 0

    @property
    def absolute_precision(self) -> int:
        return self.v if self.is_zero else self.v + self.prec

    def _check(self) -> "PadicScalar":
        if not self.is_zero and self.prec < K_MIN:
            raise PrecisionError(
                f"only {self.prec} significant {self.p}-adic digits left; need {K_MIN} "
                f"(raise the working precision by at least {K_MIN - self.prec})")
        return self

    def to_fraction(self) -> Fraction:
        """The rational approximant p^v * unit (unit as an integer in [0, p^prec))."""
        if self.is_zero:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.p) ** self.v

    # -- arithmetic -------------------------------------------------------------
    def _coerce(self, other) -> "PadicScalar":
        if isinstance(other, PadicScalar):
            if other.p != self.p:
                raise ValueError("different primes")
            return other
        return PadicScalar.from_rational(other, self.p, max(self.prec, K_DEFAULT))

    def __neg__(self):
        if self.is_zero:
            return self
        return PadicScalar(self.p, self.v, -self.unit, self.prec)

    def __add__(self, other):
        o = self._coerce(other)
        p = self.p
        ap = min(self.absolute_precision, o.absolute_precision)
        if self.is_zero and o.is_zero:
            return PadicScalar.zero(p, ap)
        vm = min(x.v for x in (self, o) if not x.is_zero)
        if ap <= vm:
            raise PrecisionError("sum is known to no significant digit")
        total = 0
        for x in (self, o):
            if not x.is_zero:
                total += x.unit * p ** (x.v - vm)
        total %= p ** (ap - vm)
        if total == 0:
            return PadicScalar.zero(p, ap)
        k = _vp_int(total, p)
        return PadicScalar(p, vm + k, total // p ** k, ap - vm - k)._check()

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        if self.is_zero or o.is_zero:
            nz = o if self.is_zero else self
            base = self if self.is_zero else o
            shift = 0 if nz.is_zero else nz.v
            return PadicScalar.zero(self.p, base.v + shift)
        prec = min(self.prec, o.prec)
        return PadicScalar(self.p, self.v + o.v, self.unit * o.unit, prec)._check()

    __rmul__ = __mul__

    def inverse(self) -> "PadicScalar":
        if self.is_zero:
            raise ZeroDivisionError("p-adic zero (at working precision) has no inverse")
        mod = self.p ** self.prec
        return PadicScalar(self.p, -self.v, pow(self.unit, -1, mod), self.prec)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __eq__(self, other):
        if not isinstance(other, PadicScalar):
            try:
                other = self._coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        d = self - other if not (self.is_zero and other.is_zero) else self
        return d.is_zero

    def __hash__(self):
        return hash((self.p, self.to_fraction()))

    def __bool__(self):
        return not self.is_zero

    def __repr__(self):
        if self.is_zero:
            return f"PadicScalar(0 + O({self.p}^{self.v}))"
        return f"PadicScalar({self.p}^{self.v} * {self.unit} + O({self.p}^{self.absolute_precision}))"


# -- helpers working on Fraction and PadicScalar alike -----------------------------

def valuation(x, p: int) -> int:
    if isinstance(x, PadicScalar):
        if x.is_zero:
            raise PrecisionError("valuation of a p-adic zero at working precision")
        return x.v
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of zero")
    return _vp_int(x.numerator, p) - _vp_int(x.denominator, p)


def is_zero(x) -> bool:
    return x.is_zero if isinstance(x, PadicScalar) else x == 0


def reduce_mod(x, a: int, p: int) -> Fraction:
    """Canonical representative in Z[1/p] of x modulo p^a Z_p (digits below p^a)."""
    if isinstance(x, PadicScalar):
        if x.absolute_precision < a:
            raise PrecisionError(
                f"entry known only modulo {p}^{x.absolute_precision}; canonical form needs {p}^{a}")
        if x.is_zero or x.v >= a:
            return Fraction(0)
        return Fraction(x.unit % p ** (a - x.v)) * Fraction(p) ** x.v
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    k = max(0, -valuation(x, p))  # x = N / (D p^k) with D coprime to p
    den_p = p ** k
    if a + k <= 0:
        return Fraction(0)
    mod = p ** (a + k)
    scaled = x * den_p  # denominator coprime to p
    r = scaled.numerator * pow(scaled.denominator, -1, mod) % mod
    return Fraction(r, den_p)


def digits(x, p: int, lo: int, hi: int) -> list:
    """p-adic digits of x at positions lo..hi-1 (x must have no digits below lo)."""
    r = reduce_mod(x, hi, p) / Fraction(p) ** lo
    if r.denominator != 1:
        raise ValueError("x has digits below position lo")
    n = r.numerator
    out = []
    for _ in range(hi - lo):
        out.append(n % p)
        n //= p
    return out
