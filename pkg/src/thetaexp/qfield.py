"""Exact arithmetic in the real quadratic field Q(sqrt(m)).

Elements are stored as ``(p + q*sqrt(m)) / r`` with a single positive
denominator and ``gcd(p, q, r) == 1``. Ordering and floor are decided with
integer arithmetic only.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt


@dataclass(frozen=True)
class FieldSpec:
    """The field Q(sqrt(m)) together with theta = 1/sqrt(m)."""

    m: int

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m!r}")
        if isqrt(self.m) ** 2 == self.m:
            raise ValueError(f"m={self.m} is a perfect square")

    @property
    def theta(self) -> "QuadraticNumber":
        # 1/sqrt(m) = sqrt(m)/m
        return QuadraticNumber(0, 1, self.m, self)

    @property
    def sqrt_m(self) -> "QuadraticNumber":
        return QuadraticNumber(0, 1, 1, self)

    def __call__(self, p, q=0, r=1) -> "QuadraticNumber":
        return normalize(p, q, r, self)

    def from_rational(self, value) -> "QuadraticNumber":
        f = Fraction(value)
        return normalize(f.numerator, 0, f.denominator, self)


def normalize(p: int, q: int, r: int, spec: FieldSpec) -> "QuadraticNumber":
    """Canonical form of ``(p + q*sqrt(m)) / r``."""
    if r == 0:
        raise ZeroDivisionError("denominator r must be nonzero")
    if r < 0:
        p, q, r = -p, -q, -r
    g = gcd(p, q, r)
    if g > 1:
        p, q, r = p // g, q // g, r // g
    return QuadraticNumber(p, q, r, spec, _canonical=True)


def _sign(p: int, q: int, m: int) -> int:
    """Sign of p + q*sqrt(m)."""
    if q == 0:
        return (p > 0) - (p < 0)
    if p == 0:
        return (q > 0) - (q < 0)
    if p > 0 and q > 0:
        return 1
    if p < 0 and q < 0:
        return -1
    # opposite signs: compare p^2 against m*q^2; equality impossible for irrational sqrt(m)
    if p * p > m * q * q:
        return 1 if p > 0 else -1
    return 1 if q > 0 else -1


class QuadraticNumber:
    """Immutable element ``(p + q*sqrt(m)) / r`` of Q(sqrt(m))."""

    __slots__ = ("p", "q", "r", "spec")

    def __init__(self, p: int, q: int, r: int, spec: FieldSpec, _canonical: bool = False):
        if not _canonical:
            if r == 0:
                raise ZeroDivisionError("denominator r must be nonzero")
            if r < 0:
                p, q, r = -p, -q, -r
            g = gcd(p, q, r)
            if g > 1:
                p, q, r = p // g, q // g, r // g
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "spec", spec)

    def __setattr__(self, name, value):
        raise AttributeError("QuadraticNumber is immutable")

    def __reduce__(self):
        return (QuadraticNumber, (self.p, self.q, self.r, self.spec, True))

    # -- coercion -----------------------------------------------------
    def _coerce(self, other) -> "QuadraticNumber":
        if isinstance(other, QuadraticNumber):
            if other.spec != self.spec:
                raise ValueError(
                    f"mismatched fields: m={self.spec.m} vs m={other.spec.m}"
                )
            return other
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            return QuadraticNumber(f.numerator, 0, f.denominator, self.spec, True)
        return NotImplemented

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.p, self.q, self.r)

    @property
    def is_rational(self) -> bool:
        return self.q == 0

    def conjugate(self) -> "QuadraticNumber":
        return QuadraticNumber(self.p, -self.q, self.r, self.spec, True)

    def sign(self) -> int:
        return _sign(self.p, self.q, self.spec.m)

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadraticNumber(
            self.p * o.r + o.p * self.r, self.q * o.r + o.q * self.r, self.r * o.r, self.spec
        )

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.p, -self.q, self.r, self.spec, True)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadraticNumber(
            self.p * o.r - o.p * self.r, self.q * o.r - o.q * self.r, self.r * o.r, self.spec
        )

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        m = self.spec.m
        return QuadraticNumber(
            self.p * o.p + m * self.q * o.q,
            self.p * o.q + self.q * o.p,
            self.r * o.r,
            self.spec,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadraticNumber":
        # r / (p + q sqrt m) = r (p - q sqrt m) / (p^2 - m q^2)
        norm = self.p * self.p - self.spec.m * self.q * self.q
        if norm == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt(m))")
        return QuadraticNumber(self.r * self.p, -self.r * self.q, norm, self.spec)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = QuadraticNumber(1, 0, 1, self.spec, True)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- ordering -----------------------------------------------------
    def compare(self, other) -> int:
        o = self._coerce(other)
        if o is NotImplemented:
            raise TypeError(f"cannot compare QuadraticNumber with {type(other).__name__}")
        return _sign(self.p * o.r - o.p * self.r, self.q * o.r - o.q * self.r, self.spec.m)

    def __eq__(self, other):
        if isinstance(other, QuadraticNumber):
            return self.spec == other.spec and self.triple == other.triple
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            return self.q == 0 and self.p == f.numerator and self.r == f.denominator
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.q, self.r, self.spec.m))

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __bool__(self):
        return self.p != 0 or self.q != 0

    def __floor__(self):
        return floor_exact(self)

    def __float__(self):
        return float(to_decimal(self, 20))

    def __repr__(self):
        return f"QuadraticNumber({self.p}, {self.q}, {self.r}, m={self.spec.m})"

    def __str__(self):
        num = str(self.p) if self.q == 0 else f"{self.p} + {self.q}*sqrt({self.spec.m})"
        return num if self.r == 1 else f"({num})/{self.r}"


def arith(a: QuadraticNumber, b: QuadraticNumber, kind: str) -> QuadraticNumber:
    if a.spec != b.spec:
        raise ValueError(f"mismatched fields: m={a.spec.m} vs m={b.spec.m}")
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    raise ValueError(f"unknown operation {kind!r}")


def compare_exact(a: QuadraticNumber, b: QuadraticNumber) -> int:
    """Return -1, 0 or 1 according to the order of the real values."""
    return a.compare(b)


def floor_exact(a: QuadraticNumber) -> int:
    """Greatest integer <= a, decided without floating point."""
    p, q, r, m = a.p, a.q, a.r, a.spec.m
    if q == 0:
        return p // r
    # q*sqrt(m) lies in [s, s+1) (q>0) or (s-1, s] (q<0) with s = +-isqrt(q^2 m)
    s = isqrt(q * q * m)
    if q < 0:
        s = -s
    n = (p + s) // r
    # the bracket is off by at most one in either direction
    while _sign(p - n * r, q, m) < 0:
        n -= 1
    while _sign(p - (n + 1) * r, q, m) >= 0:
        n += 1
    return n


def to_decimal(a: QuadraticNumber, digits: int) -> str:
    """Decimal rendering with ``digits`` places after the point, rounded half-up."""
    if digits < 1:
        raise ValueError("digits must be >= 1")
    scale = 10**digits
    # round(|a| * 10^d) computed as floor(|a| * 10^d + 1/2), all exact
    neg = a.sign() < 0
    mag = -a if neg else a
    scaled = QuadraticNumber(2 * mag.p * scale + mag.r, 2 * mag.q * scale, 2 * mag.r, a.spec)
    n = floor_exact(scaled)
    whole, frac = divmod(n, scale)
    sign = "-" if neg and n != 0 else ""
    return f"{sign}{whole}.{frac:0{digits}d}"
