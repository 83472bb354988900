"""Independent reference computations used to derive expected values.

Nothing here imports the package under test.
"""
from __future__ import annotations

from decimal import Decimal, getcontext

import mpmath
import sympy as sp


def sym(p, q, r, m):
    return (sp.Integer(p) + sp.Integer(q) * sp.sqrt(m)) / sp.Integer(r)


def nested_value(digits, m, tail=None):
    """1/(theta l1 + 1/(theta l2 + ... + 1/(theta ln + tail)...)) as an exact Pair."""
    from fractions import Fraction

    theta = Pair(0, Fraction(1, m), m)
    x = tail if tail is not None else Pair(0, 0, m)
    for d in reversed(digits):
        x = Pair(1, 0, m) / (theta * Pair(d, 0, m) + x)
    return x


def cylinder_endpoints(digits, m):
    """The two ends of the cylinder as (a, b) coordinate pairs: tails 0 and theta."""
    from fractions import Fraction

    a = nested_value(digits, m)
    b = nested_value(digits, m, Pair(0, Fraction(1, m), m))
    return a.coords(), b.coords()


def digits_mp(x, m, n, dps=400):
    """Digits floor(1/(theta y)) of an mpmath-representable number x."""
    out = []
    with mpmath.workdps(dps):
        th = 1 / mpmath.sqrt(m)
        y = mpmath.mpf(x) if not callable(x) else x()
        for _ in range(n):
            if y == 0:
                break
            d = int(mpmath.floor(1 / (th * y)))
            out.append(d)
            y = 1 / y - th * d
    return out


def q_scaled(digits, m):
    """K_n from Q_n = l theta Q_{n-1} + Q_{n-2} scaled by sqrt(m)^n, in plain ints."""
    a, b = 0, 1
    for d in digits:
        a, b = b, d * b + m * a
    return b


def jarnik_decimal(m, M, prec=60):
    getcontext().prec = prec
    lm = Decimal(m + 1).ln()
    lower = 1 - Decimal(2 * (m + 1)) / (Decimal(M + 1) * lm)
    upper = 1 - Decimal(m) / (Decimal(M + 2) * (Decimal(2 * M * (M + 1)) / Decimal(m)).ln())
    return lower, upper


def inserted_digit_mp(alpha, prefix_sum, n, dps=60):
    with mpmath.workdps(dps):
        c = mpmath.log(n) * mpmath.log(mpmath.log(n))
        return int(mpmath.floor(mpmath.mpf(alpha) * prefix_sum / c))


def ratio_mp(digits, n, dps=60):
    with mpmath.workdps(dps):
        S = sum(digits[:n])
        L = max(digits[:n])
        return L * mpmath.log(n) * mpmath.log(mpmath.log(n)) / (S - L)


def moran_depth1_sum(m, M, s, dps=40):
    """Sum of exact depth-1 cylinder lengths to the power s: |I_1(j)| = sqrt(m)/(j(j+1))... scaled."""
    with mpmath.workdps(dps):
        th = 1 / mpmath.sqrt(m)
        total = mpmath.mpf(0)
        for j in range(m, M + 1):
            # endpoints 1/(theta j) and 1/(theta (j+1)) under tail in [0, theta]
            length = 1 / (th * j) - 1 / (th * j + th)
            total += length**s
        return total


class Pair:
    """a + b sqrt(m) with Fraction coordinates; a minimal reference field."""

    def __init__(self, a, b, m):
        from fractions import Fraction

        self.a, self.b, self.m = Fraction(a), Fraction(b), m

    @classmethod
    def of(cls, p, q, r, m):
        from fractions import Fraction

        return cls(Fraction(p, r), Fraction(q, r), m)

    def __add__(self, o):
        return Pair(self.a + o.a, self.b + o.b, self.m)

    def __sub__(self, o):
        return Pair(self.a - o.a, self.b - o.b, self.m)

    def __mul__(self, o):
        return Pair(self.a * o.a + self.m * self.b * o.b, self.a * o.b + self.b * o.a, self.m)

    def __truediv__(self, o):
        n = o.a * o.a - self.m * o.b * o.b
        return self * Pair(o.a / n, -o.b / n, self.m)

    def coords(self):
        return self.a, self.b
