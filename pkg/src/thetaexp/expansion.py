"""Theta-expansion dynamics: Gauss map, digits, convergents and cylinders.

With theta = 1/sqrt(m) the convergent denominators satisfy
``Q_n = K_n / sqrt(m)^n`` where the integers ``K_n`` obey
``K_n = l_n K_{n-1} + m K_{n-2}`` (``K_{-1} = 0, K_0 = 1``). Likewise
``P_n = J_n / sqrt(m)^(n-1)`` with ``J_0 = 0, J_1 = 1``. Everything below is
exact; the integer forms are used where they keep comparisons cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .qfield import FieldSpec, QuadraticNumber, floor_exact


class AdmissibilityError(ValueError):
    """A digit below m, or an otherwise malformed digit word."""


class DomainError(ValueError):
    """A point outside (0, theta]."""


class OrbitTerminated(ArithmeticError):
    """The orbit reached 0, whose digit is +infinity by convention."""


@dataclass(frozen=True)
class DigitWord:
    digits: tuple[int, ...]
    spec: FieldSpec
    inserted: frozenset[int] = frozenset()  # 1-based positions
    terminated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        object.__setattr__(self, "inserted", frozenset(self.inserted))
        m = self.spec.m
        for i, d in enumerate(self.digits, 1):
            if d < m:
                raise AdmissibilityError(f"digit {d} at position {i} is below m={m}")
        n = len(self.digits)
        bad = [p for p in self.inserted if not 1 <= p <= n]
        if bad:
            raise AdmissibilityError(f"insertion positions out of range: {sorted(bad)}")

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __getitem__(self, i):
        return self.digits[i]

    def extend(self, d: int) -> "DigitWord":
        return DigitWord(self.digits + (d,), self.spec, self.inserted)

    def omit(self, k: int) -> "DigitWord":
        """Word with the k-th digit (1-based) removed."""
        return DigitWord(self.digits[: k - 1] + self.digits[k:], self.spec)


def word(digits: Sequence[int], m: int | FieldSpec) -> DigitWord:
    spec = m if isinstance(m, FieldSpec) else FieldSpec(m)
    return DigitWord(tuple(digits), spec)


# ---------------------------------------------------------------------------
# scaled convergents


def scaled_denominators(digits: Sequence[int], m: int) -> list[int]:
    """``[K_0, K_1, ..., K_n]`` for the given digits."""
    ks = [1]
    kprev, k = 0, 1
    for d in digits:
        kprev, k = k, d * k + m * kprev
        ks.append(k)
    return ks


def scaled_state(digits: Sequence[int], m: int) -> tuple[int, int, int, int]:
    """``(J_{n-1}, J_n, K_{n-1}, K_n)`` for a nonempty word."""
    jprev, j = 1, 0  # J_{-1} scaled so that J_1 = 1 for every first digit
    kprev, k = 0, 1
    first = True
    for d in digits:
        if first:
            jprev, j = 0, 1
            first = False
        else:
            jprev, j = j, d * j + m * jprev
        kprev, k = k, d * k + m * kprev
    return jprev, j, kprev, k


def root_power(value: int, exponent: int, spec: FieldSpec) -> QuadraticNumber:
    """``value / sqrt(m)^exponent`` as an exact field element (exponent >= 0)."""
    m = spec.m
    if exponent % 2 == 0:
        return QuadraticNumber(value, 0, m ** (exponent // 2), spec)
    return QuadraticNumber(0, value, m ** ((exponent + 1) // 2), spec)


# ---------------------------------------------------------------------------
# the Gauss map


def _check_domain(x: QuadraticNumber):
    if x.sign() <= 0 or x.compare(x.spec.theta) > 0:
        raise DomainError(f"x = {x} is outside (0, theta]")


def gauss_step(x: QuadraticNumber) -> tuple[int, QuadraticNumber]:
    """One application of T(x) = 1/x - theta*floor(1/(theta x)).

    Returns ``(digit, T(x))``. Raises :class:`OrbitTerminated` at x = 0.
    """
    if not x:
        raise OrbitTerminated("T(0) = 0; the digit of 0 is +infinity")
    _check_domain(x)
    spec = x.spec
    inv = x.inverse()
    digit = floor_exact(inv * spec.sqrt_m)  # 1/(theta x) = sqrt(m)/x
    nxt = inv - spec.theta * digit
    return digit, nxt


def digit_stream(x: QuadraticNumber, n: int) -> DigitWord:
    """First ``n`` digits of x; stops early (``terminated=True``) if the orbit hits 0."""
    _check_domain(x)
    digits = []
    terminated = False
    for _ in range(n):
        d, x = gauss_step(x)
        digits.append(d)
        if not x:
            terminated = True
            break
    return DigitWord(tuple(digits), x.spec, terminated=terminated)


def orbit(x: QuadraticNumber, n: int) -> tuple[DigitWord, list[QuadraticNumber]]:
    """Digits together with the orbit points ``x, T x, ..., T^k x``."""
    _check_domain(x)
    points = [x]
    digits = []
    terminated = False
    for _ in range(n):
        d, x = gauss_step(x)
        digits.append(d)
        points.append(x)
        if not x:
            terminated = True
            break
    return DigitWord(tuple(digits), x.spec, terminated=terminated), points


# ---------------------------------------------------------------------------
# cylinders


@dataclass(frozen=True)
class Cylinder:
    word: DigitWord
    Pprev: QuadraticNumber
    P: QuadraticNumber
    Qprev: QuadraticNumber
    Q: QuadraticNumber
    left: QuadraticNumber
    right: QuadraticNumber
    length: QuadraticNumber
    # scaled integer state (J_{n-1}, J_n, K_{n-1}, K_n)
    scaled: tuple[int, int, int, int] = field(repr=False)

    @property
    def value(self) -> QuadraticNumber:
        return self.P / self.Q

    @property
    def midpoint(self) -> QuadraticNumber:
        return (self.left + self.right) / 2

    def contains(self, x: QuadraticNumber) -> bool:
        return self.left <= x <= self.right


def build_cylinder(w: DigitWord) -> Cylinder:
    """Convergent state, endpoints and exact length of I_n(w)."""
    n = len(w)
    if n == 0:
        raise AdmissibilityError("cylinder of the empty word is the whole interval")
    spec = w.spec
    m = spec.m
    jprev, j, kprev, k = scaled_state(w.digits, m)
    Q = root_power(k, n, spec)
    Qprev = root_power(kprev, n - 1, spec)
    P = root_power(j, n - 1, spec)
    Pprev = root_power(jprev, n - 2, spec) if n >= 2 else QuadraticNumber(0, 0, 1, spec)
    sqrt_m = spec.sqrt_m
    a = sqrt_m * QuadraticNumber(j, 0, k, spec)  # P_n / Q_n
    b = sqrt_m * QuadraticNumber(j + jprev, 0, k + kprev, spec)  # (P + theta P')/(Q + theta Q')
    left, right = (a, b) if a < b else (b, a)
    # |I_n| = theta / (Q_n (Q_n + theta Q_{n-1})) = m^(n - 1/2) / (K_n (K_n + K_{n-1}))
    length = root_power(m**n, 1, spec) / (k * (k + kprev))
    return Cylinder(w, Pprev, P, Qprev, Q, left, right, length, (jprev, j, kprev, k))


def value_of(w: DigitWord) -> QuadraticNumber:
    """Exact value P_n/Q_n of the finite expansion [l_1, ..., l_n]."""
    if len(w) == 0:
        raise DomainError("empty word has no value")
    _, j, _, k = scaled_state(w.digits, w.spec.m)
    return w.spec.sqrt_m * QuadraticNumber(j, 0, k, w.spec)


# ---------------------------------------------------------------------------
# metric properties


@dataclass(frozen=True)
class MetricReport:
    word: DigitWord
    q_growth_ok: bool
    length_bounds_ok: bool
    sensitivity_ok: tuple[bool, ...]
    denominator_ratio_ok: bool
    witnesses: dict

    @property
    def all_ok(self) -> bool:
        return (
            self.q_growth_ok
            and self.length_bounds_ok
            and all(self.sensitivity_ok)
            and self.denominator_ratio_ok
        )


def verify_metric(w: DigitWord) -> MetricReport:
    """Check growth, length and sensitivity bounds on one word, exactly.

    Growth is compared after squaring: ``Q_n^2 >= (m+1)^(n-1)``. Sensitivity
    denominators with a digit omitted are rebuilt from scratch on the
    shortened word.
    """
    n = len(w)
    if n == 0:
        raise AdmissibilityError("empty word")
    spec = w.spec
    m = spec.m
    theta = spec.theta
    ks = scaled_denominators(w.digits, m)
    k, kprev = ks[-1], ks[-2]

    q = root_power(k, n, spec)
    q_sq = q * q
    growth_rhs = QuadraticNumber((m + 1) ** (n - 1), 0, 1, spec)
    q_growth_ok = q_sq >= growth_rhs

    length = root_power(m**n, 1, spec) / (k * (k + kprev))
    upper = theta / q_sq
    lower = upper / (1 + theta * theta)
    length_bounds_ok = lower <= length <= upper

    sens_ok = []
    sens_w = []
    for pos, d in enumerate(w.digits, 1):
        reduced = w.digits[: pos - 1] + w.digits[pos:]
        k_omit = scaled_denominators(reduced, m)[-1]
        # Q_n / Q_{n-1}(omit) = theta K_n / K'
        ratio = QuadraticNumber(0, k, m * k_omit, spec)
        hi = QuadraticNumber(0, d + m, m, spec)
        lo = QuadraticNumber(0, d + m, 2 * m, spec)
        sens_ok.append(lo <= ratio <= hi)
        sens_w.append((lo, ratio, hi))

    # Q_{n-1} <= theta Q_n
    qprev = root_power(kprev, n - 1, spec)
    denom_ok = qprev <= theta * q

    witnesses = {
        "Q_n": q,
        "growth": (q_sq, growth_rhs),
        "length": (lower, length, upper),
        "sensitivity": tuple(sens_w),
        "denominator_ratio": (qprev, theta * q),
    }
    return MetricReport(w, q_growth_ok, length_bounds_ok, tuple(sens_ok), denom_ok, witnesses)


@dataclass(frozen=True)
class GapReport:
    gap: QuadraticNumber
    bound: QuadraticNumber
    ok: bool


def adjacent_gap(w: DigitWord, d: int) -> GapReport:
    """Distance between the endpoints of the subcylinders for digits d and d+1.

    The empty word is allowed (state ``Q_0 = 1, Q_{-1} = 0``). The bound is
    ``1 / (theta Q_n^2 (d+1)(d+2))``.
    """
    spec = w.spec
    m = spec.m
    if d < m:
        raise AdmissibilityError(f"digit {d} is below m={m}")
    n = len(w)
    ks = scaled_denominators(w.digits, m)
    k = ks[-1]
    kprev = ks[-2] if n else 0
    # Q d theta + Q_{n-1} = (d K_n + m K_{n-1}) / sqrt(m)^(n+1)
    a = d * k + m * kprev
    b = (d + 1) * k + m * kprev
    gap = root_power(m ** (n + 1), 1, spec) / (a * b)
    q = root_power(k, n, spec)
    bound = 1 / (spec.theta * q * q * ((d + 1) * (d + 2)))
    return GapReport(gap, bound, gap >= bound and gap.sign() > 0)
