"""The invariant measure of the generalized Gauss map and digit statistics.

The density on [0, theta] is theta / ((1 + theta x) log(1 + theta^2)), so
gamma([a, b]) = log((1 + theta b) / (1 + theta a)) / log(1 + theta^2) and the
inverse CDF is x = ((1 + theta^2)^u - 1) / theta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import iv, mp
from mpmath.libmp import mpf_sub

from .construction import loglog_weight
from .expansion import DomainError, digit_stream
from .intervals import _ival_floor, ivprec
from .qfield import FieldSpec, QuadraticNumber


def _as_mpf(x):
    if isinstance(x, QuadraticNumber):
        from .dimension import to_mpf

        return to_mpf(x)
    return mp.mpf(x)


class GaussMeasure:
    def __init__(self, spec: FieldSpec | int):
        self.spec = spec if isinstance(spec, FieldSpec) else FieldSpec(spec)
        m = self.spec.m
        self.theta = 1.0 / math.sqrt(m)
        self.normalizer = math.log1p(1.0 / m)

    def density(self, x):
        return self.theta / ((1.0 + self.theta * np.asarray(x)) * self.normalizer)

    def _check(self, a, b):
        if not isinstance(a, QuadraticNumber):
            a = float(a)
        if not isinstance(b, QuadraticNumber):
            b = float(b)
        th = self.spec.theta
        for v in (a, b):
            if isinstance(v, QuadraticNumber):
                bad = v.sign() < 0 or v > th
            else:
                bad = v < 0 or v > self.theta
            if bad:
                raise DomainError(f"endpoint {v} outside [0, theta]")
        if (a.compare(b) if isinstance(a, QuadraticNumber) else float(a > b) - float(a < b)) > 0:
            raise DomainError(f"need a <= b, got a={a}, b={b}")

    def measure_interval(self, a, b) -> float:
        self._check(a, b)
        with mp.workdps(40):
            th = 1 / mp.sqrt(self.spec.m)
            num = mp.log((1 + th * _as_mpf(b)) / (1 + th * _as_mpf(a)))
            return float(num / mp.log1p(mp.mpf(1) / self.spec.m))

    def digit_law(self, j: int) -> float:
        return digit_law(j, self.spec.m)

    def sample(self, seed: int, count: int) -> np.ndarray:
        return sample_gamma(self.spec.m, seed, count)


def digit_law(j: int, m: int) -> float:
    """gamma(first digit = j) = log((1 + 1/j) / (1 + 1/(j+1))) / log(1 + 1/m)."""
    if j < m:
        raise ValueError(f"digit {j} is below m={m}")
    return (math.log1p(1.0 / j) - math.log1p(1.0 / (j + 1))) / math.log1p(1.0 / m)


def digit_law_tail(J: int, m: int) -> float:
    """gamma(first digit > J), from the telescoping sum."""
    return math.log1p(1.0 / (J + 1)) / math.log1p(1.0 / m)


@dataclass(frozen=True)
class InvarianceReport:
    measure: float  # gamma([a, b])
    branch_sum: float  # sum over digits m..cutoff of gamma(T^-1[a,b] on that branch)
    tail: float  # closed-form value of the remaining branches
    tail_bound: float  # gamma([0, 1/(theta (cutoff+1))]), covers every branch beyond cutoff
    defect: float  # |measure - branch_sum - tail|
    truncated_defect: float  # |measure - branch_sum|


def invariance_report(a: float, b: float, cutoff: int, m: int) -> InvarianceReport:
    """Compare gamma([a,b]) with the measure of its preimage under T."""
    gm = GaussMeasure(m)
    gm._check(a, b)
    if cutoff < m:
        raise ValueError("cutoff must be >= m")
    th = gm.theta
    N = gm.normalizer
    ell = np.arange(m, cutoff + 1, dtype=np.float64)
    # preimage on branch l is [1/(b + theta l), 1/(a + theta l)]; its measure is
    # [log1p(theta/(a + theta l)) - log1p(theta/(b + theta l))] / N
    terms = (np.log1p(th / (a + th * ell)) - np.log1p(th / (b + th * ell))) / N
    branch_sum = math.fsum(terms.tolist())
    t = th * (cutoff + 1)
    tail = math.log1p((b - a) / (a + t)) / N
    target = gm.measure_interval(a, b)
    tail_bound = math.log1p(1.0 / (cutoff + 1)) / N
    return InvarianceReport(
        target, branch_sum, tail, tail_bound,
        abs(target - branch_sum - tail), abs(target - branch_sum),
    )


def invariance_defect(a: float, b: float, cutoff: int, m: int) -> float:
    return invariance_report(a, b, cutoff, m).defect


def sample_gamma(m: int, seed: int, count: int) -> np.ndarray:
    """Deterministic samples from the invariant measure by inverse CDF."""
    if count < 1:
        raise ValueError("count must be >= 1")
    FieldSpec(m)
    u = np.random.default_rng(seed).random(count)
    return inverse_cdf(u, m)


def inverse_cdf(u, m: int):
    th = 1.0 / math.sqrt(m)
    return np.expm1(np.asarray(u, dtype=np.float64) * math.log1p(1.0 / m)) / th


def first_digits(x, m: int) -> np.ndarray:
    return np.floor(math.sqrt(m) / np.asarray(x)).astype(np.int64)


# ---------------------------------------------------------------------------
# orbit statistics


@dataclass(frozen=True)
class OrbitStat:
    k: int
    digit: int
    S: int
    L: int
    R: float  # nan when k < 3 or S == L


@dataclass(frozen=True)
class OrbitStats:
    stats: tuple[OrbitStat, ...]
    terminated: bool
    precision_bits: int  # 0 for exact field arithmetic

    @property
    def digits(self) -> list[int]:
        return [s.digit for s in self.stats]


class PrecisionExhausted(ArithmeticError):
    pass


def _interval_digits(x: float, m: int, n: int, prec: int) -> tuple[list[int], bool]:
    """Digits until n or until one is undecidable; returns (digits, complete)."""
    out = []
    with ivprec(prec):
        y = iv.mpf(x)
        root = iv.sqrt(iv.mpf(m))
        theta = 1 / root
        for _ in range(n):
            if y.a <= 0:
                return out, False
            z = root / y
            lo, hi = _ival_floor(z)
            if lo != hi:
                return out, False
            out.append(lo)
            y = 1 / y - lo * theta
            # work at the precision the enclosure still supports, plus a margin
            lo_raw, hi_raw = y._mpi_
            width = mpf_sub(hi_raw, lo_raw, 53)
            if width[1] and hi_raw[1]:
                # bits of relative accuracy left in the enclosure
                left = (hi_raw[2] + hi_raw[3]) - (width[2] + width[3])
                iv.prec = max(96, min(prec, left + 96))
    return out, True


def interval_orbit_digits(x: float, m: int, n: int, start_prec: int | None = None,
                          max_prec: int = 1 << 22) -> tuple[list[int], int]:
    """First n digits of the real number x (taken exactly), certified.

    Iterates in interval arithmetic; when a digit cannot be decided the run
    restarts from x with more precision, sized from how far the failed run got.
    """
    spec = FieldSpec(m)
    if not 0 < x <= 1.0 / math.sqrt(m):
        raise DomainError(f"x = {x} outside (0, theta]")
    prec = start_prec or 64 + 4 * n
    while prec <= max_prec:
        digits, complete = _interval_digits(x, spec.m, n, prec)
        if complete:
            return digits, prec
        reached = max(len(digits), 1)
        prec = max(2 * prec if reached < 8 else int(1.25 * prec * n / reached) + 64, prec + 64)
    raise PrecisionExhausted(f"digits of {x!r} undecided at {max_prec} bits")


def orbit_stats(x, n: int, m: int | None = None) -> OrbitStats:
    """Running S_k, L_k and R_k along the orbit of x.

    ``x`` may be an exact field element or a float (e.g. a sample from
    :func:`sample_gamma`), in which case ``m`` is required.
    """
    if isinstance(x, QuadraticNumber):
        w = digit_stream(x, n)
        digits, terminated, prec = list(w.digits), w.terminated, 0
    else:
        if m is None:
            raise ValueError("m is required for non-field x")
        digits, prec = interval_orbit_digits(float(x), m, n)
        terminated = False
    stats = []
    S = 0
    L = 0
    for k, d in enumerate(digits, 1):
        S += d
        L = max(L, d)
        if k >= 3 and S != L:
            with mp.workdps(30):
                R = float(L * loglog_weight(k) / (S - L))
        else:
            R = float("nan")
        stats.append(OrbitStat(k, d, S, L, R))
    return OrbitStats(tuple(stats), terminated, prec)
