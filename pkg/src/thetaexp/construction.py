"""Sparse digit insertion: the sets of numbers whose largest-digit ratio tends to alpha.

Insertion positions are ``n_k = floor(exp(k**gamma))``. At every insertion
position ``n`` (with ``k >= N0``) the digit is
``floor(alpha * (sum of the previous digits) / (log n * log log n))``; all
other digits come from a base word with entries in ``[m, M]``.

Transcendental quantities are evaluated with mpmath; every floor that decides
a digit or a position is certified by interval arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from mpmath import iv, mp

from . import _kernels
from .expansion import AdmissibilityError, DigitWord, root_power, scaled_denominators
from .intervals import certified_floor, iv_power
from .qfield import FieldSpec


class ConstructionError(ValueError):
    pass


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x)) if isinstance(x, str) else Fraction(x)


# ---------------------------------------------------------------------------
# the sparse sequence


@lru_cache(maxsize=1 << 16)
def _sparse_index(k: int, gamma: Fraction) -> int:
    # exp(k^gamma) has about k^gamma / ln 2 bits before the point
    mag = int(float(k) ** float(gamma) / math.log(2)) + 2
    return certified_floor(
        lambda: iv.exp(iv_power(k, gamma)), magnitude_bits=mag, what=f"exp({k}^{gamma})"
    )


def sparse_index(k: int, gamma=Fraction(3, 4)) -> int:
    """``floor(exp(k**gamma))``, exactly."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return _sparse_index(int(k), as_fraction(gamma))


@dataclass(frozen=True)
class SparseSpec:
    gamma: Fraction = Fraction(3, 4)

    def __post_init__(self):
        g = as_fraction(self.gamma)
        if not 0 < g < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {g}")
        object.__setattr__(self, "gamma", g)

    @property
    def k_min(self) -> int:
        """First k with n_k >= 3 (log log n_k defined and positive)."""
        k = 1
        while sparse_index(k, self.gamma) < 3:
            k += 1
        return k

    def n(self, k: int) -> int:
        return sparse_index(k, self.gamma)


def loglog_weight(n: int, dps: int = 40):
    """``log n * log log n`` as an mpf."""
    if n < 3:
        raise ValueError(f"log log n undefined or non-positive for n={n}")
    with mp.workdps(dps):
        ln = mp.log(n)
        return +(ln * mp.log(ln))


def _iv_weight(n: int):
    ln = iv.log(iv.mpf(n))
    return ln * iv.log(ln)


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class BasePolicy:
    """Where the non-inserted digits come from.

    ``kind`` is ``"const"`` (args: digit), ``"periodic"`` (args: the period)
    or ``"random"`` (args: seed, lo, hi).
    """

    kind: str = "const"
    args: tuple = (2,)

    @classmethod
    def parse(cls, text: str) -> "BasePolicy":
        kind, _, rest = text.partition(":")
        if kind == "const":
            return cls("const", (int(rest),))
        if kind == "periodic":
            return cls("periodic", tuple(int(t) for t in rest.split(",")))
        if kind == "random":
            seed, lo, hi = (int(t) for t in rest.split(","))
            return cls("random", (seed, lo, hi))
        raise ValueError(f"unknown base policy {text!r}")

    def digits(self, count: int) -> list[int]:
        if self.kind == "const":
            return [self.args[0]] * count
        if self.kind == "periodic":
            per = self.args
            return [per[i % len(per)] for i in range(count)]
        if self.kind == "random":
            seed, lo, hi = self.args
            rng = np.random.default_rng(seed)
            return rng.integers(lo, hi + 1, size=count).tolist()
        raise ValueError(f"unknown base policy {self.kind!r}")

    def __str__(self):
        return f"{self.kind}:{','.join(str(a) for a in self.args)}"


@dataclass(frozen=True)
class ConstructionParams:
    m: int
    M: int
    alpha: Fraction
    sparse: SparseSpec = field(default_factory=SparseSpec)
    N0: int | None = None
    base: BasePolicy = field(default_factory=BasePolicy)
    N0_verified: bool = False

    def __post_init__(self):
        FieldSpec(self.m)
        if self.M <= 2 * self.m + 1:
            raise ValueError(f"need M > 2m+1, got m={self.m}, M={self.M}")
        a = as_fraction(self.alpha)
        if a <= 0:
            raise ValueError("alpha must be > 0")
        object.__setattr__(self, "alpha", a)
        if self.base.kind == "const" and not self.m <= self.base.args[0] <= self.M:
            raise ValueError("constant base digit must lie in [m, M]")
        if self.base.kind == "periodic" and not all(self.m <= d <= self.M for d in self.base.args):
            raise ValueError("periodic base digits must lie in [m, M]")
        if self.base.kind == "random":
            _, lo, hi = self.base.args
            if not self.m <= lo <= hi <= self.M:
                raise ValueError("random base range must lie in [m, M]")

    @property
    def spec(self) -> FieldSpec:
        return FieldSpec(self.m)

    @property
    def start_index(self) -> int:
        """First k actually used; below k_min the formulas are undefined."""
        if self.N0 is None:
            raise ConstructionError("N0 is not set; run find_n0 or pass N0 explicitly")
        return max(self.N0, self.sparse.k_min)

    def with_n0(self, n0: int, verified: bool) -> "ConstructionParams":
        return ConstructionParams(self.m, self.M, self.alpha, self.sparse, n0, self.base, verified)


# ---------------------------------------------------------------------------
# conditions on the sparse sequence


@dataclass(frozen=True)
class ConditionRecord:
    k: int
    n_k: int
    n_next: int
    cond_a: float  # alpha m (n_k - 1) / (log n_k log log n_k)
    cond_b: float  # weight(n_{k+1}) - weight(n_k)
    gap: int  # n_{k+1} - n_k
    gap_limit: float  # n_k / k^(1/8)
    a_ok: bool
    b_ok: bool
    c_ok: bool

    @property
    def ok(self) -> bool:
        return self.a_ok and self.b_ok and self.c_ok


@dataclass(frozen=True)
class ConditionReport:
    params: ConstructionParams
    records: tuple[ConditionRecord, ...]
    n0: int | None
    scan_limit: int
    edge_increment: float
    edge_envelope: float
    note: str = ""


def increment_envelope(k: float, gamma: Fraction) -> float:
    """Leading-order size of weight(n_{k+1}) - weight(n_k): gamma k^(gamma-1) (gamma log k + 1)."""
    g = float(gamma)
    return g * k ** (g - 1) * (g * math.log(k) + 1)


def condition_record(k: int, params: ConstructionParams) -> ConditionRecord:
    gamma = params.sparse.gamma
    n_k = sparse_index(k, gamma)
    n_next = sparse_index(k + 1, gamma)
    bits = n_next.bit_length()
    with mp.workprec(bits + 96):
        w_k = loglog_weight(n_k, mp.dps)
        w_next = loglog_weight(n_next, mp.dps)
        alpha = mp.mpf(params.alpha.numerator) / params.alpha.denominator
        a_val = alpha * params.m * (n_k - 1) / w_k
        b_val = w_next - w_k
        limit = mp.mpf(n_k) / mp.root(k, 8)
        a_ok = bool(a_val > params.M + 1)
        b_ok = bool(b_val < alpha / 2)
        c_ok = bool(n_next - n_k < limit)
        return ConditionRecord(
            k, n_k, n_next, float(a_val), float(b_val), n_next - n_k, float(limit), a_ok, b_ok, c_ok
        )


def find_n0(params: ConstructionParams, scan_limit: int = 1000) -> ConditionReport:
    """Smallest k* such that conditions (A), (B), (C) hold at every scanned k >= k*."""
    k_min = params.sparse.k_min
    if scan_limit < k_min:
        raise ValueError(f"scan limit {scan_limit} is below k_min={k_min}")
    records = tuple(condition_record(k, params) for k in range(k_min, scan_limit + 1))
    n0 = None
    for rec in reversed(records):
        if not rec.ok:
            break
        n0 = rec.k
    edge = records[-1]
    env = increment_envelope(scan_limit, params.sparse.gamma)
    note = (
        f"conditions verified on k in [{n0}, {scan_limit}]; beyond the scan the (B) increment "
        f"behaves like {env:.6g} at k={scan_limit} and decreases"
        if n0 is not None
        else f"no k in [{k_min}, {scan_limit}] satisfies (A)-(C) through the scan edge"
    )
    return ConditionReport(params, records, n0, scan_limit, edge.cond_b, env, note)


# ---------------------------------------------------------------------------
# sequence diagnostics


@dataclass(frozen=True)
class SequenceDiagnostic:
    k: int
    gap: float  # n_{k+1} - n_k
    rel_gap: float  # (n_{k+1} - n_k) / n_k
    log_increment: float  # log n_{k+1} - log n_k
    weight_increment: float  # weight(n_{k+1}) - weight(n_k)
    log_domain: bool
    floor_error: float  # bound on |log n_k - k^gamma| in log-domain mode, else 0


# beyond this many nats n_k is not materialized as an integer
LOG_DOMAIN_THRESHOLD = 4000


def sequence_diagnostics(ks: Iterable[int], spec: SparseSpec = SparseSpec()) -> list[SequenceDiagnostic]:
    out = []
    gamma = spec.gamma
    for k in ks:
        if k < spec.k_min:
            raise ValueError(f"k={k} < k_min={spec.k_min}: log log n_k is undefined")
        log_domain = float(k + 1) ** float(gamma) > LOG_DOMAIN_THRESHOLD
        if log_domain:
            with mp.workdps(60):
                u0 = mp.power(k, mp.mpf(gamma.numerator) / gamma.denominator)
                u1 = mp.power(k + 1, mp.mpf(gamma.numerator) / gamma.denominator)
                dlog = u1 - u0
                dweight = u1 * mp.log(u1) - u0 * mp.log(u0)
                rel = mp.expm1(dlog)
                # n_k = exp(u)(1 - delta), 0 <= delta < exp(-u)
                err = 2 * mp.exp(-u0)
                gap = float(mp.exp(u0) * rel)  # inf once it leaves double range
                out.append(SequenceDiagnostic(k, gap, float(rel), float(dlog), float(dweight), True, float(err)))
        else:
            n0 = sparse_index(k, gamma)
            n1 = sparse_index(k + 1, gamma)
            with mp.workprec(n1.bit_length() + 96):
                dlog = mp.log(n1) - mp.log(n0)
                dweight = loglog_weight(n1, mp.dps) - loglog_weight(n0, mp.dps)
                rel = mp.mpf(n1 - n0) / n0
            out.append(SequenceDiagnostic(k, float(mp.mpf(n1 - n0)), float(rel), float(dlog), float(dweight), False, 0.0))
    return out


# ---------------------------------------------------------------------------
# synthesis


@dataclass(frozen=True)
class Insertion:
    k: int  # first sparse index hitting this position
    position: int
    digit: int
    prefix_sum: int  # A_k: sum of the digits before the position


def insertion_positions(params: ConstructionParams, depth: int) -> list[tuple[int, int]]:
    """Distinct ``(position, k)`` pairs with ``k >= N0`` and ``n_k <= depth``.

    ``k`` is the first index reaching that position (for small gamma the
    floor can repeat before the sequence separates).
    """
    out = []
    k = params.start_index
    last = None
    while True:
        n = sparse_index(k, params.sparse.gamma)
        if n > depth:
            break
        if n != last:
            out.append((n, k))
            last = n
        k += 1
    return out


def next_position_after(params: ConstructionParams, position: int) -> tuple[int, int]:
    """First insertion position strictly greater than ``position`` and its k."""
    k = params.start_index
    while True:
        n = sparse_index(k, params.sparse.gamma)
        if n > position:
            return n, k
        k += 1


def inserted_digit(alpha: Fraction, prefix_sum: int, position: int) -> int:
    """``floor(alpha * prefix_sum / (log n log log n))`` at n = position, certified."""
    if position < 3:
        raise ConstructionError(f"insertion position {position} < 3: log log undefined")
    num = alpha.numerator * prefix_sum
    mag = max(num.bit_length() - alpha.denominator.bit_length(), 0)
    return certified_floor(
        lambda: iv.mpf(num) / (iv.mpf(alpha.denominator) * _iv_weight(position)),
        magnitude_bits=mag,
        what=f"inserted digit at n={position}",
    )


def _fill(params: ConstructionParams, base: Sequence[int], depth: int) -> DigitWord:
    positions = dict(insertion_positions(params, depth))
    digits: list[int] = []
    total = 0
    it = iter(base)
    for pos in range(1, depth + 1):
        if pos in positions:
            d = inserted_digit(params.alpha, total, pos)
            if d < params.m:
                raise ConstructionError(
                    f"inserted digit {d} at n={pos} is below m={params.m} (inadmissible)"
                )
        else:
            try:
                d = next(it)
            except StopIteration:
                raise ConstructionError(
                    f"base word too short: exhausted before position {pos} of {depth}"
                ) from None
        digits.append(d)
        total += d
    return DigitWord(tuple(digits), params.spec, frozenset(positions))


def synthesize(params: ConstructionParams, depth: int) -> DigitWord:
    """Digit word of the given depth in the constructed set."""
    first = sparse_index(params.start_index, params.sparse.gamma)
    if depth < first:
        raise ConstructionError(f"depth {depth} < first insertion position n_N0 = {first}")
    count = depth - len(insertion_positions(params, depth))
    return _fill(params, params.base.digits(count), depth)


def insert_apply(base: Sequence[int] | DigitWord, params: ConstructionParams,
                 depth: int | None = None) -> DigitWord:
    """Insert the sparse digits into a bounded base word.

    With ``depth=None`` the whole base word is consumed, and the output ends
    with its last digit.
    """
    base = list(base.digits if isinstance(base, DigitWord) else base)
    if any(not params.m <= d <= params.M for d in base):
        raise AdmissibilityError(f"base digits must lie in [{params.m}, {params.M}]")
    if depth is None:
        depth = len(base)
        while depth - len(insertion_positions(params, depth)) < len(base):
            depth += 1
        # a trailing insertion position would need a digit the base cannot supply
        while depth - len(insertion_positions(params, depth)) > len(base):
            depth -= 1
    return _fill(params, base, depth)


def seed_delete(w: DigitWord) -> DigitWord:
    """Delete the digits at the inserted positions."""
    keep = tuple(d for i, d in enumerate(w.digits, 1) if i not in w.inserted)
    return DigitWord(keep, w.spec)


def insertion_records(w: DigitWord, params: ConstructionParams) -> list[Insertion]:
    ks = dict(insertion_positions(params, len(w)))
    out = []
    total = 0
    for i, d in enumerate(w.digits, 1):
        if i in w.inserted:
            out.append(Insertion(ks.get(i, 0), i, d, total))
        total += d
    return out


# ---------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class MonotonicityReport:
    at_least_M: tuple[bool, ...]
    nondecreasing: tuple[bool, ...]
    witnesses: tuple[Insertion, ...]
    N0_verified: bool

    @property
    def ok(self) -> bool:
        return all(self.at_least_M) and all(self.nondecreasing)


def check_monotonicity(w: DigitWord, params: ConstructionParams) -> MonotonicityReport:
    recs = insertion_records(w, params)
    at_least = tuple(r.digit >= params.M for r in recs)
    nondec = tuple(b.digit >= a.digit for a, b in zip(recs, recs[1:]))
    return MonotonicityReport(at_least, nondec, tuple(recs), params.N0_verified)


def in_bounded_set(w: DigitWord, M: int) -> bool:
    return all(w.spec.m <= d <= M for d in w.digits)


@dataclass(frozen=True)
class RatioSample:
    n: int
    L: int
    S: int
    R: float
    defined: bool
    error: float = 0.0


def _running(digits: Sequence[int]):
    top = max(digits)
    if top * len(digits) < _kernels.INT64_SAFE:
        sums, maxs = _kernels.running_sum_max(np.asarray(digits, dtype=np.int64))
        return sums, maxs
    sums, maxs = [], []
    s, mx = 0, digits[0]
    for d in digits:
        s += d
        mx = d if d > mx else mx
        sums.append(s)
        maxs.append(mx)
    return sums, maxs


def ratio_value(L: int, S: int, n: int, dps: int = 40):
    with mp.workdps(dps):
        return L * loglog_weight(n, dps) / (S - L)


def ratio_series(w: DigitWord | Sequence[int], checkpoints: Iterable[int]) -> list[RatioSample]:
    """``R_n = L_n log n log log n / (S_n - L_n)`` at each checkpoint."""
    digits = w.digits if isinstance(w, DigitWord) else tuple(w)
    sums, maxs = _running(digits)
    out = []
    for n in checkpoints:
        if not 3 <= n <= len(digits):
            raise ValueError(f"checkpoint {n} outside [3, {len(digits)}]")
        S, L = int(sums[n - 1]), int(maxs[n - 1])
        if S == L:
            out.append(RatioSample(n, L, S, float("nan"), False))
            continue
        r = ratio_value(L, S, n)
        # 40 significant digits, reported as a double
        out.append(RatioSample(n, L, S, float(r), True, abs(float(r)) * 2.0**-52))
    return out


def auto_checkpoints(depth: int, count: int = 40) -> list[int]:
    pts = np.unique(np.geomspace(3, depth, count).round().astype(int))
    return [int(p) for p in pts]


@dataclass(frozen=True)
class EnvelopeBlock:
    k: int
    start: int  # n_k
    stop: int  # next insertion position (exclusive end of the block)
    prefix_sum: int  # A_k
    high: float
    lows: tuple[float, ...]
    samples: tuple[RatioSample, ...]
    inside: tuple[bool, ...]

    @property
    def low(self) -> float:
        return min(self.lows)

    @property
    def width(self) -> float:
        return self.high - self.low

    @property
    def ok(self) -> bool:
        return all(self.inside)


def ratio_envelope(params: ConstructionParams, w: DigitWord, k: int) -> EnvelopeBlock:
    """Finite-n sandwich for R_n on the block [n_k, n_{k+1}) truncated at the word depth.

    lower: (alpha - c_k / A_k) / (1 + B_n / A_k)
    upper: alpha c_{k+1} / c_k + c_{k+1} / A_k
    with c_j = log n_j log log n_j and B_n the digit sum over (n_k, n].
    """
    positions = dict(insertion_positions(params, len(w)))
    by_k = {kk: pos for pos, kk in positions.items()}
    if k not in by_k:
        raise ValueError(f"k={k} is not an insertion index within depth {len(w)}")
    start = by_k[k]
    stop, _ = next_position_after(params, start)
    A = sum(w.digits[: start - 1])
    digits = w.digits
    sums, maxs = _running(digits)
    samples, lows, inside = [], [], []
    with mp.workprec(max(stop.bit_length(), A.bit_length()) + 160):
        alpha = mp.mpf(params.alpha.numerator) / params.alpha.denominator
        c_k = loglog_weight(start, mp.dps)
        c_next = loglog_weight(stop, mp.dps)
        high = alpha * c_next / c_k + c_next / A
        base_low = alpha - c_k / A
        B = 0
        for n in range(start, min(stop, len(digits) + 1)):
            if n > start:
                B += digits[n - 1]
            low = base_low / (1 + mp.mpf(B) / A)
            S, L = int(sums[n - 1]), int(maxs[n - 1])
            r = L * loglog_weight(n, mp.dps) / (S - L)
            lows.append(float(low))
            samples.append(RatioSample(n, L, S, float(r), True))
            inside.append(bool(low <= r <= high))
        return EnvelopeBlock(k, start, stop, A, float(high), tuple(lows), tuple(samples), tuple(inside))


@dataclass(frozen=True)
class HolderBoundsReport:
    digit_growth: tuple[tuple[int, int, int, bool], ...]  # (j, position, digit, digit <= 2^(2j+5))
    t: int
    C: int
    K_y: int  # scaled Q_n(y)
    K_x: int  # scaled Q_{n-t}(f(y))
    product_ok: bool  # Q_n(y) <= Q_{n-t}(x) prod (l+m) theta
    power_bound_ok: bool  # Q_n(y) <= Q_{n-t}(x) theta^t 2^(t^2 + C t)
    witnesses: dict

    @property
    def ok(self) -> bool:
        return all(s[3] for s in self.digit_growth) and self.product_ok and self.power_bound_ok


def holder_witness_bounds(w: DigitWord, params: ConstructionParams) -> HolderBoundsReport:
    """Growth control of inserted digits and the denominator product bound, exactly.

    With Q_n = K_n / sqrt(m)^n the theta powers cancel, so
    ``Q_n(y) <= Q_{n-t}(x) theta^t 2^(t^2+Ct)`` is ``K_n(y) <= K_{n-t}(x) 2^(t^2+Ct)``.
    """
    recs = insertion_records(w, params)
    digit_growth = tuple((r.k, r.position, r.digit, r.digit <= 2 ** (2 * r.k + 5)) for r in recs)
    t = len(recs)
    n0 = params.start_index
    C = 2 * n0 + 5
    x = seed_delete(w)
    m = params.m
    K_y = scaled_denominators(w.digits, m)[-1]
    K_x = scaled_denominators(x.digits, m)[-1]
    prod = 1
    for r in recs:
        prod *= r.digit + m
    product_ok = K_y <= K_x * prod
    power_bound_ok = K_y <= K_x * 2 ** (t * t + C * t)
    spec = w.spec
    n = len(w)
    witnesses = {
        "Q_n(y)": root_power(K_y, n, spec),
        "Q_{n-t}(x)": root_power(K_x, n - t, spec),
        "power_bound_rhs": root_power(K_x * 2 ** (t * t + C * t), n, spec),
    }
    return HolderBoundsReport(digit_growth, t, C, K_y, K_x, product_ok, power_bound_ok, witnesses)
