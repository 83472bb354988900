"""Dimension estimates for bounded-digit sets and the seed map.

* Jarnik-type plug-in bounds for dim_H X_M.
* A finite-depth Moran bracket: solve sum |I|^s = 1 over all depth-n
  cylinders with digits in [m, M], once with the lower and once with the
  upper cylinder-length bound.
* Empirical Hoelder exponents of the digit-deletion map.
"""
from __future__ import annotations

import itertools
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from mpmath import mp

from . import _kernels
from .construction import ConstructionParams, insert_apply, insertion_positions
from .expansion import DigitWord, value_of
from .qfield import FieldSpec, QuadraticNumber


@dataclass(frozen=True)
class JarnikBounds:
    m: int
    M: int
    lower: float
    upper: float


def jarnik_bounds(m: int, M: int) -> JarnikBounds:
    """1 - 2(m+1)/((M+1) log(m+1))  <=  dim_H X_M  <=  1 - m/((M+2) log(2M(M+1)/m))."""
    FieldSpec(m)
    if M <= 2 * m + 1:
        raise ValueError(f"need M > 2m+1, got m={m}, M={M}")
    with mp.workdps(30):
        lower = 1 - mp.mpf(2 * (m + 1)) / ((M + 1) * mp.log(m + 1))
        upper = 1 - mp.mpf(m) / ((M + 2) * mp.log(mp.mpf(2 * M * (M + 1)) / m))
        return JarnikBounds(m, M, float(lower), float(upper))


# ---------------------------------------------------------------------------
# Moran bracket


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class DimensionBracket:
    s_low: float
    s_high: float
    depth: int
    cylinder_count: int
    length_bound_mode: str  # "bounds" for [lower-bound root, upper-bound root], or "exact"
    s_exact: float | None = None  # root for the exact cylinder lengths
    residuals: tuple = ()  # (f(a), f(b)) around each root, f(s) = sum |I|^s - 1
    backend: str = ""

    @property
    def width(self) -> float:
        return self.s_high - self.s_low


def _enumerate_python(m, lo, hi, levels, kprev0, k0):
    kp, ks = [], []
    for tail in itertools.product(range(lo, hi + 1), repeat=levels):
        a, b = kprev0, k0
        for d in tail:
            a, b = b, d * b + m * a
        kp.append(a)
        ks.append(b)
    return kp, ks


def _log_lengths(m, lo, hi, depth, first, backend):
    levels = depth - 1
    if (hi + m) ** depth < _kernels.INT64_SAFE:
        kprev, k = _kernels.enumerate_denominators(m, lo, hi, levels, 1, first, backend=backend)
        logk = np.log(k.astype(np.float64))
        logk_next = np.log((k + kprev).astype(np.float64))
    else:
        kp, ks = _enumerate_python(m, lo, hi, levels, 1, first)
        logk = np.array([math.log(v) for v in ks])
        logk_next = np.array([math.log(a + b) for a, b in zip(kp, ks)])
    lm = math.log(m)
    n = depth
    return {
        # theta / ((1 + theta^2) Q^2) = m^(n + 1/2) / ((m + 1) K^2)
        "lower": (n + 0.5) * lm - math.log(m + 1) - 2 * logk,
        # theta / Q^2 = m^(n - 1/2) / K^2
        "upper": (n - 0.5) * lm - 2 * logk,
        # m^(n - 1/2) / (K_n (K_n + K_{n-1}))
        "exact": (n - 0.5) * lm - logk - logk_next,
    }


def _bisect(f, tol):
    a, b = 0.0, 1.0
    fa, fb = f(a), f(b)
    if fb >= 0:
        return 1.0, 1.0, (fa, fb)
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm > 0:
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return a, b, (fa, fb)


def moran_bracket(m: int, M: int, depth: int, tol: float = 1e-9, budget: int = 10**8,
                  jobs: int = 1, backend: str | None = None) -> DimensionBracket:
    """Bracket for the depth-n Moran root of X_M.

    Cylinders are enumerated by first digit (the unit of parallel work);
    partial sums are combined in digit order with ``math.fsum`` so the result
    does not depend on ``jobs``.
    """
    FieldSpec(m)
    if M < m or depth < 1:
        raise ValueError("need M >= m and depth >= 1")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    width = M - m + 1
    count = width**depth
    if count > budget:
        raise BudgetExceeded(f"{count} cylinders exceeds the enumeration budget {budget}")
    backend = backend or _kernels.BACKEND
    firsts = list(range(m, M + 1))

    def work(first):
        return _log_lengths(m, m, M, depth, first, backend)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, firsts))
    else:
        parts = [work(d) for d in firsts]

    def residual(mode):
        arrays = [p[mode] for p in parts]
        return lambda s: math.fsum(_kernels.power_sum(a, s) for a in arrays) - 1.0

    lo_a, _, res_lo = _bisect(residual("lower"), tol)
    _, hi_b, res_hi = _bisect(residual("upper"), tol)
    ex_a, ex_b, res_ex = _bisect(residual("exact"), tol)
    return DimensionBracket(
        s_low=lo_a,
        s_high=hi_b,
        depth=depth,
        cylinder_count=count,
        length_bound_mode="bounds",
        s_exact=0.5 * (ex_a + ex_b),
        residuals=(res_lo, res_hi, res_ex),
        backend=backend,
    )


def moran_sum(m: int, M: int, depth: int, s: float, mode: str = "exact", backend=None) -> float:
    """sum over depth-n cylinders of |I|^s for one length model."""
    backend = backend or _kernels.BACKEND
    return math.fsum(
        _kernels.power_sum(_log_lengths(m, m, M, depth, d, backend)[mode], s)
        for d in range(m, M + 1)
    )


# ---------------------------------------------------------------------------
# Hoelder exponent of the seed map


def to_mpf(x: QuadraticNumber):
    """High-precision value of x in the current mp context, free of cancellation."""
    p, q, r, m = x.p, x.q, x.r, x.spec.m
    if p == 0 or q == 0 or (p > 0) == (q > 0):
        return (p + q * mp.sqrt(m)) / r
    # opposite signs: multiply through by the conjugate
    return mp.mpf(p * p - m * q * q) / (r * (p - q * mp.sqrt(m)))


@dataclass(frozen=True)
class HolderEstimate:
    mode: str
    pair_count: int
    skipped: int
    min_exponent: float
    median_exponent: float
    max_exponent: float
    truncation_depth: int
    exponents: tuple[float, ...] = ()


def _pair_exponent(params: ConstructionParams, base1, base2, depth):
    y1 = insert_apply(base1, params, depth)
    y2 = insert_apply(base2, params, depth)
    spec = params.spec
    dy = abs_q(value_of(y1) - value_of(y2))
    fx = abs_q(value_of(DigitWord(tuple(base1), spec)) - value_of(DigitWord(tuple(base2), spec)))
    if not dy or not fx:
        return None
    bits = max(v.bit_length() for v in (dy.p, dy.q, dy.r, fx.p, fx.q, fx.r))
    with mp.workprec(2 * bits + 64):
        return float(mp.log(to_mpf(fx)) / mp.log(to_mpf(dy)))


def abs_q(x: QuadraticNumber) -> QuadraticNumber:
    return -x if x.sign() < 0 else x


def holder_exponent_estimate(params: ConstructionParams, truncation_depth: int,
                             pair_count: int, seed: int = 0, mode: str = "random",
                             early: int = 4) -> HolderEstimate:
    """Empirical exponents log|f(y1) - f(y2)| / log|y1 - y2| over sampled pairs.

    ``mode="random"`` draws both base words independently; ``mode="one-digit"``
    changes exactly one of the first ``early`` base digits.
    """
    positions = insertion_positions(params, truncation_depth)
    if len(positions) < 2:
        raise ValueError("truncation depth must cover at least two insertion positions")
    if pair_count < 2:
        raise ValueError("pair_count must be >= 2")
    if mode not in ("random", "one-digit"):
        raise ValueError(f"unknown mode {mode!r}")
    base_len = truncation_depth - len(positions)
    rng = np.random.default_rng(seed)
    lo, hi = params.m, params.M
    exps = []
    skipped = 0
    for _ in range(pair_count):
        b1 = rng.integers(lo, hi + 1, size=base_len).tolist()
        if mode == "random":
            b2 = rng.integers(lo, hi + 1, size=base_len).tolist()
        else:
            b2 = list(b1)
            i = int(rng.integers(0, min(early, base_len)))
            choices = [d for d in range(lo, hi + 1) if d != b1[i]]
            b2[i] = choices[int(rng.integers(0, len(choices)))]
        if b1 == b2:
            skipped += 1
            continue
        e = _pair_exponent(params, b1, b2, truncation_depth)
        if e is None:
            skipped += 1
            continue
        exps.append(e)
    if not exps:
        raise ValueError("every sampled pair was degenerate")
    return HolderEstimate(
        mode, len(exps), skipped, min(exps), statistics.median(exps), max(exps),
        truncation_depth, tuple(exps),
    )
