"""Hot numeric loops, with a numba path and a pure-numpy path.

The numba path is used when numba imports cleanly and the environment
variable ``THETAEXP_NO_NUMBA`` is unset (or ``0``). Both paths produce the
same cylinder ordering (lexicographic in the digit word) so reductions over
them are reproducible.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("THETAEXP_NO_NUMBA", "0").lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by THETAEXP_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return decorator


BACKEND = "numba" if HAVE_NUMBA else "numpy"

# K_n <= (M + m)^n must stay below this for the int64 kernels
INT64_SAFE = 2**62


def _resolve(backend):
    backend = backend or BACKEND
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}; use 'numba' or 'numpy'")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    return backend


# ---------------------------------------------------------------------------
# cylinder enumeration: scaled denominators K_n = l_n K_{n-1} + m K_{n-2}


def _enumerate_np(m, lo, hi, levels, kprev0, k0):
    kprev = np.array([kprev0], dtype=np.int64)
    k = np.array([k0], dtype=np.int64)
    digits = np.arange(lo, hi + 1, dtype=np.int64)
    for _ in range(levels):
        new_k = (k[:, None] * digits[None, :] + m * kprev[:, None]).ravel()
        kprev = np.repeat(k, digits.size)
        k = new_k
    return kprev, k


@njit(cache=True, nogil=True)
def _enumerate_nb(m, lo, hi, levels, kprev0, k0):
    width = hi - lo + 1
    count = width**levels
    out_prev = np.empty(count, dtype=np.int64)
    out_k = np.empty(count, dtype=np.int64)
    if levels == 0:
        out_prev[0] = kprev0
        out_k[0] = k0
        return out_prev, out_k
    # explicit depth-first walk; stack holds the state at each level
    st_prev = np.empty(levels + 1, dtype=np.int64)
    st_k = np.empty(levels + 1, dtype=np.int64)
    digit = np.empty(levels + 1, dtype=np.int64)
    st_prev[0] = kprev0
    st_k[0] = k0
    level = 1
    digit[1] = lo
    idx = 0
    while level > 0:
        d = digit[level]
        if d > hi:
            level -= 1
            if level > 0:
                digit[level] += 1
            continue
        st_prev[level] = st_k[level - 1]
        st_k[level] = d * st_k[level - 1] + m * st_prev[level - 1]
        if level == levels:
            out_prev[idx] = st_prev[level]
            out_k[idx] = st_k[level]
            idx += 1
            digit[level] += 1
        else:
            level += 1
            digit[level] = lo
    return out_prev, out_k


def enumerate_denominators(m, lo, hi, levels, kprev0=0, k0=1, backend=None):
    """Scaled denominators ``(K_{n-1}, K_n)`` of every extension by ``levels`` digits.

    Extensions use digits in ``[lo, hi]`` and start from the state
    ``(kprev0, k0)``; the output is in lexicographic order of the appended word.
    """
    if _resolve(backend) == "numba":
        return _enumerate_nb(m, lo, hi, levels, kprev0, k0)
    return _enumerate_np(m, lo, hi, levels, kprev0, k0)


# ---------------------------------------------------------------------------
# power sums for the Moran equation


def _power_sum_np(loglen, s):
    return float(np.exp(s * loglen).sum())


@njit(cache=True, nogil=True)
def _power_sum_nb(loglen, s):
    # pairwise blocks of 1024 keep the rounding comparable to numpy's sum
    n = loglen.size
    total = 0.0
    block = 1024
    i = 0
    while i < n:
        acc = 0.0
        j = i
        stop = min(i + block, n)
        while j < stop:
            acc += np.exp(s * loglen[j])
            j += 1
        total += acc
        i = stop
    return total


def power_sum(loglen, s, backend=None):
    """``sum(exp(s * loglen))``.

    Defaults to numpy whatever ``BACKEND`` says: its vectorized exp is several
    times faster than the jitted scalar loop (see benchmarks/bench_kernels.py).
    """
    if _resolve(backend or "numpy") == "numba":
        return _power_sum_nb(loglen, float(s))
    return _power_sum_np(loglen, float(s))


# ---------------------------------------------------------------------------
# running digit statistics


def _running_np(digits):
    return np.cumsum(digits), np.maximum.accumulate(digits)


@njit(cache=True, nogil=True)
def _running_nb(digits):
    n = digits.size
    sums = np.empty(n, dtype=np.int64)
    maxs = np.empty(n, dtype=np.int64)
    s = 0
    mx = digits[0]
    for i in range(n):
        d = digits[i]
        s += d
        if d > mx:
            mx = d
        sums[i] = s
        maxs[i] = mx
    return sums, maxs


def running_sum_max(digits, backend=None):
    """Prefix sums and prefix maxima of an int64 digit array."""
    digits = np.ascontiguousarray(digits, dtype=np.int64)
    if _resolve(backend) == "numba":
        return _running_nb(digits)
    return _running_np(digits)
