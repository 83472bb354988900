"""Certified floors of transcendental expressions via mpmath interval arithmetic."""
from __future__ import annotations

import threading
from contextlib import contextmanager
from fractions import Fraction

from mpmath import iv
from mpmath.libmp import round_floor, to_int

DEFAULT_START_PREC = 64
DEFAULT_MAX_PREC = 1 << 15


class FloorAmbiguityError(ArithmeticError):
    """The interval enclosure still straddles an integer at the precision ceiling."""


# iv precision is a global on the mpmath context
_IV_LOCK = threading.RLock()


@contextmanager
def ivprec(prec: int):
    with _IV_LOCK:
        saved = iv.prec
        iv.prec = prec
        try:
            yield
        finally:
            iv.prec = saved


def _ival_floor(x):
    lo, hi = x._mpi_
    return int(to_int(lo, round_floor)), int(to_int(hi, round_floor))


def certified_floor(build, magnitude_bits=0, start_prec=DEFAULT_START_PREC,
                    max_prec=DEFAULT_MAX_PREC, what="value"):
    """Floor of the real enclosed by ``build()`` (evaluated in ``iv``).

    Precision starts at ``magnitude_bits + start_prec`` and doubles until the
    enclosure has a single floor. Raises :class:`FloorAmbiguityError` rather
    than guessing when ``max_prec`` is exceeded.
    """
    prec = magnitude_bits + start_prec
    while True:
        with ivprec(prec):
            x = build()
            lo, hi = _ival_floor(x)
        if lo == hi:
            return lo
        if prec - magnitude_bits >= max_prec:
            raise FloorAmbiguityError(
                f"cannot decide floor of {what}: enclosure {x} straddles "
                f"{hi} at {prec} bits (value within 2^-{prec - magnitude_bits - 8} "
                f"of an integer)"
            )
        prec *= 2


def iv_rational(f: Fraction):
    return iv.mpf(f.numerator) / iv.mpf(f.denominator)


def iv_power(k: int, gamma: Fraction):
    """k**gamma as an interval, for rational gamma."""
    if gamma.denominator == 1:
        return iv.mpf(k) ** gamma.numerator
    return iv.exp(iv.log(iv.mpf(k)) * iv_rational(gamma))
