"""Exact rational helpers shared by the counting modules."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from numbers import Rational

import numpy as np

from .exceptions import ParameterError

_INT64_SAFE = 2**62


def to_fraction(x) -> Fraction:
    """Convert ``x`` to an exact Fraction.

    Strings are parsed (``"3/4"``, ``"-2"``, ``"0.25"``); floats are converted
    exactly from their binary value, so ``0.1`` is *not* 1/10.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise ParameterError(f"boolean is not a coordinate: {x!r}")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"cannot parse rational {x!r}") from exc
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ParameterError(f"non-finite coordinate {x!r}")
        return Fraction(float(x))
    raise ParameterError(f"unsupported coordinate type {type(x).__name__}")


def format_fraction(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def common_denominator(points) -> int:
    den = 1
    for pt in points:
        for c in pt:
            den = lcm(den, c.denominator)
    return den


def scaled_integers(points, scale: int | None = None, *, fits=None) -> tuple[np.ndarray, int]:
    """Multiply every coordinate by a common denominator.

    Returns an integer array and the scale used. Equalities between linear
    combinations are preserved. ``fits(max_abs)`` decides whether ``int64``
    has enough headroom for the caller's arithmetic; otherwise the array has
    ``object`` dtype holding Python ints.
    """
    pts = list(points)
    if scale is None:
        scale = common_denominator(pts)
    rows = [[int(c * scale) for c in pt] for pt in pts]
    if not rows:
        return np.zeros((0, 0), dtype=np.int64), scale
    biggest = max((abs(v) for r in rows for v in r), default=0)
    if fits is None:
        fits = lambda m: m < 2**31  # noqa: E731
    dtype = np.int64 if fits(biggest) else object
    return np.array(rows, dtype=dtype), scale


def fits_int64(bound: int) -> bool:
    return bound < _INT64_SAFE


def cmp_sqrt(a: Fraction, d: Fraction, b: Fraction) -> int:
    """Sign of ``a*sqrt(d) - b`` for rationals with ``d >= 0``, computed exactly."""
    lhs_sign = 0 if a == 0 or d == 0 else (1 if a > 0 else -1)
    b_sign = 0 if b == 0 else (1 if b > 0 else -1)
    if lhs_sign != b_sign:
        return 1 if lhs_sign > b_sign else -1
    if lhs_sign == 0:
        return 0
    # same sign: compare squares, flipping if both negative
    diff = a * a * d - b * b
    s = 0 if diff == 0 else (1 if diff > 0 else -1)
    return s * lhs_sign


def sqrt_fraction(d: Fraction) -> Fraction | None:
    """Exact square root of a non-negative rational, or None if irrational."""
    from math import isqrt

    num, den = d.numerator, d.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None
