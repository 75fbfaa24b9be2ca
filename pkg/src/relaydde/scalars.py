"""Scalar helpers shared across the package.

Arithmetic is duck-typed.  Every computation stays exact (Fraction) when
all of its inputs are ints or Fractions, and degrades to floats otherwise.
ints are promoted to Fraction at type boundaries so that division never
silently produces a float.
"""
from __future__ import annotations

import math
from fractions import Fraction

FLOAT_TOL = 1e-12


def exactify(v):
    """Promote ints to Fraction; leave Fraction and float alone."""
    if isinstance(v, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, (Fraction, float)):
        return v
    raise TypeError(f"unsupported scalar type {type(v).__name__}")


def is_exact(*values) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool)
               for v in values)


def sign(v) -> int:
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


def zero_like(v):
    """A zero carrying the arithmetic of v (Fraction(0) or 0.0)."""
    return v - v


def mod_period(t, period):
    """Reduce t into [0, period), exactly for Fraction inputs."""
    return t - math.floor(t / period) * period


def eq_tol(x, y, tol) -> bool:
    if tol == 0:
        return x == y
    return abs(x - y) <= tol


def parse_scalar(text: str, mode: str = "float"):
    """Parse a number from the command line.

    rational mode keeps everything exact; "3/4", "0.75" and "2" are all
    accepted (decimal strings become exact decimal fractions).
    """
    text = text.strip()
    if mode == "rational":
        return Fraction(text)
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def fmt_scalar(v) -> str:
    """Serialize a scalar: rationals as p/q, floats as shortest round-trip."""
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def read_scalar(text: str):
    """Inverse of fmt_scalar: "p/q" and bare integers are exact."""
    text = text.strip()
    if "/" in text:
        return Fraction(text)
    try:
        return Fraction(int(text))
    except ValueError:
        return float(text)
