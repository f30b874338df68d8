"""Small helpers for exact rational values used throughout the package.

All metric data is kept as `fractions.Fraction`; these helpers cover the
serialization convention (`p/q`, always with an explicit denominator) and
the scaled-integer view used by the distance kernels.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm


def frac(value) -> Fraction:
    """Coerce ints, strings like '3/2', and Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact lengths: %r" % (value,))
    return Fraction(value)


def frac_str(value: Fraction) -> str:
    value = Fraction(value)
    return "%d/%d" % (value.numerator, value.denominator)


def common_scale(values) -> int:
    """Least common multiple of the denominators, at least 1."""
    denoms = [Fraction(v).denominator for v in values]
    return lcm(*denoms) if denoms else 1
