"""Exact rational scalars: parsing, formatting, integer scaling.

All values and prices in this package are ``fractions.Fraction`` internally;
file formats carry decimal strings (``"12"``, ``"3.25"``) with ``"p/q"`` as a
fallback for rationals that have no finite decimal expansion.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Iterable, Union

RationalLike = Union[Fraction, int, str]


def as_rational(value: RationalLike) -> Fraction:
    """Coerce an int, decimal string, or "p/q" string to an exact Fraction.

    Binary floats are rejected: they rarely mean what the caller wrote.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected int, str, or Fraction, got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    """Render a Fraction as an exact decimal string when one exists.

    Denominators of the form 2^a * 5^b have a finite decimal expansion and are
    printed as plain decimals; anything else falls back to "p/q".
    """
    value = Fraction(value)
    den = value.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = value.numerator * 10**digits // value.denominator
    if digits == 0:
        return str(scaled)
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(digits + 1, "0")
    whole, frac = text[:-digits], text[-digits:]
    frac = frac.rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def common_scale(values: Iterable[Fraction]) -> int:
    """Least common multiple of the denominators (1 for an empty iterable)."""
    scale = 1
    for v in values:
        scale = lcm(scale, v.denominator)
    return scale


def scaled_ints(values: Iterable[Fraction], scale: int) -> list[int]:
    """Multiply every value by ``scale``; each result must be integral."""
    out = []
    for v in values:
        num = v.numerator * scale
        if num % v.denominator:
            raise ValueError(f"{v} does not scale to an integer by {scale}")
        out.append(num // v.denominator)
    return out
