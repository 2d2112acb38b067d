"""Exact number helpers.

Rational values are carried as plain ``int`` or ``fractions.Fraction``; Python's
numeric tower keeps mixed arithmetic exact and the int fast path matters in the
refinement inner loops.  Infinite bounds are the float infinities, which compare
correctly against rationals and never mix into finite arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]
Bound = Union[int, Fraction, float]  # float only as +-inf

NEG_INF = float("-inf")
POS_INF = float("inf")


def is_finite(value: Bound) -> bool:
    return value != NEG_INF and value != POS_INF


def normalize(value) -> Rational:
    """Collapse integral Fractions to int so hot loops stay on the int fast path."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return value.numerator
        return value
    if isinstance(value, int):
        return value
    raise TypeError(f"not an exact rational: {value!r}")


def parse_rational(text: str) -> Rational:
    """Parse 'p/q', decimal, or scientific notation exactly."""
    return normalize(Fraction(text))


def halve(value: Rational) -> Rational:
    return normalize(Fraction(value) / 2)


def format_exact(value: Bound) -> str:
    """Exact text form: terminating decimal when the denominator is 2^a*5^b, else p/q."""
    if value == POS_INF:
        return "inf"
    if value == NEG_INF:
        return "-inf"
    value = normalize(value)
    if isinstance(value, int):
        return str(value)
    num, den = value.numerator, value.denominator
    twos = fives = 0
    d = den
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{num}/{den}"
    k = max(twos, fives)
    scaled = num * 10**k // den
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(k + 1, "0")
    whole, frac = digits[:-k], digits[-k:]
    return f"{sign}{whole}.{frac}" if k else f"{sign}{whole}"


def format_mps(value: Bound) -> str:
    """Decimal for MPS columns: exact when it terminates reasonably, else 17 digits."""
    if not is_finite(value):
        return "1e+100" if value > 0 else "-1e+100"
    text = format_exact(value)
    if "/" not in text and len(text) <= 24:
        return text
    return repr(float(value))


def parse_bound(text: str) -> Bound:
    if text == "inf":
        return POS_INF
    if text == "-inf":
        return NEG_INF
    return parse_rational(text)
