"""Exact scalar arithmetic helpers.

All coordinate values, metric values and certified bounds in the exact
factor kinds are `fractions.Fraction` instances.  Nothing here ever
rounds; serialization is the "num/den" string form so that documents
round-trip bit-exactly.
"""

from __future__ import annotations

from fractions import Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def pow2(n: int) -> Fraction:
    """2**n as an exact Fraction, for any integer n."""
    if n >= 0:
        return Fraction(1 << n)
    return Fraction(1, 1 << (-n))


def format_scalar(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_scalar(s: str) -> Fraction:
    num, _, den = s.partition("/")
    if not den:
        return Fraction(int(num))
    return Fraction(int(num), int(den))


def bound_exponent(eps: Fraction) -> int:
    """Smallest N >= 0 with 2**(-N) < eps (eps > 0)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = 0
    value = ONE
    while value >= eps:
        value /= 2
        n += 1
    return n
