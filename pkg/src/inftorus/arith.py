"""Exact rational helpers: gcd/lcm over positive rationals, primes, string codecs."""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]


def as_rational(x: RationalLike) -> Fraction:
    """Coerce an int, Fraction or ``"num/den"`` string to a canonical Fraction.

    Floats are refused: a binary float is never what a caller means by an
    exact frequency coefficient.
    """
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot read {x!r} as an exact rational")


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _positive(xs: Iterable[RationalLike]) -> list[Fraction]:
    vals = [as_rational(x) for x in xs]
    if not vals:
        raise ValueError("need at least one rational")
    for v in vals:
        if v <= 0:
            raise ValueError(f"non-positive entry {v}")
    return vals


def rational_gcd(xs: Iterable[RationalLike]) -> Fraction:
    """Largest g with x/g a positive integer for every x in ``xs``."""
    vals = _positive(xs)
    g = vals[0]
    for v in vals[1:]:
        # gcd(a/b, c/d) = gcd(a*d, c*b) / (b*d)
        a, b = g.numerator, g.denominator
        c, d = v.numerator, v.denominator
        g = Fraction(gcd(a * d, c * b), b * d)
    return g


def rational_lcm(xs: Iterable[RationalLike]) -> Fraction:
    """Smallest m with m/x a positive integer for every x in ``xs``."""
    vals = _positive(xs)
    m = vals[0]
    for v in vals[1:]:
        m = m * v / rational_gcd([m, v])
    return m


_PRIMES: list[int] = [2, 3]


def nth_prime(k: int) -> int:
    """The k-th prime, counting from ``nth_prime(1) == 2``."""
    if k < 1:
        raise ValueError("prime index starts at 1")
    while len(_PRIMES) < k:
        # trial division against the cached primes is plenty at desk scale
        c = _PRIMES[-1] + 2
        while True:
            r = isqrt(c)
            if all(c % p for p in _PRIMES if p <= r):
                break
            c += 2
        _PRIMES.append(c)
    return _PRIMES[k - 1]
