"""Exact coefficient arithmetic with p-adic valuation bookkeeping.

Coefficients are :class:`fractions.Fraction` (or plain ``int``).  The subring
Z_(p) is the set of rationals whose reduced denominator is prime to ``p``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union

from .errors import NonIntegralCoefficient, NotDivisible, ParseError, PreconditionError

Rational = Union[int, Fraction]


class _Infinity:
    """Valuation of zero.  Compares greater than every integer."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("dcalc.INF")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __add__(self, other):
        return self

    __radd__ = __add__


INF = _Infinity()


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


@dataclass(frozen=True)
class PrimeCtx:
    p: int
    N: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.p, int) or not is_prime(self.p):
            raise PreconditionError(f"p={self.p!r} is not a prime")
        if self.N is not None and self.N < 1:
            raise PreconditionError(f"truncation exponent N={self.N} must be >= 1")

    @property
    def modulus(self) -> int:
        if self.N is None:
            raise PreconditionError("no truncation exponent set")
        return self.p ** self.N


def _int_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation(x: Rational, p: int):
    """v_p(x), or :data:`INF` for zero."""
    if isinstance(p, PrimeCtx):
        p = p.p
    x = Fraction(x)
    if x == 0:
        return INF
    return _int_valuation(x.numerator, p) - _int_valuation(x.denominator, p)


def is_p_integral(x: Rational, p: int) -> bool:
    if isinstance(x, int):
        return True
    return x.denominator % p != 0


def digit_sum(n: int, p: int) -> int:
    s = 0
    while n:
        n, r = divmod(n, p)
        s += r
    return s


@lru_cache(maxsize=None)
def factorial_valuation(n: int, p: int) -> int:
    """Legendre: v_p(n!) = (n - s_p(n)) / (p - 1)."""
    if isinstance(p, PrimeCtx):
        p = p.p
    if n < 0:
        raise PreconditionError("factorial of a negative number")
    return (n - digit_sum(n, p)) // (p - 1)


@lru_cache(maxsize=None)
def factorial(n: int) -> int:
    return math.factorial(n)


def exact_divide_by_p(x: Rational, p: int) -> Rational:
    if isinstance(p, PrimeCtx):
        p = p.p
    v = valuation(x, p)
    if v is INF:
        return 0
    if v < 1:
        raise NotDivisible(f"{x} is not divisible by {p} in Z_({p})")
    return normalize(Fraction(x) / p)


def normalize(x: Rational) -> Rational:
    """Collapse integral fractions to ``int`` (keeps arithmetic on the fast path)."""
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


def reduce_mod_prime_power(x: Rational, p: int, N: int) -> int:
    """Image of a p-integral rational in Z/p^N."""
    q = p ** N
    if isinstance(x, int):
        return x % q
    if x.denominator % p == 0:
        raise NonIntegralCoefficient(f"{x} is not p-integral for p={p}")
    return x.numerator * pow(x.denominator, -1, q) % q


_RAT_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text: str) -> Rational:
    """Parse the literal grammar ``a/b`` or ``a``."""
    m = _RAT_RE.match(text)
    if not m:
        raise ParseError(f"not a rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise ParseError(f"zero denominator in {text!r}")
    return normalize(Fraction(num, den))


def format_rational(x: Rational) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
