"""Sparse multivariate polynomials with exact coefficients.

A polynomial is a map from exponent tuples to coefficients, tagged with its
coefficient ring.  Supported rings are Q, Z_(p), and Z/p^N (with F_p as the
case N = 1).  Arithmetic between polynomials over different rings raises
:class:`RingMismatch`; conversion is always explicit via :meth:`Polynomial.to_ring`.

Monomials are printed and led in graded reverse lexicographic order.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .arith import (
    Rational,
    format_rational,
    is_p_integral,
    normalize,
    reduce_mod_prime_power,
    valuation,
    INF,
)
from .errors import ArityMismatch, NonIntegralCoefficient, ParseError, PreconditionError, RingMismatch

MultiIndex = Tuple[int, ...]

DEFAULT_DEGREE_BOUND = 64


# ----------------------------------------------------------------------------
# coefficient rings


@dataclass(frozen=True)
class Ring:
    kind: str  # "QQ", "Zp" or "mod"
    p: Optional[int] = None
    N: Optional[int] = None

    def __str__(self):
        if self.kind == "QQ":
            return "QQ"
        if self.kind == "Zp":
            return f"Z_({self.p})"
        if self.N == 1:
            return f"GF({self.p})"
        return f"Z/{self.p}^{self.N}"

    @property
    def is_field(self) -> bool:
        return self.kind == "QQ" or (self.kind == "mod" and self.N == 1)

    @property
    def modulus(self) -> Optional[int]:
        return self.p ** self.N if self.kind == "mod" else None

    def coerce(self, c) -> Rational:
        if self.kind == "QQ":
            if isinstance(c, int):
                return c
            return normalize(Fraction(c))
        if self.kind == "Zp":
            c = c if isinstance(c, int) else normalize(Fraction(c))
            if not is_p_integral(c, self.p):
                raise NonIntegralCoefficient(f"{c} is not in Z_({self.p})")
            return c
        return reduce_mod_prime_power(c if isinstance(c, int) else Fraction(c), self.p, self.N)

    def inverse(self, c) -> Rational:
        if self.kind == "QQ":
            return normalize(Fraction(1) / Fraction(c))
        if self.kind == "mod":
            return pow(c, -1, self.modulus)
        raise PreconditionError(f"{self} is not a field")

    def format(self, c) -> str:
        return format_rational(c)


QQ = Ring("QQ")


def Zp(p: int) -> Ring:
    return Ring("Zp", p)


def ZMod(p: int, N: int = 1) -> Ring:
    return Ring("mod", p, N)


def GF(p: int) -> Ring:
    return Ring("mod", p, 1)


# ----------------------------------------------------------------------------
# multi-index helpers


def grevlex_key(e: MultiIndex):
    return (sum(e), tuple(-a for a in reversed(e)))


def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x - y for x, y in zip(a, b))


def mi_le(a: MultiIndex, b: MultiIndex) -> bool:
    return all(x <= y for x, y in zip(a, b))


def unit_index(d: int, i: int) -> MultiIndex:
    return tuple(1 if j == i else 0 for j in range(d))


def indices_up_to(d: int, n: int) -> List[MultiIndex]:
    """All multi-indices of length ``d`` and total degree <= ``n``, graded."""
    out: List[MultiIndex] = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            for k in range(remaining + 1):
                out.append(prefix + (k,))
            return
        for k in range(remaining + 1):
            rec(prefix + (k,), remaining - k, slots - 1)

    if d == 0:
        return [()]
    rec((), n, d)
    out.sort(key=grevlex_key)
    return out


def sub_indices(K: MultiIndex) -> Iterator[MultiIndex]:
    """All I <= K componentwise."""
    if not K:
        yield ()
        return
    head, rest = K[0], K[1:]
    for tail in sub_indices(rest):
        for i in range(head + 1):
            yield (i,) + tail


@lru_cache(maxsize=None)
def multi_binom(L: MultiIndex, K: MultiIndex) -> int:
    """Product of binomial coefficients C(l_i, k_i); zero unless K <= L."""
    if len(L) != len(K):
        raise ArityMismatch(f"multi-index lengths differ: {L} vs {K}")
    out = 1
    for l, k in zip(L, K):
        if k > l or k < 0:
            return 0
        out *= math.comb(l, k)
    return out


# ----------------------------------------------------------------------------
# polynomials


class Polynomial:
    __slots__ = ("nvars", "terms", "ring", "_hash")

    def __init__(self, nvars: int, terms=None, ring: Ring = QQ):
        self.nvars = nvars
        self.ring = ring
        clean: Dict[MultiIndex, Rational] = {}
        for e, c in (terms or {}).items():
            e = tuple(e)
            if len(e) != nvars:
                raise ArityMismatch(f"exponent {e} has wrong length for {nvars} variables")
            c = ring.coerce(c)
            if c:
                c = clean.get(e, 0) + c
                if ring.kind == "mod":
                    c %= ring.modulus
                if c:
                    clean[e] = c
                else:
                    clean.pop(e, None)
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: Dict[MultiIndex, Rational], ring: Ring) -> "Polynomial":
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj.terms = terms
        obj.ring = ring
        obj._hash = None
        return obj

    # constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int, ring: Ring = QQ) -> "Polynomial":
        return cls._raw(nvars, {}, ring)

    @classmethod
    def const(cls, nvars: int, c, ring: Ring = QQ) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c}, ring)

    @classmethod
    def var(cls, nvars: int, i: int, ring: Ring = QQ) -> "Polynomial":
        if not 0 <= i < nvars:
            raise ArityMismatch(f"variable index {i} out of range for {nvars} variables")
        return cls._raw(nvars, {unit_index(nvars, i): 1}, ring)

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1, ring: Ring = QQ) -> "Polynomial":
        return cls(len(exps), {tuple(exps): c}, ring)

    @classmethod
    def parse(cls, text: str, nvars: Optional[int] = None, ring: Ring = QQ,
              names: Optional[Sequence[str]] = None) -> "Polynomial":
        return parse_polynomial(text, nvars=nvars, ring=ring, names=names)

    # basic queries --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, i: int) -> int:
        return max((e[i] for e in self.terms), default=-1)

    def coefficient(self, e: MultiIndex) -> Rational:
        return self.terms.get(tuple(e), 0)

    def constant_term(self) -> Rational:
        return self.terms.get((0,) * self.nvars, 0)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def sorted_terms(self) -> List[Tuple[MultiIndex, Rational]]:
        return sorted(self.terms.items(), key=lambda t: grevlex_key(t[0]), reverse=True)

    def leading_monomial(self) -> MultiIndex:
        return max(self.terms, key=grevlex_key)

    def leading_coefficient(self) -> Rational:
        return self.terms[self.leading_monomial()]

    def min_valuation(self, p: int):
        """Smallest p-adic valuation among the coefficients (INF for zero)."""
        return min((valuation(c, p) for c in self.terms.values()), default=INF)

    def is_p_integral(self, p: int) -> bool:
        return all(is_p_integral(c, p) for c in self.terms.values())

    # ring plumbing --------------------------------------------------------

    def _check(self, other: "Polynomial"):
        if self.ring != other.ring:
            raise RingMismatch(f"cannot combine polynomials over {self.ring} and {other.ring}")
        if self.nvars != other.nvars:
            raise ArityMismatch(f"{self.nvars} vs {other.nvars} variables")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.const(self.nvars, other, self.ring)
        return NotImplemented

    def to_ring(self, ring: Ring) -> "Polynomial":
        if ring == self.ring:
            return self
        if self.ring.kind == "mod" and ring.kind != "mod":
            raise RingMismatch(f"no canonical map {self.ring} -> {ring}")
        return Polynomial(self.nvars, self.terms, ring)

    def map_coefficients(self, fn) -> "Polynomial":
        return Polynomial(self.nvars, {e: fn(c) for e, c in self.terms.items()}, self.ring)

    # arithmetic -----------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.const(self.nvars, other, self.ring)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, self.ring, frozenset(self.terms.items())))
        return self._hash

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        mod = self.ring.modulus
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if mod is not None:
                s %= mod
            if s:
                out[e] = normalize(s) if mod is None else s
            else:
                out.pop(e, None)
        return Polynomial._raw(self.nvars, out, self.ring)

    __radd__ = __add__

    def __neg__(self):
        mod = self.ring.modulus
        if mod is None:
            return Polynomial._raw(self.nvars, {e: -c for e, c in self.terms.items()}, self.ring)
        return Polynomial._raw(self.nvars, {e: (-c) % mod for e, c in self.terms.items()}, self.ring)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = self.ring.coerce(c)
        if not c:
            return Polynomial.zero(self.nvars, self.ring)
        mod = self.ring.modulus
        if mod is None:
            return Polynomial._raw(self.nvars, {e: normalize(v * c) for e, v in self.terms.items()}, self.ring)
        out = {}
        for e, v in self.terms.items():
            w = v * c % mod
            if w:
                out[e] = w
        return Polynomial._raw(self.nvars, out, self.ring)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check(other)
        mod = self.ring.modulus
        out: Dict[MultiIndex, Rational] = {}
        get = out.get
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = get(e, 0) + c1 * c2
        if mod is None:
            out = {e: normalize(c) for e, c in out.items() if c}
        else:
            out = {e: c % mod for e, c in out.items() if c % mod}
        return Polynomial._raw(self.nvars, out, self.ring)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(self.ring.inverse(self.ring.coerce(other)) if self.ring.kind != "Zp"
                              else Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, n: int):
        if n < 0:
            raise PreconditionError("negative power of a polynomial")
        result = Polynomial.const(self.nvars, 1, self.ring)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def mul_monomial(self, e: MultiIndex, c=1) -> "Polynomial":
        c = self.ring.coerce(c)
        mod = self.ring.modulus
        out = {}
        for f, v in self.terms.items():
            w = v * c
            if mod is not None:
                w %= mod
            if w:
                out[tuple(a + b for a, b in zip(e, f))] = normalize(w) if mod is None else w
        return Polynomial._raw(self.nvars, out, self.ring)

    # structural operations --------------------------------------------------

    def truncate(self, variables: Sequence[int], order: int) -> "Polynomial":
        """Drop monomials whose total degree in ``variables`` exceeds ``order``."""
        return Polynomial._raw(
            self.nvars,
            {e: c for e, c in self.terms.items() if sum(e[i] for i in variables) <= order},
            self.ring,
        )

    def extend(self, nvars: int, positions: Optional[Sequence[int]] = None) -> "Polynomial":
        """Embed into a ring with ``nvars`` variables; variable i goes to ``positions[i]``."""
        if positions is None:
            positions = range(self.nvars)
        positions = list(positions)
        out = {}
        for e, c in self.terms.items():
            f = [0] * nvars
            for i, a in zip(positions, e):
                f[i] += a
            out[tuple(f)] = c
        return Polynomial._raw(nvars, out, self.ring)

    def split(self, variables: Sequence[int]) -> Dict[MultiIndex, "Polynomial"]:
        """Group terms by their exponents in ``variables``.

        Returns a map from the sub-exponent to the coefficient polynomial in the
        remaining variables (which keep their relative order).
        """
        chosen = list(variables)
        rest = [i for i in range(self.nvars) if i not in set(chosen)]
        groups: Dict[MultiIndex, Dict[MultiIndex, Rational]] = {}
        for e, c in self.terms.items():
            key = tuple(e[i] for i in chosen)
            groups.setdefault(key, {})[tuple(e[i] for i in rest)] = c
        return {k: Polynomial._raw(len(rest), v, self.ring) for k, v in groups.items()}

    def evaluate(self, point: Sequence) -> Rational:
        total = 0
        for e, c in self.terms.items():
            t = c
            for x, a in zip(point, e):
                t *= x ** a
            total += t
        if self.ring.kind == "mod":
            return total % self.ring.modulus
        return normalize(Fraction(total))

    # printing ---------------------------------------------------------------

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        names = list(names) if names is not None else default_names(self.nvars)
        if not self.terms:
            return "0"
        pieces = []
        for idx, (e, c) in enumerate(self.sorted_terms()):
            c = Fraction(c)
            mono = "*".join(
                (n if a == 1 else f"{n}^{a}") for n, a in zip(names, e) if a
            )
            neg = c < 0
            mag = -c if neg else c
            if mono:
                body = mono if mag == 1 else f"{format_rational(mag)}*{mono}"
            else:
                body = format_rational(mag)
            if idx == 0:
                pieces.append(("-" if neg else "") + body)
            else:
                pieces.append((" - " if neg else " + ") + body)
        return "".join(pieces)

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"Polynomial({self.format()!r}, nvars={self.nvars}, ring={self.ring})"


def default_names(nvars: int) -> List[str]:
    return [f"x{i + 1}" for i in range(nvars)]


# ----------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")
_ALIASES = {"x": 0, "y": 1, "z": 2}


def _tokenize(text: str):
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at {pos} in {text!r}")
        num, name, op = m.groups()
        if num is not None:
            tokens.append(("num", int(num)))
        elif name is not None:
            tokens.append(("name", name))
        else:
            tokens.append(("op", "^" if op == "**" else op))
        pos = m.end()
    return tokens


def _resolve_name(name: str, names: Optional[Sequence[str]]) -> int:
    if names is not None:
        if name in names:
            return list(names).index(name)
        raise ParseError(f"unknown variable {name!r}")
    m = re.fullmatch(r"x(\d+)", name)
    if m and int(m.group(1)) >= 1:
        return int(m.group(1)) - 1
    if name in _ALIASES:
        return _ALIASES[name]
    raise ParseError(f"unknown variable {name!r}")


def parse_polynomial(text: str, nvars: Optional[int] = None, ring: Ring = QQ,
                     names: Optional[Sequence[str]] = None) -> Polynomial:
    """Parse terms like ``"3/5*x1^2*x2 - 7"``.

    Variables are ``x1..xd``; ``x``, ``y``, ``z`` are accepted as aliases for
    the first three unless explicit ``names`` are given.  Division is allowed by
    numeric constants only.
    """
    if not isinstance(text, str):
        raise ParseError(f"expected a polynomial string, got {type(text).__name__}")
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty polynomial")
    if names is not None and nvars is None:
        nvars = len(names)
    used = [_resolve_name(v, names) for k, v in tokens if k == "name"]
    needed = max(used, default=-1) + 1
    if nvars is None:
        nvars = max(needed, 1)
    elif needed > nvars:
        raise ParseError(f"{text!r} uses {needed} variables but only {nvars} declared")

    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else (None, None)

    def take():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def expr():
        val = term()
        while peek() in (("op", "+"), ("op", "-")):
            _, op = take()
            rhs = term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term():
        val = unary()
        while peek() in (("op", "*"), ("op", "/")):
            _, op = take()
            rhs = unary()
            if op == "*":
                val = val * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise ParseError("division only by nonzero constants")
                val = val * Polynomial.const(nvars, Fraction(1) / Fraction(rhs.constant_term()), QQ)
        return val

    def unary():
        if peek() == ("op", "-"):
            take()
            return -unary()
        if peek() == ("op", "+"):
            take()
            return unary()
        return power()

    def power():
        base = atom()
        if peek() == ("op", "^"):
            take()
            kind, val = take() if pos < len(tokens) else (None, None)
            if kind != "num":
                raise ParseError("exponent must be a non-negative integer")
            return base ** val
        return base

    def atom():
        if pos >= len(tokens):
            raise ParseError(f"unexpected end of {text!r}")
        kind, val = take()
        if kind == "num":
            return Polynomial.const(nvars, val, QQ)
        if kind == "name":
            return Polynomial.var(nvars, _resolve_name(val, names), QQ)
        if val == "(":
            inner = expr()
            if take() != ("op", ")"):
                raise ParseError("unbalanced parenthesis")
            return inner
        raise ParseError(f"unexpected token {val!r}")

    try:
        result = expr()
    except IndexError:
        raise ParseError(f"malformed polynomial {text!r}") from None
    if pos != len(tokens):
        raise ParseError(f"trailing input in {text!r}")
    return result.to_ring(ring)


# ----------------------------------------------------------------------------
# derivatives and ring maps


def divided_derivative(f: Polynomial, K: MultiIndex) -> Polynomial:
    """Hasse derivative: x^L -> C(L, K) x^(L-K), extended linearly."""
    K = tuple(K)
    if len(K) > f.nvars:
        raise ArityMismatch(f"multi-index {K} longer than {f.nvars} variables")
    K = K + (0,) * (f.nvars - len(K))
    mod = f.ring.modulus
    out: Dict[MultiIndex, Rational] = {}
    for e, c in f.terms.items():
        b = multi_binom(e, K)
        if b:
            w = c * b
            if mod is not None:
                w %= mod
            if w:
                key = tuple(a - k for a, k in zip(e, K))
                out[key] = out.get(key, 0) + w
    if mod is not None:
        out = {e: c % mod for e, c in out.items() if c % mod}
    return Polynomial._raw(f.nvars, out, f.ring)


class RingMap:
    """A substitution homomorphism x_i -> images[i]."""

    def __init__(self, images: Sequence[Polynomial]):
        images = list(images)
        if not images:
            raise ArityMismatch("a ring map needs at least one image")
        target = images[0]
        for g in images[1:]:
            target._check(g)
        self.images = images
        self.target_nvars = target.nvars
        self.ring = target.ring

    @property
    def source_nvars(self) -> int:
        return len(self.images)

    def __call__(self, f: Polynomial) -> Polynomial:
        return substitute(f, self)

    def compose(self, other: "RingMap") -> "RingMap":
        """``self`` after ``other``: x_i -> self(other.images[i])."""
        return RingMap([self(g) for g in other.images])

    def __repr__(self):
        return f"RingMap([{', '.join(g.format() for g in self.images)}])"


def substitute(f: Polynomial, phi: RingMap, truncate: Optional[Tuple[Sequence[int], int]] = None) -> Polynomial:
    """Apply ``phi`` to ``f``; optionally truncate in some target variables as we go."""
    if f.nvars != phi.source_nvars:
        raise ArityMismatch(f"polynomial has {f.nvars} variables, map expects {phi.source_nvars}")
    if f.ring != phi.ring:
        f = f.to_ring(phi.ring)
    n = phi.target_nvars
    cache: Dict[Tuple[int, int], Polynomial] = {}

    def trunc(g):
        return g.truncate(*truncate) if truncate else g

    def power(i, a):
        key = (i, a)
        if key not in cache:
            if a == 0:
                cache[key] = Polynomial.const(n, 1, phi.ring)
            elif a == 1:
                cache[key] = trunc(phi.images[i])
            else:
                h = a // 2
                cache[key] = trunc(power(i, h) * power(i, a - h))
        return cache[key]

    total = Polynomial.zero(n, phi.ring)
    for e, c in f.terms.items():
        t = Polynomial.const(n, c, phi.ring)
        for i, a in enumerate(e):
            if a:
                t = trunc(t * power(i, a))
        total = total + t
    return total


def reduce_mod(f: Polynomial, p: int, N: int = 1) -> Polynomial:
    """Coefficientwise reduction into Z/p^N; coefficients must be p-integral."""
    for c in f.terms.values():
        if not is_p_integral(c, p):
            raise NonIntegralCoefficient(f"coefficient {c} of {f} is not {p}-integral")
    return Polynomial(f.nvars, f.terms, ZMod(p, N))


def lift_mod(f: Polynomial) -> Polynomial:
    """Canonical lift of a Z/p^N polynomial to Z_(p) (representatives in [0, p^N))."""
    if f.ring.kind != "mod":
        return f
    return Polynomial._raw(f.nvars, dict(f.terms), Zp(f.ring.p))


def matrix_str(mat, names=None):
    return [[g.format(names) for g in row] for row in mat]
