"""Level-m divided-power combinatorics and truncated envelopes of the diagonal.

An envelope element is a finite sum of coefficient polynomials times m-PD
monomials xi^{K}_(m).  Coefficients live in Z_(p)[x] (possibly with extra
parameter variables appended after the d coordinates).  Every element has a
canonical image in a Q-polynomial ring obtained by

    xi^{K}_(m)  ->  xi^K / Q_K!        (K = p^m Q_K + R_K, 0 <= R_K < p^m)

and the image map is injective, so equality can always be cross-checked on
images.  The pair form (two copies of xi) represents P^n (x)_A P^n'.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Optional, Tuple

from .arith import factorial, is_p_integral, normalize
from .errors import (
    ArityMismatch,
    ExactDivisionFailure,
    LevelMismatch,
    NotDivisibleLevel,
    NotInEnvelope,
    OrderOverflow,
    PreconditionError,
)
from .poly import MultiIndex, Polynomial, QQ, Zp, indices_up_to, mi_le, mi_sub, multi_binom, sub_indices


# ----------------------------------------------------------------------------
# level decomposition and the two binomial weights


@dataclass(frozen=True)
class LevelDecomp:
    K: MultiIndex
    m: int
    Q: MultiIndex
    R: MultiIndex


def level_decompose(K: MultiIndex, m: int, p: int) -> LevelDecomp:
    """K = p^m Q + R with 0 <= R < p^m componentwise."""
    pm = p ** m
    return LevelDecomp(tuple(K), m, tuple(k // pm for k in K), tuple(k % pm for k in K))


@lru_cache(maxsize=None)
def qfac(K: MultiIndex, m: int, p: int) -> int:
    """Q_K! = prod (k_i // p^m)!."""
    pm = p ** m
    out = 1
    for k in K:
        out *= factorial(k // pm)
    return out


@lru_cache(maxsize=None)
def qfac_ratio(K: MultiIndex, I: MultiIndex, m: int, p: int) -> int:
    """Leibniz weight Q_K! / (Q_I! Q_{K-I}!); an integer."""
    if not mi_le(I, K):
        raise PreconditionError(f"{I} is not <= {K}")
    J = mi_sub(K, I)
    num, den = qfac(K, m, p), qfac(I, m, p) * qfac(J, m, p)
    if num % den:
        raise ExactDivisionFailure(f"qfac_ratio({K}, {I}) not integral")
    return num // den


@lru_cache(maxsize=None)
def padic_binom(K: MultiIndex, I: MultiIndex, m: int, p: int):
    """Composition weight C(K, I) / qfac_ratio(K, I); always p-integral."""
    if not mi_le(I, K):
        raise PreconditionError(f"{I} is not <= {K}")
    return normalize(Fraction(multi_binom(K, I), qfac_ratio(K, I, m, p)))


# ----------------------------------------------------------------------------
# envelopes


@dataclass(frozen=True)
class Envelope:
    """Shape of a truncated envelope.

    ``order`` has one bound per copy of xi (one entry: P^n; two: P^n (x) P^n').
    ``ncoef`` is the number of coefficient variables (defaults to ``d``).
    """

    p: int
    m: int
    d: int
    order: Tuple[int, ...] = (8,)
    ncoef: Optional[int] = None

    def __post_init__(self):
        if self.ncoef is None:
            object.__setattr__(self, "ncoef", self.d)
        if self.ncoef < self.d:
            raise ArityMismatch("coefficient ring must contain the d coordinates")
        if len(self.order) not in (1, 2):
            raise PreconditionError("only one or two copies of the diagonal are supported")

    @property
    def copies(self) -> int:
        return len(self.order)

    @property
    def ring(self):
        return Zp(self.p)

    @property
    def image_nvars(self) -> int:
        return self.ncoef + self.copies * self.d

    def blocks(self, idx: MultiIndex):
        d = self.d
        return [idx[c * d:(c + 1) * d] for c in range(self.copies)]

    def in_range(self, idx: MultiIndex) -> bool:
        return all(sum(b) <= n for b, n in zip(self.blocks(idx), self.order))

    def xi_variables(self):
        return list(range(self.ncoef, self.image_nvars))

    def zero(self) -> "EnvelopeElt":
        return EnvelopeElt(self, {})

    def one(self) -> "EnvelopeElt":
        return self.const(Polynomial.const(self.ncoef, 1, self.ring))

    def const(self, a: Polynomial) -> "EnvelopeElt":
        a = _as_zp(a, self)
        return EnvelopeElt(self, {(0,) * (self.copies * self.d): a} if a else {})

    def basis(self, K: MultiIndex, coeff: Optional[Polynomial] = None) -> "EnvelopeElt":
        K = tuple(K)
        if len(K) != self.copies * self.d:
            raise ArityMismatch(f"index {K} does not fit {self}")
        if not self.in_range(K):
            return self.zero()
        c = Polynomial.const(self.ncoef, 1, self.ring) if coeff is None else _as_zp(coeff, self)
        return EnvelopeElt(self, {K: c} if c else {})

    def from_image(self, g: Polynomial) -> "EnvelopeElt":
        """Inverse of the image map; terms beyond the truncation are dropped."""
        if g.nvars != self.image_nvars:
            raise ArityMismatch(f"image has {g.nvars} variables, expected {self.image_nvars}")
        nc = self.ncoef
        grouped: Dict[MultiIndex, Dict[MultiIndex, object]] = {}
        for e, c in g.terms.items():
            K = e[nc:]
            if not self.in_range(K):
                continue
            w = Fraction(c) * qfac(K, self.m, self.p)
            if not is_p_integral(w, self.p):
                raise NotInEnvelope(f"coefficient {c} of xi^{K} is not in the level-{self.m} envelope")
            grouped.setdefault(K, {})[e[:nc]] = normalize(w)
        return EnvelopeElt(self, {K: Polynomial(nc, t, self.ring) for K, t in grouped.items()})

    def __str__(self):
        return f"P^{self.order}_(m={self.m}) over Z_({self.p})[{self.ncoef} vars], d={self.d}"


def _as_zp(a: Polynomial, env: Envelope) -> Polynomial:
    if a.nvars != env.ncoef:
        raise ArityMismatch(f"coefficient has {a.nvars} variables, expected {env.ncoef}")
    return a.to_ring(env.ring)


class EnvelopeElt:
    __slots__ = ("env", "terms")

    def __init__(self, env: Envelope, terms: Dict[MultiIndex, Polynomial]):
        self.env = env
        self.terms = {K: c for K, c in terms.items() if c}

    # structure ------------------------------------------------------------

    def _check(self, other: "EnvelopeElt"):
        if self.env != other.env:
            raise LevelMismatch(f"envelope mismatch: {self.env} vs {other.env}")

    def __eq__(self, other):
        if not isinstance(other, EnvelopeElt):
            return NotImplemented
        return self.env == other.env and self.terms == other.terms

    def __hash__(self):
        return hash((self.env, frozenset(self.terms.items())))

    def coefficient(self, K: MultiIndex) -> Polynomial:
        return self.terms.get(tuple(K), Polynomial.zero(self.env.ncoef, self.env.ring))

    def counit(self) -> Polynomial:
        """Constant-term extraction (restriction to the diagonal)."""
        return self.coefficient((0,) * (self.env.copies * self.env.d))

    def is_zero(self) -> bool:
        return not self.terms

    # arithmetic -------------------------------------------------------------

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for K, c in other.terms.items():
            out[K] = out[K] + c if K in out else c
        return EnvelopeElt(self.env, out)

    def __neg__(self):
        return EnvelopeElt(self.env, {K: -c for K, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "EnvelopeElt":
        if isinstance(c, Polynomial):
            c = _as_zp(c, self.env)
            return EnvelopeElt(self.env, {K: a * c for K, a in self.terms.items()})
        return EnvelopeElt(self.env, {K: a.scale(c) for K, a in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, EnvelopeElt):
            return env_mul(self, other)
        return self.scale(other)

    __rmul__ = scale

    def __pow__(self, n: int) -> "EnvelopeElt":
        out = self.env.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def max_order(self) -> int:
        return max((sum(K) for K in self.terms), default=0)

    # images -----------------------------------------------------------------

    def image(self) -> Polynomial:
        env = self.env
        nv = env.image_nvars
        out: Dict[MultiIndex, object] = {}
        for K, c in self.terms.items():
            q = qfac(K, env.m, env.p)
            for e, a in c.terms.items():
                key = e + K
                out[key] = out.get(key, 0) + Fraction(a) / q
        return Polynomial(nv, out, QQ)

    def format(self, names=None, xi_name="xi") -> str:
        env = self.env
        if not self.terms:
            return "0"
        parts = []
        for K in sorted(self.terms, key=lambda k: (sum(k), k)):
            blocks = env.blocks(K)
            labels = []
            for c, b in enumerate(blocks):
                if any(b):
                    idx = ",".join(map(str, b))
                    suffix = "" if env.copies == 1 else ("" if c == 0 else "'")
                    labels.append(f"{xi_name}{suffix}^{{{idx}}}")
            basis = "*".join(labels) if labels else "1"
            parts.append(f"({self.terms[K].format(names)})*{basis}")
        return " + ".join(parts)

    def __repr__(self):
        return f"EnvelopeElt({self.format()})"


def env_mul(a: EnvelopeElt, b: EnvelopeElt) -> EnvelopeElt:
    """xi^{K} * xi^{K'} = qfac_ratio(K+K', K) xi^{K+K'}; truncated per copy."""
    a._check(b)
    env = a.env
    out: Dict[MultiIndex, Polynomial] = {}
    for K1, c1 in a.terms.items():
        for K2, c2 in b.terms.items():
            K = tuple(x + y for x, y in zip(K1, K2))
            if not env.in_range(K):
                continue
            w = qfac_ratio(K, K1, env.m, env.p)
            t = (c1 * c2).scale(w)
            out[K] = out[K] + t if K in out else t
    return EnvelopeElt(env, out)


def taylor_expand(f: Polynomial, n: int, m: int, p: int) -> EnvelopeElt:
    """d_1(f) = sum_K Q_K! * divided_derivative(f, K) * xi^{K}_(m), |K| <= n.

    ``f`` may carry extra parameter variables after the first ``d``; only the
    first ``d`` are expanded (``d`` defaults to all variables).
    """
    return taylor_expand_partial(f, f.nvars, n, m, p)


@lru_cache(maxsize=65536)
def _taylor_weights(a: int, pm: int, n: int):
    # (k, C(a, k) * (k // pm)!, a - k) for k <= min(a, n)
    return tuple((k, math.comb(a, k) * factorial(k // pm), a - k) for k in range(min(a, n) + 1))


def taylor_expand_partial(f: Polynomial, d: int, n: int, m: int, p: int) -> EnvelopeElt:
    if d < 1:
        raise ArityMismatch("Taylor expansion needs at least one variable")
    env = Envelope(p, m, d, (n,), f.nvars)
    f = f.to_ring(env.ring)
    ring = env.ring
    nv = f.nvars
    pm = p ** m
    out: Dict[MultiIndex, Dict[MultiIndex, int]] = {}
    exact = all(type(c) is int for c in f.terms.values())
    for e, c in f.terms.items():
        tail = e[d:]
        # extend variable by variable, pruning on the running order; the
        # last variable writes straight into the buckets
        partial = [((), (), c, 0)]
        for a in e[:d - 1]:
            grown = []
            for K, key, w, s in partial:
                for k, wt, rest in _taylor_weights(a, pm, n - s):
                    grown.append((K + (k,), key + (rest,), w * wt, s + k))
            partial = grown
        a = e[d - 1]
        for K0, key0, w0, s in partial:
            for k, wt, rest in _taylor_weights(a, pm, n - s):
                K = K0 + (k,)
                key = key0 + (rest,) + tail
                bucket = out.get(K)
                if bucket is None:
                    out[K] = {key: w0 * wt}
                else:
                    bucket[key] = bucket.get(key, 0) + w0 * wt
    polys = {}
    for K, t in out.items():
        if exact:
            if len(t) > 1:
                t = {k: v for k, v in t.items() if v}
            elif not next(iter(t.values())):
                continue
        else:
            t = {k: normalize(v) for k, v in t.items() if v}
        if t:
            polys[K] = Polynomial._raw(nv, t, ring)
    return EnvelopeElt(env, polys)


def delta_comult(e: EnvelopeElt, n: int, n2: int) -> EnvelopeElt:
    """xi^{K} -> sum_{I+J=K} padic_binom(K, I) xi^{I} (x) xi^{J}."""
    env = e.env
    if env.copies != 1:
        raise PreconditionError("comultiplication takes a single-copy envelope element")
    for K in e.terms:
        if sum(K) > n + n2:
            raise OrderOverflow(f"term of order {sum(K)} exceeds {n} + {n2}")
    pair = Envelope(env.p, env.m, env.d, (n, n2), env.ncoef)
    out: Dict[MultiIndex, Polynomial] = {}
    for K, c in e.terms.items():
        for I in sub_indices(K):
            J = mi_sub(K, I)
            if sum(I) > n or sum(J) > n2:
                continue
            t = c.scale(padic_binom(K, I, env.m, env.p))
            key = I + J
            out[key] = out[key] + t if key in out else t
    return EnvelopeElt(pair, out)


def counit(e: EnvelopeElt) -> Polynomial:
    return e.counit()


def env_change_level(e: EnvelopeElt, m_new: int) -> EnvelopeElt:
    """Canonical map P_(m) -> P_(m_new) for m_new <= m.

    xi^{K}_(m) -> (Q^{(m_new)}_K! / Q^{(m)}_K!) xi^{K}_(m_new); the identity on images.
    """
    env = e.env
    if m_new > env.m:
        raise LevelMismatch(f"cannot lower from level {env.m} to {m_new} > {env.m}")
    target = Envelope(env.p, m_new, env.d, env.order, env.ncoef)
    out = {}
    for K, c in e.terms.items():
        num, den = qfac(K, m_new, env.p), qfac(K, env.m, env.p)
        if num % den:
            raise ExactDivisionFailure(f"level change weight for {K} not integral")
        out[K] = c.scale(num // den)
    return EnvelopeElt(target, out)


def divided_power(u: EnvelopeElt, k: int) -> EnvelopeElt:
    """u^{k}_(m) = u^r gamma_q(u^{p^m}) for u in the augmentation ideal.

    Computed through the image (u^k / q!) and converted back, which also
    certifies that the result lies in the envelope.
    """
    if u.counit():
        raise PreconditionError("divided powers need an element of the augmentation ideal")
    env = u.env
    q = k // env.p ** env.m
    img = u.image() ** k
    img = img.truncate(env.xi_variables(), sum(env.order))
    return env.from_image(img.scale(Fraction(1, factorial(q))))


def phi_poly(r: int, m: int, p: int) -> EnvelopeElt:
    """m-PD polynomial phi with X2^r - X1^r = p * phi(X1, X2), in Z_(p)[X1]<eta>.

    Computed by expanding (X1 + eta)^r - X1^r in the level-m basis and dividing
    every coefficient exactly by p.
    """
    if r <= 0 or r % p ** (m + 1):
        raise NotDivisibleLevel(f"p^(m+1) = {p ** (m + 1)} does not divide r = {r}")
    x = Polynomial.var(1, 0, Zp(p))
    expansion = taylor_expand(x ** r, r, m, p)
    out = {}
    for K, c in expansion.terms.items():
        if not any(K):
            continue
        try:
            out[K] = c.map_coefficients(lambda a: _divide_by_p(a, p))
        except ExactDivisionFailure as exc:
            raise ExactDivisionFailure(f"phi_{r} at level {m}: coefficient of eta^{{{K}}}: {exc}") from None
    return EnvelopeElt(expansion.env, out)


def _divide_by_p(a, p):
    w = Fraction(a) / p
    if not is_p_integral(w, p):
        raise ExactDivisionFailure(f"{a} is not divisible by {p}")
    return normalize(w)


def phi_image(r: int, m: int, p: int, t1: Polynomial, t2: Polynomial) -> Polynomial:
    """Q-image of phi_r(t1, t2) for polynomials t1, t2 over Q."""
    phi = phi_poly(r, m, p).image()  # variables (X1, eta)
    from .poly import RingMap, substitute

    return substitute(phi, RingMap([t1.to_ring(QQ), (t2 - t1).to_ring(QQ)]))


def pair_right_shift(e: EnvelopeElt, n: int) -> EnvelopeElt:
    """Embed a single-copy element as 1 (x) e, i.e. with base point X2 = X1 + xi.

    The coefficients a(x) of ``e`` move to the right factor, which means they
    are re-expanded with the Taylor map in the first copy.
    """
    env = e.env
    pair = Envelope(env.p, env.m, env.d, (n, env.order[0]), env.ncoef)
    out = EnvelopeElt(pair, {})
    for K, c in e.terms.items():
        t = taylor_expand_partial(c, env.d, n, env.m, env.p)
        out = out + EnvelopeElt(pair, {L + K: a for L, a in t.terms.items()})
    return out


def pair_left(e: EnvelopeElt, n2: int) -> EnvelopeElt:
    """Embed a single-copy element as e (x) 1."""
    env = e.env
    pair = Envelope(env.p, env.m, env.d, (env.order[0], n2), env.ncoef)
    zero = (0,) * env.d
    return EnvelopeElt(pair, {K + zero: c for K, c in e.terms.items()})


def basis_indices(env: Envelope):
    """All basis indices of a single-copy envelope."""
    return indices_up_to(env.d, env.order[0])
