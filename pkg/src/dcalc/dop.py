"""The ring D^(m) of level-m differential operators on Z_(p)[x1..xd].

Operators are kept in left normal form sum_K a_K * d^<K>, where the basis
operator acts on monomials by

    d^<K>(x^L) = Q_K! * C(L, K) * x^(L-K).

Moving a coefficient to the left uses the level-m Leibniz rule (weights
``qfac_ratio``) and composing two basis operators uses ``padic_binom``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

from .errors import ArityMismatch, LevelMismatch, RingMismatch
from .groebner import buchberger
from .mpd import padic_binom, qfac, qfac_ratio
from .poly import (
    GF,
    QQ,
    MultiIndex,
    Polynomial,
    Ring,
    Zp,
    divided_derivative,
    indices_up_to,
    mi_add,
    mi_sub,
    reduce_mod,
    sub_indices,
)


def _common_ring(a: Ring, b: Ring) -> Ring:
    # Z_(p) sits inside Q; every other mix is refused.
    if a == b:
        return a
    kinds = {a.kind, b.kind}
    if kinds == {"QQ", "Zp"}:
        return QQ
    raise RingMismatch(f"cannot combine {a} and {b}")


class DiffOp:
    __slots__ = ("p", "m", "d", "ring", "terms")

    def __init__(self, p: int, m: int, d: int, terms: Optional[Dict[MultiIndex, Polynomial]] = None,
                 ring: Optional[Ring] = None):
        self.p, self.m, self.d = p, m, d
        self.ring = ring or Zp(p)
        clean = {}
        for K, a in (terms or {}).items():
            K = tuple(K)
            if len(K) != d:
                raise ArityMismatch(f"operator index {K} does not have length {d}")
            if not isinstance(a, Polynomial):
                a = Polynomial.const(d, a, self.ring)
            if a.nvars != d:
                raise ArityMismatch(f"coefficient has {a.nvars} variables, expected {d}")
            a = a.to_ring(self.ring)
            if a:
                clean[K] = clean[K] + a if K in clean else a
        self.terms = {K: a for K, a in clean.items() if a}

    # constructors -----------------------------------------------------------

    @classmethod
    def basis(cls, p: int, m: int, K: MultiIndex, ring: Optional[Ring] = None) -> "DiffOp":
        K = tuple(K)
        r = ring or Zp(p)
        return cls(p, m, len(K), {K: Polynomial.const(len(K), 1, r)}, r)

    @classmethod
    def scalar(cls, p: int, m: int, a: Polynomial) -> "DiffOp":
        return cls(p, m, a.nvars, {(0,) * a.nvars: a}, a.ring if a.ring.kind != "QQ" else QQ)

    @classmethod
    def identity(cls, p: int, m: int, d: int, ring: Optional[Ring] = None) -> "DiffOp":
        return cls.basis(p, m, (0,) * d, ring)

    def _same(self, other: "DiffOp"):
        if (self.p, self.d) != (other.p, other.d):
            raise ArityMismatch(f"operators over different contexts: p={self.p},d={self.d} vs p={other.p},d={other.d}")
        if self.m != other.m:
            raise LevelMismatch(f"levels {self.m} and {other.m} differ; use change_level first")

    def to_ring(self, ring: Ring) -> "DiffOp":
        return DiffOp(self.p, self.m, self.d, {K: a.to_ring(ring) for K, a in self.terms.items()}, ring)

    # queries -----------------------------------------------------------------

    def order(self) -> int:
        return max((sum(K) for K in self.terms), default=-1)

    def coefficient(self, K: MultiIndex) -> Polynomial:
        return self.terms.get(tuple(K), Polynomial.zero(self.d, self.ring))

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return (self.p, self.m, self.d) == (other.p, other.m, other.d) and self.terms == other.terms

    def __hash__(self):
        return hash((self.p, self.m, self.d, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    # arithmetic ----------------------------------------------------------------

    def __add__(self, other: "DiffOp") -> "DiffOp":
        self._same(other)
        ring = _common_ring(self.ring, other.ring)
        out = {K: a.to_ring(ring) for K, a in self.terms.items()}
        for K, b in other.terms.items():
            b = b.to_ring(ring)
            out[K] = out[K] + b if K in out else b
        return DiffOp(self.p, self.m, self.d, out, ring)

    def __neg__(self):
        return DiffOp(self.p, self.m, self.d, {K: -a for K, a in self.terms.items()}, self.ring)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "DiffOp":
        """Left multiplication by a scalar or a polynomial."""
        if isinstance(c, Polynomial):
            ring = _common_ring(self.ring, c.ring)
            c = c.to_ring(ring)
            return DiffOp(self.p, self.m, self.d, {K: c * a.to_ring(ring) for K, a in self.terms.items()}, ring)
        return DiffOp(self.p, self.m, self.d, {K: a.scale(c) for K, a in self.terms.items()}, self.ring)

    def __mul__(self, other):
        if isinstance(other, DiffOp):
            return compose(self, other)
        return self.scale(other)

    def __call__(self, f: Polynomial) -> Polynomial:
        return apply(self, f)

    def format(self, names=None) -> str:
        if not self.terms:
            return "0"
        parts = []
        for K in sorted(self.terms, key=lambda k: (sum(k), k)):
            idx = ",".join(map(str, K))
            parts.append(f"({self.terms[K].format(names)})*D<{idx}>")
        return " + ".join(parts)

    def to_json(self) -> Dict[str, str]:
        return {",".join(map(str, K)): a.format() for K, a in sorted(self.terms.items())}

    @classmethod
    def from_json(cls, data: Dict[str, str], p: int, m: int, d: int, ring: Optional[Ring] = None) -> "DiffOp":
        ring = ring or Zp(p)
        terms = {}
        for key, text in data.items():
            K = tuple(int(t) for t in str(key).replace("(", "").replace(")", "").split(",") if t.strip())
            terms[K] = Polynomial.parse(text, nvars=d, ring=ring)
        return cls(p, m, d, terms, ring)

    def __repr__(self):
        return f"DiffOp(p={self.p}, m={self.m}: {self.format()})"


def basis_action(K: MultiIndex, f: Polynomial, m: int, p: int) -> Polynomial:
    """d^<K>_(m)(f) = Q_K! * divided_derivative(f, K)."""
    return divided_derivative(f, K).scale(qfac(tuple(K), m, p))


def apply(op: DiffOp, f: Polynomial) -> Polynomial:
    if f.nvars != op.d:
        raise ArityMismatch(f"operator in {op.d} variables applied to polynomial in {f.nvars}")
    ring = _common_ring(op.ring, f.ring)
    f = f.to_ring(ring)
    out = Polynomial.zero(op.d, ring)
    for K, a in op.terms.items():
        out = out + a.to_ring(ring) * basis_action(K, f, op.m, op.p)
    return out


def compose(P: DiffOp, Q: DiffOp) -> DiffOp:
    """Product P*Q in D^(m), returned in left normal form."""
    P._same(Q)
    p, m, d = P.p, P.m, P.d
    ring = _common_ring(P.ring, Q.ring)
    out: Dict[MultiIndex, Polynomial] = {}
    for K, a in P.terms.items():
        a = a.to_ring(ring)
        for L, b in Q.terms.items():
            b = b.to_ring(ring)
            for I in sub_indices(K):
                db = basis_action(I, b, m, p)
                if not db:
                    continue
                J = mi_sub(K, I)
                JL = mi_add(J, L)
                w = qfac_ratio(K, I, m, p) * padic_binom(JL, J, m, p)
                t = (a * db).scale(w)
                out[JL] = out[JL] + t if JL in out else t
    return DiffOp(p, m, d, out, ring)


def change_level(op: DiffOp, m_new: int) -> DiffOp:
    """rho: D^(m) -> D^(m'), d^<K>_(m) -> (Q_K^(m)! / Q_K^(m')!) d^<K>_(m')."""
    if m_new < op.m:
        raise LevelMismatch(f"change_level goes up: requested {m_new} < {op.m}")
    out = {}
    for K, a in op.terms.items():
        num, den = qfac(K, op.m, op.p), qfac(K, m_new, op.p)
        out[K] = a.scale(num // den)
    return DiffOp(op.p, m_new, op.d, out, op.ring)


# ----------------------------------------------------------------------------
# horizontal ideals


@dataclass
class IdealSpec:
    """Ideal (p, g_1, ..., g_k) of Z_(p)[x]; ``p`` is always adjoined."""

    gens: List[Polynomial]
    p: int
    d: Optional[int] = None

    def __post_init__(self):
        if self.d is None:
            self.d = max((g.nvars for g in self.gens), default=1)
        self.gens = [g if g.nvars == self.d else g.extend(self.d) for g in self.gens]

    def reduced_basis(self):
        """Groebner basis of the image of the ideal in F_p[x]."""
        red = [reduce_mod(g, self.p) for g in self.gens]
        return buchberger(red, nvars=self.d, ring=GF(self.p))


def is_horizontal(J: IdealSpec, m: int, p: Optional[int] = None) -> bool:
    """Is the ideal (p, J) stable under D^(m)?

    D^(m) is generated as a ring by A and the d^<K> with |K| <= p^m, so it is
    enough to test those on the generators, and since p lies in the ideal the
    test happens in F_p[x].
    """
    return not horizontality_failures(J, m, p, first_only=True)


def horizontality_failures(J: IdealSpec, m: int, p: Optional[int] = None, first_only: bool = False):
    p = J.p if p is None else p
    gb = J.reduced_basis()
    fails = []
    for g in J.gens:
        for K in indices_up_to(J.d, p ** m):
            if not any(K):
                continue
            h = basis_action(K, g.to_ring(Zp(p)) if g.ring.kind == "QQ" else g, m, p)
            if not gb.contains(reduce_mod(h, p)):
                fails.append((g, K))
                if first_only:
                    return fails
    return fails
