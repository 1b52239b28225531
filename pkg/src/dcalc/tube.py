"""Tube algebras A[N] as subrings of Q[x1..xd].

A[N] is generated over A = Z_(p)[x] by the fractions f/p, f in N.  Elements are
identified with their image in Q[x]; a witness, when present, is a polynomial
W(x, T_1..T_n) over Z_(p) with W(x, f_1/p, ..., f_n/p) = image.

Membership is decided for two shapes:

* variable-powers: every generator (after dropping multiples of p) is
  unit * x_i^e_i.  c x^L is a member iff v_p(c) + sum floor(l_i/e_i) >= 0.
* principal-regular: a single generator f whose leading coefficient in some
  variable x_j is a unit constant.  Writing g = sum r_k f^k with
  deg_{x_j} r_k < deg_{x_j} f, g is a member iff v_p(r_k) >= -k for all k.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .arith import exact_divide_by_p, factorial, normalize, valuation
from .dop import basis_action
from .errors import (
    ArityMismatch,
    CongruenceFailure,
    InvalidFrobeniusLift,
    InvariantError,
    LevelTooHigh,
    NotDivisible,
    ParseError,
    PreconditionError,
    UnsupportedShape,
)
from .mpd import Envelope, EnvelopeElt
from .poly import QQ, MultiIndex, Polynomial, RingMap, Zp, default_names, parse_polynomial, substitute, unit_index

VARIABLE_POWERS = "variable-powers"
PRINCIPAL_REGULAR = "principal-regular"
GENERAL = "general"


def _divisible_by_p(f: Polynomial, p: int) -> bool:
    return all(valuation(c, p) >= 1 for c in f.terms.values())


def _div_p(f: Polynomial, p: int) -> Polynomial:
    return f.map_coefficients(lambda c: exact_divide_by_p(c, p))


def _is_unit(c, p: int) -> bool:
    return c != 0 and valuation(c, p) == 0


@dataclass(frozen=True)
class TubeCtx:
    """A[N] over Z_(p)[x1..xd].

    ``roots``/``power`` record that N = {r^power : r in roots}; they are set by
    :meth:`power_of` and used by the operator action and the comparison maps.
    """

    p: int
    d: int
    N: Tuple[Polynomial, ...]
    roots: Optional[Tuple[Polynomial, ...]] = None
    power: Optional[int] = None

    def __post_init__(self):
        gens = []
        for f in self.N:
            if f.nvars != self.d:
                raise ArityMismatch(f"generator {f} has {f.nvars} variables, expected {self.d}")
            gens.append(f.to_ring(Zp(self.p)))
        object.__setattr__(self, "N", tuple(gens))

    @classmethod
    def power_of(cls, p: int, roots: Sequence[Polynomial], k: int) -> "TubeCtx":
        roots = tuple(r.to_ring(Zp(p)) for r in roots)
        d = roots[0].nvars
        return cls(p, d, tuple(r ** k for r in roots), roots, k)

    @classmethod
    def parse(cls, p: int, gens: Sequence[str], d: Optional[int] = None) -> "TubeCtx":
        if d is None:
            d = max(parse_polynomial(g, ring=Zp(p)).nvars for g in gens)
        return cls(p, d, tuple(parse_polynomial(g, nvars=d, ring=Zp(p)) for g in gens))

    @property
    def n(self) -> int:
        return len(self.N)

    @property
    def effective(self) -> List[Polynomial]:
        """Generators that are not multiples of p (the others add nothing)."""
        return [f for f in self.N if not _divisible_by_p(f, self.p)]

    @property
    def witness_nvars(self) -> int:
        return self.d + self.n

    def witness_names(self) -> List[str]:
        return default_names(self.d) + [f"T{j + 1}" for j in range(self.n)]

    # shape ---------------------------------------------------------------

    def shape(self) -> str:
        return self._shape()[0]

    def _shape(self):
        p = self.p
        eff = self.effective
        if any(f.is_constant() for f in eff):
            # a unit among the generators makes the tube all of A_Q
            return VARIABLE_POWERS, {"full": True}
        exps: Dict[int, Tuple[int, object]] = {}
        ok = True
        for f in eff:
            if len(f.terms) != 1:
                ok = False
                break
            (e, c), = f.terms.items()
            support = [i for i, a in enumerate(e) if a]
            if len(support) != 1 or not _is_unit(c, p):
                ok = False
                break
            i = support[0]
            if i not in exps or e[i] < exps[i][0]:
                exps[i] = (e[i], c)
        if ok:
            return VARIABLE_POWERS, {"full": False, "exps": exps}
        if len(eff) == 1:
            f = eff[0]
            for j in range(self.d):
                deg = f.degree_in(j)
                if deg <= 0:
                    continue
                lead = {e: c for e, c in f.terms.items() if e[j] == deg}
                if len(lead) == 1:
                    (e, c), = lead.items()
                    if sum(e) == deg and _is_unit(c, p):
                        return PRINCIPAL_REGULAR, {"f": f, "var": j, "deg": deg, "lc": c}
        return GENERAL, {}

    # membership --------------------------------------------------------------

    def member(self, g: Polynomial) -> bool:
        return membership(g, self)

    def __str__(self):
        return f"Z_({self.p})[x1..x{self.d}][{', '.join(f.format() for f in self.N)}]"


def f_adic_expansion(g: Polynomial, f: Polynomial, j: int) -> List[Polynomial]:
    """Digits r_k with g = sum r_k f^k and deg_{x_j} r_k < deg_{x_j} f (over Q)."""
    f = f.to_ring(QQ)
    g = g.to_ring(QQ)
    e = f.degree_in(j)
    lc = next(c for m, c in f.terms.items() if m[j] == e)
    lead_mono = next(m for m, c in f.terms.items() if m[j] == e)
    digits = []
    while g:
        q = Polynomial.zero(g.nvars, QQ)
        r = g
        while r and r.degree_in(j) >= e:
            top = {m: c for m, c in r.terms.items() if m[j] == r.degree_in(j)}
            quot = Polynomial(g.nvars, {tuple(a - b for a, b in zip(m, lead_mono)): Fraction(c) / lc
                                        for m, c in top.items()}, QQ)
            q = q + quot
            r = r - quot * f
        digits.append(r)
        g = q
    return digits


def membership(g: Polynomial, ctx: TubeCtx) -> bool:
    """Decide g in A[N] for decidable shapes."""
    if g.nvars != ctx.d:
        raise ArityMismatch(f"{g.nvars} variables vs tube over {ctx.d}")
    p = ctx.p
    shape, data = ctx._shape()
    if shape == VARIABLE_POWERS:
        if data["full"]:
            return True
        exps = data["exps"]
        for L, c in g.terms.items():
            bonus = sum(L[i] // e for i, (e, _) in exps.items())
            if valuation(c, p) + bonus < 0:
                return False
        return True
    if shape == PRINCIPAL_REGULAR:
        digits = f_adic_expansion(g, data["f"], data["var"])
        return all(r.min_valuation(p) >= -k for k, r in enumerate(digits))
    raise UnsupportedShape(f"membership is not decidable for generators {[f.format() for f in ctx.N]}")


# ----------------------------------------------------------------------------
# elements


class TubeElt:
    __slots__ = ("ctx", "image", "witness")

    def __init__(self, ctx: TubeCtx, image: Polynomial, witness: Optional[Polynomial] = None):
        if image.nvars != ctx.d:
            raise ArityMismatch(f"image has {image.nvars} variables, tube has {ctx.d}")
        self.ctx = ctx
        self.image = image.to_ring(QQ)
        if witness is not None:
            if witness.nvars != ctx.witness_nvars:
                raise ArityMismatch(f"witness needs {ctx.witness_nvars} variables")
            witness = witness.to_ring(Zp(ctx.p))
        self.witness = witness

    @classmethod
    def const(cls, ctx: TubeCtx, a: Polynomial) -> "TubeElt":
        a = a.to_ring(Zp(ctx.p))
        return cls(ctx, a, a.extend(ctx.witness_nvars))

    @classmethod
    def generator(cls, ctx: TubeCtx, j: int) -> "TubeElt":
        w = Polynomial.var(ctx.witness_nvars, ctx.d + j, Zp(ctx.p))
        return from_witness(w, ctx)

    def __eq__(self, other):
        if not isinstance(other, TubeElt):
            return NotImplemented
        return self.ctx.p == other.ctx.p and self.image == other.image

    def __hash__(self):
        return hash(self.image)

    def _combine(self, other, op):
        if isinstance(other, TubeElt):
            if other.ctx != self.ctx:
                raise PreconditionError("tube elements over different contexts")
            w = op(self.witness, other.witness) if self.witness is not None and other.witness is not None else None
            return TubeElt(self.ctx, op(self.image, other.image), w)
        a = other if isinstance(other, Polynomial) else Polynomial.const(self.ctx.d, other, Zp(self.ctx.p))
        return self._combine(TubeElt.const(self.ctx, a), op)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return TubeElt(self.ctx, -self.image, -self.witness if self.witness is not None else None)

    def __pow__(self, n: int):
        out = TubeElt.const(self.ctx, Polynomial.const(self.ctx.d, 1, Zp(self.ctx.p)))
        for _ in range(n):
            out = out * self
        return out

    def is_member(self) -> bool:
        return membership(self.image, self.ctx)

    def check_witness(self) -> bool:
        return self.witness is None or evaluate_witness(self.witness, self.ctx) == self.image

    def to_json(self):
        out = {"image": self.image.format()}
        if self.witness is not None:
            out["witness"] = self.witness.format(self.ctx.witness_names())
        return out

    def __repr__(self):
        w = "" if self.witness is None else f", witness={self.witness.format(self.ctx.witness_names())}"
        return f"TubeElt({self.image.format()}{w})"


def _generator_map(ctx: TubeCtx) -> RingMap:
    d = ctx.d
    imgs = [Polynomial.var(d, i, QQ) for i in range(d)]
    imgs += [f.to_ring(QQ).scale(Fraction(1, ctx.p)) for f in ctx.N]
    return RingMap(imgs)


def evaluate_witness(w: Polynomial, ctx: TubeCtx) -> Polynomial:
    """Image of a witness: T_j -> f_j / p."""
    return substitute(w.to_ring(QQ), _generator_map(ctx))


def from_witness(w, ctx: TubeCtx) -> TubeElt:
    if isinstance(w, str):
        try:
            w = parse_polynomial(w, nvars=ctx.witness_nvars, ring=Zp(ctx.p), names=ctx.witness_names())
        except ParseError as exc:
            raise ParseError(f"unknown generator symbol in witness: {exc}") from None
    if w.nvars != ctx.witness_nvars:
        raise ArityMismatch(f"witness has {w.nvars} variables, expected {ctx.witness_nvars} (x's then T's)")
    return TubeElt(ctx, evaluate_witness(w, ctx), w)


def find_witness(g: Polynomial, ctx: TubeCtx) -> Polynomial:
    """A witness for a member of a decidable tube (NotDivisible if g is no member)."""
    p = ctx.p
    if not membership(g, ctx):
        raise NotDivisible(f"{g.format()} is not in {ctx}")
    shape, data = ctx._shape()
    nv = ctx.witness_nvars
    R = Zp(p)
    if shape == VARIABLE_POWERS and data["full"]:
        j = next(j for j, f in enumerate(ctx.N) if f.is_constant() and not _divisible_by_p(f, p))
        u = ctx.N[j].constant_term()
        out = Polynomial.zero(nv, R)
        for L, c in g.terms.items():
            k = max(0, -valuation(c, p))
            # c x^L = c p^k / u^k * x^L * T^k
            coeff = normalize(Fraction(c) * p ** k / Fraction(u) ** k)
            out = out + Polynomial(nv, {L + tuple(k if t == j else 0 for t in range(ctx.n)): coeff}, R)
        return out
    if shape == VARIABLE_POWERS:
        exps = data["exps"]
        slot = {}
        for i, (e, c) in exps.items():
            slot[i] = next(j for j, f in enumerate(ctx.N)
                           if len(f.terms) == 1 and next(iter(f.terms)) == tuple(e if t == i else 0 for t in range(ctx.d))
                           and f.terms[next(iter(f.terms))] == c)
        terms: Dict[MultiIndex, object] = {}
        for L, c in g.terms.items():
            x = list(L)
            T = [0] * ctx.n
            coeff = Fraction(c)
            for i, (e, u) in exps.items():
                q = L[i] // e
                x[i] -= q * e
                T[slot[i]] += q
                coeff = coeff * Fraction(p) ** q / Fraction(u) ** q
            key = tuple(x) + tuple(T)
            terms[key] = terms.get(key, 0) + coeff
        return Polynomial(nv, terms, R)
    if shape == PRINCIPAL_REGULAR:
        f = data["f"]
        j = next(t for t, h in enumerate(ctx.N) if h == f)
        out = Polynomial.zero(nv, R)
        for k, r in enumerate(f_adic_expansion(g, f, data["var"])):
            if r:
                T = Polynomial.var(nv, ctx.d + j, R) ** k
                out = out + r.scale(p ** k).extend(nv).to_ring(R) * T
        return out
    raise UnsupportedShape(f"no witness construction for {ctx}")


def witness_normal_form(w: Polynomial, ctx: TubeCtx) -> Polynomial:
    """Canonical witness for variable-powers tubes: x_i^e_i -> p T / u."""
    if ctx.shape() != VARIABLE_POWERS or ctx._shape()[1]["full"]:
        raise UnsupportedShape("witness normal forms exist only for variable-powers tubes")
    return find_witness(evaluate_witness(w, ctx), ctx)


def tube_element(g: Polynomial, ctx: TubeCtx) -> TubeElt:
    """Wrap a member of A[N] (with a witness when the shape allows it)."""
    return TubeElt(ctx, g, find_witness(g, ctx))


# ----------------------------------------------------------------------------
# structural maps


def _remap_witness(w: Polynomial, src: TubeCtx, images_T: Sequence[Polynomial], tgt: TubeCtx) -> Polynomial:
    nv = tgt.witness_nvars
    R = Zp(tgt.p)
    imgs = [Polynomial.var(nv, i, R) for i in range(src.d)] + [t.to_ring(R) for t in images_T]
    return substitute(w, RingMap(imgs))


def incl_power_map(e: TubeElt, r: int, ctx: TubeCtx) -> TubeElt:
    """A[N^r] -> A[N] induced by the inclusion; T_{f^r} -> f^(r-1) T_f."""
    src = e.ctx
    if src.n != ctx.n or any(g != f ** r for g, f in zip(src.N, ctx.N)):
        raise PreconditionError(f"source generators are not the {r}-th powers of the target generators")
    nv = ctx.witness_nvars
    R = Zp(ctx.p)
    T_imgs = [(f ** (r - 1)).extend(nv).to_ring(R) * Polynomial.var(nv, ctx.d + j, R) for j, f in enumerate(ctx.N)]
    w = _remap_witness(e.witness, src, T_imgs, ctx) if e.witness is not None else None
    out = TubeElt(ctx, e.image, w)
    if w is not None and not out.check_witness():
        raise InvariantError("inclusion map changed the image")
    return out


def modp_iso(e: TubeElt, N2: Sequence[Polynomial]) -> TubeElt:
    """A[N] = A[N'] for N' = N mod p; T_f -> T_f' + (f - f')/p."""
    src = e.ctx
    p = src.p
    if len(N2) != src.n:
        raise PreconditionError("generator lists must correspond one to one")
    tgt = TubeCtx(p, src.d, tuple(N2))
    nv = tgt.witness_nvars
    R = Zp(p)
    T_imgs = []
    for j, (f, f2) in enumerate(zip(src.N, tgt.N)):
        diff = f - f2
        if not _divisible_by_p(diff, p):
            raise CongruenceFailure(f"{f.format()} and {f2.format()} differ mod {p}")
        T_imgs.append(Polynomial.var(nv, src.d + j, R) + _div_p(diff, p).extend(nv))
    w = _remap_witness(e.witness, src, T_imgs, tgt) if e.witness is not None else None
    out = TubeElt(tgt, e.image, w)
    if w is not None and not out.check_witness():
        raise InvariantError("mod-p isomorphism changed the image")
    return out


# ----------------------------------------------------------------------------
# level-m operators on A[N^{p^i}]


def _level_of_power(ctx: TubeCtx) -> int:
    if ctx.roots is None or ctx.power is None:
        raise PreconditionError("operator action needs a tube of the form A[N^{p^i}] (use TubeCtx.power_of)")
    i, k = 0, ctx.power
    while k % ctx.p == 0:
        k //= ctx.p
        i += 1
    if k != 1:
        raise PreconditionError(f"exponent {ctx.power} is not a power of {ctx.p}")
    return i


def dm_act_image(K: MultiIndex, g: Polynomial, m: int, p: int) -> Polynomial:
    """Q-linear extension of d^<K>_(m), with no closure guarantee."""
    return basis_action(tuple(K), g.to_ring(QQ), m, p)


def dm_act(K: MultiIndex, e: TubeElt, m: int, i: Optional[int] = None, verify: bool = True) -> TubeElt:
    """d^<K>_(m) on A[N^{p^i}] for i > m.

    The witness is the coefficient of xi^{K}_(m) in W(x + xi, T + Delta) with
    Delta_j = (f_j(x+xi)^{p^i} - f_j(x)^{p^i}) / p, computed in the level-m
    envelope (from_image certifies integrality).
    """
    ctx = e.ctx
    K = tuple(K)
    p = ctx.p
    level = _level_of_power(ctx)
    if i is not None and i != level:
        raise PreconditionError(f"tube exponent is p^{level}, not p^{i}")
    if level <= m:
        raise LevelTooHigh(f"A[N^(p^{level})] is not stable under D^({m}); need i > m")
    image = dm_act_image(K, e.image, m, p)
    witness = None
    if e.witness is not None:
        witness = _dm_act_witness(K, e.witness, ctx, m)
    out = TubeElt(ctx, image, witness)
    if witness is not None and not out.check_witness():
        raise InvariantError("operator witness does not evaluate to the operator image")
    if verify and ctx.shape() != GENERAL and not out.is_member():
        raise InvariantError(f"d^<{K}> left the tube")
    return out


def _dm_act_witness(K: MultiIndex, w: Polynomial, ctx: TubeCtx, m: int) -> Polynomial:
    p, d, n = ctx.p, ctx.d, ctx.n
    order = sum(K)
    nc = d + n
    nv = nc + d
    xi = list(range(nc, nv))
    shift = [Polynomial.var(nv, i, QQ) + Polynomial.var(nv, nc + i, QQ) for i in range(d)]
    shift_map = RingMap(shift)
    imgs = list(shift)
    for j, f in enumerate(ctx.N):
        fq = f.to_ring(QQ)
        delta = (substitute(fq, shift_map, (xi, order)) - fq.extend(nv)).scale(Fraction(1, p))
        imgs.append(Polynomial.var(nv, d + j, QQ) + delta.truncate(xi, order))
    expanded = substitute(w.to_ring(QQ), RingMap(imgs), (xi, order))
    env = Envelope(p, m, d, (order,), nc)
    return env.from_image(expanded).coefficient(K)


# ----------------------------------------------------------------------------
# envelope <-> tube


def envelope_tube_ctx(env: Envelope, level: int) -> TubeCtx:
    """Tube over (coefficient vars, xi vars) generated by xi_j^{p^level}."""
    nv = env.image_nvars
    roots = [Polynomial.var(nv, i, Zp(env.p)) for i in env.xi_variables()]
    return TubeCtx.power_of(env.p, roots, env.p ** level)


def env_to_tube(e: EnvelopeElt) -> TubeElt:
    """x^{k}_(m) -> x^r (p^q / q!) T^q_{x^{p^m}}."""
    env = e.env
    p, m = env.p, env.m
    ctx = envelope_tube_ctx(env, m)
    nv = ctx.witness_nvars
    pm = p ** m
    terms: Dict[MultiIndex, object] = {}
    for K, a in e.terms.items():
        Q = tuple(k // pm for k in K)
        R = tuple(k % pm for k in K)
        w = Fraction(1)
        for q in Q:
            w *= Fraction(p ** q, factorial(q))
        for ex, c in a.terms.items():
            key = ex + R + Q
            terms[key] = terms.get(key, 0) + c * w
    out = TubeElt(ctx, e.image(), Polynomial(nv, terms, Zp(p)))
    if not out.check_witness():
        raise InvariantError("envelope-to-tube witness disagrees with the envelope image")
    return out


def tube_to_env(e: TubeElt, env: Envelope, route: str = "witness") -> EnvelopeElt:
    """A[xi^{p^{m+1}}] -> P_(m): T_{xi^{p^{m+1}}} -> (p-1)! xi^{[p^{m+1}]}_(m).

    ``env`` fixes the level m and the truncation.  The witness route applies
    the ring map generator by generator; the image route reads the image back
    through the envelope embedding.  Both are computed and must agree.
    """
    p, m = env.p, env.m
    ctx = e.ctx
    expected = envelope_tube_ctx(env, m + 1)
    if ctx.N != expected.N:
        raise UnsupportedShape(f"tube generators must be the p^{m + 1}-th powers of the envelope variables")
    by_image = env.from_image(e.image.truncate(env.xi_variables(), sum(env.order)))
    if route == "image" or e.witness is None:
        return by_image
    nc, nxi = env.ncoef, env.copies * env.d
    top = p ** (m + 1)
    gens = [env.const(Polynomial.var(nc, i, Zp(p))) for i in range(nc)]
    gens += [env.basis(unit_index(nxi, j)) for j in range(nxi)]
    gens += [env.basis(tuple(top if t == j else 0 for t in range(nxi))).scale(factorial(p - 1)) for j in range(nxi)]
    by_witness = _evaluate_in_envelope(e.witness, gens, env)
    if by_witness != by_image:
        raise InvariantError("tube-to-envelope map: witness and image routes disagree")
    return by_witness


def _evaluate_in_envelope(w: Polynomial, gens: Sequence[EnvelopeElt], env: Envelope) -> EnvelopeElt:
    cache: Dict[Tuple[int, int], EnvelopeElt] = {}

    def power(i, a):
        if (i, a) not in cache:
            cache[(i, a)] = env.one() if a == 0 else power(i, a - 1) * gens[i]
        return cache[(i, a)]

    out = env.zero()
    for ex, c in w.terms.items():
        t = env.one().scale(c)
        for i, a in enumerate(ex):
            if a:
                t = t * power(i, a)
        out = out + t
    return out


# ----------------------------------------------------------------------------
# Frobenius and the diagonal


@dataclass(frozen=True)
class FrobLift:
    """A lift F of the q-power Frobenius, q = p^s: F(x_j) = x_j^q mod p."""

    p: int
    s: int
    images: Tuple[Polynomial, ...]

    def __post_init__(self):
        imgs = tuple(g.to_ring(Zp(self.p)) for g in self.images)
        object.__setattr__(self, "images", imgs)
        q = self.q
        d = len(imgs)
        for j, g in enumerate(imgs):
            if g.nvars != d:
                raise ArityMismatch("Frobenius lift must map d variables to polynomials in d variables")
            diff = g - Polynomial.var(d, j, Zp(self.p)) ** q
            if not _divisible_by_p(diff, self.p):
                raise InvalidFrobeniusLift(f"F(x{j + 1}) = {g.format()} is not x{j + 1}^{q} mod {self.p}")

    @property
    def q(self) -> int:
        return self.p ** self.s

    @property
    def d(self) -> int:
        return len(self.images)

    @property
    def ring_map(self) -> RingMap:
        return RingMap(list(self.images))

    def __call__(self, f: Polynomial) -> Polynomial:
        if f.ring.kind == "QQ":
            return substitute(f, RingMap([g.to_ring(QQ) for g in self.images]))
        return substitute(f.to_ring(Zp(self.p)), self.ring_map)

    @classmethod
    def standard(cls, p: int, s: int, d: int) -> "FrobLift":
        return cls(p, s, tuple(Polynomial.var(d, j, Zp(p)) ** (p ** s) for j in range(d)))


def frobenius_tube_witness(g: Polynomial, F: FrobLift, i: int, m: int, f: Optional[Polynomial] = None):
    """h' = (F(f^{p^i}) - g^{p^{i+s}}) / p and a witness T_{g^{p^{i+s}}} = F(T_{f^{p^i}}) - h'.

    ``f`` is the designated lift of g (g itself by default).  The witness lives
    in the tube generated by F(f^{p^i}).
    """
    p, s = F.p, F.s
    if i <= m:
        raise LevelTooHigh(f"need i > m, got i={i}, m={m}")
    R = Zp(p)
    g = g.to_ring(R)
    f = g if f is None else f.to_ring(R)
    lhs = F(f ** (p ** i))
    rhs = g ** (p ** (i + s))
    diff = lhs - rhs
    bad = [(e, c) for e, c in diff.terms.items() if valuation(c, p) < 1]
    if bad:
        e, c = bad[0]
        mono = Polynomial(diff.nvars, {e: 1}).format()
        raise InvalidFrobeniusLift(f"F(f^{p ** i}) - g^{p ** (i + s)} has coefficient {c} at {mono}, not divisible by {p}")
    h = _div_p(diff, p)
    ctx = TubeCtx(p, g.nvars, (lhs,))
    nv = ctx.witness_nvars
    w = Polynomial.var(nv, ctx.d, R) - h.extend(nv)
    elt = TubeElt(ctx, rhs.to_ring(QQ).scale(Fraction(1, p)), w)
    if not elt.check_witness():
        raise InvariantError("Frobenius witness does not evaluate to g^(p^(i+s))/p")
    return h, elt


def analytic_strat_image(f: Polynomial, i: int, m: int, p: int):
    """Both sides of 1 (x) T_{f^{p^i}} = T_{f^{p^i}} (x) 1 + T_{delta(f^{p^i})}.

    Coordinates are (x, xi) with x' = x + xi.  The ambient tube is generated by
    f(x)^{p^i}, f(x')^{p^i} and xi_j^{p^m}; the delta term is certified to lie
    in the xi-part of the tube.  Returns (lhs, rhs).
    """
    if i < m:
        raise LevelTooHigh(f"need i >= m, got i={i}, m={m}")
    R = Zp(p)
    d = f.nvars
    nv = 2 * d
    f = f.to_ring(R)
    shift = RingMap([Polynomial.var(nv, j, R) + Polynomial.var(nv, d + j, R) for j in range(d)])
    left = f.extend(nv) ** (p ** i)
    right = substitute(f, shift) ** (p ** i)
    xi_ctx = TubeCtx.power_of(p, [Polynomial.var(nv, d + j, R) for j in range(d)], p ** m)
    delta = (right - left).to_ring(QQ).scale(Fraction(1, p))
    if not membership(delta, xi_ctx):
        raise InvariantError("delta(f^(p^i))/p is not in the diagonal tube")
    delta_w = find_witness(delta, xi_ctx)  # variables (x, xi, T_xi)
    ctx = TubeCtx(p, nv, (left, right) + xi_ctx.N)
    W = ctx.witness_nvars
    T_left = Polynomial.var(W, nv, R)
    T_right = Polynomial.var(W, nv + 1, R)
    # move delta's T_xi variables after the two new generators
    delta_w = delta_w.extend(W, list(range(nv)) + [nv + 2 + j for j in range(d)])
    lhs = from_witness(T_right, ctx)
    rhs = from_witness(T_left + delta_w, ctx)
    return lhs, rhs
