"""Level-m stratified modules given by action matrices.

A module is free of rank r with basis e_1..e_r; ``theta[K]`` is the r x r matrix
whose column j holds the coordinates of d^<K>(e_j).  Coordinates and matrix
entries are polynomials over Q (integrality is a checked property, not a type).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .arith import factorial, factorial_valuation, normalize, valuation
from .dop import DiffOp, IdealSpec, basis_action
from .errors import (
    ArityMismatch,
    CongruenceFailure,
    LevelMismatch,
    NonConvergence,
    NoStableLattice,
    NotInEnvelope,
    OrderOverflow,
    PreconditionError,
)
from .linalg import integral_preimage, lattice_equal, mat_inverse, mat_mul, nullspace
from .mpd import padic_binom, qfac, qfac_ratio
from .poly import (
    QQ,
    MultiIndex,
    Polynomial,
    RingMap,
    indices_up_to,
    mi_sub,
    reduce_mod,
    sub_indices,
    substitute,
    unit_index,
)
from .tube import FrobLift, TubeCtx, membership

PolyMatrix = List[List[Polynomial]]
PolyVector = List[Polynomial]


# ----------------------------------------------------------------------------
# polynomial matrix helpers


def pm_zero(r: int, c: int, d: int) -> PolyMatrix:
    return [[Polynomial.zero(d, QQ) for _ in range(c)] for _ in range(r)]


def pm_identity(r: int, d: int) -> PolyMatrix:
    return [[Polynomial.const(d, int(i == j), QQ) for j in range(r)] for i in range(r)]


def pm_mul(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    d = a[0][0].nvars
    out = []
    for row in a:
        new = []
        for j in range(len(b[0])):
            s = Polynomial.zero(d, QQ)
            for k, x in enumerate(row):
                if x and b[k][j]:
                    s = s + x * b[k][j]
            new.append(s)
        out.append(new)
    return out


def pm_add(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def pm_scale(a: PolyMatrix, c) -> PolyMatrix:
    return [[x.scale(c) if not isinstance(c, Polynomial) else x * c for x in row] for row in a]


def pm_map(a: PolyMatrix, fn) -> PolyMatrix:
    return [[fn(x) for x in row] for row in a]


def pm_vec(a: PolyMatrix, v: PolyVector) -> PolyVector:
    return [col[0] for col in pm_mul(a, [[x] for x in v])]


def pm_is_zero(a: PolyMatrix) -> bool:
    return all(not x for row in a for x in row)


def pm_parse(rows, d: int) -> PolyMatrix:
    return [[Polynomial.parse(str(x), nvars=d, ring=QQ) for x in row] for row in rows]


def pm_format(a: PolyMatrix) -> List[List[str]]:
    return [[x.format() for x in row] for row in a]


def pm_determinant(a: PolyMatrix) -> Polynomial:
    n = len(a)
    if n == 1:
        return a[0][0]
    total = Polynomial.zero(a[0][0].nvars, QQ)
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in a[1:]]
        term = a[0][j] * pm_determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _key(K: MultiIndex) -> str:
    return ",".join(map(str, K))


def _unkey(s: str) -> MultiIndex:
    return tuple(int(t) for t in str(s).replace("(", "").replace(")", "").split(",") if t.strip())


# ----------------------------------------------------------------------------
# modules


@dataclass
class StratModule:
    p: int
    m: int
    d: int
    rank: int
    nmax: int
    theta: Dict[MultiIndex, PolyMatrix] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for K, M in self.theta.items():
            K = tuple(K)
            if len(K) != self.d:
                raise ArityMismatch(f"index {K} does not have length {self.d}")
            if sum(K) > self.nmax:
                continue
            if len(M) != self.rank or any(len(row) != self.rank for row in M):
                raise ArityMismatch(f"Theta_{K} is not {self.rank} x {self.rank}")
            clean[K] = [[x.to_ring(QQ) if x.nvars == self.d else _bad_arity(x, self.d) for x in row] for row in M]
        zero = (0,) * self.d
        clean.setdefault(zero, pm_identity(self.rank, self.d))
        self.theta = clean

    def Theta(self, K: MultiIndex) -> PolyMatrix:
        K = tuple(K)
        if sum(K) > self.nmax:
            raise OrderOverflow(f"|K| = {sum(K)} exceeds the order bound {self.nmax}")
        return self.theta.get(K) or pm_zero(self.rank, self.rank, self.d)

    def indices(self, top: Optional[int] = None):
        return indices_up_to(self.d, self.nmax if top is None else top)

    def is_integral(self) -> bool:
        return all(x.is_p_integral(self.p) for M in self.theta.values() for row in M for x in row)

    # constructors -------------------------------------------------------

    @classmethod
    def trivial(cls, p: int, m: int, d: int, rank: int = 1, nmax: int = 4) -> "StratModule":
        return cls(p, m, d, rank, nmax, {})

    @classmethod
    def from_connection(cls, p: int, m: int, conn: Sequence[PolyMatrix], nmax: int) -> "StratModule":
        """Module generated by a level-0 connection, promoted to level m by
        Theta^(m)_K = Q_K! / K! * Theta^(0)_K (the divided-power action).

        ``conn[i]`` is the matrix of d/dx_i.
        """
        d = len(conn)
        r = len(conn[0])
        conn = [[[x.to_ring(QQ) for x in row] for row in M] for M in conn]
        level0 = {(0,) * d: pm_identity(r, d)}
        for K in indices_up_to(d, nmax):
            if not any(K):
                continue
            i = next(t for t, k in enumerate(K) if k)
            prev = level0[mi_sub(K, unit_index(d, i))]
            deriv = pm_map(prev, lambda x: basis_action(unit_index(d, i), x, 0, p))
            level0[K] = pm_add(deriv, pm_mul(conn[i], prev))
        theta = {}
        for K, M in level0.items():
            w = Fraction(qfac(K, m, p), math.prod(factorial(k) for k in K))
            theta[K] = pm_scale(M, w)
        return cls(p, m, d, r, nmax, theta)

    @classmethod
    def exponential(cls, p: int, m: int, a: Sequence, nmax: int) -> "StratModule":
        """Rank one, d^<K>(e) = Q_K! a^K / K! e (constants a_i)."""
        d = len(a)
        theta = {}
        for K in indices_up_to(d, nmax):
            w = Fraction(qfac(K, m, p), math.prod(factorial(k) for k in K))
            for ai, k in zip(a, K):
                w *= Fraction(ai) ** k
            theta[K] = [[Polynomial.const(d, normalize(w), QQ)]]
        return cls(p, m, d, 1, nmax, theta)

    # serialization ------------------------------------------------------

    def to_json(self):
        return {
            "p": self.p, "level": self.m, "d": self.d, "rank": self.rank, "nmax": self.nmax,
            "theta": {_key(K): pm_format(M) for K, M in sorted(self.theta.items()) if not pm_is_zero(M)},
        }

    @classmethod
    def from_json(cls, data) -> "StratModule":
        p = int(data["p"])
        m = int(data.get("level", data.get("m", 0)))
        theta_raw = data.get("theta", {})
        d = int(data.get("d", len(_unkey(next(iter(theta_raw)))) if theta_raw else 1))
        rank = int(data.get("rank", 1))
        nmax = int(data.get("nmax", max((sum(_unkey(k)) for k in theta_raw), default=0)))
        theta = {_unkey(k): pm_parse(v, d) for k, v in theta_raw.items()}
        return cls(p, m, d, rank, nmax, theta)


def _bad_arity(x, d):
    raise ArityMismatch(f"entry {x} does not have {d} variables")


def _leibniz(M: StratModule, K: MultiIndex, v: PolyVector) -> PolyVector:
    """d^<K>(sum v_j e_j) = sum_I qfac_ratio(K, I) Theta_{K-I} d^<I>(v)."""
    out = [Polynomial.zero(M.d, QQ) for _ in range(M.rank)]
    for I in sub_indices(K):
        dv = [basis_action(I, x, M.m, M.p) for x in v]
        if all(not x for x in dv):
            continue
        T = M.Theta(mi_sub(K, I))
        w = qfac_ratio(K, I, M.m, M.p)
        out = [o + t.scale(w) for o, t in zip(out, pm_vec(T, dv))]
    return out


def act(M: StratModule, op: DiffOp, v: PolyVector) -> PolyVector:
    if op.m != M.m:
        raise LevelMismatch(f"operator level {op.m}, module level {M.m}")
    if op.d != M.d:
        raise ArityMismatch("operator and module have different numbers of variables")
    if len(v) != M.rank:
        raise ArityMismatch(f"vector of length {len(v)} for a rank {M.rank} module")
    v = [x.to_ring(QQ) for x in v]
    out = [Polynomial.zero(M.d, QQ) for _ in range(M.rank)]
    for K, a in op.terms.items():
        if sum(K) > M.nmax:
            raise OrderOverflow(f"|K| = {sum(K)} exceeds the order bound {M.nmax}")
        a = a.to_ring(QQ)
        out = [o + a * t for o, t in zip(out, _leibniz(M, K, v))]
    return out


def basis_vector(M: StratModule, j: int) -> PolyVector:
    return [Polynomial.const(M.d, int(i == j), QQ) for i in range(M.rank)]


def cocycle_failures(M: StratModule, first_only: bool = False):
    fails = []
    if M.theta[(0,) * M.d] != pm_identity(M.rank, M.d):
        fails.append(((0,) * M.d, (0,) * M.d, None))
        if first_only:
            return fails
    for KL in M.indices():
        for K in sub_indices(KL):
            L = mi_sub(KL, K)
            if not any(K) or not any(L) or K > L:
                continue
            w = padic_binom(KL, K, M.m, M.p)
            target = pm_scale(M.Theta(KL), w)
            for j in range(M.rank):
                col = [row[j] for row in M.Theta(L)]
                lhs = _leibniz(M, K, col)
                rhs = [row[j] for row in target]
                if lhs != rhs:
                    fails.append((K, L, j))
                    if first_only:
                        return fails
            # the relation is symmetric in K and L, but test the other order too
            if K != L:
                for j in range(M.rank):
                    col = [row[j] for row in M.Theta(K)]
                    if _leibniz(M, L, col) != [row[j] for row in target]:
                        fails.append((L, K, j))
                        if first_only:
                            return fails
    return fails


def cocycle_check(M: StratModule) -> bool:
    """d^<K> d^<L> e_j = padic_binom(K+L, K) d^<K+L> e_j for |K+L| <= nmax."""
    return not cocycle_failures(M, first_only=True)


def quasi_nilpotent_check(M: StratModule, J: IdealSpec, bound: int) -> bool:
    """All Theta_K with p^m <= |K| <= bound vanish modulo (p, J)."""
    if bound > M.nmax:
        raise OrderOverflow(f"bound {bound} exceeds the order bound {M.nmax}")
    gb = J.reduced_basis()
    for K in M.indices(bound):
        if sum(K) < M.p ** M.m:
            continue
        for row in M.Theta(K):
            for x in row:
                if not x.is_p_integral(M.p):
                    raise PreconditionError(f"Theta_{K} has an entry {x.format()} that is not p-integral")
                if not gb.contains(reduce_mod(x.extend(J.d) if x.nvars < J.d else x, M.p)):
                    return False
    return True


# ----------------------------------------------------------------------------
# integral models


def section_basis(M: StratModule, D: int):
    """Coordinates of V_D = (polynomials of degree <= D)^r: pairs (j, monomial)."""
    return [(j, e) for j in range(M.rank) for e in indices_up_to(M.d, D)]


def operator_matrix(M: StratModule, K: MultiIndex, D: int):
    """Matrix (row convention) of d^<K> on V_D."""
    basis = section_basis(M, D)
    pos = {b: i for i, b in enumerate(basis)}
    rows = []
    for j, e in basis:
        v = [Polynomial.zero(M.d, QQ) for _ in range(M.rank)]
        v[j] = Polynomial(M.d, {e: 1}, QQ)
        w = _leibniz(M, K, v)
        row = [0] * len(basis)
        for jj, poly in enumerate(w):
            for ee, c in poly.terms.items():
                if (jj, ee) not in pos:
                    raise PreconditionError(f"d^<{K}> does not preserve polynomials of degree <= {D}")
                row[pos[(jj, ee)]] = c
        rows.append(row)
    return rows


def integral_model(M: StratModule, D: int, L0: Optional[List[List]] = None, bound: Optional[int] = None,
                   max_iter: int = 64):
    """Largest sublattice of L0 (in V_D) stable under d^<K>, 0 < |K| <= bound.

    Iterates L_{t+1} = {v in L_t : d^<K> v in L_t for all K} until it stops
    moving.  Returns (basis rows, iterations used).
    """
    p = M.p
    bound = M.nmax if bound is None else bound
    if bound > M.nmax:
        raise OrderOverflow(f"bound {bound} exceeds the order bound {M.nmax}")
    n = len(section_basis(M, D))
    L = [[int(i == j) for j in range(n)] for i in range(n)] if L0 is None else [list(r) for r in L0]
    ops = [operator_matrix(M, K, D) for K in M.indices(bound) if any(K)]
    for it in range(max_iter):
        Linv = mat_inverse(L)
        conj = [mat_mul(mat_mul(L, T), Linv) for T in ops]
        C = integral_preimage(conj, p) if conj else [[int(i == j) for j in range(n)] for i in range(n)]
        new = mat_mul(C, L)
        if lattice_equal(new, L, p):
            return L, it
        L = new
    raise NoStableLattice(f"no stable lattice after {max_iter} saturation steps")


def is_stable(M: StratModule, D: int, L, bound: Optional[int] = None) -> bool:
    from .linalg import lattice_contains

    bound = M.nmax if bound is None else bound
    ops = [operator_matrix(M, K, D) for K in M.indices(bound) if any(K)]
    return all(lattice_contains(L, row, M.p) for T in ops for row in mat_mul(L, T))


# ----------------------------------------------------------------------------
# Frobenius level raising


def _image_power(base: List[Polynomial], K: MultiIndex, cache: dict, trunc) -> Polynomial:
    key = tuple(K)
    if key not in cache:
        if not any(K):
            cache[key] = Polynomial.const(base[0].nvars, 1, QQ)
        else:
            i = next(t for t, k in enumerate(K) if k)
            prev = _image_power(base, mi_sub(K, unit_index(len(K), i)), cache, trunc)
            cache[key] = trunc(prev * base[i])
    return cache[key]


def frobenius_pullback(M: StratModule, F: FrobLift, nmax: Optional[int] = None) -> StratModule:
    """F^*M as a level-(m+s) module.

    theta(1 (x) e) = sum_K' F(Theta'_K') (F(x+xi) - F(x))^K' / Q^(m)_K'!; the
    level-(m+s) matrices are Q^(m+s)_K! times the xi^K coefficients.
    """
    p, s, d = F.p, F.s, M.d
    if F.p != M.p:
        raise PreconditionError("prime mismatch between module and Frobenius lift")
    if F.d != d:
        raise ArityMismatch("Frobenius lift and module have different numbers of variables")
    n = M.nmax if nmax is None else nmax
    if n > M.nmax:
        raise OrderOverflow(f"pullback order {n} exceeds the module's order bound {M.nmax}")
    m_new = M.m + s
    nv = 2 * d
    xi = list(range(d, nv))

    def trunc(g):
        return g.truncate(xi, n)

    Fq = [g.to_ring(QQ) for g in F.images]
    shift = RingMap([Polynomial.var(nv, j, QQ) + Polynomial.var(nv, d + j, QQ) for j in range(d)])
    eta = [trunc(substitute(g, shift, (xi, n)) - g.extend(nv)) for g in Fq]
    cache: dict = {}
    total = {}
    for Kp in M.indices(n):
        T = M.Theta(Kp)
        if pm_is_zero(T):
            continue
        w = Fraction(1, qfac(Kp, M.m, p))
        powr = _image_power(eta, Kp, cache, trunc).scale(w)
        FT = pm_map(T, lambda x: F(x).extend(nv))
        for a, row in enumerate(FT):
            for b, x in enumerate(row):
                if x:
                    total[(a, b)] = total[(a, b)] + trunc(x * powr) if (a, b) in total else trunc(x * powr)
    theta = {K: pm_zero(M.rank, M.rank, d) for K in indices_up_to(d, n)}
    for (a, b), g in total.items():
        for K, coeff in g.split(xi).items():
            # keys of split are the xi-exponents; coeff is a polynomial in x
            theta[K][a][b] = coeff.scale(qfac(K, m_new, p))
    out = StratModule(p, m_new, d, M.rank, n, theta)
    if M.is_integral() and not out.is_integral():
        raise NotInEnvelope("pullback matrices are not p-integral")
    return out


def restrict_level(M: StratModule, m_new: int) -> StratModule:
    """The D^(m_new)-structure through rho: D^(m_new) -> D^(m), m_new <= m."""
    if m_new > M.m:
        raise LevelMismatch(f"cannot restrict from level {M.m} to {m_new}")
    theta = {}
    for K, T in M.theta.items():
        theta[K] = pm_scale(T, Fraction(qfac(K, m_new, M.p), qfac(K, M.m, M.p)))
    return StratModule(M.p, m_new, M.d, M.rank, M.nmax, theta)


def naive_base_change(M: StratModule, F: FrobLift) -> StratModule:
    """F^*M at level 0 through the pulled-back connection (level-0 modules only)."""
    if M.m != 0:
        raise LevelMismatch("naive base change is defined through the connection (level 0)")
    d = M.d
    conn = []
    for i in range(d):
        C = pm_zero(M.rank, M.rank, d)
        for l in range(d):
            dF = basis_action(unit_index(d, i), F.images[l].to_ring(QQ), 0, M.p)
            C = pm_add(C, pm_scale(pm_map(M.Theta(unit_index(d, l)), F), dF))
        conn.append(C)
    return StratModule.from_connection(M.p, 0, conn, M.nmax)


def comparison_terms(p: int, m: int, v_eta: int, N: int) -> int:
    """Order beyond which every Taylor term has valuation >= N.

    v(eta^K / Q_K!) >= |K| v_eta - v_p(floor(|K|/p^m)!) >= |K| (v_eta - 1/(p^m (p-1))).
    """
    slope = Fraction(v_eta) - Fraction(1, p ** m * (p - 1))
    if slope <= 0:
        raise NonConvergence(
            f"Taylor series does not converge: v(eta) = {v_eta} at p={p}, m={m} gives no valuation growth")
    n = 0
    while True:
        if all(k * v_eta - factorial_valuation(k // p ** m, p) >= N for k in range(n + 1, n + 1 + 64)) \
                and (n + 1) * slope >= N:
            return n
        n += 1


def frobenius_comparison(M: StratModule, F: FrobLift, F2: FrobLift, N: int = 4):
    """tau_{F,F'} = sum_K F(Theta_K) eta^K / Q_K! mod p^N, eta = F'(x) - F(x).

    Entries are returned as polynomials over Z/p^N.  Matrices act on rows, so
    transitivity reads tau(F, F'') = tau(F, F') tau(F', F'').
    """
    p, d = M.p, M.d
    if F.s != F2.s or F.p != F2.p or F.p != p:
        raise PreconditionError("lifts must share p and q")
    eta = []
    for g, g2 in zip(F.images, F2.images):
        diff = (g2 - g).to_ring(QQ)
        if any(valuation(c, p) < 1 for c in diff.terms.values()):
            raise CongruenceFailure(f"{g2.format()} and {g.format()} differ mod {p}")
        eta.append(diff)
    if not M.is_integral():
        raise PreconditionError("comparison needs p-integral action matrices")
    v_eta = min((e.min_valuation(p) for e in eta if e), default=None)
    if v_eta is None:
        return _reduce_matrix(pm_identity(M.rank, d), p, N)
    top = comparison_terms(p, M.m, v_eta, N)
    if top > M.nmax:
        raise OrderOverflow(f"need Theta up to order {top}, module has {M.nmax}")
    tau = pm_zero(M.rank, M.rank, d)
    cache: dict = {}
    for K in indices_up_to(d, top):
        T = M.Theta(K)
        if pm_is_zero(T):
            continue
        powr = _image_power(eta, K, cache, lambda g: g).scale(Fraction(1, qfac(K, M.m, p)))
        tau = pm_add(tau, pm_scale(pm_map(T, F), powr))
    return _reduce_matrix(tau, p, N)


def _reduce_matrix(T: PolyMatrix, p: int, N: int):
    return [[reduce_mod(x, p, N) for x in row] for row in T]


def zmod_matmul(a, b):
    nv = a[0][0].nvars
    ring = a[0][0].ring
    out = []
    for row in a:
        new = []
        for j in range(len(b[0])):
            s = Polynomial.zero(nv, ring)
            for k, x in enumerate(row):
                s = s + x * b[k][j]
            new.append(s)
        out.append(new)
    return out


# ----------------------------------------------------------------------------
# horizontal maps


def horizontal_hom(M: StratModule, M2: StratModule, D: int, top: Optional[int] = None) -> List[PolyMatrix]:
    """Basis of horizontal phi: M -> M2 with polynomial entries of degree <= D.

    phi horizontal means d^<K>(phi e_j) = phi(d^<K> e_j) for 0 < |K| <= top.
    """
    if (M.p, M.m, M.d) != (M2.p, M2.m, M2.d):
        raise LevelMismatch("modules must share p, level and number of variables")
    d, p, m = M.d, M.p, M.m
    top = min(M.nmax, M2.nmax) if top is None else top
    r, r2 = M.rank, M2.rank
    mons = indices_up_to(d, D)
    unknowns = [(a, b, e) for a in range(r2) for b in range(r) for e in mons]
    index = {u: i for i, u in enumerate(unknowns)}
    eqs: Dict[tuple, Dict[int, object]] = {}

    def add(key, col, c):
        row = eqs.setdefault(key, {})
        row[col] = row.get(col, 0) + c

    for K in indices_up_to(d, top):
        if not any(K):
            continue
        TK = M.Theta(K)
        for (a, b, e), col in index.items():
            mono = Polynomial(d, {e: 1}, QQ)
            # d^<K>(phi e_j) part: sum_I qfac_ratio(K,I) Theta2_{K-I} d^<I>(phi[:, j])
            for I in sub_indices(K):
                dm = basis_action(I, mono, m, p)
                if not dm:
                    continue
                T2 = M2.Theta(mi_sub(K, I))
                w = qfac_ratio(K, I, m, p)
                for a2 in range(r2):
                    t = T2[a2][a]
                    if t:
                        for ee, c in (t * dm).terms.items():
                            add((K, a2, b, ee), col, w * c)
            # - phi Theta_K
            for j in range(r):
                t = TK[b][j]
                if t:
                    for ee, c in (mono * t).terms.items():
                        add((K, a, j, ee), col, -c)
    rows = [[row.get(i, 0) for i in range(len(unknowns))] for row in eqs.values() if any(row.values())]
    sols = nullspace(rows, len(unknowns)) if rows else [[int(i == j) for j in range(len(unknowns))]
                                                       for i in range(len(unknowns))]
    out = []
    for vec in sols:
        phi = pm_zero(r2, r, d)
        for (a, b, e), c in zip(unknowns, vec):
            if c:
                phi[a][b] = phi[a][b] + Polynomial(d, {e: c}, QQ)
        out.append(phi)
    return out


def is_horizontal_map(phi: PolyMatrix, M: StratModule, M2: StratModule, top: Optional[int] = None) -> bool:
    top = min(M.nmax, M2.nmax) if top is None else top
    for K in indices_up_to(M.d, top):
        if not any(K):
            continue
        for j in range(M.rank):
            lhs = _leibniz(M2, K, [row[j] for row in phi])
            rhs = pm_vec(phi, [row[j] for row in M.Theta(K)])
            if lhs != rhs:
                return False
    return True


# ----------------------------------------------------------------------------
# Isoc systems


@dataclass
class IsocSystem:
    """Modules M_m over B_m = A[J^{p^{m+1}}] and transitions f[(m, m')]: M_m' -> M_m."""

    p: int
    J: IdealSpec
    modules: Dict[int, StratModule]
    transitions: Dict[Tuple[int, int], PolyMatrix]

    def ambient(self, m: int) -> TubeCtx:
        gens = [g for g in self.J.gens if not g.is_constant()]
        return TubeCtx.power_of(self.p, gens, self.p ** (m + 1))

    def transition(self, m: int, m2: int) -> PolyMatrix:
        if m == m2:
            return pm_identity(self.modules[m].rank, self.modules[m].d)
        return self.transitions[(m, m2)]


def isoc_failures(S: IsocSystem, first_only: bool = False) -> List[str]:
    fails = []

    def fail(msg):
        fails.append(msg)
        return first_only

    levels = sorted(S.modules)
    for m in levels:
        B = S.ambient(m)
        for K, T in S.modules[m].theta.items():
            if any(not membership(x, B) for row in T for x in row):
                if fail(f"Theta_{K} of M_{m} is not over B_{m}"):
                    return fails
    for (m, m2), f in sorted(S.transitions.items()):
        if m > m2:
            if fail(f"transition ({m},{m2}) must go from a higher level to a lower one"):
                return fails
            continue
        B = S.ambient(m)
        if any(not membership(x, B) for row in f for x in row):
            if fail(f"f_{m}{m2} has entries outside B_{m}"):
                return fails
        det = pm_determinant(f)
        if not det or not det.is_constant():
            if fail(f"f_{m}{m2} is not invertible over B_{m},Q"):
                return fails
        source = restrict_level(S.modules[m2], m)
        if not is_horizontal_map(f, source, S.modules[m]):
            if fail(f"f_{m}{m2} is not horizontal for the level-{m} action"):
                return fails
    for m in levels:
        for m2 in levels:
            for m3 in levels:
                if m < m2 < m3 and all(k in S.transitions for k in [(m, m2), (m2, m3), (m, m3)]):
                    if pm_mul(S.transitions[(m, m2)], S.transitions[(m2, m3)]) != S.transitions[(m, m3)]:
                        if fail(f"transitivity fails for {m} < {m2} < {m3}"):
                            return fails
    return fails


def isoc_compat_check(S: IsocSystem) -> bool:
    return not isoc_failures(S, first_only=True)


# ----------------------------------------------------------------------------
# tube modules: the two stratifications agree


def tube_stratification_agrees(f: Polynomial, i: int, m: int, p: int) -> bool:
    """For T = f^{p^i}/p in A[N^{p^i}], compare the Taylor series
    sum_K d^<K>(T) xi^{K}_(m) (pushed to the diagonal tube) with the analytic
    stratification 1 (x) T of the diagonal tube, on images.
    """
    from .tube import analytic_strat_image, dm_act, TubeElt

    d = f.nvars
    ctx = TubeCtx.power_of(p, [f], p ** i)
    T = TubeElt.generator(ctx, 0)
    n = f.total_degree() * p ** i
    terms = {}
    for K in indices_up_to(d, n):
        a = dm_act(K, T, m, verify=False).image
        if a:
            terms[K] = a
    # coefficients are Q-polynomials; go to images directly
    nv = 2 * d
    image = Polynomial.zero(nv, QQ)
    for K, a in terms.items():
        image = image + a.extend(nv) * Polynomial(nv, {(0,) * d + K: Fraction(1, qfac(K, m, p))}, QQ)
    lhs, rhs = analytic_strat_image(f, i, m, p)
    return image == lhs.image == rhs.image
