"""Buchberger's algorithm over Q or F_p, grevlex only.

Only ideal membership is consumed downstream (horizontality tests), so the
engine stays minimal: the product and chain criteria, then interreduction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

from .errors import ArityMismatch, PreconditionError, RingMismatch
from .poly import MultiIndex, Polynomial, Ring, grevlex_key, mi_le, mi_sub

ORDER = "grevlex"


def _lcm(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(max(x, y) for x, y in zip(a, b))


def _monic(f: Polynomial) -> Polynomial:
    return f.scale(f.ring.inverse(f.leading_coefficient()))


def normal_form(f: Polynomial, basis: Sequence[Polynomial]) -> Polynomial:
    """Fully reduced remainder of ``f`` modulo ``basis`` (basis elements monic)."""
    ring = f.ring
    leads = [(g.leading_monomial(), g) for g in basis]
    remainder = Polynomial.zero(f.nvars, ring)
    h = f
    while h:
        lm = h.leading_monomial()
        lc = h.terms[lm]
        for glm, g in leads:
            if mi_le(glm, lm):
                h = h - g.mul_monomial(mi_sub(lm, glm), lc)
                break
        else:
            remainder = remainder + Polynomial._raw(f.nvars, {lm: lc}, ring)
            h = h - Polynomial._raw(f.nvars, {lm: lc}, ring)
    return remainder


def s_polynomial(f: Polynomial, g: Polynomial) -> Polynomial:
    a, b = f.leading_monomial(), g.leading_monomial()
    l = _lcm(a, b)
    return (f.mul_monomial(mi_sub(l, a), f.ring.inverse(f.leading_coefficient()))
            - g.mul_monomial(mi_sub(l, b), g.ring.inverse(g.leading_coefficient())))


@dataclass
class GroebnerBasis:
    generators: List[Polynomial]
    nvars: int
    ring: Ring
    order: str = ORDER

    def reduce(self, f: Polynomial) -> Polynomial:
        if f.ring != self.ring:
            raise RingMismatch(f"polynomial over {f.ring}, basis over {self.ring}")
        if f.nvars != self.nvars:
            raise ArityMismatch(f"{f.nvars} vs {self.nvars} variables")
        return normal_form(f, self.generators)

    def contains(self, f: Polynomial) -> bool:
        return self.reduce(f).is_zero()

    def is_groebner(self) -> bool:
        gens = self.generators
        return all(
            normal_form(s_polynomial(gens[i], gens[j]), gens).is_zero()
            for i in range(len(gens)) for j in range(i + 1, len(gens))
        )


def buchberger(gens: Sequence[Polynomial], nvars: int = None, ring: Ring = None) -> GroebnerBasis:
    """Reduced Gröbner basis of the ideal generated by ``gens``."""
    gens = [g for g in gens if not g.is_zero()]
    if not gens:
        if nvars is None or ring is None:
            raise PreconditionError("empty generator list needs explicit nvars and ring")
        return GroebnerBasis([], nvars, ring)
    ring = gens[0].ring
    nvars = gens[0].nvars
    for g in gens:
        gens[0]._check(g)
    if not ring.is_field:
        raise PreconditionError(f"Buchberger needs a field, got {ring}")

    basis: List[Polynomial] = [_monic(g) for g in gens]
    pairs = [(i, j) for i in range(len(basis)) for j in range(i + 1, len(basis))]
    done = set()
    while pairs:
        pairs.sort(key=lambda ij: grevlex_key(_lcm(basis[ij[0]].leading_monomial(),
                                                     basis[ij[1]].leading_monomial())))
        i, j = pairs.pop(0)
        done.add((i, j))
        a, b = basis[i].leading_monomial(), basis[j].leading_monomial()
        l = _lcm(a, b)
        # product criterion
        if all(x == 0 or y == 0 for x, y in zip(a, b)):
            continue
        # chain criterion
        if any(
            k not in (i, j)
            and mi_le(basis[k].leading_monomial(), l)
            and (min(i, k), max(i, k)) in done
            and (min(j, k), max(j, k)) in done
            for k in range(len(basis))
        ):
            continue
        h = normal_form(s_polynomial(basis[i], basis[j]), basis)
        if h:
            basis.append(_monic(h))
            n = len(basis) - 1
            pairs.extend((k, n) for k in range(n))
    return GroebnerBasis(_interreduce(basis), nvars, ring)


def _interreduce(basis: List[Polynomial]) -> List[Polynomial]:
    # drop elements whose leading monomial is divisible by another's
    basis = sorted(basis, key=lambda g: grevlex_key(g.leading_monomial()))
    minimal: List[Polynomial] = []
    for g in basis:
        lm = g.leading_monomial()
        if not any(mi_le(h.leading_monomial(), lm) for h in minimal):
            minimal.append(g)
    reduced = []
    for idx, g in enumerate(minimal):
        others = minimal[:idx] + minimal[idx + 1:]
        lm = g.leading_monomial()
        tail = g - Polynomial._raw(g.nvars, {lm: g.terms[lm]}, g.ring)
        reduced.append(Polynomial._raw(g.nvars, {lm: g.terms[lm]}, g.ring) + normal_form(tail, others))
    return sorted(reduced, key=lambda g: grevlex_key(g.leading_monomial()), reverse=True)


def ideal_member(f: Polynomial, gb: GroebnerBasis) -> bool:
    return gb.contains(f)
