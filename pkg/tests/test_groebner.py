import random

from hypothesis import given, strategies as st

from dcalc.groebner import buchberger, ideal_member, normal_form
from dcalc.poly import GF, QQ, Polynomial, indices_up_to

from oracles import la_ideal_member


def P(text, ring=GF(2), nvars=None):
    return Polynomial.parse(text, nvars=nvars, ring=ring)


def test_examples():
    gb = buchberger([P("x")])
    assert [g.format(["x"]) for g in gb.generators] == ["x"]
    gb = buchberger([P("x^2", nvars=2), P("x*y", nvars=2)])
    assert {g.format(["x", "y"]) for g in gb.generators} == {"x^2", "x*y"}
    assert ideal_member(P("x^2 + x*y", nvars=2), gb)
    zero = buchberger([], nvars=2, ring=GF(2))
    assert ideal_member(Polynomial.zero(2, GF(2)), zero)
    assert not ideal_member(P("x", nvars=2), zero)
    assert ideal_member(P("x^3"), buchberger([P("x")]))
    assert not ideal_member(Polynomial.const(2, 1, GF(2)), buchberger([P("x", nvars=2), P("y", nvars=2)]))


def test_rational_coefficients():
    gb = buchberger([P("x^2 - 2", QQ, 2), P("x*y - 1", QQ, 2)], nvars=2, ring=QQ)
    assert gb.is_groebner()
    assert gb.contains(P("y - x/2", QQ, nvars=2))


def _random_ideal(rng, p, homogeneous):
    d = rng.randint(1, 3)
    gens = []
    for _ in range(rng.randint(1, 3)):
        deg = rng.randint(1, 3)
        mons = [e for e in indices_up_to(d, deg) if not homogeneous or sum(e) == deg]
        g = Polynomial(d, {rng.choice(mons): rng.randrange(1, p) for _ in range(3)}, GF(p))
        if g:
            gens.append(g)
    return d, gens


def _random_target(rng, d, gens, p, deg):
    mons = indices_up_to(d, deg)
    f = Polynomial.zero(d, GF(p))
    if rng.random() < 0.5:
        for g in gens:
            top = deg - g.total_degree()
            if top >= 0:
                a = Polynomial(d, {rng.choice(indices_up_to(d, top)): rng.randrange(p)}, GF(p))
                f = f + a * g
    else:
        f = Polynomial(d, {rng.choice(mons): rng.randrange(p) for _ in range(3)}, GF(p))
    return f


@given(st.integers(0, 10 ** 6), st.sampled_from([2, 3, 5]))
def test_membership_matches_linear_algebra_homogeneous(seed, p):
    rng = random.Random(seed)
    d, gens = _random_ideal(rng, p, homogeneous=True)
    gb = buchberger(gens, nvars=d, ring=GF(p))
    assert gb.is_groebner()
    for _ in range(4):
        f = _random_target(rng, d, gens, p, 6)
        # homogeneous ideal: membership is degree by degree
        parts = {}
        for e, c in f.terms.items():
            parts.setdefault(sum(e), {})[e] = c
        want = all(la_ideal_member(Polynomial(d, t, GF(p)), gens, p, k) for k, t in parts.items())
        assert gb.contains(f) == want


@given(st.integers(0, 10 ** 6), st.sampled_from([2, 3]))
def test_linear_algebra_certificates_are_recognised(seed, p):
    rng = random.Random(seed)
    d, gens = _random_ideal(rng, p, homogeneous=False)
    gb = buchberger(gens, nvars=d, ring=GF(p))
    for _ in range(4):
        f = _random_target(rng, d, gens, p, 5)
        if la_ideal_member(f, gens, p, 6):
            assert gb.contains(f)
        if not gb.contains(f):
            assert not la_ideal_member(f, gens, p, 6)


@given(st.integers(0, 10 ** 6), st.sampled_from([2, 3]))
def test_basis_independent_of_generator_order(seed, p):
    rng = random.Random(seed)
    d, gens = _random_ideal(rng, p, homogeneous=False)
    shuffled = list(gens)
    rng.shuffle(shuffled)
    a = buchberger(gens, nvars=d, ring=GF(p))
    b = buchberger(shuffled, nvars=d, ring=GF(p))
    for e in indices_up_to(d, 4):
        mono = Polynomial(d, {e: 1}, GF(p))
        assert a.reduce(mono) == b.reduce(mono)


def test_normal_form_of_member_is_zero():
    gens = [P("x^2 + y", GF(3), 2), P("x*y + 1", GF(3), 2)]
    gb = buchberger(gens, nvars=2, ring=GF(3))
    f = gens[0] * P("x + y", GF(3), 2) - gens[1] * P("y^2", GF(3), 2)
    assert normal_form(f, gb.generators).is_zero()
