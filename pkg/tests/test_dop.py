import random

import pytest
from hypothesis import given, strategies as st

from dcalc.corpus import random_op, random_poly
from dcalc.dop import (DiffOp, IdealSpec, apply, basis_action, change_level, compose, horizontality_failures,
                       is_horizontal)
from dcalc.errors import ArityMismatch, LevelMismatch, RingMismatch
from dcalc.mpd import qfac_ratio
from dcalc.poly import GF, QQ, Polynomial, Zp, sub_indices

from oracles import level_op_sympy


def P(text, p=2, nvars=None):
    return Polynomial.parse(text, nvars=nvars, ring=Zp(p))


def d(p, m, *K):
    return DiffOp.basis(p, m, tuple(K))


# ---------------------------------------------------------------- examples


def test_apply_examples():
    x3 = P("x^3")
    assert apply(d(2, 0, 2), x3) == P("6*x")
    assert apply(d(2, 1, 2), x3) == P("3*x")
    assert apply(d(2, 2, 0), x3) == x3


def test_compose_examples():
    # d o d = d^2 = 2 d^<2> at level 1 (d^<2> is d^2/2 there)
    assert compose(d(2, 1, 1), d(2, 1, 1)) == d(2, 1, 2).scale(2)
    x = DiffOp.scalar(2, 0, P("x"))
    assert compose(d(2, 0, 1), x) == compose(x, d(2, 0, 1)) + DiffOp.identity(2, 0, 1)
    for k, k2 in ((1, 2), (2, 3), (0, 4)):
        assert compose(d(3, 0, k), d(3, 0, k2)) == d(3, 0, k + k2)


def test_change_level_examples():
    assert change_level(d(2, 0, 2), 1) == d(2, 1, 2).scale(2)
    op = random_op(random.Random(0), 3, 1, 2, 3)
    assert change_level(op, 1) == op
    assert change_level(d(3, 0, 2), 1) == d(3, 1, 2).scale(2)
    assert change_level(d(3, 0, 3), 1) == d(3, 1, 3).scale(6)
    with pytest.raises(LevelMismatch):
        change_level(d(2, 1, 1), 0)


def test_horizontality_examples():
    assert is_horizontal(IdealSpec([P("x^4")], 2), 1)
    J = IdealSpec([P("x^2")], 2)
    assert not is_horizontal(J, 1)
    (g, K), = horizontality_failures(J, 1, first_only=True)
    assert K == (2,)
    assert is_horizontal(IdealSpec([], 3, 2), 2)


def test_level_and_arity_checks():
    with pytest.raises(LevelMismatch):
        compose(d(2, 0, 1), d(2, 1, 1))
    with pytest.raises(ArityMismatch):
        d(2, 0, 1) + d(2, 0, 1, 0)
    with pytest.raises(ArityMismatch):
        apply(d(2, 0, 1), P("x1*x2", nvars=2))
    with pytest.raises(RingMismatch):
        DiffOp.scalar(2, 0, Polynomial.parse("x", ring=GF(2))) + d(2, 0, 1)


def test_json_round_trip():
    op = random_op(random.Random(4), 3, 1, 2, 3)
    assert DiffOp.from_json(op.to_json(), 3, 1, 2, Zp(3)) == op


def test_order_and_zero_terms():
    op = d(2, 0, 3) + d(2, 0, 1) - d(2, 0, 3)
    assert op.order() == 1 and set(op.terms) == {(1,)}


# -------------------------------------------------------------- properties

pm = st.tuples(st.sampled_from([2, 3]), st.integers(0, 2))
seeds = st.integers(0, 10 ** 6)


@given(pm, seeds)
def test_compose_matches_apply(pm, seed):
    p, m = pm
    rng = random.Random(seed)
    top = p ** (m + 1)
    P1, Q1 = random_op(rng, p, m, 1, top), random_op(rng, p, m, 1, top)
    f = random_poly(rng, 1, 8, QQ, terms=4)
    assert apply(compose(P1, Q1), f) == apply(P1, apply(Q1, f))


@given(pm, seeds)
def test_associative(pm, seed):
    p, m = pm
    rng = random.Random(seed)
    A, B, C = (random_op(rng, p, m, 2, 3) for _ in range(3))
    assert compose(compose(A, B), C) == compose(A, compose(B, C))


@given(pm, seeds)
def test_change_level_is_multiplicative(pm, seed):
    p, m = pm
    if m == 2:
        m = 1
    rng = random.Random(seed)
    A, B = random_op(rng, p, m, 2, 3), random_op(rng, p, m, 2, 3)
    f = random_poly(rng, 2, 5, QQ)
    rho = lambda op: change_level(op, m + 1)
    assert rho(compose(A, B)) == compose(rho(A), rho(B))
    assert apply(rho(A), f) == apply(A, f)


@given(pm, seeds, st.sampled_from([(1, 0), (2, 1), (3, 3), (4, 0)]))
def test_leibniz_on_products(pm, seed, K):
    p, m = pm
    rng = random.Random(seed)
    f, g = random_poly(rng, 2, 4, QQ), random_poly(rng, 2, 4, QQ)
    rhs = Polynomial.zero(2)
    for I in sub_indices(K):
        J = tuple(k - i for k, i in zip(K, I))
        rhs = rhs + (basis_action(I, f, m, p) * basis_action(J, g, m, p)).scale(qfac_ratio(K, I, m, p))
    assert basis_action(K, f * g, m, p) == rhs


@given(pm, seeds, st.sampled_from([(1,), (2,), (3,), (4,), (9,)]))
def test_basis_action_matches_sympy(pm, seed, K):
    p, m = pm
    f = random_poly(random.Random(seed), 1, 10, QQ, terms=4)
    assert basis_action(K, f, m, p) == level_op_sympy(K, f, m, p)


@given(st.sampled_from([2, 3]), st.integers(0, 1), seeds)
def test_powers_give_horizontal_ideals(p, m, seed):
    f = random_poly(random.Random(seed), 2, 4, Zp(p), terms=3)
    assert is_horizontal(IdealSpec([f ** (p ** (m + 1))], p, 2), m)
