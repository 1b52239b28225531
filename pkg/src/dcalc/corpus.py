"""Seeded random inputs for the property suite.

Every generator takes a ``random.Random`` so that a seed fully determines the
output.  ``gen_corpus`` writes JSON-lines records that parse back with the
ordinary polynomial parser.
"""
from __future__ import annotations

import json
import random
from fractions import Fraction
from typing import Dict, List, Optional

from .dop import DiffOp
from .poly import QQ, Polynomial, Ring, Zp, indices_up_to
from .strat import StratModule
from .tube import FrobLift


def random_poly(rng: random.Random, d: int, deg: int, ring: Ring = QQ, terms: int = 4,
                coeff: int = 9, denominators=(1,)) -> Polynomial:
    mons = indices_up_to(d, deg)
    out = {}
    for _ in range(terms):
        e = rng.choice(mons)
        c = rng.randint(-coeff, coeff)
        den = rng.choice(denominators)
        out[e] = out.get(e, 0) + Fraction(c, den)
    return Polynomial(d, out, ring)


def random_op(rng: random.Random, p: int, m: int, d: int, order: int, deg: int = 2, terms: int = 3) -> DiffOp:
    R = Zp(p)
    idx = indices_up_to(d, order)
    out = {}
    for _ in range(terms):
        K = rng.choice(idx)
        out[K] = random_poly(rng, d, deg, R, terms=2, coeff=5)
    return DiffOp(p, m, d, out, R)


def random_lift(rng: random.Random, p: int, s: int, d: int, deg: int = 2) -> FrobLift:
    R = Zp(p)
    q = p ** s
    imgs = []
    for j in range(d):
        h = random_poly(rng, d, deg, R, terms=2, coeff=3)
        imgs.append(Polynomial.var(d, j, R) ** q + h.scale(p))
    return FrobLift(p, s, tuple(imgs))


def random_module(rng: random.Random, p: int, d: int, rank: int, nmax: int) -> StratModule:
    """Level-0 module from a constant connection (commuting matrices for d > 1).

    Rank 1 uses a scalar; rank 2 uses c*I + n*N with N nilpotent, so all
    directions commute and the connection is integrable.
    """
    if rank == 1:
        a = [rng.randint(-3, 3) for _ in range(d)]
        conn = [[[Polynomial.const(d, ai, QQ)]] for ai in a]
    else:
        conn = []
        for _ in range(d):
            c, n = rng.randint(-2, 2), rng.randint(-2, 2)
            C = [[Polynomial.const(d, c, QQ), Polynomial.const(d, n, QQ)],
                 [Polynomial.zero(d, QQ), Polynomial.const(d, c, QQ)]]
            conn.append(C)
    return StratModule.from_connection(p, 0, conn, nmax)


def gen_corpus(seed: int, sizes: Optional[Dict[str, int]] = None) -> List[dict]:
    """Deterministic list of corpus records (polynomials, operators, lifts)."""
    sizes = dict(sizes or {})
    p = sizes.get("p", 2)
    d = sizes.get("vars", 2)
    deg = sizes.get("degree", 3)
    order = sizes.get("order", 2)
    count = sizes.get("count", 10)
    m = sizes.get("level", 0)
    rng = random.Random(seed)
    names = [f"x{i + 1}" for i in range(d)]
    records = []
    for k in range(count):
        f = random_poly(rng, d, deg, QQ)
        op = random_op(rng, p, m, d, order, deg=min(deg, 2))
        lift = random_lift(rng, p, 1, d, deg=max(deg, 0))
        records.append({
            "index": k,
            "p": p,
            "level": m,
            "vars": d,
            "poly": f.format(names),
            "op": op.to_json(),
            "lift": [g.format(names) for g in lift.images],
        })
    return records


def write_corpus(path: str, records: List[dict]) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def read_corpus(path: str) -> List[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
