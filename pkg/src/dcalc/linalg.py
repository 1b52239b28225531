"""Exact dense linear algebra over Q, F_p and the discrete valuation ring Z_(p).

Vectors and matrices are plain lists of ``Fraction``/``int`` (row-major).
"""
from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .arith import INF, normalize, valuation

Matrix = List[List]


def _field_ops(p: Optional[int]):
    if p is None:
        return (lambda a: a != 0), (lambda a: Fraction(1) / a), (lambda a: normalize(a))
    return (lambda a: a % p != 0), (lambda a: pow(a, -1, p)), (lambda a: a % p)


def rref(rows: Matrix, p: Optional[int] = None) -> Tuple[Matrix, List[int]]:
    """Reduced row echelon form over Q (``p=None``) or F_p."""
    nonzero, inv, red = _field_ops(p)
    m = [[red(Fraction(a) if p is None else a) for a in r] for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if nonzero(m[i][c])), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        s = inv(m[r][c])
        m[r] = [red(a * s) for a in m[r]]
        for i in range(len(m)):
            if i != r and nonzero(m[i][c]):
                f = m[i][c]
                m[i] = [red(a - f * b) for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Matrix, p: Optional[int] = None) -> int:
    return len(rref(rows, p)[1])


def in_row_space(rows: Matrix, v: Sequence, p: Optional[int] = None) -> bool:
    if not rows:
        nonzero = _field_ops(p)[0]
        return not any(nonzero(a) for a in v)
    return rank(list(rows) + [list(v)], p) == rank(rows, p)


def nullspace(rows: Matrix, ncols: int, p: Optional[int] = None) -> Matrix:
    """Basis of {x : rows * x = 0} (column vectors returned as lists)."""
    red_rows, pivots = rref(rows, p) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [0] * ncols
        x[f] = 1
        for r, c in enumerate(pivots):
            x[c] = -red_rows[r][f] if p is None else (-red_rows[r][f]) % p
        basis.append([normalize(Fraction(a)) if p is None else a for a in x])
    return basis


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    return [[normalize(sum(x * y for x, y in zip(row, col))) for col in zip(*b)] for row in a]


def mat_inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(red) < n:
        raise ZeroDivisionError("singular matrix")
    return [[normalize(x) for x in row[n:]] for row in red]


def transpose(a: Matrix) -> Matrix:
    return [list(col) for col in zip(*a)]


def determinant(a: Matrix):
    n = len(a)
    m = [list(map(Fraction, row)) for row in a]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, n):
            f = m[i][c] / m[c][c]
            if f:
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return normalize(det)


# ----------------------------------------------------------------------------
# Z_(p)-modules


def zp_echelon(rows: Matrix, p: int) -> Tuple[Matrix, List[int]]:
    """Echelon basis of the Z_(p)-span of ``rows``.

    Pivots are chosen with minimal valuation, so every elimination multiplier
    lies in Z_(p) and the span is preserved.  Zero rows are discarded.
    """
    m = [[Fraction(a) for a in r] for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        best, best_v = None, INF
        for i in range(r, len(m)):
            if m[i][c] != 0:
                v = valuation(m[i][c], p)
                if v < best_v:
                    best, best_v = i, v
        if best is None:
            continue
        m[r], m[best] = m[best], m[r]
        for i in range(r + 1, len(m)):
            if m[i][c] != 0:
                f = m[i][c] / m[r][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return [[normalize(a) for a in row] for row in m[:r]], pivots


def zp_contains(echelon: Tuple[Matrix, List[int]], v: Sequence, p: int) -> bool:
    rows, pivots = echelon
    t = [Fraction(a) for a in v]
    for row, c in zip(rows, pivots):
        if t[c] == 0:
            continue
        f = t[c] / row[c]
        if valuation(f, p) < 0:
            return False
        t = [x - f * y for x, y in zip(t, row)]
    return not any(t)


def zp_span_contains(rows: Matrix, v: Sequence, p: int) -> bool:
    return zp_contains(zp_echelon(rows, p), v, p)


def lattice_basis(rows: Matrix, p: int) -> Matrix:
    """Square basis of a full-rank Z_(p)-lattice spanned by ``rows``."""
    basis, pivots = zp_echelon(rows, p)
    if not basis or len(basis) != len(basis[0]):
        raise ValueError("generators do not span a full-rank lattice")
    return basis


def dual_lattice(basis: Matrix) -> Matrix:
    """Dual lattice basis for the standard pairing: rows of (B^-1)^T."""
    return transpose(mat_inverse(basis))


def lattice_index_valuation(basis: Matrix, p: int) -> int:
    """v_p of the covolume; larger means a smaller lattice."""
    return valuation(determinant(basis), p)


def lattice_contains(basis: Matrix, v: Sequence, p: int) -> bool:
    return zp_span_contains(basis, v, p)


def lattice_equal(a: Matrix, b: Matrix, p: int) -> bool:
    return all(lattice_contains(a, v, p) for v in b) and all(lattice_contains(b, v, p) for v in a)


def integral_preimage(maps: Sequence[Matrix], p: int) -> Matrix:
    """Basis of {c in Z_(p)^n : c * M integral for every M in ``maps``}.

    Computed by duality: the dual of that lattice is spanned by the standard
    basis together with the columns of every M.
    """
    n = len(maps[0]) if maps else 0
    gens = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for M in maps:
        gens.extend(transpose(M))
    return dual_lattice(lattice_basis(gens, p))
