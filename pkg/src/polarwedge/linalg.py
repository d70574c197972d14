"""Exact rational vectors, matrices and the elimination kernel.

Everything here works over ``fractions.Fraction`` and nothing else: no
floats enter or leave.  Vectors are plain tuples of Fractions, matrices
are tuples of such tuples.  All functions are pure.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

Vec = tuple[Fraction, ...]
Matrix = tuple[Vec, ...]

Q0 = Fraction(0)
Q1 = Fraction(1)


def vec(entries: Iterable) -> Vec:
    """Coerce an iterable of rational-like entries to a Fraction tuple."""
    return tuple(Fraction(e) for e in entries)


def mat(rows: Iterable[Iterable]) -> Matrix:
    rows = tuple(vec(r) for r in rows)
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("rows of unequal length")
    return rows


def zeros(n: int) -> Vec:
    return (Q0,) * n


def unit(n: int, i: int) -> Vec:
    return tuple(Q1 if j == i else Q0 for j in range(n))


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Q0)


def add(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vec:
    return tuple(a + b for a, b in zip(u, v))


def sub(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vec:
    return tuple(a - b for a, b in zip(u, v))


def scale(c: Fraction, v: Sequence[Fraction]) -> Vec:
    c = Fraction(c)
    return tuple(c * a for a in v)


def neg(v: Sequence[Fraction]) -> Vec:
    return tuple(-a for a in v)


def is_zero(v: Sequence[Fraction]) -> bool:
    return all(a == 0 for a in v)


def matvec(rows: Sequence[Sequence[Fraction]], x: Sequence[Fraction]) -> Vec:
    return tuple(dot(r, x) for r in rows)


def transpose(rows: Sequence[Sequence[Fraction]]) -> Matrix:
    if not rows:
        return ()
    return tuple(tuple(r[j] for r in rows) for j in range(len(rows[0])))


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" or "p" with arbitrary-precision integers."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_vec(v: Sequence[Fraction]) -> str:
    return " ".join(format_rational(x) for x in v)


def primitive_ray(v: Sequence[Fraction]) -> Vec:
    """Scale by a positive rational to coprime integer entries.

    The direction is preserved; use this for cone generators, where the
    sign carries meaning.
    """
    v = vec(v)
    if is_zero(v):
        return v
    den = 1
    for a in v:
        den = den * a.denominator // gcd(den, a.denominator)
    ints = [a.numerator * (den // a.denominator) for a in v]
    g = 0
    for a in ints:
        g = gcd(g, abs(a))
    return tuple(Fraction(a // g) for a in ints)


def primitive_signed(v: Sequence[Fraction]) -> Vec:
    """Canonical form for sign-free vectors (basis elements).

    Coprime integer entries with the first nonzero entry positive, so
    that a span has one representative per direction.
    """
    w = primitive_ray(v)
    for a in w:
        if a != 0:
            return w if a > 0 else neg(w)
    return w


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[int, Matrix, list[int]]:
    """Reduced row-echelon form with exact arithmetic.

    Returns (rank, reduced matrix, pivot column indices).  The reduced
    form is the unique RREF of the input.  Pivot selection among the
    candidate rows prefers the entry whose numerator has the smallest
    bit length, which keeps intermediate coefficients small.
    """
    work = [list(r) for r in mat(rows)]
    m = len(work)
    n = len(work[0]) if m else 0
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        best = -1
        best_bits = None
        for r in range(row, m):
            a = work[r][col]
            if a != 0:
                bits = abs(a.numerator).bit_length() + a.denominator.bit_length()
                if best_bits is None or bits < best_bits:
                    best, best_bits = r, bits
        if best < 0:
            continue
        work[row], work[best] = work[best], work[row]
        piv = work[row][col]
        work[row] = [a / piv for a in work[row]]
        for r in range(m):
            if r != row and work[r][col] != 0:
                f = work[r][col]
                work[r] = [a - f * b for a, b in zip(work[r], work[row])]
        pivots.append(col)
        row += 1
    reduced = tuple(tuple(r) for r in work)
    return len(pivots), reduced, pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return rref(rows)[0]


def kernel(rows: Sequence[Sequence[Fraction]]) -> list[Vec]:
    """Basis of the null space {x : Mx = 0}, in primitive-integer form.

    The basis has coldim - rank elements, one per free column of the
    RREF, each canonicalized with primitive_signed.
    """
    rows = mat(rows)
    if not rows:
        return []
    n = len(rows[0])
    r, red, pivots = rref(rows)
    pivot_set = set(pivots)
    free = [j for j in range(n) if j not in pivot_set]
    basis = []
    for j in free:
        x = [Q0] * n
        x[j] = Q1
        for i, pc in enumerate(pivots):
            x[pc] = -red[i][j]
        basis.append(primitive_signed(x))
    return basis


def span_basis(vectors: Sequence[Sequence[Fraction]]) -> list[Vec]:
    """Canonical basis of the span: primitive RREF rows."""
    vs = [v for v in mat(vectors) if not is_zero(v)]
    if not vs:
        return []
    r, red, _ = rref(vs)
    return [primitive_signed(red[i]) for i in range(r)]


def in_span(v: Sequence[Fraction], basis: Sequence[Sequence[Fraction]]) -> bool:
    vs = list(basis)
    if is_zero(v):
        return True
    if not vs:
        return False
    return rank(vs) == rank(vs + [vec(v)])


def weighted_complement(
    span_vectors: Sequence[Sequence[Fraction]],
    weights: Sequence[Fraction],
) -> list[Vec]:
    """Annihilator of a span under the weighted pairing sum_i w_i x_i y_i.

    Returns a canonical basis of {z : sum_i w_i z_i v_i = 0 for every v in
    the span}.  All weights must be strictly positive; the pairing would
    degenerate otherwise.
    """
    w = vec(weights)
    if any(x <= 0 for x in w):
        raise ValueError("weights must be strictly positive")
    n = len(w)
    rows = []
    for v in span_vectors:
        v = vec(v)
        if len(v) != n:
            raise ValueError("span vector dimension does not match weights")
        rows.append(tuple(wi * vi for wi, vi in zip(w, v)))
    if not rows:
        return [unit(n, i) for i in range(n)]
    return kernel(rows)


def solve(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Vec | None:
    """One exact solution of Mx = rhs, or None if inconsistent."""
    rows = mat(rows)
    rhs = vec(rhs)
    if not rows:
        return () if is_zero(rhs) else None
    n = len(rows[0])
    aug = [tuple(r) + (b,) for r, b in zip(rows, rhs)]
    r, red, pivots = rref(aug)
    if n in pivots:
        return None
    x = [Q0] * n
    for i, pc in enumerate(pivots):
        x[pc] = red[i][n]
    return tuple(x)
