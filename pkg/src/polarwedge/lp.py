"""Exact rational linear programming with verifiable certificates.

A two-phase tableau simplex with Bland's anti-cycling rule, run entirely
over Fractions.  Every outcome carries a certificate that is re-verified
by substitution before it is returned: optimal solutions come with a
dual point of exactly equal objective value, infeasible systems with a
Farkas ray, unbounded ones with a feasible improving ray.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import cones
from .linalg import Matrix, Q0, Q1, Vec, dot, is_zero, mat, neg, transpose, vec

LE, EQ, GE = "<=", "=", ">="


class InternalCheckError(RuntimeError):
    """An exact identity that must hold by theorem failed: a bug, not data."""


@dataclass(frozen=True)
class LinearProgram:
    """min or max objective.x subject to row senses and variable bounds.

    ``row_sense`` entries are '<=', '=', '>='; ``variable_bounds`` are
    'free' or '>=0'.
    """

    objective: Vec
    constraint_matrix: Matrix
    rhs: Vec
    row_sense: tuple[str, ...]
    variable_bounds: tuple[str, ...]
    sense: str = "min"

    def __post_init__(self):
        object.__setattr__(self, "objective", vec(self.objective))
        object.__setattr__(self, "constraint_matrix", mat(self.constraint_matrix))
        object.__setattr__(self, "rhs", vec(self.rhs))
        object.__setattr__(self, "row_sense", tuple(self.row_sense))
        object.__setattr__(self, "variable_bounds", tuple(self.variable_bounds))
        n = len(self.objective)
        m = len(self.constraint_matrix)
        if len(self.rhs) != m or len(self.row_sense) != m:
            raise ValueError("row count mismatch")
        if any(len(r) != n for r in self.constraint_matrix):
            raise ValueError("column count mismatch")
        if len(self.variable_bounds) != n:
            raise ValueError("variable bound count mismatch")
        if any(s not in (LE, EQ, GE) for s in self.row_sense):
            raise ValueError("row sense must be <=, = or >=")
        if any(b not in ("free", ">=0") for b in self.variable_bounds):
            raise ValueError("variable bound must be 'free' or '>=0'")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")


@dataclass(frozen=True)
class LPOutcome:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    primal_point: Vec | None = None
    dual_point: Vec | None = None
    certificate: Vec | None = None
    value: Fraction | None = None


@dataclass(frozen=True)
class FarkasAlternative:
    branch: str  # 'primal' | 'dual'
    x: Vec | None = None
    y: Vec | None = None


# ---------------------------------------------------------------------------
# simplex core on the standard form  min c.x  s.t.  Ax = b, x >= 0


def _pivot(tab, obj, basis, r, j):
    piv = tab[r][j]
    tab[r] = [a / piv for a in tab[r]]
    for i in range(len(tab)):
        if i != r and tab[i][j] != 0:
            f = tab[i][j]
            row_r = tab[r]
            tab[i] = [a - f * b for a, b in zip(tab[i], row_r)]
    if obj[j] != 0:
        f = obj[j]
        row_r = tab[r]
        for k in range(len(obj)):
            obj[k] -= f * row_r[k]
    basis[r] = j


def _bland(tab, obj, basis, allowed):
    """Run Bland-rule pivots until optimal or unbounded.

    Returns 'optimal' or the entering column index on unboundedness.
    """
    m = len(tab)
    width = len(obj) - 1
    while True:
        enter = -1
        for j in allowed:
            if obj[j] < 0:
                enter = j
                break
        if enter < 0:
            return "optimal", -1
        leave = -1
        best = None
        for i in range(m):
            a = tab[i][enter]
            if a > 0:
                ratio = tab[i][width] / a
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leave]
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            return "unbounded", enter
        _pivot(tab, obj, basis, leave, enter)


def simplex_standard(
    a_rows: Sequence[Vec], b: Vec, c: Vec
) -> tuple[str, Vec | None, Vec | None, Vec | None]:
    """Solve min c.x s.t. Ax = b, x >= 0; all data Fractions.

    Returns (status, x, y, ray).  On 'optimal', x and y satisfy c.x = y.b
    exactly and A^T y <= c.  On 'infeasible', y satisfies A^T y <= 0 and
    y.b > 0.  On 'unbounded', x is feasible and ray is an improving
    direction (A ray = 0, ray >= 0, c.ray < 0).
    """
    m = len(a_rows)
    n = len(c)
    flip = [Q1 if b[i] >= 0 else Fraction(-1) for i in range(m)]
    rows = [
        [flip[i] * a for a in a_rows[i]] + [Q0] * m + [flip[i] * b[i]]
        for i in range(m)
    ]
    for i in range(m):
        rows[i][n + i] = Q1
    basis = [n + i for i in range(m)]
    width = n + m
    # phase 1: minimize the sum of artificials
    obj = [Q0] * (width + 1)
    for j in range(width + 1):
        s = Q0
        for i in range(m):
            s += rows[i][j]
        obj[j] = (Q1 if n <= j < width else Q0) - s
    status, _ = _bland(rows, obj, basis, range(width))
    if status != "optimal":
        raise InternalCheckError("phase 1 cannot be unbounded")
    if -obj[width] > 0:
        y = [flip[i] * (Q1 - obj[n + i]) for i in range(m)]
        _check_farkas_ray(a_rows, b, y)
        return "infeasible", None, tuple(y), None
    # drive surviving artificials out of the basis, dropping redundant rows
    live = list(range(m))
    for r in range(m - 1, -1, -1):
        if basis[r] >= n:
            piv = next((j for j in range(n) if rows[r][j] != 0), None)
            if piv is None:
                del rows[r], basis[r], live[r]
            else:
                _pivot(rows, obj, basis, r, piv)
    # phase 2
    obj = [Q0] * (width + 1)
    for j in range(width + 1):
        cj = c[j] if j < n else Q0
        s = Q0
        for i in range(len(rows)):
            cb = c[basis[i]]
            if cb != 0:
                s += cb * rows[i][j]
        obj[j] = (cj if j < width else Q0) - s
    status, enter = _bland(rows, obj, basis, range(n))
    x = [Q0] * n
    for i, bi in enumerate(basis):
        x[bi] = rows[i][width]
    if status == "unbounded":
        ray = [Q0] * n
        ray[enter] = Q1
        for i, bi in enumerate(basis):
            ray[bi] = -rows[i][enter]
        _check_ray(a_rows, c, ray)
        return "unbounded", tuple(x), None, tuple(ray)
    y = [Q0] * m
    for pos, i in enumerate(live):
        y[i] = flip[i] * (-obj[n + i])
    x = tuple(x)
    y = tuple(y)
    _check_optimal(a_rows, b, c, x, y)
    return "optimal", x, y, None


def _check_farkas_ray(a_rows, b, y):
    if dot(y, b) <= 0:
        raise InternalCheckError("Farkas ray fails y.b > 0")
    for j in range(len(a_rows[0]) if a_rows else 0):
        if sum((y[i] * a_rows[i][j] for i in range(len(a_rows))), Q0) > 0:
            raise InternalCheckError("Farkas ray fails A^T y <= 0")


def _check_ray(a_rows, c, ray):
    if any(r < 0 for r in ray) or dot(c, ray) >= 0:
        raise InternalCheckError("improving ray invalid")
    for row in a_rows:
        if dot(row, ray) != 0:
            raise InternalCheckError("improving ray leaves the feasible set")


def _check_optimal(a_rows, b, c, x, y):
    if any(v < 0 for v in x):
        raise InternalCheckError("primal point negative")
    for i, row in enumerate(a_rows):
        if dot(row, x) != b[i]:
            raise InternalCheckError("primal point infeasible")
    if dot(c, x) != dot(y, b):
        raise InternalCheckError("strong duality gap")
    for j in range(len(c)):
        if sum((y[i] * a_rows[i][j] for i in range(len(a_rows))), Q0) > c[j]:
            raise InternalCheckError("dual point infeasible")


# ---------------------------------------------------------------------------
# general-form wrapper


def solve(lp: LinearProgram) -> LPOutcome:
    """Solve a general-form LP exactly; every outcome is certified."""
    n = len(lp.objective)
    m = len(lp.constraint_matrix)
    # column layout: one column per >=0 variable, two (u, v) per free one,
    # then one slack per inequality row
    col_of: list[tuple[int, int]] = []  # (var index, sign)
    for j, bound in enumerate(lp.variable_bounds):
        col_of.append((j, 1))
        if bound == "free":
            col_of.append((j, -1))
    nslack = sum(1 for s in lp.row_sense if s != EQ)
    ncols = len(col_of) + nslack
    c_int = lp.objective if lp.sense == "min" else neg(lp.objective)
    c_std = [c_int[j] * s for j, s in col_of] + [Q0] * nslack
    a_std = []
    slack_pos = 0
    for i in range(m):
        row = [lp.constraint_matrix[i][j] * s for j, s in col_of] + [Q0] * nslack
        if lp.row_sense[i] != EQ:
            row[len(col_of) + slack_pos] = Q1 if lp.row_sense[i] == LE else Fraction(-1)
            slack_pos += 1
        a_std.append(tuple(row))
    status, x_std, y, ray_std = simplex_standard(
        a_std, lp.rhs, tuple(c_std)
    )
    sign = Q1 if lp.sense == "min" else Fraction(-1)

    def back(z_std):
        z = [Q0] * n
        for k, (j, s) in enumerate(col_of):
            z[j] += s * z_std[k]
        return tuple(z)

    if status == "infeasible":
        return LPOutcome(status="infeasible", certificate=vec(y), dual_point=vec(y))
    if status == "unbounded":
        ray = back(ray_std)
        _check_general_ray(lp, ray)
        return LPOutcome(status="unbounded", primal_point=back(x_std), certificate=ray)
    x = back(x_std)
    value = dot(lp.objective, x)
    y_rep = tuple(sign * t for t in y)
    if dot(y_rep, lp.rhs) != value:
        raise InternalCheckError("dual value does not match primal value")
    return LPOutcome(
        status="optimal",
        primal_point=x,
        dual_point=y_rep,
        certificate=None,
        value=value,
    )


def _check_general_ray(lp: LinearProgram, ray: Vec):
    for j, bound in enumerate(lp.variable_bounds):
        if bound == ">=0" and ray[j] < 0:
            raise InternalCheckError("ray violates variable bound")
    for i, row in enumerate(lp.constraint_matrix):
        v = dot(row, ray)
        ok = v == 0 if lp.row_sense[i] == EQ else (v <= 0 if lp.row_sense[i] == LE else v >= 0)
        if not ok:
            raise InternalCheckError("ray violates a constraint sense")
    improve = dot(lp.objective, ray)
    if (lp.sense == "min" and improve >= 0) or (lp.sense == "max" and improve <= 0):
        raise InternalCheckError("ray does not improve the objective")


def verify_infeasibility_certificate(lp: LinearProgram, y: Sequence[Fraction]) -> bool:
    """Substitution check of a Farkas ray for a general-form system."""
    y = vec(y)
    cols = transpose(lp.constraint_matrix)
    for j, bound in enumerate(lp.variable_bounds):
        v = dot(y, cols[j])
        if bound == ">=0":
            if v > 0:
                return False
        elif v != 0:
            return False
    for i, s in enumerate(lp.row_sense):
        if s == LE and y[i] > 0:
            return False
        if s == GE and y[i] < 0:
            return False
    return dot(y, lp.rhs) > 0


# ---------------------------------------------------------------------------
# Farkas alternative and the closed-image check


def farkas_alternative(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> FarkasAlternative:
    """Exactly one of: x >= 0 with Ax = b, or y with y.b > 0 and A^T y <= 0.

    The returned branch's certificate verifies by substitution; the other
    branch is impossible (if Ax = b with x >= 0 then y.b = y.Ax =
    (A^T y).x <= 0 for any y with A^T y <= 0).
    """
    a = mat(a)
    b = vec(b)
    if len(a) != len(b):
        raise ValueError("row count mismatch")
    n = len(a[0]) if a else 0
    status, x, y, _ = simplex_standard(a, b, (Q0,) * n)
    if status == "optimal":
        for i, row in enumerate(a):
            if dot(row, x) != b[i]:
                raise InternalCheckError("primal branch fails substitution")
        return FarkasAlternative(branch="primal", x=x)
    if status != "infeasible":
        raise InternalCheckError("feasibility problem cannot be unbounded")
    return FarkasAlternative(branch="dual", y=y)


@dataclass(frozen=True)
class ClosedImageReport:
    image_cone_equal: bool
    trials: int
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return self.image_cone_equal and not self.failures


def verify_closed_image_equivalence(
    a: Sequence[Sequence[Fraction]], trials: int, seed: int
) -> ClosedImageReport:
    """Check the certified-alternative / closed-image equivalence.

    The image cone A(E+) of the positive orthant is finitely generated,
    hence closed, so for every b exactly one alternative branch holds.
    Also verifies, by an independent polar computation, that A(E+)
    equals G = {b : <b,y> <= 0 whenever A^T y <= 0}.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    a = mat(a)
    m = len(a)
    cols = list(transpose(a))
    image = cones.dd_convert(cones.cone_from_generators(cols, m))
    dual_preimage = cones.cone_from_halfspaces(cols, m)
    g = cones.dd_convert(cones.polar(dual_preimage))
    image_equal = cones.cones_equal(image, g)
    rng = random.Random(seed)
    failures = []
    for t in range(trials):
        b = vec([rng.randint(-5, 5) for _ in range(m)])
        alt = farkas_alternative(a, b)
        inside = cones.contains(g, b)
        if alt.branch == "primal":
            if not inside:
                failures.append(f"trial {t}: primal branch but b outside G (b={b})")
            if any(v < 0 for v in alt.x) or matvec_ne(a, alt.x, b):
                failures.append(f"trial {t}: primal certificate fails (b={b})")
        else:
            if inside:
                failures.append(f"trial {t}: dual branch but b inside G (b={b})")
            if dot(alt.y, b) <= 0 or any(dot(alt.y, col) > 0 for col in cols):
                failures.append(f"trial {t}: dual certificate fails (b={b})")
    return ClosedImageReport(
        image_cone_equal=image_equal, trials=trials, failures=tuple(failures)
    )


def matvec_ne(a, x, b) -> bool:
    return any(dot(row, x) != bi for row, bi in zip(a, b))


# ---------------------------------------------------------------------------
# vertex enumeration


def enumerate_vertices(
    halfspaces: Sequence[tuple[Sequence[Fraction], Fraction]],
    equalities: Sequence[tuple[Sequence[Fraction], Fraction]] = (),
    *,
    dim: int | None = None,
    assume_bounded: bool = False,
) -> list[Vec]:
    """Extreme points of {x : a.x <= b, c.x = d}, lexicographically sorted.

    Boundedness is established first by maximizing each +/- coordinate
    (skipped with ``assume_bounded`` when the caller knows the polytope
    sits inside a simplex); an unbounded polyhedron raises
    ValueError("not a polytope").  An empty polytope returns [].
    """
    hs = [(vec(nrm), Fraction(rhs)) for nrm, rhs in halfspaces]
    eqs = [(vec(nrm), Fraction(rhs)) for nrm, rhs in equalities]
    if dim is None:
        if not hs and not eqs:
            raise ValueError("dim required without constraints")
        dim = len((hs + eqs)[0][0])
    if not assume_bounded:
        rows = mat([nrm for nrm, _ in hs] + [nrm for nrm, _ in eqs])
        rhs = vec([r for _, r in hs] + [r for _, r in eqs])
        senses = tuple([LE] * len(hs) + [EQ] * len(eqs))
        feasible = True
        for i in range(dim):
            for direction in (Q1, Fraction(-1)):
                objective = [Q0] * dim
                objective[i] = direction
                out = solve(
                    LinearProgram(
                        objective=tuple(objective),
                        constraint_matrix=rows,
                        rhs=rhs,
                        row_sense=senses,
                        variable_bounds=("free",) * dim,
                        sense="max",
                    )
                )
                if out.status == "unbounded":
                    raise ValueError("not a polytope")
                if out.status == "infeasible":
                    feasible = False
                    break
            if not feasible:
                break
        if not feasible:
            return []
    return cones.polytope_vertices(hs, eqs, dim)
