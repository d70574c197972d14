"""Finite scenario-tree markets, terminal-wealth wedges and conjugate functions.

A market is a rooted tree whose leaves are the atoms of a finite
probability space, with per-node asset prices.  The induced wedge of
zero-financed terminal wealths is spanned by the one-step, one-asset
increment claims; an arbitrary generator list can be supplied instead to
model trading constraints such as no short sales.

Convex conjugates of the built-in utility families are evaluated exactly
where a rational closed form exists and at 50 significant digits
otherwise.  Set-membership decisions elsewhere in the library never
depend on the inexact values; they only consult the support pattern and
the two structural flags (finite at zero, asymptotically linear).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath

from .cones import Cone, LemmaPreconditionError, cone_from_generators, linear_span_cone
from .linalg import Q0, Q1, Vec, parse_rational, vec

mpmath.mp.dps = 50

INF = float("inf")

Claim = Vec  # payoff vector indexed by atoms


class MarketFormatError(ValueError):
    """Malformed market specification text."""


@dataclass(frozen=True)
class ProbabilitySpace:
    atoms: tuple[str, ...]
    weights: Vec

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "weights", vec(self.weights))
        if not self.atoms:
            raise ValueError("empty atom list")
        if len(set(self.atoms)) != len(self.atoms):
            raise ValueError("duplicate atom labels")
        if len(self.weights) != len(self.atoms):
            raise ValueError("weights do not match atoms")
        if any(w < 0 for w in self.weights):
            raise ValueError("negative weight")
        if sum(self.weights) != 1:
            raise ValueError("weights sum != 1")

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def support(self) -> tuple[int, ...]:
        """Indices of atoms with positive weight."""
        return tuple(i for i, w in enumerate(self.weights) if w > 0)

    def index(self, atom: str) -> int:
        return self.atoms.index(atom)


@dataclass(frozen=True, eq=False)
class MarketModel:
    """A scenario tree: children map, per-node per-asset prices, horizon."""

    space: ProbabilitySpace
    root: str
    children: dict[str, tuple[str, ...]]
    prices: dict[tuple[str, int], Fraction]
    horizon: int
    n_assets: int
    nodes: tuple[str, ...] = field(default=())  # breadth-first, filled in init

    def __post_init__(self):
        order = [self.root]
        seen = {self.root}
        i = 0
        while i < len(order):
            for ch in self.children.get(order[i], ()):
                if ch in seen:
                    raise ValueError(f"node {ch!r} has two parents")
                seen.add(ch)
                order.append(ch)
            i += 1
        object.__setattr__(self, "nodes", tuple(order))

    def kids(self, node: str) -> tuple[str, ...]:
        return self.children.get(node, ())

    def is_leaf(self, node: str) -> bool:
        return not self.children.get(node)

    def leaves_under(self, node: str) -> list[int]:
        """Atom indices below a node."""
        if self.is_leaf(node):
            return [self.space.index(node)]
        out: list[int] = []
        for ch in self.kids(node):
            out.extend(self.leaves_under(ch))
        return out

    def price(self, node: str, asset: int) -> Fraction:
        return self.prices[(node, asset)]


def load_market(text: str) -> MarketModel:
    """Parse the line-oriented market format.

    Sections: "atoms:", "weights:", "periods:", "tree: parent -> c1 c2",
    "prices: node asset value".  Rationals are written p/q or p.  Unknown
    sections and structural defects are rejected with the line number.
    """
    atoms: list[str] | None = None
    weights: list[Fraction] | None = None
    periods: int | None = None
    edges: list[tuple[int, str, list[str]]] = []
    price_lines: list[tuple[int, str, int, Fraction]] = []

    def fail(lineno: int, msg: str):
        raise MarketFormatError(f"line {lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            fail(lineno, "expected 'section: ...'")
        section, rest = line.split(":", 1)
        section = section.strip()
        rest = rest.strip()
        if section == "atoms":
            atoms = rest.split()
            if not atoms:
                fail(lineno, "empty atom list")
        elif section == "weights":
            try:
                weights = [parse_rational(t) for t in rest.split()]
            except ValueError as exc:
                fail(lineno, str(exc))
        elif section == "periods":
            try:
                periods = int(rest)
            except ValueError:
                fail(lineno, f"bad period count {rest!r}")
        elif section == "tree":
            if "->" not in rest:
                fail(lineno, "tree line needs 'parent -> children'")
            parent, kids = rest.split("->", 1)
            parent = parent.strip()
            kid_list = kids.split()
            if not parent or not kid_list:
                fail(lineno, "tree line needs a parent and at least one child")
            edges.append((lineno, parent, kid_list))
        elif section == "prices":
            parts = rest.split()
            if len(parts) != 3:
                fail(lineno, "prices line needs 'node asset value'")
            try:
                asset = int(parts[1])
                value = parse_rational(parts[2])
            except ValueError as exc:
                fail(lineno, str(exc))
            price_lines.append((lineno, parts[0], asset, value))
        else:
            fail(lineno, f"unknown section {section!r}")

    if atoms is None:
        raise MarketFormatError("missing atoms section")
    if weights is None:
        raise MarketFormatError("missing weights section")
    if periods is None:
        raise MarketFormatError("missing periods section")
    if periods < 1:
        raise MarketFormatError("periods must be >= 1")
    try:
        space = ProbabilitySpace(atoms=tuple(atoms), weights=tuple(weights))
    except ValueError as exc:
        raise MarketFormatError(str(exc)) from exc

    children: dict[str, tuple[str, ...]] = {}
    parent_of: dict[str, str] = {}
    for lineno, parent, kids in edges:
        if parent in children:
            fail(lineno, f"node {parent!r} listed twice as a parent")
        for k in kids:
            if k in parent_of:
                fail(lineno, f"node {k!r} has two parents")
            parent_of[k] = parent
        children[parent] = tuple(kids)
    all_nodes = set(children) | set(parent_of)
    roots = [nd for nd in children if nd not in parent_of]
    if not edges:
        raise MarketFormatError("missing tree section")
    if len(roots) != 1:
        raise MarketFormatError(f"tree must have exactly one root, found {sorted(roots)}")
    root = roots[0]

    # reachability and leaf/atom bijection
    reach = {root}
    stack = [root]
    depth = {root: 0}
    while stack:
        nd = stack.pop()
        for ch in children.get(nd, ()):
            if ch in reach:
                raise MarketFormatError(f"node {ch!r} reached twice (cycle?)")
            reach.add(ch)
            depth[ch] = depth[nd] + 1
            stack.append(ch)
    if reach != all_nodes:
        raise MarketFormatError(
            f"unreachable nodes: {sorted(all_nodes - reach)}"
        )
    leaves = {nd for nd in all_nodes if nd not in children}
    if leaves != set(atoms):
        raise MarketFormatError(
            "tree leaves must coincide with the atoms; "
            f"leaves={sorted(leaves)} atoms={sorted(atoms)}"
        )
    bad_depth = [nd for nd in leaves if depth[nd] != periods]
    if bad_depth:
        raise MarketFormatError(
            f"leaves {sorted(bad_depth)} are not at depth periods={periods}"
        )

    prices: dict[tuple[str, int], Fraction] = {}
    assets = set()
    for lineno, node, asset, value in price_lines:
        if node not in all_nodes:
            fail(lineno, f"price for unknown node {node!r}")
        if (node, asset) in prices:
            fail(lineno, f"duplicate price for node {node!r} asset {asset}")
        if asset < 0:
            fail(lineno, "asset index must be >= 0")
        prices[(node, asset)] = value
        assets.add(asset)
    if not prices:
        raise MarketFormatError("missing prices section")
    n_assets = max(assets) + 1
    if assets != set(range(n_assets)):
        raise MarketFormatError(f"asset indices must be 0..{n_assets - 1} contiguously")
    missing = [
        (nd, a) for nd in sorted(all_nodes) for a in range(n_assets) if (nd, a) not in prices
    ]
    if missing:
        raise MarketFormatError(f"missing prices for {missing[:5]}")

    return MarketModel(
        space=space,
        root=root,
        children=children,
        prices=prices,
        horizon=periods,
        n_assets=n_assets,
    )


def one_step_increments(model: MarketModel) -> list[Claim]:
    """One claim per (non-leaf node, asset): the price increment over the
    step, as a payoff on the leaves."""
    n = model.space.n
    claims: list[Claim] = []
    for node in model.nodes:
        if model.is_leaf(node):
            continue
        for asset in range(model.n_assets):
            payoff = [Q0] * n
            base = model.price(node, asset)
            for child in model.kids(node):
                delta = model.price(child, asset) - base
                for leaf in model.leaves_under(child):
                    payoff[leaf] = delta
            claims.append(tuple(payoff))
    return claims


def gains_wedge(model: MarketModel, mode: str = "admissible", generators: Iterable = ()) -> Cone:
    """Terminal-wealth wedge K.

    On a finite tree every strategy keeps gains bounded, so the
    admissible wedge is the linear span of the one-step increments.
    With mode="generators" the wedge generated by the given claims is
    returned instead (conic trading constraints).
    """
    if mode == "admissible":
        claims = one_step_increments(model)
        if not claims:
            return cone_from_generators([], model.space.n)
        return linear_span_cone(claims)
    if mode == "generators":
        return cone_from_generators(list(generators), model.space.n)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# convex conjugates


def as_mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / mpmath.mpf(x.denominator)
    return mpmath.mpf(x)


def _num_le(a, b) -> bool:
    """a <= b, exact on rationals, 50-digit with a tiny slack otherwise."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a <= b
    if a == INF:
        return b == INF
    if b == INF:
        return True
    return as_mpf(a) <= as_mpf(b) + mpmath.mpf("1e-40")


def positive_part(v):
    if isinstance(v, Fraction):
        return v if v > 0 else Q0
    if v == INF:
        return INF
    m = as_mpf(v)
    return m if m > 0 else mpmath.mpf(0)


@dataclass(frozen=True)
class ConjugateFunction:
    """A convex function on [0, oo), finite on (0, oo).

    Families: exponential(gamma), logarithmic, power(p), and explicit
    piecewise-linear (knots plus a final slope).  The two flags are
    structural facts about the family used by exact membership logic.
    """

    family: str
    phi_at_zero_finite: bool
    asymptotically_linear: bool
    gamma: Fraction | None = None
    exponent: Fraction | None = None
    knots: tuple[tuple[Fraction, Fraction], ...] | None = None
    final_slope: Fraction | None = None

    def value(self, y):
        return conjugate_value(self, y)


def exponential_conjugate(gamma) -> ConjugateFunction:
    """Conjugate of u(x) = -exp(-gamma x): (y/gamma)(ln(y/gamma) - 1)."""
    gamma = Fraction(gamma)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return ConjugateFunction(
        family="exponential",
        phi_at_zero_finite=True,
        asymptotically_linear=False,
        gamma=gamma,
    )


def logarithmic_conjugate() -> ConjugateFunction:
    """Conjugate of u(x) = ln(x): -ln(y) - 1, infinite at zero."""
    return ConjugateFunction(
        family="logarithmic",
        phi_at_zero_finite=False,
        asymptotically_linear=True,
    )


def power_conjugate(p) -> ConjugateFunction:
    """Conjugate of u(x) = x^p / p for p < 1, p != 0."""
    p = Fraction(p)
    if p >= 1 or p == 0:
        raise ValueError("power exponent must satisfy p < 1, p != 0")
    return ConjugateFunction(
        family="power",
        phi_at_zero_finite=p < 0,
        asymptotically_linear=True,
        exponent=p,
    )


def piecewise_linear_conjugate(knots, final_slope) -> ConjugateFunction:
    """Explicit convex piecewise-linear function from (y, value) knots.

    Knots must start at y = 0 and have nondecreasing slopes; the final
    slope extends beyond the last knot.
    """
    ks = tuple((Fraction(y), Fraction(v)) for y, v in knots)
    final_slope = Fraction(final_slope)
    if not ks or ks[0][0] != 0:
        raise ValueError("knots must start at y = 0")
    ys = [y for y, _ in ks]
    if any(a >= b for a, b in zip(ys, ys[1:])):
        raise ValueError("knot abscissae must increase")
    slopes = [
        (v2 - v1) / (y2 - y1) for (y1, v1), (y2, v2) in zip(ks, ks[1:])
    ] + [final_slope]
    if any(s1 > s2 for s1, s2 in zip(slopes, slopes[1:])):
        raise ValueError("slopes must be nondecreasing (convexity)")
    return ConjugateFunction(
        family="piecewise_linear",
        phi_at_zero_finite=True,
        asymptotically_linear=True,
        knots=ks,
        final_slope=final_slope,
    )


def conjugate_value(f: ConjugateFunction, y):
    """Evaluate the conjugate at rational y >= 0.

    Returns an exact Fraction where the closed form permits, otherwise a
    50-digit mpmath float; +inf is allowed only at y = 0 for families
    that are unbounded there.
    """
    y = Fraction(y)
    if y < 0:
        raise ValueError("conjugate argument must be >= 0")
    if f.family == "exponential":
        if y == 0:
            return Q0
        if y == f.gamma:
            return Fraction(-1)
        u = as_mpf(y / f.gamma)
        return u * (mpmath.log(u) - 1)
    if f.family == "logarithmic":
        if y == 0:
            return INF
        if y == 1:
            return Fraction(-1)
        return -mpmath.log(as_mpf(y)) - 1
    if f.family == "power":
        p = f.exponent
        if y == 0:
            return Q0 if p < 0 else INF
        if y == 1:
            return (1 - p) / p
        # stationarity: solve u'(x) = x^(p-1) = y, then u(x) - x y
        x = mpmath.power(as_mpf(y), 1 / as_mpf(p - 1))
        return mpmath.power(x, as_mpf(p)) / as_mpf(p) - x * as_mpf(y)
    if f.family == "piecewise_linear":
        ks = f.knots
        if y >= ks[-1][0]:
            return ks[-1][1] + f.final_slope * (y - ks[-1][0])
        for (y1, v1), (y2, v2) in zip(ks, ks[1:]):
            if y1 <= y <= y2:
                return v1 + (v2 - v1) * (y - y1) / (y2 - y1)
    raise ValueError(f"unknown family {f.family!r}")


def left_derivative_at_one(f: ConjugateFunction):
    """Left-sided derivative of the conjugate at y = 1."""
    if f.family == "exponential":
        if f.gamma == 1:
            return Q0
        return -mpmath.log(as_mpf(f.gamma)) / as_mpf(f.gamma)
    if f.family in ("logarithmic", "power"):
        # the inverse marginal utility is 1 at y = 1 for these families
        return Fraction(-1)
    if f.family == "piecewise_linear":
        ks = f.knots
        if ks[-1][0] < 1:
            return f.final_slope
        prev = ks[0]
        for y2, v2 in ks[1:]:
            if y2 >= 1:
                y1, v1 = prev
                return (v2 - v1) / (y2 - y1)
            prev = (y2, v2)
        return f.final_slope
    raise ValueError(f"unknown family {f.family!r}")


def phi_hat(f: ConjugateFunction, y):
    """Linearization of the conjugate below 1: finite at 0, still convex,
    pointwise below the conjugate, and equal to it on [1, oo)."""
    y = Fraction(y)
    if y < 0:
        raise ValueError("argument must be >= 0")
    if y >= 1:
        return conjugate_value(f, y)
    phi1 = conjugate_value(f, 1)
    lstar = left_derivative_at_one(f)
    if isinstance(phi1, Fraction) and isinstance(lstar, Fraction):
        return phi1 + lstar * (y - 1)
    return as_mpf(phi1) + as_mpf(lstar) * as_mpf(y - 1)


@dataclass(frozen=True)
class GrowthCheckResult:
    passed: bool
    counterexample: tuple[Fraction, Fraction] | None = None
    family_witness: tuple[Fraction, Fraction] | None = None


def _family_growth_witness(
    f: ConjugateFunction, lam0: Fraction, lam1: Fraction
) -> tuple[Fraction, Fraction] | None:
    """Rational (alpha, beta) valid for all y > 0, lam in [lam0, lam1].

    Derivations use ln x <= x - 1 and e < 3 to stay rational.
    """
    pos = lambda q: q if q > 0 else Q0
    if f.family == "logarithmic":
        # phi+(lam y) <= phi+(lam0 y) <= phi+(y) + ln(1/lam0)+
        return Q1, max(Q1, Q1 / lam0)
    if f.family == "exponential":
        alpha = max(Q1, lam1)
        lncap = pos(lam1 - 1)  # >= ln+(lam1)
        beta = max(Q1, lam1 * lncap / f.gamma, 3 * lam1 * lncap)
        return alpha, beta
    if f.family == "power":
        p = f.exponent
        if p < 0:
            return Q1, Q1  # conjugate is negative, positive part vanishes
        # phi+(lam y) = lam^q phi+(y) with q = p/(p-1) < 0
        q = p / (p - 1)
        bound = max(Q1, Q1 / lam0) ** (int(-q) + 1)
        return bound, Q1
    if f.family == "piecewise_linear":
        m = max([pos(v) for _, v in f.knots] + [Q0])
        s = pos(f.final_slope)
        return Q1, max(Q1, m, s * lam1)
    return None


def growth_check(
    f: ConjugateFunction,
    lam0,
    lam1,
    alpha,
    beta,
    samples: int,
) -> GrowthCheckResult:
    """Grid test of the growth condition phi+(lam y) <= alpha phi+(y) + beta (y+1).

    One-sided: a counterexample refutes, a pass proves nothing beyond the
    grid (the condition quantifies over all y > 0).  For the built-in
    families a rational witnessing pair is attached; those families
    satisfy the condition for every interval.
    """
    lam0, lam1 = Fraction(lam0), Fraction(lam1)
    alpha, beta = Fraction(alpha), Fraction(beta)
    if not (0 < lam0 <= lam1):
        raise ValueError("need 0 < lam0 <= lam1")
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    lo = -(samples // 2)
    ys = [Fraction(2) ** k for k in range(lo, lo + samples)]
    nlam = min(9, samples + 1)
    if lam0 == lam1 or nlam == 1:
        lams = [lam0]
    else:
        lams = [lam0 + (lam1 - lam0) * Fraction(j, nlam - 1) for j in range(nlam)]
    for y in ys:
        base = positive_part(conjugate_value(f, y))
        for lam in lams:
            lhs = positive_part(conjugate_value(f, lam * y))
            rhs_exact_ok = isinstance(base, Fraction)
            rhs = (
                alpha * base + beta * (y + 1)
                if rhs_exact_ok
                else as_mpf(alpha) * as_mpf(base) + as_mpf(beta) * as_mpf(y + 1)
            )
            if not _num_le(lhs, rhs):
                return GrowthCheckResult(
                    passed=False,
                    counterexample=(y, lam),
                    family_witness=_family_growth_witness(f, lam0, lam1),
                )
    return GrowthCheckResult(
        passed=True, family_witness=_family_growth_witness(f, lam0, lam1)
    )


def truncation_bound_check(
    f: Callable,
    y0: Sequence[Fraction],
    y: Sequence[Fraction],
    y1: Sequence[Fraction],
    a,
    weights: Sequence[Fraction],
) -> bool:
    """Instance check of the convex truncation inequality.

    Verifies E[f(Y) 1{Y < a}] <= E[f(Y0)] + min(E[f(Y1)], f(a)) for
    0 <= Y0 <= Y <= Y1 on the support of the weights.  With a = inf the
    cap term is dropped (taken as +inf), which keeps the inequality valid
    for every admissible f.  Exact when all values are rational.
    """
    y0, y, y1 = vec(y0), vec(y), vec(y1)
    w = vec(weights)
    if not (len(y0) == len(y) == len(y1) == len(w)):
        raise ValueError("length mismatch")
    for i, wi in enumerate(w):
        if wi > 0 and not (0 <= y0[i] <= y[i] <= y1[i]):
            raise LemmaPreconditionError(
                f"need 0 <= Y0 <= Y <= Y1 on the support; violated at index {i}"
            )
    a_val = Fraction(a) if a != INF else INF

    def expect(values):
        terms = [wi * v if isinstance(v, Fraction) else v for wi, v in zip(w, values)]
        if all(isinstance(t, Fraction) for t in terms):
            return sum(terms, Q0)
        total = mpmath.mpf(0)
        for wi, v in zip(w, values):
            if wi == 0:
                continue
            if v == INF:
                return INF
            total += as_mpf(wi) * as_mpf(v)
        return total

    lhs_vals = [
        f(y[i]) if w[i] > 0 and (a_val == INF or y[i] < a_val) else Q0
        for i in range(len(w))
    ]
    lhs = expect(lhs_vals)
    rhs0 = expect([f(y0[i]) if w[i] > 0 else Q0 for i in range(len(w))])
    rhs1 = expect([f(y1[i]) if w[i] > 0 else Q0 for i in range(len(w))])
    if a_val != INF:
        cap = f(a_val)
        if not _num_le(rhs1, cap):
            rhs1 = cap
    if rhs0 == INF or rhs1 == INF:
        return True
    if isinstance(rhs0, Fraction) and isinstance(rhs1, Fraction):
        rhs = rhs0 + rhs1
    else:
        rhs = as_mpf(rhs0) + as_mpf(rhs1)
    return _num_le(lhs, rhs)
