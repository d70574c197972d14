"""Super-replication prices, their dual representations and risk measures.

The primal price of a claim over a wedge C is the least budget x such
that x plus some element of C dominates the claim on the support of P;
it is computed by an exact LP over the generators of C augmented with
the negative orthant.  The dual price is the maximum expectation over
the relevant family of separating measures.  For the built-in families
the two are equal by construction of the pricing cone, and the library
treats any exact mismatch as an internal defect rather than a result.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import lp
from .cones import (
    Cone,
    cone_from_generators,
    cones_equal,
    contains,
    dd_convert,
    intersect,
    linear_span_cone,
    polar,
    umbrella_hull,
    weak_closure,
)
from .linalg import Q0, Q1, Vec, dot, in_span, kernel, span_basis, vec
from .lp import InternalCheckError
from .market import Claim, ConjugateFunction, MarketModel, gains_wedge, one_step_increments
from .measures import (
    EmptyFamilyError,
    EntropyClass,
    Measure,
    MeasureSet,
    decide_membership,
    density,
    density_span,
    embed,
    entropy_representatives,
    hat_vertices,
    market_pairing,
    restrict,
    separating_polytope,
)

FAMILIES = ("m1", "mphi", "mhatphi", "subset")


class DominationEmptyError(ValueError):
    """No budget levels dominate the claim over the chosen wedge."""


class PriceUnboundedError(ValueError):
    """Budgets dominating the claim are unbounded below (degenerate wedge)."""


@dataclass(frozen=True, eq=False)
class PricingProblem:
    model: MarketModel
    wedge: Cone
    claim: Claim
    family: str = "mphi"
    conjugate: ConjugateFunction | None = None
    subset: tuple[Measure, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "claim", vec(self.claim))
        if len(self.claim) != self.model.space.n:
            raise ValueError("claim dimension must equal the atom count")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.family in ("mphi", "mhatphi") and self.conjugate is None:
            raise ValueError("entropy families need a conjugate function")
        if self.family == "subset" and not self.subset:
            raise ValueError("subset family needs a nonempty measure list")


@dataclass(frozen=True, eq=False)
class PriceResult:
    price: Fraction
    primal_budget: Fraction
    dominating: Vec  # full-atom embedding; domination holds on supp(P)
    dual_witness: Measure
    lp_dual_witness: Measure  # measure read off the primal LP's dual point
    attained: bool
    attained_in: str


def _wedge_on_support(k: Cone, support: Sequence[int]) -> Cone:
    gens = k.generators if k.generators is not None else dd_convert(k).generators
    return cone_from_generators([restrict(g, support) for g in gens], len(support))


def _umbrella_lp(claim_s: Vec, gens: Sequence[Vec], sdim: int):
    """min x s.t. claim <= x*1 + sum mu_g g on every coordinate."""
    nvar = 1 + len(gens)
    rows = []
    for w in range(sdim):
        row = [Fraction(-1)] + [-g[w] for g in gens]
        rows.append(tuple(row))
    return lp.solve(
        lp.LinearProgram(
            objective=tuple([Q1] + [Q0] * len(gens)),
            constraint_matrix=tuple(rows),
            rhs=tuple(-x for x in claim_s),
            row_sense=("<=",) * sdim,
            variable_bounds=("free",) + (">=0",) * len(gens),
            sense="min",
        )
    )


def umbrella_price(claim: Claim, c: Cone, support: Sequence[int] | None = None) -> Fraction:
    """Least budget whose cash-augmented wedge element dominates the claim.

    Computes inf{x : claim - x*1 lies in C - E+} over the support
    coordinates.  The wedge may be given in full-atom or in support
    coordinates (dimensions disambiguate).  Raises PriceUnboundedError
    when no finite price exists and DominationEmptyError when nothing
    dominates the claim at any budget.
    """
    claim = vec(claim)
    if support is None:
        support = tuple(range(len(claim)))
    support = tuple(support)
    if c.dim == len(support):
        c_s = c
    elif c.dim == len(claim):
        c_s = _wedge_on_support(c, support)
    else:
        raise ValueError("wedge dimension matches neither the claim nor the support")
    claim_s = restrict(claim, support)
    gens = c_s.generators if c_s.generators is not None else dd_convert(c_s).generators
    out = _umbrella_lp(claim_s, gens, len(support))
    if out.status == "infeasible":
        raise DominationEmptyError("no budget dominates the claim over this wedge")
    if out.status == "unbounded":
        raise PriceUnboundedError("dominating budgets are unbounded below")
    return out.value


def dual_price(
    claim: Claim,
    measures: Sequence[Measure],
    family: str = "m1",
    conjugate: ConjugateFunction | None = None,
    m1: MeasureSet | None = None,
) -> tuple[Fraction, Measure, str]:
    """Maximum expectation over the closure polytope of the family.

    ``measures`` are the vertices of that closure.  For the finite-
    entropy family the supremum equals this maximum; the returned tag
    says where it is attained: in the family itself when the optimal
    face contains a full-support measure, otherwise only in the
    loss-entropy closure.  Ties pick the lexicographically first vertex.
    """
    claim = vec(claim)
    if not measures:
        raise EmptyFamilyError("empty measure family")
    values = [q.expectation(claim) for q in measures]
    best = max(values)
    maximizers = [q for q, v in zip(measures, values) if v == best]
    witness = min(maximizers, key=lambda q: q.masses)
    if family != "mphi":
        return best, witness, family
    if conjugate is not None and conjugate.phi_at_zero_finite:
        return best, witness, "mphi"
    space_support = None
    if m1 is not None:
        space_support = set(m1.space.support)
    if space_support is None:
        space_support = {i for q in measures for i, m in enumerate(q.masses) if m > 0}
    optimal_support = {
        i for q in maximizers for i, m in enumerate(q.masses) if m > 0
    }
    if optimal_support >= space_support:
        k = len(maximizers)
        avg = Measure(
            masses=tuple(
                sum((q.masses[i] for q in maximizers), Q0) / k
                for i in range(len(claim))
            )
        )
        return best, avg, "mphi"
    return best, witness, "mhatphi"


def build_c_e_k(
    model: MarketModel,
    k: Cone,
    measures: Sequence[Measure],
    *,
    assert_face: bool = False,
) -> Cone:
    """Weak closure of the umbrella hull of K under the pairing of M.

    The pairing's subspace is the density span of M; the closure adds
    the annihilator directions.  With ``assert_face`` (valid when M is
    the vertex list of a face of the separating polytope) the result is
    checked against the polar of M's densities, which must coincide.
    """
    space = model.space
    support = space.support
    k_s = _wedge_on_support(k, support)
    f_basis = density_span(measures, space)
    pairing = market_pairing(space, f_basis)
    c = weak_closure(umbrella_hull(k_s), pairing)
    if assert_face:
        dens = [density(q, space) for q in measures]
        p = dd_convert(polar(dens, pairing, into_subspace=False))
        if not cones_equal(c, p):
            raise InternalCheckError(
                "weak closure of the umbrella hull differs from the face polar"
            )
    return c


def build_c_phi(
    model: MarketModel,
    k: Cone,
    f: ConjugateFunction,
    *,
    m1: MeasureSet | None = None,
) -> Cone:
    """The wedge of claims priced nonpositively by every finite-entropy measure.

    Computed as the polar of the vertex densities of the loss-entropy
    closure (the polar of a dense subfamily equals the polar of its
    closure), and cross-checked exactly against the weak closure of the
    umbrella hull of K under the finite-entropy pairing.
    """
    space = model.space
    support = space.support
    if m1 is None:
        m1 = separating_polytope(model, k)
    reps = entropy_representatives(m1, f)  # EmptyFamilyError when empty
    f_basis = density_span(reps, space)
    pairing = market_pairing(space, f_basis)
    dens = [density(v, space) for v in hat_vertices(m1, f)]
    c = dd_convert(polar(dens, pairing, into_subspace=False))
    k_s = _wedge_on_support(k, support)
    other = weak_closure(umbrella_hull(k_s), pairing)
    if not cones_equal(c, other):
        raise InternalCheckError(
            "entropy polar cone differs from the weak closure of the umbrella hull"
        )
    return c


def _saturation_vertices(m1: MeasureSet, subset: Sequence[Measure]) -> list[Measure]:
    """Vertices of {q in M1 : q in span(subset)} (the span saturation)."""
    basis = span_basis([q.masses for q in subset])
    eqs = list(m1.equalities)
    for nrm in kernel(basis):
        eqs.append((nrm, Q0))
    verts = lp.enumerate_vertices(
        m1.inequalities, eqs, dim=m1.space.n, assume_bounded=True
    )
    return [Measure(masses=v) for v in verts]


def price_with_duality(problem: PricingProblem) -> PriceResult:
    """Primal super-replication price with its dual witness, exactly equal.

    The primal runs over the pricing cone of the requested family; the
    dual maximizes the expectation over the family's closure vertices.
    Any exact inequality between the two would contradict the duality
    theory on a finite space and raises InternalCheckError.
    """
    model, k = problem.model, problem.wedge
    space = model.space
    support = space.support
    m1 = separating_polytope(model, k)
    if m1.is_empty:
        raise EmptyFamilyError("no separating measure exists")
    family = problem.family
    if family == "m1":
        duals = list(m1.vertices)
        cone = build_c_e_k(model, k, duals, assert_face=True)
    elif family == "mhatphi":
        duals = list(hat_vertices(m1, problem.conjugate))
        cone = build_c_e_k(model, k, duals, assert_face=True)
    elif family == "mphi":
        duals = list(hat_vertices(m1, problem.conjugate))
        cone = build_c_phi(model, k, problem.conjugate, m1=m1)
    else:
        for q in problem.subset:
            if not m1.contains(q):
                raise ValueError("subset family member outside the separating polytope")
        duals = _saturation_vertices(m1, problem.subset)
        cone = build_c_e_k(model, k, problem.subset)
    value, witness, attained_in = dual_price(
        problem.claim, duals, family=family, conjugate=problem.conjugate, m1=m1
    )
    claim_s = restrict(problem.claim, support)
    out = _umbrella_lp(claim_s, cone.generators, len(support))
    if out.status == "unbounded":
        raise PriceUnboundedError("dominating budgets are unbounded below")
    if out.status == "infeasible":
        raise DominationEmptyError("no budget dominates the claim over this wedge")
    if out.value != value:
        raise InternalCheckError(
            f"primal price {out.value} differs from dual price {value}"
        )
    mu = out.primal_point[1:]
    dominating_s = tuple(
        sum((m * g[w] for m, g in zip(mu, cone.generators)), Q0)
        for w in range(len(support))
    )
    for xw, dw in zip(claim_s, dominating_s):
        if xw > out.value + dw:
            raise InternalCheckError("dominating claim fails the domination check")
    lp_dual = Measure(
        masses=embed([-y for y in out.dual_point], support, space.n)
    )
    return PriceResult(
        price=out.value,
        primal_budget=out.value,
        dominating=embed(dominating_s, support, space.n),
        dual_witness=witness,
        lp_dual_witness=lp_dual,
        attained=(attained_in == family),
        attained_in=attained_in,
    )


# ---------------------------------------------------------------------------
# coherent risk measures


def coherent_risk(claim: Claim, c: Cone, support: Sequence[int] | None = None) -> Fraction:
    """Least cash make-up m with -claim - m*1 acceptable (inside C).

    C must be an umbrella wedge (contain the negative orthant); its
    acceptance set is -C.  Worst-case example: C = -E+ gives -min(claim).
    """
    claim = vec(claim)
    if support is None:
        support = tuple(range(len(claim)))
    support = tuple(support)
    if c.dim == len(support):
        c_s = c
    elif c.dim == len(claim):
        c_s = _wedge_on_support(c, support)
    else:
        raise ValueError("wedge dimension matches neither the claim nor the support")
    c_s = dd_convert(c_s)
    sdim = len(support)
    for i in range(sdim):
        e = [Q0] * sdim
        e[i] = Fraction(-1)
        if not contains(c_s, e):
            raise ValueError("risk measures need an umbrella wedge (C ⊇ -E+)")
    neg_claim = tuple(-x for x in restrict(claim, support))
    out = _umbrella_lp(neg_claim, c_s.generators, sdim)
    if out.status == "unbounded":
        raise PriceUnboundedError("risk is unbounded below over this wedge")
    if out.status == "infeasible":
        raise DominationEmptyError("no cash level makes the position acceptable")
    return out.value


def acceptance_set_matches(c: Cone, claim: Claim, support: Sequence[int] | None = None) -> bool:
    """Exact instance check that risk(X) <= 0 iff -X lies in C."""
    rho = coherent_risk(claim, c, support)
    claim = vec(claim)
    if support is None:
        support = tuple(range(len(claim)))
    support = tuple(support)
    c_s = c if c.dim == len(support) else _wedge_on_support(c, support)
    inside = contains(dd_convert(c_s), tuple(-x for x in restrict(claim, support)))
    return (rho <= 0) == inside


# ---------------------------------------------------------------------------
# the admissible-trading approximation


@dataclass(frozen=True)
class TruncationReport:
    constant: Fraction
    members_ok: bool
    monotone_ok: bool
    reaches_claim: bool
    expectations_monotone: bool
    cone_identity: bool | None
    details: tuple[str, ...]

    @property
    def passed(self) -> bool:
        core = (
            self.members_ok
            and self.monotone_ok
            and self.reaches_claim
            and self.expectations_monotone
        )
        return core and (self.cone_identity is not False)


def admissible_truncation_check(
    claim: Claim, model: MarketModel, conjugate: ConjugateFunction | None = None
) -> TruncationReport:
    """Approximate a terminal wealth by its bounded truncations, exactly.

    The truncations min(X, n) must stay dominated by X (hence inside the
    umbrella hull of the admissible wedge), increase monotonically,
    reach X at n >= max X, and have monotonically converging
    expectations under every separating vertex.  With a conjugate
    supplied, also verifies that the entropy pricing cone equals the
    weak closure of the bounded-claim wedge.
    """
    claim = vec(claim)
    k = gains_wedge(model)
    increments = one_step_increments(model)
    if not in_span(claim, increments):
        raise ValueError("claim is not a zero-financed terminal wealth")
    space = model.space
    support = space.support
    claim_s = restrict(claim, support)
    const = max(Q0, -min(claim_s))
    top = max(claim_s)
    n_max = max(1, -(-top.numerator // top.denominator)) if top > 0 else 1
    k_s = _wedge_on_support(k, support)
    umb = dd_convert(umbrella_hull(k_s))
    m1 = separating_polytope(model, k)
    details = []
    members_ok = True
    monotone_ok = True
    truncations = []
    for n in range(1, n_max + 1):
        xn = tuple(min(x, Fraction(n)) for x in claim_s)
        truncations.append(xn)
        if not contains(umb, xn):
            members_ok = False
            details.append(f"truncation at n={n} leaves the bounded dominated wedge")
        if any(x < -const for x in xn):
            monotone_ok = False
            details.append(f"truncation at n={n} drops below -c")
    for a, b in zip(truncations, truncations[1:]):
        if any(x > y for x, y in zip(a, b)):
            monotone_ok = False
            details.append("truncations fail to increase")
    reaches = truncations[-1] == claim_s
    expectations_ok = True
    for q in m1.vertices:
        qs = restrict(q.masses, support)
        evs = [dot(qs, xn) for xn in truncations]
        target = dot(qs, claim_s)
        if any(a > b for a, b in zip(evs, evs[1:])) or evs[-1] != target:
            expectations_ok = False
            details.append("vertex expectations fail to increase to E[X]")
    cone_ok: bool | None = None
    if conjugate is not None:
        c_phi = build_c_phi(model, k, conjugate, m1=m1)
        reps = entropy_representatives(m1, conjugate)
        pairing = market_pairing(space, density_span(reps, space))
        closure = weak_closure(umb, pairing)
        cone_ok = cones_equal(c_phi, closure)
        if not cone_ok:
            details.append("entropy cone differs from the closed bounded-claim wedge")
    return TruncationReport(
        constant=const,
        members_ok=members_ok,
        monotone_ok=monotone_ok,
        reaches_claim=reaches,
        expectations_monotone=expectations_ok,
        cone_identity=cone_ok,
        details=tuple(details),
    )


# ---------------------------------------------------------------------------
# the symmetric duality equivalence


@dataclass(frozen=True)
class SymmetricDualityReport:
    density_cone_saturates: bool
    polar_matches_closure: bool
    closure_polar_matches: bool

    @property
    def all_agree(self) -> bool:
        return (
            self.density_cone_saturates
            == self.polar_matches_closure
            == self.closure_polar_matches
        )

    @property
    def all_true(self) -> bool:
        return (
            self.density_cone_saturates
            and self.polar_matches_closure
            and self.closure_polar_matches
        )


def verify_symmetric_duality(
    model: MarketModel,
    k: Cone,
    measures: Sequence[Measure],
    pairing_subspace: Sequence[Vec] | None = None,
) -> SymmetricDualityReport:
    """Evaluate the three equivalent duality statements on an instance.

    (a) the closed cone of M's densities equals the subspace cap of the
    separating density cone; (b) the polar of M's densities equals the
    weak closure of the umbrella hull of K; (c) that closed density cone
    equals the polar of the closure.  The theorem says the three truth
    values agree; by default the pairing subspace is the density span of
    M itself, and an explicit larger span may be supplied instead.
    """
    space = model.space
    support = space.support
    if not measures:
        raise EmptyFamilyError("empty measure family")
    m1 = separating_polytope(model, k)
    dens_m = [density(q, space) for q in measures]
    f_basis = (
        span_basis(list(pairing_subspace))
        if pairing_subspace is not None
        else span_basis(dens_m)
    )
    pairing = market_pairing(space, f_basis)
    sdim = len(support)
    closure_rm = dd_convert(cone_from_generators(dens_m, sdim))
    m1_cone = dd_convert(
        cone_from_generators([density(q, space) for q in m1.vertices], sdim)
    )
    cap = intersect(linear_span_cone(f_basis), m1_cone)
    t1 = cones_equal(closure_rm, cap)
    k_s = _wedge_on_support(k, support)
    umb = umbrella_hull(k_s)
    c_e_k = weak_closure(umb, pairing)
    t2 = cones_equal(dd_convert(polar(dens_m, pairing, into_subspace=False)), c_e_k)
    c_polar = dd_convert(polar(c_e_k, pairing, into_subspace=True))
    s_polar = dd_convert(polar(umb, pairing, into_subspace=True))
    if not cones_equal(c_polar, s_polar):
        raise InternalCheckError("polar of the closure differs from the hull polar")
    t3 = cones_equal(closure_rm, c_polar)
    return SymmetricDualityReport(
        density_cone_saturates=t1,
        polar_matches_closure=t2,
        closure_polar_matches=t3,
    )


# ---------------------------------------------------------------------------
# pricing axioms (shared by tests and the verification command)


def price_axioms_hold(
    model: MarketModel,
    k: Cone,
    f: ConjugateFunction,
    samples: int = 25,
    seed: int = 0,
) -> bool:
    """Cash invariance, positive homogeneity, subadditivity, monotonicity."""
    rng = random.Random(seed)
    n = model.space.n
    m1 = separating_polytope(model, k)
    cone = build_c_phi(model, k, f, m1=m1)
    support = model.space.support

    def price(x):
        return umbrella_price(vec(x), cone, support)

    for _ in range(samples):
        x = tuple(Fraction(rng.randint(-8, 8), rng.randint(1, 4)) for _ in range(n))
        y = tuple(Fraction(rng.randint(-8, 8), rng.randint(1, 4)) for _ in range(n))
        c = Fraction(rng.randint(-6, 6), rng.randint(1, 3))
        lam = Fraction(rng.randint(0, 9), rng.randint(1, 3))
        px, py = price(x), price(y)
        if price(tuple(a + c for a in x)) != px + c:
            return False
        if price(tuple(lam * a for a in x)) != lam * px:
            return False
        if price(tuple(a + b for a, b in zip(x, y))) > px + py:
            return False
        dominated = tuple(a - Fraction(rng.randint(0, 3)) for a in x)
        if price(dominated) > px:
            return False
    return True
