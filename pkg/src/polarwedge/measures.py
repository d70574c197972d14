"""Separating-measure polytopes, densities and entropy-restricted families.

The separating measures of a market with terminal-wealth wedge K form a
polytope: probabilities vanishing off the support of P whose expectation
is nonpositive on K.  Densities dQ/dP live in the coordinates of supp(P)
and span the dual side F of the pricing bilinear system.

The finite-entropy family is not closed, so it is carried as an exact
membership predicate plus finitely many certified representatives (a
deterministic full-support witness and the vertices pushed toward it);
every closure statement about it is certified through containments and
the explicit approximating family, never by floating point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import lp
from .cones import (
    Cone,
    Pairing,
    cone_from_generators,
    cone_leq,
    cones_equal,
    dd_convert,
    intersect,
    linear_span_cone,
    polar,
)
from .linalg import (
    Q0,
    Q1,
    Vec,
    dot,
    format_vec,
    in_span,
    parse_rational,
    span_basis,
    vec,
)
from .market import ConjugateFunction, MarketModel, ProbabilitySpace


class EmptyFamilyError(ValueError):
    """The nonempty-entropy-family assumption fails on this instance."""


@dataclass(frozen=True)
class Measure:
    """A probability measure as a mass vector over all atoms."""

    masses: Vec

    def __post_init__(self):
        object.__setattr__(self, "masses", vec(self.masses))
        if any(m < 0 for m in self.masses):
            raise ValueError("negative mass")
        if sum(self.masses) != 1:
            raise ValueError("masses must sum to 1")

    def expectation(self, claim: Sequence[Fraction]) -> Fraction:
        return dot(self.masses, claim)


def parse_measure(text: str) -> Measure:
    line = text.strip()
    if not line.startswith("measure:"):
        raise ValueError("expected 'measure: q1 q2 ... qn'")
    return Measure(masses=vec(parse_rational(t) for t in line[len("measure:"):].split()))


def format_measure(q: Measure) -> str:
    return "measure: " + format_vec(q.masses) + "\n"


def restrict(claim: Sequence[Fraction], support: Sequence[int]) -> Vec:
    """Project a full-atom vector onto the support coordinates."""
    claim = vec(claim)
    return tuple(claim[i] for i in support)


def embed(values: Sequence[Fraction], support: Sequence[int], n: int) -> Vec:
    out = [Q0] * n
    for x, i in zip(values, support):
        out[i] = Fraction(x)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class MeasureSet:
    """The polytope of separating measures, with enumerated vertices."""

    space: ProbabilitySpace
    wedge: Cone
    inequalities: tuple[tuple[Vec, Fraction], ...]
    equalities: tuple[tuple[Vec, Fraction], ...]
    vertices: tuple[Measure, ...]

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    def contains(self, q: Measure) -> bool:
        """Exact constraint evaluation; no enumeration involved."""
        return all(dot(nrm, q.masses) <= rhs for nrm, rhs in self.inequalities) and all(
            dot(nrm, q.masses) == rhs for nrm, rhs in self.equalities
        )


def separating_polytope(model: MarketModel | ProbabilitySpace, k: Cone) -> MeasureSet:
    """Measures Q << P with nonpositive expectation on every claim in K.

    Emptiness is a legitimate result here (the pricing layer refuses
    later); K containing a strictly positive claim forces it.
    """
    space = model.space if isinstance(model, MarketModel) else model
    n = space.n
    if k.dim != n:
        raise ValueError("wedge dimension does not match the atom count")
    gens = k.generators if k.generators is not None else dd_convert(k).generators
    ineqs: list[tuple[Vec, Fraction]] = []
    for i in range(n):
        e = [Q0] * n
        e[i] = Fraction(-1)
        ineqs.append((tuple(e), Q0))
    for g in gens:
        ineqs.append((g, Q0))
    eqs: list[tuple[Vec, Fraction]] = [((Q1,) * n, Q1)]
    support = set(space.support)
    for i in range(n):
        if i not in support:
            e = [Q0] * n
            e[i] = Q1
            eqs.append((tuple(e), Q0))
    verts = lp.enumerate_vertices(ineqs, eqs, dim=n, assume_bounded=True)
    return MeasureSet(
        space=space,
        wedge=k,
        inequalities=tuple(ineqs),
        equalities=tuple(eqs),
        vertices=tuple(Measure(masses=v) for v in verts),
    )


# ---------------------------------------------------------------------------
# densities


def density(q: Measure, space: ProbabilitySpace) -> Vec:
    """dQ/dP on the support coordinates of P; rejects Q not << P."""
    for i, (qm, pm) in enumerate(zip(q.masses, space.weights)):
        if pm == 0 and qm != 0:
            raise ValueError(f"measure is not absolutely continuous at atom {i}")
    return tuple(q.masses[i] / space.weights[i] for i in space.support)


def measure_from_density(d: Sequence[Fraction], space: ProbabilitySpace) -> Measure:
    """Inverse of the density map: Q(A) = sum of p_i * d_i over A."""
    masses = embed(
        [space.weights[i] * x for i, x in zip(space.support, d)],
        space.support,
        space.n,
    )
    return Measure(masses=masses)


def density_span(measures: Iterable[Measure], space: ProbabilitySpace) -> list[Vec]:
    """Canonical basis of the span of the densities (the subspace F)."""
    ms = list(measures)
    if not ms:
        raise ValueError("density span of an empty family")
    return span_basis([density(q, space) for q in ms])


def market_pairing(
    space: ProbabilitySpace, subspace_basis: Sequence[Vec] | None = None
) -> Pairing:
    """The bilinear system pairing <z,w> = E[zw] in support coordinates."""
    return Pairing(
        weights=restrict(space.weights, space.support),
        subspace_basis=tuple(subspace_basis) if subspace_basis is not None else None,
    )


# ---------------------------------------------------------------------------
# entropy families


@dataclass(frozen=True)
class EntropyClass:
    base: MeasureSet
    conjugate: ConjugateFunction
    kind: str  # 'finite_entropy' | 'finite_loss_entropy'

    def __post_init__(self):
        if self.kind not in ("finite_entropy", "finite_loss_entropy"):
            raise ValueError("kind must be finite_entropy or finite_loss_entropy")


def decide_membership(q: Measure, cls: EntropyClass) -> bool:
    """Exact membership decision.

    On a finite space the loss-entropy sum runs over density >= 1 where
    the conjugate is finite, so every separating measure qualifies.  The
    full entropy is finite unless a zero-density atom meets a conjugate
    that is infinite at zero.
    """
    if not cls.base.contains(q):
        raise ValueError("measure is not in the separating polytope")
    if cls.kind == "finite_loss_entropy":
        return True
    if cls.conjugate.phi_at_zero_finite:
        return True
    d = density(q, cls.base.space)
    return all(x > 0 for x in d)


def full_support_member(m1: MeasureSet) -> Measure | None:
    """Deterministic witness of a separating measure with full support.

    The barycenter of the vertices when it already has full support,
    otherwise the barycenter mixed with the point maximizing the minimum
    support coordinate (an LP); None when no full-support member exists.
    """
    if m1.is_empty:
        return None
    n = m1.space.n
    k = len(m1.vertices)
    bary = tuple(
        sum((v.masses[i] for v in m1.vertices), Q0) / k for i in range(n)
    )
    support = m1.space.support
    if all(bary[i] > 0 for i in support):
        return Measure(masses=bary)
    # max t s.t. q in the polytope and q_i >= t on the support
    nvar = n + 1
    rows = []
    rhs = []
    senses = []
    for nrm, b in m1.inequalities:
        rows.append(nrm + (Q0,))
        rhs.append(b)
        senses.append("<=")
    for nrm, b in m1.equalities:
        rows.append(nrm + (Q0,))
        rhs.append(b)
        senses.append("=")
    for i in support:
        e = [Q0] * nvar
        e[i] = Fraction(-1)
        e[n] = Q1
        rows.append(tuple(e))
        rhs.append(Q0)
        senses.append("<=")
    out = lp.solve(
        lp.LinearProgram(
            objective=tuple([Q0] * n + [Q1]),
            constraint_matrix=tuple(rows),
            rhs=tuple(rhs),
            row_sense=tuple(senses),
            variable_bounds=("free",) * nvar,
            sense="max",
        )
    )
    if out.status != "optimal" or out.value <= 0:
        return None
    best = out.primal_point[:n]
    mixed = tuple((a + b) / 2 for a, b in zip(bary, best))
    return Measure(masses=mixed)


def entropy_representatives(m1: MeasureSet, f: ConjugateFunction) -> list[Measure]:
    """Certified members of the finite-entropy family spanning its densities.

    Raises EmptyFamilyError when the family is empty.
    """
    if m1.is_empty:
        raise EmptyFamilyError("no separating measure exists")
    cls = EntropyClass(base=m1, conjugate=f, kind="finite_entropy")
    if f.phi_at_zero_finite:
        return list(m1.vertices)
    w = full_support_member(m1)
    if w is None:
        raise EmptyFamilyError("no separating measure with finite entropy exists")
    reps = [w]
    for v in m1.vertices:
        if decide_membership(v, cls):
            reps.append(v)
        else:
            mid = Measure(
                masses=tuple((a + b) / 2 for a, b in zip(v.masses, w.masses))
            )
            reps.append(mid)
    for q in reps:
        if not decide_membership(q, cls):
            raise lp.InternalCheckError("representative escaped the entropy family")
    return reps


def hat_vertices(m1: MeasureSet, f: ConjugateFunction) -> tuple[Measure, ...]:
    """Vertices of the loss-entropy family's polytope.

    On a finite space every separating measure has finite loss-entropy,
    so this is the whole separating polytope.
    """
    return m1.vertices


# ---------------------------------------------------------------------------
# faces


def is_face(
    member: Callable[[Measure], bool],
    m1: MeasureSet,
    samples: int = 40,
    seed: int = 0,
) -> bool:
    """Test the face property of {q in M1 : member(q)}.

    Whenever a strict convex combination of two points of the polytope
    satisfies the predicate, both endpoints must.  Checks all vertex
    pairs and random rational points at random rational mixtures.
    """
    verts = [v.masses for v in m1.vertices]
    if not verts:
        return True
    rng = random.Random(seed)

    def rand_point():
        cuts = sorted(rng.randint(0, 12) for _ in range(len(verts) - 1))
        weights = []
        prev = 0
        for c in list(cuts) + [12]:
            weights.append(Fraction(c - prev, 12))
            prev = c
        return tuple(
            sum((w * v[i] for w, v in zip(weights, verts)), Q0)
            for i in range(m1.space.n)
        )

    pairs = [(a, b) for i, a in enumerate(verts) for b in verts[i + 1 :]]
    for _ in range(samples):
        pairs.append((rand_point(), rand_point()))
    alphas = [Fraction(1, 2), Fraction(1, 3), Fraction(4, 7)]
    for a, b in pairs:
        qa, qb = Measure(masses=a), Measure(masses=b)
        for alpha in alphas:
            mix = Measure(
                masses=tuple(alpha * x + (1 - alpha) * y for x, y in zip(a, b))
            )
            if member(mix) and not (member(qa) and member(qb)):
                return False
    return True


@dataclass(frozen=True)
class FaceSpanReport:
    span_matches_predicate: bool
    random_points_agree: bool
    details: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return self.span_matches_predicate and self.random_points_agree


def verify_face_span_identity(
    m1: MeasureSet,
    representatives: Sequence[Measure],
    member: Callable[[Measure], bool],
    samples: int = 30,
    seed: int = 1,
) -> FaceSpanReport:
    """Check that the span of a face meets the polytope in the face itself.

    ``representatives`` must span the face's linear hull; ``member`` is
    the face's exact membership predicate.  Vertices and random points
    of the polytope must lie in the span exactly when they satisfy the
    predicate.
    """
    if not representatives:
        raise EmptyFamilyError("face has no representatives")
    basis = span_basis([q.masses for q in representatives])
    details = []
    ok_v = True
    for v in m1.vertices:
        inside = in_span(v.masses, basis)
        pred = member(v)
        if inside != pred:
            ok_v = False
            details.append(
                f"vertex {format_vec(v.masses)}: span={inside} predicate={pred}"
            )
    rng = random.Random(seed)
    verts = [v.masses for v in m1.vertices]
    ok_r = True
    for _ in range(samples if verts else 0):
        cuts = sorted(rng.randint(0, 12) for _ in range(len(verts) - 1))
        weights = []
        prev = 0
        for c in list(cuts) + [12]:
            weights.append(Fraction(c - prev, 12))
            prev = c
        point = tuple(
            sum((w * v[i] for w, v in zip(weights, verts)), Q0)
            for i in range(m1.space.n)
        )
        q = Measure(masses=point)
        inside = in_span(point, basis)
        pred = member(q)
        if inside != pred:
            ok_r = False
            details.append(
                f"random point {format_vec(point)}: span={inside} predicate={pred}"
            )
    return FaceSpanReport(
        span_matches_predicate=ok_v,
        random_points_agree=ok_r,
        details=tuple(details),
    )


# ---------------------------------------------------------------------------
# the entropy-closure identities


@dataclass(frozen=True)
class WeakCloseReport:
    representatives_in_family: bool
    representative_cone_contained: bool
    approximating_family_in_family: bool
    span_agrees: bool
    cone_identity: bool
    cone_weakly_closed: bool
    claim_cone_identity: bool
    details: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return all(
            (
                self.representatives_in_family,
                self.representative_cone_contained,
                self.approximating_family_in_family,
                self.span_agrees,
                self.cone_identity,
                self.cone_weakly_closed,
                self.claim_cone_identity,
            )
        )


def verify_weakclose(
    model: MarketModel,
    k: Cone,
    f: ConjugateFunction,
    m1: MeasureSet | None = None,
) -> WeakCloseReport:
    """Certify the closure identities between the entropy families.

    Exact steps, in order: the representatives really have finite
    entropy; the cone of their densities sits inside the cone of the
    loss-entropy family's vertex densities; each vertex is the limit of
    the explicit approximating family (1-1/n) vertex + (1/n) witness,
    whose members have finite entropy at every tested n (this certifies
    that the closure of the finite-entropy density cone is the vertex
    cone); the density span computed from the representatives agrees
    with the span of the vertex densities; the vertex-density cone
    equals the intersection of that span with the separating density
    cone, computed through an independent halfspace path; the vertex
    cone is its own bipolar under the pricing pairing; and the claim
    side matches: the polar of the vertex densities equals the weak
    closure of the umbrella hull of K.
    """
    from .pricing import build_c_e_k  # local import to avoid a cycle

    space = model.space
    if m1 is None:
        m1 = separating_polytope(model, k)
    reps = entropy_representatives(m1, f)  # raises EmptyFamilyError when empty
    cls = EntropyClass(base=m1, conjugate=f, kind="finite_entropy")
    details = []

    ok_reps = all(decide_membership(q, cls) for q in reps)

    supp = space.support
    sdim = len(supp)
    vertex_densities = [density(v, space) for v in m1.vertices]
    hat_cone = dd_convert(cone_from_generators(vertex_densities, sdim))
    rep_cone = cone_from_generators([density(q, space) for q in reps], sdim)
    ok_contained = cone_leq(rep_cone, hat_cone)

    witness = reps[0]
    ok_approx = True
    for v in m1.vertices:
        for n in (2, 3, 4):
            mix = Measure(
                masses=tuple(
                    (1 - Fraction(1, n)) * a + Fraction(1, n) * b
                    for a, b in zip(v.masses, witness.masses)
                )
            )
            if not (m1.contains(mix) and decide_membership(mix, cls)):
                ok_approx = False
                details.append(f"approximant at n={n} left the family")

    f_basis_reps = density_span(reps, space)
    f_basis_hat = span_basis(vertex_densities)
    ok_span = f_basis_reps == f_basis_hat
    if not ok_span:
        details.append("density span from representatives differs from vertex span")

    span_cone = linear_span_cone(f_basis_reps) if f_basis_reps else None
    if span_cone is None:
        ok_identity = not vertex_densities
    else:
        ok_identity = cones_equal(intersect(span_cone, hat_cone), hat_cone)
    if not ok_identity:
        details.append("span-of-family cap separating-density cone mismatch")

    pairing = market_pairing(space, f_basis_reps)
    first = polar(hat_cone, pairing, into_subspace=False)
    back = polar(first, pairing, into_subspace=True)
    ok_closed = cones_equal(back, hat_cone)
    if not ok_closed:
        details.append("vertex-density cone is not its own bipolar")

    c_phi = dd_convert(polar(vertex_densities, pairing, into_subspace=False))
    c_ek = build_c_e_k(model, k, reps, assert_face=False)
    ok_claims = cones_equal(c_phi, c_ek)
    if not ok_claims:
        details.append("polar of vertex densities differs from the weak closure")

    return WeakCloseReport(
        representatives_in_family=ok_reps,
        representative_cone_contained=ok_contained,
        approximating_family_in_family=ok_approx,
        span_agrees=ok_span,
        cone_identity=ok_identity,
        cone_weakly_closed=ok_closed,
        claim_cone_identity=ok_claims,
        details=tuple(details),
    )
