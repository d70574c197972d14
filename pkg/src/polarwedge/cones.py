"""Polyhedral wedges with exact dual representations.

A wedge (convex cone, possibly containing lines) is carried either by
generators (V-representation: extreme rays plus a +/- pair for each
lineality direction) or by halfspace normals (H-representation: plain
dot products, {x : n.x <= 0}), or both.  Conversion between the two is
done by a double description sweep with explicit lineality handling and
a combinatorial adjacency test, all over Fractions.

Polarity is taken with respect to a Pairing: strictly positive weights
p define <x, w> = sum_i p_i x_i w_i, and an optional subspace basis
confines the dual side to a subspace.  Polar halfspaces are therefore
stored with plain normals p*g; the weighting happens at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .linalg import (
    Q0,
    Q1,
    Vec,
    add,
    dot,
    format_vec,
    is_zero,
    kernel,
    neg,
    parse_rational,
    primitive_ray,
    scale,
    span_basis,
    sub,
    unit,
    vec,
    weighted_complement,
)


class LemmaPreconditionError(ValueError):
    """A checked lemma hypothesis fails on the supplied instance."""


@dataclass(frozen=True)
class Pairing:
    """Bilinear form <x,w> = sum_i weights_i x_i w_i on a coordinate space.

    ``subspace_basis`` restricts the dual side to a subspace; ``None``
    means the full space.  Weights must be strictly positive.
    """

    weights: Vec
    subspace_basis: tuple[Vec, ...] | None = None

    def __post_init__(self):
        w = vec(self.weights)
        if not w or any(x <= 0 for x in w):
            raise ValueError("pairing weights must be strictly positive")
        object.__setattr__(self, "weights", w)
        if self.subspace_basis is not None:
            basis = tuple(span_basis(self.subspace_basis))
            if any(len(b) != len(w) for b in basis):
                raise ValueError("subspace basis dimension mismatch")
            object.__setattr__(self, "subspace_basis", basis)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def weighted(self, v: Sequence[Fraction]) -> Vec:
        return tuple(p * x for p, x in zip(self.weights, v))

    def value(self, x: Sequence[Fraction], w: Sequence[Fraction]) -> Fraction:
        return sum((p * a * b for p, a, b in zip(self.weights, x, w)), Q0)

    def annihilator(self) -> list[Vec]:
        """Basis of {z : <z, w> = 0 for all w in the subspace}."""
        if self.subspace_basis is None:
            return []
        return weighted_complement(self.subspace_basis, self.weights)


def standard_pairing(dim: int) -> Pairing:
    return Pairing(weights=(Q1,) * dim)


@dataclass(frozen=True)
class Cone:
    """A polyhedral wedge in fixed dimension.

    At least one representation is present.  Generators list extreme
    rays and both signs of each lineality basis vector; halfspace
    normals n mean {x : n.x <= 0}.  Instances are immutable; conversion
    (dd_convert) returns a new canonical value.
    """

    dim: int
    generators: tuple[Vec, ...] | None = None
    halfspaces: tuple[Vec, ...] | None = None

    def __post_init__(self):
        if self.generators is None and self.halfspaces is None:
            raise ValueError("cone needs at least one representation")
        for rep in (self.generators, self.halfspaces):
            if rep is not None and any(len(v) != self.dim for v in rep):
                raise ValueError("vector dimension does not match cone dim")


# ---------------------------------------------------------------------------
# double description core


def _dd(constraints: list[tuple[Vec, bool]], dim: int) -> tuple[list[Vec], list[Vec]]:
    """Intersect halfspaces/hyperplanes, tracking (lineality, extreme rays).

    ``constraints`` holds (normal, is_equality) pairs; a normal n with
    is_equality False means {x : n.x <= 0}, True means {x : n.x = 0}.
    Starts from the full space.  Returns a canonical lineality basis and
    the extreme rays of the pointed part, reduced modulo the lineality.
    """
    lineality: list[Vec] = [unit(dim, i) for i in range(dim)]
    rays: list[Vec] = []
    zsets: list[int] = []  # active-constraint bitmasks, parallel to rays
    nproc = 0
    seen: set[tuple[Vec, bool]] = set()
    # equalities first: they cut dimensions cheaply
    ordered = [c for c in constraints if c[1]] + [c for c in constraints if not c[1]]
    for a, is_eq in ordered:
        a = primitive_ray(a)
        if is_zero(a):
            continue
        key = (a, is_eq)
        if key in seen:
            continue
        seen.add(key)
        bit = 1 << nproc
        all_prev = bit - 1
        sl = [dot(a, l) for l in lineality]
        j0 = next((j for j, s in enumerate(sl) if s != 0), None)
        if j0 is not None:
            # the new constraint cuts the lineality space
            l0 = scale(Fraction(-1) / sl[j0], lineality[j0])  # a.l0 = -1
            lineality = [
                add(l, scale(dot(a, l), l0))
                for j, l in enumerate(lineality)
                if j != j0
            ]
            rays = [add(r, scale(dot(a, r), l0)) for r in rays]
            zsets = [z | bit for z in zsets]
            if not is_eq:
                rays.append(l0)
                zsets.append(all_prev)
        else:
            vals = [dot(a, r) for r in rays]
            inside = [i for i, v in enumerate(vals) if v < 0]
            on = [i for i, v in enumerate(vals) if v == 0]
            outside = [i for i, v in enumerate(vals) if v > 0]
            if outside:
                keep = on if is_eq else inside + on
                new_rays: list[Vec] = []
                new_z: list[int] = []
                for i in keep:
                    new_rays.append(rays[i])
                    new_z.append(zsets[i] | (bit if vals[i] == 0 else 0))
                for i in inside:
                    for j in outside:
                        if not _adjacent(i, j, rays, zsets, nproc):
                            continue
                        w = sub(scale(vals[j], rays[i]), scale(vals[i], rays[j]))
                        if is_zero(w):
                            continue
                        w = primitive_ray(w)
                        if w in new_rays:
                            continue
                        # n.w = vals[j]*(n.ri) - vals[i]*(n.rj) with positive
                        # coefficients and nonpositive terms, so w is active
                        # exactly where both parents are
                        new_rays.append(w)
                        new_z.append((zsets[i] & zsets[j]) | bit)
                rays, zsets = new_rays, new_z
            else:
                if is_eq:
                    keep = [i for i in on]
                    not_keep = [i for i in inside]
                    if not_keep:
                        rays = [rays[i] for i in keep]
                        zsets = [zsets[i] | bit for i in keep]
                    else:
                        zsets = [z | bit for z in zsets]
                else:
                    zsets = [
                        z | (bit if vals[i] == 0 else 0) for i, z in enumerate(zsets)
                    ]
        nproc += 1
    return _canonical_pair(lineality, rays)


def _adjacent(i: int, j: int, rays: list[Vec], zsets: list[int], nproc: int) -> bool:
    """Combinatorial adjacency of extreme rays i, j in the current cone.

    Rays are adjacent iff no third ray is active on every constraint
    active on both of them (valid because the ray list is kept minimal
    and the cone pointed modulo its lineality).
    """
    common = zsets[i] & zsets[j]
    for k in range(len(rays)):
        if k != i and k != j and (common & zsets[k]) == common:
            return False
    return True


def _canonical_pair(
    lineality: list[Vec], rays: list[Vec]
) -> tuple[list[Vec], list[Vec]]:
    lin = span_basis(lineality)
    reduced = []
    for r in rays:
        r = _reduce_mod(r, lin)
        if is_zero(r):
            raise RuntimeError("extreme ray collapsed into the lineality space")
        reduced.append(primitive_ray(r))
    return lin, sorted(set(reduced))


def _reduce_mod(v: Vec, basis: list[Vec]) -> Vec:
    for b in basis:
        p = next(i for i, x in enumerate(b) if x != 0)
        if v[p] != 0:
            v = sub(v, scale(v[p] / b[p], b))
    return v


def _compose(lineality: list[Vec], rays: list[Vec]) -> tuple[Vec, ...]:
    gens = list(rays)
    for b in lineality:
        gens.append(b)
        gens.append(neg(b))
    return tuple(sorted(gens))


def halfspaces_to_generators(normals: Iterable[Vec], dim: int) -> tuple[Vec, ...]:
    lin, rays = _dd([(vec(n), False) for n in normals], dim)
    return _compose(lin, rays)


def generators_to_halfspaces(gens: Iterable[Vec], dim: int) -> tuple[Vec, ...]:
    # normals of C are the generators of the plain polar, and the polar's
    # H-representation is one halfspace per generator of C
    return halfspaces_to_generators([vec(g) for g in gens], dim)


# ---------------------------------------------------------------------------
# constructors and conversion


def cone_from_generators(vs: Iterable, dim: int | None = None) -> Cone:
    """Smallest wedge containing the given vectors.

    Zero vectors are dropped silently; an empty list yields the zero
    cone {0} (with ``dim`` required to fix the ambient space).
    """
    gens = [vec(v) for v in vs]
    if dim is None:
        if not gens:
            raise ValueError("dim is required for the zero cone")
        dim = len(gens[0])
    cleaned = []
    for g in gens:
        if len(g) != dim:
            raise ValueError("generator dimension mismatch")
        if not is_zero(g):
            g = primitive_ray(g)
            if g not in cleaned:
                cleaned.append(g)
    return Cone(dim=dim, generators=tuple(sorted(cleaned)))


def cone_from_halfspaces(normals: Iterable, dim: int | None = None) -> Cone:
    ns = [vec(n) for n in normals]
    if dim is None:
        if not ns:
            raise ValueError("dim is required for the full-space cone")
        dim = len(ns[0])
    cleaned = []
    for n in ns:
        if len(n) != dim:
            raise ValueError("normal dimension mismatch")
        if not is_zero(n):
            n = primitive_ray(n)
            if n not in cleaned:
                cleaned.append(n)
    return Cone(dim=dim, halfspaces=tuple(sorted(cleaned)))


def zero_cone(dim: int) -> Cone:
    return cone_from_generators([], dim)


def full_cone(dim: int) -> Cone:
    return cone_from_halfspaces([], dim)


def dd_convert(c: Cone) -> Cone:
    """Return the cone with both representations, canonical and irredundant."""
    if c.generators is not None:
        hs = generators_to_halfspaces(c.generators, c.dim)
        gens = halfspaces_to_generators(hs, c.dim)
    else:
        gens = halfspaces_to_generators(c.halfspaces, c.dim)
        hs = generators_to_halfspaces(gens, c.dim)
    return Cone(dim=c.dim, generators=gens, halfspaces=hs)


def _generators(c: Cone) -> tuple[Vec, ...]:
    if c.generators is not None:
        return c.generators
    return halfspaces_to_generators(c.halfspaces, c.dim)


def _halfspaces(c: Cone) -> tuple[Vec, ...]:
    if c.halfspaces is not None:
        return c.halfspaces
    return generators_to_halfspaces(c.generators, c.dim)


def contains(c: Cone, x: Sequence[Fraction]) -> bool:
    x = vec(x)
    if len(x) != c.dim:
        raise ValueError("point dimension mismatch")
    return all(dot(n, x) <= 0 for n in _halfspaces(c))


def cone_leq(inner: Cone, outer: Cone) -> bool:
    """Exact containment inner ⊆ outer via generator/halfspace evaluation."""
    hs = _halfspaces(outer)
    return all(all(dot(n, g) <= 0 for n in hs) for g in _generators(inner))


def cones_equal(a: Cone, b: Cone) -> bool:
    """Set equality by mutual containment, independent of representation."""
    if a.dim != b.dim:
        return False
    return cone_leq(a, b) and cone_leq(b, a)


# ---------------------------------------------------------------------------
# polarity


def polar(
    a: Cone | Iterable,
    pairing: Pairing | None = None,
    *,
    into_subspace: bool = True,
) -> Cone:
    """Polar wedge {w : <z,w> <= 0 for all z in a} under the pairing.

    The polar of a set equals the polar of the wedge it generates.  With
    ``into_subspace`` the result is intersected with the pairing's
    subspace (the dual side of the bilinear system); pass False when
    polarizing a set that already lives in the subspace back into the
    full space.
    """
    if isinstance(a, Cone):
        dim = a.dim
        gens = _generators(a)
    else:
        gens = [vec(v) for v in a]
        if not gens:
            raise ValueError("polar of an empty set is undefined; use a cone")
        dim = len(gens[0])
    if pairing is None:
        pairing = standard_pairing(dim)
    if pairing.dim != dim:
        raise ValueError("pairing dimension mismatch")
    constraints: list[tuple[Vec, bool]] = []
    halfspace_normals = []
    for g in gens:
        n = primitive_ray(pairing.weighted(g))
        if not is_zero(n):
            constraints.append((n, False))
            halfspace_normals.append(n)
    if into_subspace and pairing.subspace_basis is not None:
        for cplane in kernel(pairing.subspace_basis):
            constraints.append((cplane, True))
            halfspace_normals.append(cplane)
            halfspace_normals.append(neg(cplane))
    lin, rays = _dd(constraints, dim)
    return Cone(
        dim=dim,
        generators=_compose(lin, rays),
        halfspaces=tuple(sorted(set(map(primitive_ray, halfspace_normals)))),
    )


def bipolar_closure(a: Cone | Iterable, pairing: Pairing | None = None) -> Cone:
    """Smallest weakly closed wedge containing a: polar of the polar.

    At finite dimension this is the Euclidean closure of cone(a) plus
    the annihilator of the pairing subspace.
    """
    return polar(polar(a, pairing), pairing, into_subspace=False)


def weak_closure(c: Cone, pairing: Pairing | None = None) -> Cone:
    """Closure of a finitely generated wedge in the weak topology.

    Realized as the Minkowski sum with the annihilator of the pairing
    subspace; coincides with bipolar_closure on finitely generated
    wedges.
    """
    gens = list(_generators(c))
    if pairing is not None:
        for n in pairing.annihilator():
            gens.append(n)
            gens.append(neg(n))
    return dd_convert(cone_from_generators(gens, c.dim))


def umbrella_hull(k: Cone, dim: int | None = None) -> Cone:
    """Smallest wedge containing k and the negative orthant.

    The result C satisfies C = C - E+ (pointwise domination closure);
    the operation is idempotent.
    """
    if dim is None:
        dim = k.dim
    if dim != k.dim:
        raise ValueError("dimension mismatch")
    gens = list(_generators(k)) + [neg(unit(dim, i)) for i in range(dim)]
    return dd_convert(cone_from_generators(gens, dim))


def linear_span_cone(s: Iterable) -> Cone:
    vectors = [vec(v) for v in s]
    if not vectors:
        raise ValueError("span of an empty set is undefined")
    dim = len(vectors[0])
    basis = span_basis(vectors)
    gens: list[Vec] = []
    for b in basis:
        gens.append(b)
        gens.append(neg(b))
    hs: list[Vec] = []
    if basis:
        for n in kernel(basis):
            hs.append(n)
            hs.append(neg(n))
    else:
        for i in range(dim):
            hs.append(unit(dim, i))
            hs.append(neg(unit(dim, i)))
    return Cone(dim=dim, generators=tuple(sorted(gens)), halfspaces=tuple(sorted(hs)))


def intersect(c1: Cone, c2: Cone) -> Cone:
    if c1.dim != c2.dim:
        raise ValueError("dimension mismatch")
    return dd_convert(
        cone_from_halfspaces(list(_halfspaces(c1)) + list(_halfspaces(c2)), c1.dim)
    )


def cone_sum(c1: Cone, c2: Cone) -> Cone:
    if c1.dim != c2.dim:
        raise ValueError("dimension mismatch")
    return dd_convert(
        cone_from_generators(list(_generators(c1)) + list(_generators(c2)), c1.dim)
    )


# ---------------------------------------------------------------------------
# bounded polytopes by homogenization (shared with the LP layer)


def polytope_vertices(
    inequalities: Sequence[tuple[Sequence[Fraction], Fraction]],
    equalities: Sequence[tuple[Sequence[Fraction], Fraction]],
    dim: int,
) -> list[Vec]:
    """Vertices of {x : a.x <= b, c.x = d}, in lexicographic order.

    The polyhedron must be bounded; a recession direction raises
    ValueError("not a polytope").  An empty polytope gives [].
    """
    constraints: list[tuple[Vec, bool]] = []
    for normal, rhs in inequalities:
        constraints.append((vec(normal) + (-Fraction(rhs),), False))
    for normal, rhs in equalities:
        constraints.append((vec(normal) + (-Fraction(rhs),), True))
    constraints.append((tuple([Q0] * dim + [Fraction(-1)]), False))
    lin, rays = _dd(constraints, dim + 1)
    points = []
    at_infinity = False
    for r in rays:
        t = r[dim]
        if t > 0:
            points.append(tuple(x / t for x in r[:dim]))
        elif not is_zero(r[:dim]):
            at_infinity = True
    if lin:
        at_infinity = True
    if points and at_infinity:
        raise ValueError("not a polytope")
    return sorted(set(points))


def check_cone_intersection_law(s_generators: Sequence, t: Cone) -> bool:
    """Instance check of cone(S ∩ T) = cone(S) ∩ T for convex S, wedge T.

    S is the convex hull of the given points.  Requires S ∩ T nonempty,
    otherwise LemmaPreconditionError is raised.
    """
    points = [vec(p) for p in s_generators]
    if not points:
        raise LemmaPreconditionError("S is empty")
    dim = len(points[0])
    if t.dim != dim:
        raise ValueError("dimension mismatch")
    t = dd_convert(t)
    k = len(points)
    ineqs: list[tuple[Vec, Fraction]] = []
    for n in t.halfspaces:
        ineqs.append((tuple(dot(n, p) for p in points), Q0))
    for i in range(k):
        ineqs.append((neg(unit(k, i)), Q0))
    eqs = [((Q1,) * k, Q1)]
    lam_vertices = polytope_vertices(ineqs, eqs, k)
    if not lam_vertices:
        raise LemmaPreconditionError("lemma precondition violated: conv(S) ∩ T is empty")
    hit_points = []
    for lam in lam_vertices:
        x = tuple(
            sum((lam[i] * points[i][j] for i in range(k)), Q0) for j in range(dim)
        )
        hit_points.append(x)
    lhs = dd_convert(cone_from_generators(hit_points, dim))
    rhs = intersect(dd_convert(cone_from_generators(points, dim)), t)
    return cones_equal(lhs, rhs)


# ---------------------------------------------------------------------------
# text format


def format_cone(c: Cone) -> str:
    lines = [f"cone dim={c.dim}"]
    if c.generators is not None:
        for g in c.generators:
            lines.append("V: " + format_vec(g))
    if c.halfspaces is not None:
        for n in c.halfspaces:
            lines.append("H: " + format_vec(n))
    return "\n".join(lines) + "\n"


def parse_cone(text: str) -> Cone:
    """Parse the cone text format; reps round-trip bit-exactly."""
    dim = None
    gens: list[Vec] = []
    hs: list[Vec] = []
    saw_v = saw_h = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("cone"):
            parts = line.split()
            if len(parts) != 2 or not parts[1].startswith("dim="):
                raise ValueError(f"line {lineno}: malformed cone header")
            dim = int(parts[1][4:])
            if dim <= 0:
                raise ValueError(f"line {lineno}: dim must be positive")
        elif line.startswith("V:"):
            saw_v = True
            gens.append(vec(parse_rational(t) for t in line[2:].split()))
        elif line.startswith("H:"):
            saw_h = True
            hs.append(vec(parse_rational(t) for t in line[2:].split()))
        else:
            raise ValueError(f"line {lineno}: unknown record {line.split()[0]!r}")
    if dim is None:
        raise ValueError("missing 'cone dim=<n>' header")
    for v in gens + hs:
        if len(v) != dim:
            raise ValueError("vector length does not match declared dim")
    return Cone(
        dim=dim,
        generators=tuple(gens) if saw_v else None,
        halfspaces=tuple(hs) if saw_h else None,
    )
