"""Acceptance suite: one timed test per criterion, exact arithmetic throughout.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
PASS lines and timings.
"""

import random
import time
from fractions import Fraction as F

import pytest

from polarwedge import (
    PricingProblem,
    bipolar_closure,
    cone_from_generators,
    cone_leq,
    cones_equal,
    dd_convert,
    dual_price,
    farkas_alternative,
    gains_wedge,
    intersect,
    load_market,
    logarithmic_conjugate,
    polar,
    price_with_duality,
    umbrella_price,
    verify_closed_image_equivalence,
    verify_weakclose,
)
from polarwedge.cones import Cone
from polarwedge.linalg import dot, mat, transpose, vec
from polarwedge.market import one_step_increments
from polarwedge.measures import (
    EntropyClass,
    decide_membership,
    entropy_representatives,
    is_face,
    verify_face_span_identity,
)
from polarwedge.pricing import build_c_phi, coherent_risk, umbrella_hull

from _corpus import random_claim, random_cone, random_market, random_pairing

LOG = logarithmic_conjugate()


def _finish(name: str, ok: bool, t0: float, budget: float):
    elapsed = time.monotonic() - t0
    status = "PASS" if ok and elapsed < budget else "FAIL"
    print(f"[{status}] {name}: {elapsed:.2f}s (budget {budget:.0f}s)")
    assert ok, f"{name}: exact checks failed"
    assert elapsed < budget, f"{name}: {elapsed:.2f}s over the {budget:.0f}s budget"


@pytest.fixture(scope="module")
def corpus():
    rng = random.Random(20260810)
    t0 = time.monotonic()
    built = []
    for _ in range(185):
        built.append(random_market(rng, max_periods=3, max_leaves=12))
    for _ in range(8):
        built.append(random_market(rng, max_periods=2, max_leaves=8, null_atom=True))
    for _ in range(5):
        built.append(random_market(rng, max_periods=4, max_leaves=14))
    for _ in range(2):
        built.append(random_market(rng, max_periods=4, max_leaves=32, wide=True))
    out = [(model, m1, gains_wedge(model)) for model, m1 in built]
    assert len(out) >= 200
    assert max(model.space.n for model, _, _ in out) <= 33  # 32 leaves + null atom
    print(f"\n[corpus] {len(out)} trees in {time.monotonic() - t0:.1f}s")
    return out


def test_criterion_1_trinomial_fixture(t1, t1_wedge):
    t0 = time.monotonic()
    call = (F(1), F(0), F(0))
    ok = True
    for family, conj in (("m1", None), ("mphi", LOG), ("mhatphi", LOG)):
        res = price_with_duality(
            PricingProblem(
                model=t1, wedge=t1_wedge, claim=call, family=family, conjugate=conj
            )
        )
        ok &= res.price == F(1, 3)
        ok &= res.dual_witness.masses == (F(1, 3), F(0), F(2, 3))
        if family == "mphi":
            ok &= res.attained_in == "mhatphi" and not res.attained
    _finish("criterion 1 (trinomial fixture price)", ok, t0, 1.0)


def test_criterion_2_strong_duality_on_corpus(corpus):
    rng = random.Random(7)
    t0 = time.monotonic()
    ok = True
    for model, m1, wedge in corpus:
        cone = build_c_phi(model, wedge, LOG, m1=m1)
        support = model.space.support
        for _ in range(2):
            claim = random_claim(rng, model.space.n)
            primal = umbrella_price(claim, cone, support)
            value, _, _ = dual_price(
                claim, list(m1.vertices), family="mphi", conjugate=LOG, m1=m1
            )
            ok &= primal == value
    _finish("criterion 2 (strong duality, 200 random trees)", ok, t0, 120.0)


def test_criterion_3_entropy_closure_cones_on_corpus(corpus):
    t0 = time.monotonic()
    ok = True
    for model, m1, wedge in corpus:
        rep = verify_weakclose(model, wedge, LOG, m1=m1)
        ok &= rep.passed
    _finish("criterion 3 (entropy-closure cone identities)", ok, t0, 120.0)


def test_criterion_4_bipolar_suite():
    rng = random.Random(41)
    t0 = time.monotonic()
    ok = True
    families_done = 0
    for i in range(500):
        dim = rng.randint(1, 6)
        pairing = random_pairing(rng, dim) if i % 3 == 0 else None
        a = dd_convert(random_cone(rng, dim))
        # dd round trip reproduces the canonical V-representation
        again = dd_convert(Cone(dim=dim, generators=a.generators))
        ok &= again.generators == a.generators and again.halfspaces == a.halfspaces
        # triple polar
        pa = polar(a, pairing)
        ok &= cones_equal(polar(bipolar_closure(a, pairing), pairing), pa)
        # antitonicity
        extra = tuple(F(rng.randint(-3, 3)) for _ in range(dim))
        b = cone_from_generators(list(a.generators) + [extra], dim)
        ok &= cone_leq(polar(b, pairing), pa)
        # union law on a two-member family
        union = cone_from_generators(
            list(a.generators) + list(dd_convert(b).generators), dim
        )
        ok &= cones_equal(
            polar(union, pairing), intersect(pa, polar(b, pairing))
        )
        if i % 9 == 0:
            # intersection law for bipolars on a small family
            fam = [a, dd_convert(random_cone(rng, dim))]
            caps = bipolar_closure(fam[0], pairing)
            for c in fam[1:]:
                caps = intersect(caps, bipolar_closure(c, pairing))
            lhs = polar(caps, pairing)
            polar_gens = [
                g for c in fam for g in dd_convert(polar(c, pairing)).generators
            ]
            rhs = polar(
                polar(
                    cone_from_generators(polar_gens, dim),
                    pairing,
                    into_subspace=False,
                ),
                pairing,
            )
            ok &= cones_equal(lhs, rhs)
            families_done += 1
    ok &= families_done >= 50
    _finish("criterion 4 (bipolar suite, 500 random cones)", ok, t0, 60.0)


def test_criterion_5_farkas_suite():
    rng = random.Random(51)
    t0 = time.monotonic()
    ok = True
    for _ in range(1000):
        m, n = rng.randint(1, 6), rng.randint(1, 6)
        a = mat([[rng.randint(-5, 5) for _ in range(n)] for _ in range(m)])
        b = vec([rng.randint(-5, 5) for _ in range(m)])
        alt = farkas_alternative(a, b)
        if alt.branch == "primal":
            ok &= all(x >= 0 for x in alt.x)
            ok &= all(dot(row, alt.x) == bi for row, bi in zip(a, b))
        else:
            ok &= dot(alt.y, b) > 0
            ok &= all(dot(alt.y, col) <= 0 for col in transpose(a))
    for matrix, seed in (
        (((1, 0), (0, 1)), 1),
        (((1, 1),), 2),
        (((0, 0), (0, 0)), 3),
        (((2, -1, 0), (1, 1, -3), (0, 4, 1)), 4),
    ):
        rep = verify_closed_image_equivalence(matrix, trials=40, seed=seed)
        ok &= rep.passed
    _finish("criterion 5 (Farkas suite, 1000 alternatives)", ok, t0, 60.0)


def test_criterion_6_face_suite(corpus):
    t0 = time.monotonic()
    ok = True
    for model, m1, wedge in corpus:
        hat = EntropyClass(base=m1, conjugate=LOG, kind="finite_loss_entropy")
        member = lambda q, _hat=hat: decide_membership(q, _hat)
        ok &= is_face(member, m1, samples=6, seed=3)
        reps = entropy_representatives(m1, LOG)
        rep = verify_face_span_identity(m1, reps, member, samples=8, seed=4)
        ok &= rep.passed
    _finish("criterion 6 (face suite)", ok, t0, 60.0)


def test_criterion_7_coherence_and_price_axioms(t1, t1_wedge, binomial):
    rng = random.Random(71)
    t0 = time.monotonic()
    ok = True
    fixtures = [(t1, t1_wedge), (binomial, gains_wedge(binomial))]
    for model, wedge in fixtures:
        n = model.space.n
        support = model.space.support
        hull = dd_convert(umbrella_hull(wedge))
        price_cone = build_c_phi(model, wedge, LOG)

        def rho(x):
            return coherent_risk(x, hull, support)

        def price(x):
            return umbrella_price(x, price_cone, support)

        for _ in range(100):  # two fresh claims per round: 200 per fixture
            x = random_claim(rng, n)
            y = random_claim(rng, n)
            c = F(rng.randint(-6, 6), rng.randint(1, 3))
            lam = F(rng.randint(0, 8), rng.randint(1, 3))
            rx, px = rho(x), price(x)
            ok &= rho(tuple(a + c for a in x)) == rx - c
            ok &= rho(tuple(lam * a for a in x)) == lam * rx
            ok &= rho(tuple(a + b for a, b in zip(x, y))) <= rx + rho(y)
            ok &= rho(tuple(a + F(rng.randint(0, 3)) for a in x)) <= rx
            ok &= price(tuple(a + c for a in x)) == px + c
            ok &= price(tuple(lam * a for a in x)) == lam * px
            ok &= price(tuple(a + b for a, b in zip(x, y))) <= px + price(y)
            ok &= price(tuple(a - F(rng.randint(0, 3)) for a in x)) <= px
    _finish("criterion 7 (coherence and price axioms)", ok, t0, 30.0)


def test_criterion_8_gap_note(capsys):
    from polarwedge.cli import main

    t0 = time.monotonic()
    code = main(["verify", "tests/data/t1.market", "--suite", "axioms"])
    out = capsys.readouterr().out
    ok = code == 0 and "not reproducible at desk scale" in out
    with capsys.disabled():
        _finish("criterion 8 (strict-gap non-reproducibility note)", ok, t0, 10.0)
