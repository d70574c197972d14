import random
from fractions import Fraction as F

import pytest

from polarwedge.cones import (
    cone_from_generators,
    cones_equal,
    dd_convert,
    linear_span_cone,
    polar,
    umbrella_hull,
    zero_cone,
)
from polarwedge.market import (
    exponential_conjugate,
    gains_wedge,
    logarithmic_conjugate,
)
from polarwedge.measures import (
    EmptyFamilyError,
    Measure,
    density_span,
    market_pairing,
    separating_polytope,
)
from polarwedge.pricing import (
    PriceUnboundedError,
    PricingProblem,
    acceptance_set_matches,
    admissible_truncation_check,
    build_c_e_k,
    build_c_phi,
    coherent_risk,
    dual_price,
    price_axioms_hold,
    price_with_duality,
    umbrella_price,
    verify_symmetric_duality,
)

LOG = logarithmic_conjugate()
EXP = exponential_conjugate(1)
CALL = (F(1), F(0), F(0))


def test_umbrella_price_t1_call(t1, t1_wedge):
    assert umbrella_price(CALL, umbrella_hull(t1_wedge)) == F(1, 3)
    assert umbrella_price(CALL, t1_wedge) == F(1, 3)  # hull taken internally


def test_umbrella_price_cash_invariance(t1, t1_wedge):
    for c in (F(0), F(2), F(-3, 2)):
        assert umbrella_price((c, c, c), t1_wedge) == c


def test_umbrella_price_monotone_nonpositive(t1, t1_wedge):
    assert umbrella_price((F(-1), F(0), F(-2)), t1_wedge) <= 0


def test_umbrella_price_unbounded(t1):
    # a wedge containing a strictly positive claim prices everything at -oo
    bad = cone_from_generators([(1, 1, 1)])
    with pytest.raises(PriceUnboundedError):
        umbrella_price(CALL, bad)


def test_dual_price_examples(t1, t1_m1):
    value, witness, attained_in = dual_price(CALL, list(t1_m1.vertices), family="m1")
    assert value == F(1, 3)
    assert witness.masses == (F(1, 3), F(0), F(2, 3))
    value, witness, attained_in = dual_price(
        CALL, list(t1_m1.vertices), family="mphi", conjugate=LOG, m1=t1_m1
    )
    assert value == F(1, 3) and attained_in == "mhatphi"
    value, _, attained_in = dual_price(
        (1, 1, 1), list(t1_m1.vertices), family="mphi", conjugate=LOG, m1=t1_m1
    )
    assert value == 1 and attained_in == "mphi"
    with pytest.raises(EmptyFamilyError):
        dual_price(CALL, [])


def test_build_c_e_k_full_family(t1, t1_wedge, t1_m1):
    c = build_c_e_k(t1, t1_wedge, list(t1_m1.vertices), assert_face=True)
    assert cones_equal(c, umbrella_hull(t1_wedge))


def test_build_c_e_k_entropy_annihilator_inside_wedge(t1, t1_wedge, t1_m1):
    # F-annihilator (2,0,-1) already lies in the wedge, so nothing is added
    from polarwedge.measures import entropy_representatives

    reps = entropy_representatives(t1_m1, LOG)
    c = build_c_e_k(t1, t1_wedge, reps)
    assert cones_equal(c, umbrella_hull(t1_wedge))


def test_build_c_e_k_single_measure(t1):
    p = Measure(masses=(F(1, 3), F(1, 3), F(1, 3)))
    c = build_c_e_k(t1, zero_cone(3), [p])
    # {X : E_P[X] <= 0}
    expected = dd_convert(polar([(1, 1, 1)], market_pairing(t1.space), into_subspace=False))
    assert cones_equal(c, expected)


def test_build_c_phi_t1(t1, t1_wedge):
    c_log = build_c_phi(t1, t1_wedge, LOG)
    assert cones_equal(c_log, umbrella_hull(t1_wedge))
    c_exp = build_c_phi(t1, t1_wedge, EXP)
    assert cones_equal(c_exp, c_log)  # utility independence on this fixture


def test_build_c_phi_zero_wedge(t1):
    c = build_c_phi(t1, zero_cone(3), LOG)
    neg_orthant = cone_from_generators([(-1, 0, 0), (0, -1, 0), (0, 0, -1)])
    assert cones_equal(c, neg_orthant)


def test_price_with_duality_t1_families(t1, t1_wedge):
    for family, f in (("m1", None), ("mphi", LOG), ("mhatphi", LOG)):
        res = price_with_duality(
            PricingProblem(model=t1, wedge=t1_wedge, claim=CALL, family=family, conjugate=f)
        )
        assert res.price == F(1, 3)
        assert res.dual_witness.masses == (F(1, 3), F(0), F(2, 3))
        assert res.lp_dual_witness.masses == (F(1, 3), F(0), F(2, 3))
        # primal witness dominates: claim <= budget + dominating
        for xw, dw in zip(CALL, res.dominating):
            assert xw <= res.price + dw


def test_price_with_duality_attainment_flag(t1, t1_wedge):
    res = price_with_duality(
        PricingProblem(model=t1, wedge=t1_wedge, claim=CALL, family="mphi", conjugate=LOG)
    )
    assert res.attained_in == "mhatphi" and not res.attained
    res = price_with_duality(
        PricingProblem(model=t1, wedge=t1_wedge, claim=(1, 1, 1), family="mphi", conjugate=LOG)
    )
    assert res.attained_in == "mphi" and res.attained and res.price == 1
    res = price_with_duality(
        PricingProblem(model=t1, wedge=t1_wedge, claim=CALL, family="mphi", conjugate=EXP)
    )
    assert res.attained  # finite at zero: family equals its closure


def test_price_with_duality_sure_loss(t1, t1_wedge):
    res = price_with_duality(
        PricingProblem(model=t1, wedge=t1_wedge, claim=(-1, -1, -1), family="mphi", conjugate=LOG)
    )
    assert res.price == -1


def test_price_with_duality_binomial_call(binomial):
    k = gains_wedge(binomial)
    res = price_with_duality(
        PricingProblem(model=binomial, wedge=k, claim=(1, 0), family="m1")
    )
    assert res.price == F(1, 3)
    assert res.dual_witness.masses == (F(1, 3), F(2, 3))


def test_price_with_duality_subset_saturation(t1, t1_wedge):
    mid = Measure(masses=(F(1, 6), F(1, 2), F(1, 3)))
    res = price_with_duality(
        PricingProblem(model=t1, wedge=t1_wedge, claim=CALL, family="subset", subset=(mid,))
    )
    assert res.price == mid.expectation(CALL) == F(1, 6)


def test_price_with_duality_empty_family(t1):
    k = cone_from_generators([(1, 1, 1)])
    with pytest.raises(EmptyFamilyError):
        price_with_duality(PricingProblem(model=t1, wedge=k, claim=CALL, family="m1"))


def test_umbrella_representation_invariance(t1, t1_wedge):
    # price over C equals price over the umbrella hull of C
    rng = random.Random(31)
    for _ in range(10):
        gens = [tuple(F(rng.randint(-3, 3)) for _ in range(3)) for _ in range(2)]
        c = cone_from_generators(gens, 3)
        hull = umbrella_hull(c)
        x = tuple(F(rng.randint(-4, 4)) for _ in range(3))
        try:
            p1 = umbrella_price(x, c)
        except PriceUnboundedError:
            with pytest.raises(PriceUnboundedError):
                umbrella_price(x, hull)
            continue
        assert p1 == umbrella_price(x, hull)


def test_coherent_risk_examples(t1):
    neg = cone_from_generators([(-1, 0, 0), (0, -1, 0), (0, 0, -1)])
    assert coherent_risk((1, 2, 3), neg) == -1
    assert coherent_risk((0, 0, 0), neg) == 0
    # cash additivity
    assert coherent_risk((3, 4, 5), neg) == coherent_risk((1, 2, 3), neg) - 2
    with pytest.raises(ValueError, match="umbrella"):
        coherent_risk((1, 2, 3), cone_from_generators([(1, 0, 0)]))


def test_coherent_risk_axioms_random(t1, t1_wedge):
    hull = dd_convert(umbrella_hull(t1_wedge))
    rng = random.Random(32)
    for _ in range(30):
        x = tuple(F(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(3))
        y = tuple(F(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(3))
        c = F(rng.randint(-4, 4), rng.randint(1, 2))
        lam = F(rng.randint(0, 6), rng.randint(1, 2))
        rx, ry = coherent_risk(x, hull), coherent_risk(y, hull)
        assert coherent_risk(tuple(a + c for a in x), hull) == rx - c
        assert coherent_risk(tuple(lam * a for a in x), hull) == lam * rx
        assert coherent_risk(tuple(a + b for a, b in zip(x, y)), hull) <= rx + ry
        bigger = tuple(a + F(rng.randint(0, 3)) for a in x)
        assert coherent_risk(bigger, hull) <= rx
        assert acceptance_set_matches(hull, x)


def test_admissible_truncation_t1(t1):
    rep = admissible_truncation_check((2, 0, -1), t1, conjugate=LOG)
    assert rep.passed
    assert rep.constant == 1
    rep = admissible_truncation_check((0, 0, 0), t1)
    assert rep.passed
    with pytest.raises(ValueError, match="terminal wealth"):
        admissible_truncation_check((1, 1, 1), t1)


def test_symmetric_duality_faces_true(t1, t1_wedge, t1_m1):
    rep = verify_symmetric_duality(t1, t1_wedge, list(t1_m1.vertices))
    assert rep.all_agree and rep.all_true


def test_symmetric_duality_interior_with_own_span(t1, t1_wedge):
    mid = Measure(masses=(F(1, 6), F(1, 2), F(1, 3)))
    rep = verify_symmetric_duality(t1, t1_wedge, [mid])
    assert rep.all_agree and rep.all_true


def test_symmetric_duality_strict_subfamily_all_false(t1, t1_wedge, t1_m1):
    mid = Measure(masses=(F(1, 6), F(1, 2), F(1, 3)))
    rep = verify_symmetric_duality(
        t1,
        t1_wedge,
        [mid],
        pairing_subspace=density_span(list(t1_m1.vertices), t1.space),
    )
    assert rep.all_agree and not rep.all_true


def test_containment_chain(t1, t1_wedge):
    from polarwedge.cones import cone_leq
    from polarwedge.measures import restrict

    support = t1.space.support
    k_s = cone_from_generators(
        [restrict(g, support) for g in dd_convert(t1_wedge).generators], 3
    )
    k_phi = umbrella_hull(k_s)
    c_phi = build_c_phi(t1, t1_wedge, LOG)
    assert cone_leq(k_s, k_phi)
    assert cone_leq(k_phi, c_phi)


def test_price_axioms_hold(t1, t1_wedge):
    assert price_axioms_hold(t1, t1_wedge, LOG, samples=10, seed=5)


def test_redundant_linearization_same_cone(t1, t1_wedge, two_period):
    # the conjugate and its linearization induce identical pricing cones:
    # membership only consults the support pattern and the zero flag,
    # and the linearized conjugate is finite at zero, hence the hat family
    from polarwedge.market import piecewise_linear_conjugate

    hat_of_log = piecewise_linear_conjugate([(0, F(0)), (1, F(-1))], final_slope=F(0))
    # hat_of_log agrees with the linearized log conjugate below 1 and is
    # asymptotically linear like it; both flags say finite at zero
    c1 = build_c_phi(t1, t1_wedge, LOG)
    c2 = build_c_phi(t1, t1_wedge, hat_of_log)
    assert cones_equal(c1, c2)
    k2 = gains_wedge(two_period)
    assert cones_equal(
        build_c_phi(two_period, k2, LOG), build_c_phi(two_period, k2, hat_of_log)
    )


def test_asymptotically_linear_gives_utility_free_cone(two_period):
    # when the conjugate is asymptotically linear the loss-entropy family
    # is the whole separating family and the pricing cone is utility-free
    k = gains_wedge(two_period)
    m1 = separating_polytope(two_period, k)
    c_log = build_c_phi(two_period, k, LOG)
    c_id = build_c_e_k(two_period, k, list(m1.vertices), assert_face=True)
    assert cones_equal(c_log, c_id)
