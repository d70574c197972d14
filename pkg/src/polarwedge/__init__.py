"""Exact cone duality and super-replication pricing on finite scenario trees.

All core computations run over arbitrary-precision rationals: polyhedral
wedges with dual representations, polar and bipolar closures under
weighted pairings, an exact certified simplex, separating-measure
polytopes, entropy-restricted pricing families, and primal/dual
super-replication prices that are checked for exact equality.
"""

from .cones import (
    Cone,
    LemmaPreconditionError,
    Pairing,
    bipolar_closure,
    check_cone_intersection_law,
    cone_from_generators,
    cone_from_halfspaces,
    cone_leq,
    cone_sum,
    cones_equal,
    contains,
    dd_convert,
    format_cone,
    intersect,
    linear_span_cone,
    parse_cone,
    polar,
    standard_pairing,
    umbrella_hull,
    weak_closure,
    zero_cone,
)
from .linalg import (
    Matrix,
    Vec,
    format_rational,
    format_vec,
    kernel,
    parse_rational,
    rref,
    span_basis,
    vec,
    weighted_complement,
)
from .lp import (
    FarkasAlternative,
    InternalCheckError,
    LinearProgram,
    LPOutcome,
    enumerate_vertices,
    farkas_alternative,
    solve,
    verify_closed_image_equivalence,
)
from .market import (
    Claim,
    ConjugateFunction,
    GrowthCheckResult,
    MarketFormatError,
    MarketModel,
    ProbabilitySpace,
    conjugate_value,
    exponential_conjugate,
    gains_wedge,
    growth_check,
    load_market,
    logarithmic_conjugate,
    one_step_increments,
    phi_hat,
    piecewise_linear_conjugate,
    power_conjugate,
    truncation_bound_check,
)
from .measures import (
    EmptyFamilyError,
    EntropyClass,
    Measure,
    MeasureSet,
    decide_membership,
    density,
    density_span,
    entropy_representatives,
    format_measure,
    full_support_member,
    is_face,
    market_pairing,
    measure_from_density,
    parse_measure,
    separating_polytope,
    verify_face_span_identity,
    verify_weakclose,
)
from .pricing import (
    DominationEmptyError,
    PriceResult,
    PriceUnboundedError,
    PricingProblem,
    acceptance_set_matches,
    admissible_truncation_check,
    build_c_e_k,
    build_c_phi,
    coherent_risk,
    dual_price,
    price_with_duality,
    umbrella_price,
    verify_symmetric_duality,
)

__version__ = "0.1.0"
