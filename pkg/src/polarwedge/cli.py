"""Command-line front end: price, polar, measures, farkas, risk, verify.

Reports are deterministic key-value text (or JSON with --json) carrying
an echo of the parsed inputs and a provenance block with the tool
version and input hashes.  Rationals are printed exactly; decimals
appear only under --approx.  Exit codes: 0 success, 1 verification
failure, 2 parse error, 3 empty measure family, 4 no finite price.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction

from . import __version__
from .cones import (
    LemmaPreconditionError,
    Pairing,
    check_cone_intersection_law,
    cone_from_generators,
    dd_convert,
    parse_cone,
    polar,
)
from .linalg import format_rational, format_vec, mat, parse_rational, span_basis, vec
from .lp import farkas_alternative, verify_closed_image_equivalence
from .market import (
    INF,
    MarketFormatError,
    conjugate_value,
    exponential_conjugate,
    gains_wedge,
    growth_check,
    load_market,
    logarithmic_conjugate,
    phi_hat,
    positive_part,
    power_conjugate,
    truncation_bound_check,
)
from .measures import (
    EmptyFamilyError,
    EntropyClass,
    Measure,
    decide_membership,
    density,
    density_span,
    entropy_representatives,
    full_support_member,
    is_face,
    restrict,
    separating_polytope,
    verify_face_span_identity,
    verify_weakclose,
)
from .pricing import (
    DominationEmptyError,
    PriceUnboundedError,
    PricingProblem,
    acceptance_set_matches,
    admissible_truncation_check,
    coherent_risk,
    price_axioms_hold,
    price_with_duality,
    verify_symmetric_duality,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PARSE = 2
EXIT_EMPTY = 3
EXIT_UNPRICEABLE = 4

GAP_NOTE = (
    "note: the strict gap between the dual supremum and the admissible "
    "super-replication price for unbounded claims cannot occur on a finite "
    "outcome space (finitely generated wedges are closed); "
    "not reproducible at desk scale."
)


class Report:
    """Ordered key-value report with deterministic rendering."""

    def __init__(self, command: str):
        self.pairs: list[tuple[str, str]] = [("command", command), ("version", __version__)]

    def add(self, key: str, value):
        self.pairs.append((key, str(value)))

    def add_file(self, label: str, path: str, data: bytes):
        self.pairs.append((f"{label}-file", path))
        self.pairs.append((f"{label}-sha256", hashlib.sha256(data).hexdigest()[:16]))

    def text(self) -> str:
        return "".join(f"{k}: {v}\n" for k, v in self.pairs)

    def json(self) -> str:
        out: dict[str, object] = {}
        for k, v in self.pairs:
            if k in out:
                prior = out[k]
                if isinstance(prior, list):
                    prior.append(v)
                else:
                    out[k] = [prior, v]
            else:
                out[k] = v
        return json.dumps(out, sort_keys=True, indent=2) + "\n"


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise MarketFormatError(f"cannot read {path}: {exc}") from exc


def _parse_claim(text: str):
    parts = text.replace(",", " ").split()
    if not parts:
        raise ValueError("empty claim")
    return vec(parse_rational(t) for t in parts)


def _parse_utility(flag: str):
    if flag == "none":
        return None
    if flag == "log":
        return logarithmic_conjugate()
    if flag.startswith("exp:"):
        return exponential_conjugate(parse_rational(flag[4:]))
    if flag.startswith("power:"):
        return power_conjugate(parse_rational(flag[6:]))
    raise ValueError(f"unknown utility {flag!r} (use exp:g, log, power:p or none)")


def _fmt(x: Fraction, approx: bool) -> str:
    s = format_rational(x)
    if approx and Fraction(x).denominator != 1:
        s += f" (~{float(x):.6g})"
    return s


def _fmt_vec(v, approx: bool) -> str:
    if approx:
        return " ".join(_fmt(x, True) for x in v)
    return format_vec(v)


# ---------------------------------------------------------------------------
# commands


def cmd_price(args) -> tuple[int, Report]:
    rep = Report("price")
    data = _read(args.market)
    model = load_market(data.decode())
    rep.add_file("market", args.market, data)
    claim = _parse_claim(args.claim)
    conjugate = _parse_utility(args.utility)
    rep.add("atoms", " ".join(model.space.atoms))
    rep.add("weights", format_vec(model.space.weights))
    rep.add("claim", format_vec(claim))
    rep.add("family", args.family)
    rep.add("utility", args.utility)
    wedge = gains_wedge(model)
    result = price_with_duality(
        PricingProblem(
            model=model,
            wedge=wedge,
            claim=claim,
            family=args.family,
            conjugate=conjugate,
        )
    )
    rep.add("price", _fmt(result.price, args.approx))
    rep.add("primal-budget", _fmt(result.primal_budget, args.approx))
    rep.add("primal-dominating", _fmt_vec(result.dominating, args.approx))
    rep.add("dual-witness", _fmt_vec(result.dual_witness.masses, args.approx))
    rep.add("lp-dual-witness", _fmt_vec(result.lp_dual_witness.masses, args.approx))
    rep.add("attained", "yes" if result.attained else "no")
    rep.add("attained-in", result.attained_in)
    rep.add("certificate", "primal dominating claim and dual witness agree exactly")
    return EXIT_OK, rep


def cmd_polar(args) -> tuple[int, Report]:
    rep = Report("polar")
    data = _read(args.cone)
    cone = parse_cone(data.decode())
    rep.add_file("cone", args.cone, data)
    if args.weights:
        weights = vec(parse_rational(t) for t in args.weights.replace(",", " ").split())
    else:
        weights = vec([1] * cone.dim)
    subspace = None
    if args.subspace:
        rows = [
            vec(parse_rational(t) for t in row.replace(",", " ").split())
            for row in args.subspace.split(";")
        ]
        subspace = tuple(rows)
    pairing = Pairing(weights=weights, subspace_basis=subspace)
    rep.add("weights", format_vec(weights))
    result = dd_convert(polar(cone, pairing))
    rep.add("dim", result.dim)
    for g in result.generators:
        rep.add("V", format_vec(g))
    for h in result.halfspaces:
        rep.add("H", format_vec(h))
    return EXIT_OK, rep


def cmd_measures(args) -> tuple[int, Report]:
    rep = Report("measures")
    data = _read(args.market)
    model = load_market(data.decode())
    rep.add_file("market", args.market, data)
    rep.add("atoms", " ".join(model.space.atoms))
    rep.add("weights", format_vec(model.space.weights))
    m1 = separating_polytope(model, gains_wedge(model))
    rep.add("vertex-count", len(m1.vertices))
    for v in m1.vertices:
        rep.add("vertex", _fmt_vec(v.masses, args.approx))
    if m1.is_empty:
        rep.add("empty", "yes (no separating measure; the market admits arbitrage)")
    else:
        w = full_support_member(m1)
        rep.add(
            "full-support-member",
            _fmt_vec(w.masses, args.approx) if w is not None else "none",
        )
    return EXIT_OK, rep


def cmd_farkas(args) -> tuple[int, Report]:
    rep = Report("farkas")
    data = _read(args.matrix)
    rows = [
        vec(parse_rational(t) for t in line.split())
        for line in data.decode().splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    a = mat(rows)
    rep.add_file("matrix", args.matrix, data)
    b = _parse_claim(args.b)
    if len(b) != len(a):
        raise ValueError("right-hand side length does not match the row count")
    rep.add("b", format_vec(b))
    alt = farkas_alternative(a, b)
    rep.add("branch", alt.branch)
    if alt.branch == "primal":
        rep.add("x", format_vec(alt.x))
        rep.add("certificate", "x >= 0 and Ax = b verified by substitution")
    else:
        rep.add("y", format_vec(alt.y))
        rep.add("certificate", "y.b > 0 and A^T y <= 0 verified by substitution")
    return EXIT_OK, rep


def cmd_risk(args) -> tuple[int, Report]:
    rep = Report("risk")
    mdata = _read(args.market)
    model = load_market(mdata.decode())
    rep.add_file("market", args.market, mdata)
    cdata = _read(args.cone)
    cone = parse_cone(cdata.decode())
    rep.add_file("cone", args.cone, cdata)
    claim = _parse_claim(args.claim)
    rep.add("claim", format_vec(claim))
    support = model.space.support
    rho = coherent_risk(claim, cone, support)
    rep.add("risk", _fmt(rho, args.approx))
    rep.add(
        "acceptance-set",
        "consistent" if acceptance_set_matches(cone, claim, support) else "inconsistent",
    )
    return EXIT_OK, rep


def _verdict(rep: Report, name: str, ok: bool, detail: str = "") -> bool:
    rep.add(name, ("PASS" if ok else "FAIL") + (f" ({detail})" if detail else ""))
    return ok


def cmd_verify(args) -> tuple[int, Report]:
    rep = Report("verify")
    data = _read(args.market)
    model = load_market(data.decode())
    rep.add_file("market", args.market, data)
    conjugate = _parse_utility(args.utility)
    if conjugate is None:
        conjugate = logarithmic_conjugate()
    rep.add("utility", args.utility)
    rep.add("suite", args.suite)
    space = model.space
    wedge = gains_wedge(model)
    m1 = separating_polytope(model, wedge)
    if m1.is_empty:
        raise EmptyFamilyError("no separating measure exists for this market")
    suites = (
        ("weakclose", "faces", "duality", "admissible", "conelaw", "truncation", "farkas", "axioms")
        if args.suite == "all"
        else (args.suite,)
    )
    ok_all = True
    cls = EntropyClass(base=m1, conjugate=conjugate, kind="finite_entropy")
    reps = entropy_representatives(m1, conjugate)

    if "weakclose" in suites:
        r = verify_weakclose(model, wedge, conjugate)
        ok_all &= _verdict(rep, "entropy-closure-cones", r.passed, "; ".join(r.details))
        if conjugate.phi_at_zero_finite:
            rep.add("note-entropy", "conjugate finite at zero: the entropy family "
                    "already equals the full separating family")

    if "faces" in suites:
        hat_ok = is_face(lambda q: decide_membership(q, EntropyClass(
            base=m1, conjugate=conjugate, kind="finite_loss_entropy")), m1)
        ok_all &= _verdict(rep, "loss-entropy-face", hat_ok)
        fr = verify_face_span_identity(
            m1, reps, lambda q: decide_membership(q, EntropyClass(
                base=m1, conjugate=conjugate, kind="finite_loss_entropy"))
        )
        ok_all &= _verdict(rep, "face-span-saturation", fr.passed, "; ".join(fr.details))

    if "duality" in suites:
        r = verify_symmetric_duality(model, wedge, list(m1.vertices))
        ok_all &= _verdict(
            rep,
            "symmetric-duality-face",
            r.all_agree and r.all_true,
            f"statements {r.density_cone_saturates}/{r.polar_matches_closure}/{r.closure_polar_matches}",
        )
        if len(m1.vertices) > 1:
            w = full_support_member(m1)
            single = [w if w is not None else m1.vertices[0]]
            r2 = verify_symmetric_duality(
                model, wedge, single,
                pairing_subspace=density_span(list(m1.vertices), space),
            )
            ok_all &= _verdict(
                rep,
                "symmetric-duality-agreement",
                r2.all_agree,
                "all three statements false together on the strict subfamily"
                if not r2.all_true else "subfamily already saturates",
            )

    if "admissible" in suites:
        from .market import one_step_increments

        incs = one_step_increments(model)
        claim = tuple(2 * x for x in incs[0]) if incs else (Fraction(0),) * space.n
        tr = admissible_truncation_check(claim, model, conjugate=conjugate)
        ok_all &= _verdict(
            rep, "admissible-truncation", tr.passed,
            f"c={format_rational(tr.constant)}; " + "; ".join(tr.details),
        )

    if "conelaw" in suites:
        dens = [density(v, space) for v in m1.vertices]
        dens.append(vec([1] * len(space.support)))
        t = dd_convert(cone_from_generators([density(v, space) for v in m1.vertices],
                                            len(space.support)))
        try:
            ok = check_cone_intersection_law(dens, t)
        except LemmaPreconditionError as exc:
            ok = False
            rep.add("conelaw-error", str(exc))
        ok_all &= _verdict(rep, "cone-intersection-law", ok)

    if "truncation" in suites:
        w = full_support_member(m1)
        if w is None:
            rep.add("truncation-inequality", "SKIP (no full-support measure)")
        else:
            d_full = density(w, space)
            zero = vec([0] * len(d_full))
            weights = restrict(space.weights, space.support)
            # the inequality's hypothesis wants a nonnegative convex f
            f_hat = lambda t: positive_part(phi_hat(conjugate, t))
            f_raw = lambda t: positive_part(conjugate_value(conjugate, t))
            ok = truncation_bound_check(f_hat, zero, d_full, d_full, INF, weights)
            ok &= truncation_bound_check(f_raw, zero, d_full, d_full, INF, weights)
            ok &= truncation_bound_check(f_hat, zero, d_full, d_full, Fraction(2), weights)
            ok_all &= _verdict(rep, "truncation-inequality", ok)

    if "farkas" in suites:
        from .market import one_step_increments

        incs = one_step_increments(model)
        cols = incs if incs else [vec([1] * space.n)]
        a = tuple(zip(*cols))  # atoms x strategies matrix
        r = verify_closed_image_equivalence(a, trials=25, seed=7)
        ok_all &= _verdict(
            rep, "certified-alternatives-closed-image", r.passed,
            f"{r.trials} random right-hand sides",
        )

    if "axioms" in suites:
        ok = price_axioms_hold(model, wedge, conjugate, samples=10, seed=3)
        ok_all &= _verdict(rep, "price-axioms", ok)
        g = growth_check(conjugate, Fraction(1, 2), Fraction(2), Fraction(4), Fraction(4), 10)
        detail = ""
        if g.family_witness:
            a, b = g.family_witness
            detail = f"family witness alpha={format_rational(a)} beta={format_rational(b)}"
        ok_all &= _verdict(rep, "growth-condition-grid", g.passed, detail)

    rep.add("unbounded-claim-gap", GAP_NOTE)
    return (EXIT_OK if ok_all else EXIT_FAIL), rep


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarwedge",
        description="exact cone duality and super-replication pricing",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("price", help="super-replication price of a claim")
    p.add_argument("market")
    p.add_argument("--claim", required=True, help="comma-separated rationals, one per atom")
    p.add_argument("--family", default="mphi", choices=["m1", "mphi", "mhatphi"])
    p.add_argument("--utility", default="log", help="exp:g, log, power:p or none")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("polar", help="polar wedge of a cone file")
    p.add_argument("cone")
    p.add_argument("--weights", default="", help="pairing weights, comma separated")
    p.add_argument("--subspace", default="", help="basis rows 'a,b,c;d,e,f'")
    p.set_defaults(func=cmd_polar)

    p = sub.add_parser("measures", help="separating-measure polytope of a market")
    p.add_argument("market")
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("farkas", help="certified alternative for Ax=b, x>=0")
    p.add_argument("matrix")
    p.add_argument("--b", required=True, help="right-hand side, comma separated")
    p.set_defaults(func=cmd_farkas)

    p = sub.add_parser("risk", help="coherent risk of a claim over an acceptance cone")
    p.add_argument("market")
    p.add_argument("cone")
    p.add_argument("--claim", required=True)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("verify", help="run the duality verification suite on a market")
    p.add_argument("market")
    p.add_argument("--utility", default="log")
    p.add_argument(
        "--suite",
        default="all",
        choices=["all", "weakclose", "faces", "duality", "admissible",
                 "conelaw", "truncation", "farkas", "axioms"],
    )
    p.set_defaults(func=cmd_verify)

    for sp in sub.choices.values():
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--approx", action="store_true", help="append decimal approximations")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else 0
    try:
        code, rep = args.func(args)
    except EmptyFamilyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (DominationEmptyError, PriceUnboundedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNPRICEABLE
    except (MarketFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    sys.stdout.write(rep.json() if args.json else rep.text())
    return code


if __name__ == "__main__":
    sys.exit(main())
