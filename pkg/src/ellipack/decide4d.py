"""Deciding E(a,b) -> E(c,d) embeddings in dimension four.

The embedding exists exactly when the capacity sequence of the domain is
dominated termwise by that of the target.  That criterion quantifies over all
indices; here it becomes finite by combining the quadratic bounds on the
counting function: past a computable cutoff the domain's lower parabola
dominates the target's upper parabola, so only an explicit prefix of indices
needs checking.  Cheap closed-form sufficient rules and exact obstruction
witnesses complete the picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .ech import Ellipsoid, lattice_count, merged_progressions
from .radicals import (
    Check,
    Radical,
    certified_check,
    format_value,
)
from .scalar import (
    DEFAULT_PRECISION,
    Cmp3,
    DomainError,
    Precision,
    XReal,
    cmp,
    root_up,
)

__all__ = [
    "Decision",
    "Justification",
    "Outcome",
    "Rule",
    "Witness",
    "cor_onecor_applies",
    "cutoff_y0",
    "decide",
    "m_of",
    "ms_checks",
    "onecor_checks",
    "ratio_threshold_check",
    "thm_oneemb_applies",
    "volume_relation_check",
]


class Rule(Enum):
    TERMWISE_WITH_CUTOFF = "TermwiseWithCutoff"
    INCLUSION = "Inclusion"
    THEOREM_ONE = "TheoremOne"
    THEOREM_ONE_EMB = "TheoremOneEmb"
    COROLLARY_ONECOR = "CorollaryOnecor"
    MS_THRESHOLD = "MSThreshold"
    SUSPENSION = "Suspension"
    COMPOSITION = "Composition"
    AXIOM_FULL_FILL = "AxiomFullFill"


class Outcome(Enum):
    EMBEDS = "embeds"
    OBSTRUCTED = "obstructed"
    VERIFIED_UP_TO = "verified_up_to"


@dataclass(frozen=True, eq=False)
class Justification:
    """Why an embedding holds: a rule, its parameters, and the certified
    inequality checks that fired (all CertainlyTrue)."""

    rule: Rule
    parameters: dict = field(default_factory=dict)
    checks: Tuple[Check, ...] = ()

    def as_json(self) -> dict:
        params = {}
        for key, value in self.parameters.items():
            if isinstance(value, (Radical, Fraction, XReal)):
                params[key] = format_value(value)
            elif isinstance(value, (list, tuple)):
                params[key] = [format_value(v) if isinstance(v, (Radical, Fraction, XReal))
                               else v for v in value]
            else:
                params[key] = value
        return {"rule": self.rule.value, "parameters": params,
                "checks": [c.as_json() for c in self.checks]}


@dataclass(frozen=True)
class Witness:
    """An index where termwise domination fails; re-checkable exactly.

    Values are exact scalars: rationals, or radicals for commensurable
    irrational factor tuples (everything scales by the common factor).
    """

    k: int
    domain_value: Union[Fraction, Radical]
    target_value: Union[Fraction, Radical]


@dataclass(frozen=True, eq=False)
class Decision:
    outcome: Outcome
    justification: Optional[Justification] = None
    witness: Optional[Witness] = None
    cutoff: Optional[Union[Fraction, Radical]] = None
    verified_terms: Optional[int] = None

    def as_json(self) -> dict:
        doc = {
            "outcome": self.outcome.value,
            "rule": self.justification.rule.value if self.justification else None,
            "parameters": (self.justification.as_json()["parameters"]
                           if self.justification else {}),
            "cutoff": str(self.cutoff) if self.cutoff is not None else None,
            "verified_terms": self.verified_terms,
            "witness": None,
            "checks": ([c.as_json() for c in self.justification.checks]
                       if self.justification else []),
        }
        if self.witness is not None:
            doc["witness"] = {"k": self.witness.k,
                              "lhs": str(self.witness.domain_value),
                              "rhs": str(self.witness.target_value)}
        return doc


# ---------------------------------------------------------------------------
# Scalar helpers shared by the rules

ValueLike = Union[Radical, XReal, Fraction, int]


def _as_value(v: ValueLike):
    if isinstance(v, XReal):
        if v.is_exact:
            return Radical.of(v.value)
        return v
    return Radical.of(v)


def _prod(x, y, bits: int = 64):
    """Product of two scalars, exact when both are exact."""
    xv, yv = _as_value(x), _as_value(y)
    if isinstance(xv, Radical) and isinstance(yv, Radical):
        return xv * yv
    xe = xv.eval(bits) if isinstance(xv, Radical) else xv
    ye = yv.eval(bits) if isinstance(yv, Radical) else yv
    return xe * ye


def m_of(x: ValueLike, ctx: Precision = DEFAULT_PRECISION) -> XReal:
    """The ratio threshold (5x+16)^2 / (16x).

    Decreasing for 1 <= x <= 16/5, increasing past 16/5, with minimum value 20.
    Exact on exact input; a certified enclosure otherwise.
    """
    v = _as_value(x)
    if isinstance(v, Radical) and v.is_rational:
        q = v.as_fraction()
        if q < 1:
            raise DomainError("the threshold function is used only for x >= 1")
        return XReal.exact((5 * q + 16) ** 2 / (16 * q))
    xe = v.eval(ctx.start) if isinstance(v, Radical) else v
    if cmp(xe, ">=", 1) is not Cmp3.CERTAINLY_TRUE:
        raise DomainError("cannot certify x >= 1")
    s = xe * 5 + 16
    return s * s / (xe * 16)


# ---------------------------------------------------------------------------
# Certified rule checks (shared with certificate builders and verifiers)

def volume_relation_check(x, y, u, v, op: str = "==",
                          ctx: Precision = DEFAULT_PRECISION,
                          label: str = "volume") -> Check:
    """Certify ``x*y op u*v`` (the 4D volume relation of a replacement pair)."""
    return certified_check(label, [(Fraction(1), _prod(x, y))], op,
                           [(Fraction(1), _prod(u, v))], ctx)


def ratio_threshold_check(x, y, u, v,
                          ctx: Precision = DEFAULT_PRECISION) -> Check:
    """Certify ``y/x >= m(v/u)`` in the product form
    ``16*u*v*x*y >= 25*v^2*x^2 + 160*u*v*x^2 + 256*u^2*x^2``."""
    lhs = [(Fraction(16), _prod(_prod(u, v), _prod(x, y)))]
    xx = _prod(x, x)
    rhs = [(Fraction(25), _prod(_prod(v, v), xx)),
           (Fraction(160), _prod(_prod(u, v), xx)),
           (Fraction(256), _prod(_prod(u, u), xx))]
    return certified_check("ratio_above_threshold", lhs, ">=", rhs, ctx)


def onecor_checks(x, y, d, ctx: Precision = DEFAULT_PRECISION) -> List[Check]:
    """The three conditions for E(x,y) -> E(d, xy/d):
    y/x >= 2^7/3, 2x <= d, d <= sqrt(xy)."""
    c1 = certified_check("ratio_ge_128_over_3",
                         [(Fraction(3), _as_value(y))], ">=",
                         [(Fraction(128), _as_value(x))], ctx)
    c2 = certified_check("d_ge_twice_smaller",
                         [(Fraction(2), _as_value(x))], "<=",
                         [(Fraction(1), _as_value(d))], ctx)
    c3 = certified_check("d_squared_le_product",
                         [(Fraction(1), _prod(d, d))], "<=",
                         [(Fraction(1), _prod(x, y))], ctx)
    return [c1, c2, c3]


_BALL_THRESHOLD = Fraction(289, 36)  # 8 + 1/36


def ms_checks(x, y, u, v, ctx: Precision = DEFAULT_PRECISION,
              exceptions: Optional[Sequence[Tuple[Fraction, Fraction]]] = None,
              ) -> List[Check]:
    """Conditions for E(x,y) -> B(u) (ball target, u == v):
    the ratio y/x clears the ball-filling threshold and u^2 >= x*y.

    With an exception-interval table the ratio may instead lie in
    [64/9, 8] while avoiding every listed interval.
    """
    checks = [certified_check("target_is_ball", _as_value(u), "==",
                              _as_value(v), ctx)]
    ratio_hi = certified_check(
        "ratio_ge_ball_threshold",
        [(_BALL_THRESHOLD.denominator, _as_value(y))], ">=",
        [(_BALL_THRESHOLD.numerator, _as_value(x))], ctx)
    if ratio_hi.passed or exceptions is None:
        checks.append(ratio_hi)
    else:
        checks.append(certified_check("ratio_ge_64_over_9",
                                      [(Fraction(9), _as_value(y))], ">=",
                                      [(Fraction(64), _as_value(x))], ctx))
        checks.append(certified_check("ratio_le_8",
                                      [(Fraction(1), _as_value(y))], "<=",
                                      [(Fraction(8), _as_value(x))], ctx))
        for lo, hi in exceptions:
            below = certified_check(
                f"ratio_avoids_[{lo},{hi}]_below",
                [(lo.denominator, _as_value(y))], "<=",
                [(lo.numerator, _as_value(x))], ctx)
            if below.passed:
                checks.append(below)
                continue
            checks.append(certified_check(
                f"ratio_avoids_[{lo},{hi}]_above",
                [(hi.denominator, _as_value(y))], ">=",
                [(hi.numerator, _as_value(x))], ctx))
    checks.append(certified_check("capacity_covers_volume",
                                  [(Fraction(1), _prod(u, u))], ">=",
                                  [(Fraction(1), _prod(x, y))], ctx))
    return checks


def thm_oneemb_applies(alpha: ValueLike, beta: ValueLike,
                       ctx: Precision = DEFAULT_PRECISION) -> Cmp3:
    """Certify ``alpha >= (5*beta + 16)^2 / (16*beta)`` for beta >= 1.

    When CertainlyTrue there is a volume-filling embedding of E(1, alpha)
    into the sqrt(alpha/beta)-scaled E(1, beta).
    """
    b = _as_value(beta)
    gate = cmp(b.eval(ctx.start) if isinstance(b, Radical) else b, ">=", 1)
    if gate is not Cmp3.CERTAINLY_TRUE:
        raise DomainError("beta must certify >= 1")
    check = ratio_threshold_check(1, alpha, 1, beta, ctx)
    return check.result


def cor_onecor_applies(a: ValueLike, b: ValueLike, d: ValueLike,
                       ctx: Precision = DEFAULT_PRECISION) -> Cmp3:
    """Certify the conjunction ``b/a >= 2^7/3 and 2a <= d <= sqrt(ab)``."""
    av, bv = _as_value(a), _as_value(b)
    if isinstance(av, Radical) and isinstance(bv, Radical) and bv < av:
        raise DomainError("expects a <= b")
    results = [c.result for c in onecor_checks(a, b, d, ctx)]
    if any(r is Cmp3.CERTAINLY_FALSE for r in results):
        return Cmp3.CERTAINLY_FALSE
    if all(r is Cmp3.CERTAINLY_TRUE for r in results):
        return Cmp3.CERTAINLY_TRUE
    return Cmp3.UNKNOWN


# ---------------------------------------------------------------------------
# Finite cutoff

def cutoff_y0(a, b, c, d) -> Optional[Fraction]:
    """A rational Y0 past which the domain's lower parabola dominates the
    target's upper parabola, or None when the quadratic cannot provide one.

    Q(y) = (1/2ab - 1/2cd) y^2 + (1/2a - 1/2c - 1/d) y - (d/8c + 1) >= 0 for
    all y >= Y0.  Needs a positive leading coefficient, or a zero one with a
    positive linear coefficient.
    """
    a, b, c, d = Fraction(a), Fraction(b), Fraction(c), Fraction(d)
    if not (0 < a <= b and 0 < c <= d):
        raise DomainError("cutoff expects sorted positive pairs")
    lead = Fraction(1, 2) / (a * b) - Fraction(1, 2) / (c * d)
    lin = Fraction(1, 2) / a - Fraction(1, 2) / c - Fraction(1) / d
    const = d / (8 * c) + 1
    if lead > 0:
        disc = lin * lin + 4 * lead * const
        s = root_up(disc, 2, 64)
        root_bound = (s - lin) / (2 * lead)
        half_up = Fraction(math.ceil(root_bound * 2), 2)
        return max(half_up, Fraction(0))
    if lead == 0 and lin > 0:
        return const / lin
    return None


# ---------------------------------------------------------------------------
# Termwise comparison

def _first_violation(a: Fraction, b: Fraction, c: Fraction, d: Fraction,
                     limit: int, unit: Radical = None) -> Optional[Witness]:
    """First k < limit with N(a,b)(k) > N(c,d)(k), scanning exactly.

    ``unit`` rescales the reported witness values back to the caller's
    coordinates (commensurable normalization divides it out beforehand).
    """
    scale = math.lcm(a.denominator, b.denominator, c.denominator, d.denominator)
    dom = merged_progressions(int(a * scale), int(b * scale))
    tgt = merged_progressions(int(c * scale), int(d * scale))
    for k in range(limit):
        lhs = next(dom)
        rhs = next(tgt)
        if lhs > rhs:
            lhs_value, rhs_value = Fraction(lhs, scale), Fraction(rhs, scale)
            if unit is not None and unit != 1:
                return Witness(k, unit * lhs_value, unit * rhs_value)
            return Witness(k, lhs_value, rhs_value)
    return None


# ---------------------------------------------------------------------------
# Sufficient rules

def _try_inclusion(dom: Ellipsoid, tgt: Ellipsoid,
                   ctx: Precision) -> Optional[Justification]:
    checks = []
    for i, (x, u) in enumerate(zip(dom.factors, tgt.factors)):
        checks.append(certified_check(f"factor_{i}_le",
                                      [(Fraction(1), x)], "<=",
                                      [(Fraction(1), u)], ctx))
    if all(c.passed for c in checks):
        return Justification(Rule.INCLUSION, {}, tuple(checks))
    return None


def _try_theorem_one(dom: Ellipsoid, tgt: Ellipsoid,
                     ctx: Precision) -> Optional[Justification]:
    if not (dom.is_rational and tgt.is_rational):
        return None
    a, b = dom.as_fractions()
    c, d = tgt.as_fractions()
    if a * b != c * d:
        return None
    vol = volume_relation_check(a, b, c, d, "==", ctx)
    ratio = ratio_threshold_check(a, b, c, d, ctx)
    if vol.passed and ratio.passed:
        return Justification(
            Rule.THEOREM_ONE,
            {"threshold_argument": d / c, "threshold_value": (5 * (d / c) + 16) ** 2 / (16 * d / c)},
            (vol, ratio))
    return None


def _try_theorem_one_emb(dom: Ellipsoid, tgt: Ellipsoid,
                         ctx: Precision) -> Optional[Justification]:
    a, b = dom.factors
    c, d = tgt.factors
    vol = volume_relation_check(a, b, c, d, "==", ctx)
    if not vol.passed:
        return None
    ratio = ratio_threshold_check(a, b, c, d, ctx)
    if not ratio.passed:
        return None
    params = {}
    if isinstance(a, Radical) and isinstance(b, Radical):
        params["alpha"] = b / a
    if isinstance(c, Radical) and isinstance(d, Radical):
        params["beta"] = d / c
    return Justification(Rule.THEOREM_ONE_EMB, params, (vol, ratio))


def _try_onecor(dom: Ellipsoid, tgt: Ellipsoid,
                ctx: Precision) -> Optional[Justification]:
    a, b = dom.factors
    c, d = tgt.factors
    vol = volume_relation_check(a, b, c, d, "==", ctx)
    if not vol.passed:
        return None
    checks = onecor_checks(a, b, c, ctx)
    if all(c_.passed for c_ in checks):
        return Justification(Rule.COROLLARY_ONECOR, {"d": c},
                             (vol, *checks))
    return None


def _try_ms_threshold(dom: Ellipsoid, tgt: Ellipsoid,
                      ctx: Precision) -> Optional[Justification]:
    a, b = dom.factors
    c, d = tgt.factors
    checks = ms_checks(a, b, c, d, ctx)
    if all(c_.passed for c_ in checks):
        return Justification(Rule.MS_THRESHOLD, {}, tuple(checks))
    return None


_RULE_ORDER = (_try_inclusion, _try_theorem_one, _try_theorem_one_emb,
               _try_onecor, _try_ms_threshold)


# ---------------------------------------------------------------------------
# The decision procedure

def _commensurable_normalization(domain: Ellipsoid, target: Ellipsoid):
    """Rational factor quadruple equivalent to the given one, plus the scale.

    Capacity sequences scale linearly, so dividing all four factors by the
    smallest domain factor changes nothing; when every ratio is rational the
    exact path applies.  Returns (a, b, c, d, scale) or None.
    """
    if not (domain.is_exact and target.is_exact):
        return None
    scale = domain.factors[0]
    scaled = [f / scale for f in (*domain.factors, *target.factors)]
    if not all(s.is_rational for s in scaled):
        return None
    a, b, c, d = (s.as_fraction() for s in scaled)
    return a, b, c, d, scale


def _split_normalization(pair: Ellipsoid):
    """(scale, rational sorted pair) when the two factors are commensurable."""
    if not pair.is_exact:
        return None
    scale = pair.factors[0]
    ratio = pair.factors[1] / scale
    if not ratio.is_rational:
        return None
    return scale, (Fraction(1), ratio.as_fraction())


def _first_cross_violation(dom_scale: Radical, dom: Tuple[Fraction, Fraction],
                           tgt_scale: Radical, tgt: Tuple[Fraction, Fraction],
                           limit: int) -> Optional[Witness]:
    """Violation scan when the two sides carry different irrational scales.

    Each side's values are its scale times a rational sequence, so the
    comparison dom_scale*x > tgt_scale*y is decided exactly through the
    canonical form of the scale ratio: with r = dom_scale/tgt_scale = Q^(1/m),
    it holds iff Q * x^m > y^m.
    """
    ratio = dom_scale / tgt_scale
    q, m = ratio.radicand, ratio.index
    dl = math.lcm(dom[0].denominator, dom[1].denominator)
    tl = math.lcm(tgt[0].denominator, tgt[1].denominator)
    dom_vals = merged_progressions(int(dom[0] * dl), int(dom[1] * dl))
    tgt_vals = merged_progressions(int(tgt[0] * tl), int(tgt[1] * tl))
    for k in range(limit):
        x = Fraction(next(dom_vals), dl)
        y = Fraction(next(tgt_vals), tl)
        if q * x ** m > y ** m:
            return Witness(k, dom_scale * x, tgt_scale * y)
    return None


def decide(domain: Ellipsoid, target: Ellipsoid, max_terms: int = 100_000,
           ctx: Precision = DEFAULT_PRECISION) -> Decision:
    """Decide E(a,b) -> E(c,d) in dimension four.

    With rational factors (up to a common scale) and a usable cutoff the
    answer is complete: the sequences are compared termwise below the cutoff
    index and the result is Embeds (with the cutoff recorded) or an exact
    obstruction witness.  Otherwise the closed-form sufficient rules are
    tried, and finally a bounded scan that can still find witnesses; an
    inconclusive scan reports VerifiedUpTo rather than guessing.
    Incommensurable factors route through the sufficient rules only; when
    none certifies, the report is VerifiedUpTo(0).
    """
    if domain.n != 2 or target.n != 2:
        raise DomainError("the decision procedure is four-dimensional only")
    if max_terms <= 0:
        raise DomainError("max_terms must be positive")

    normalized = _commensurable_normalization(domain, target)
    y0 = None
    if normalized is not None:
        a, b, c, d, scale = normalized
        y0_frac = cutoff_y0(a, b, c, d)
        if y0_frac is not None:
            y0 = y0_frac if scale == 1 else scale * y0_frac
        if y0_frac is not None:
            terms = lattice_count(c, d, y0_frac)
            if terms <= max_terms:
                witness = _first_violation(a, b, c, d, terms, scale)
                if witness is not None:
                    return Decision(Outcome.OBSTRUCTED, witness=witness,
                                    cutoff=y0, verified_terms=witness.k)
                just = Justification(Rule.TERMWISE_WITH_CUTOFF,
                                     {"cutoff": y0, "verified_terms": terms})
                return Decision(Outcome.EMBEDS, just, cutoff=y0,
                                verified_terms=terms)

    for rule in _RULE_ORDER:
        just = rule(domain, target, ctx)
        if just is not None:
            return Decision(Outcome.EMBEDS, just)

    if normalized is not None:
        witness = _first_violation(a, b, c, d, max_terms, scale)
        if witness is not None:
            return Decision(Outcome.OBSTRUCTED, witness=witness, cutoff=y0,
                            verified_terms=witness.k)
        return Decision(Outcome.VERIFIED_UP_TO, cutoff=y0,
                        verified_terms=max_terms)

    dom_split = _split_normalization(domain)
    tgt_split = _split_normalization(target)
    if dom_split is not None and tgt_split is not None:
        witness = _first_cross_violation(dom_split[0], dom_split[1],
                                         tgt_split[0], tgt_split[1], max_terms)
        if witness is not None:
            return Decision(Outcome.OBSTRUCTED, witness=witness,
                            verified_terms=witness.k)
        return Decision(Outcome.VERIFIED_UP_TO, verified_terms=max_terms)
    return Decision(Outcome.VERIFIED_UP_TO, verified_terms=0)
