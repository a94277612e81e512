"""Certified higher-dimensional embedding chains.

A certificate is an ordered list of embedding steps whose composition takes
the overall source into the overall target.  Every step carries the rule that
justifies it and the certified inequality checks behind that rule, so a
certificate can be re-verified from scratch without trusting its producer.
Suspension steps act on a chosen pair of factors through a four-dimensional
embedding; axiom steps record existence results whose arithmetic side
conditions are the only thing checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .decide4d import (
    Justification,
    Rule,
    ms_checks,
    onecor_checks,
    ratio_threshold_check,
    volume_relation_check,
)
from .ech import Ellipsoid
from .radicals import (
    Check,
    Radical,
    RadicalLike,
    certified_check,
    parse_scalar,
)
from .scalar import (
    DEFAULT_PRECISION,
    Cmp3,
    DomainError,
    EllipackError,
    Precision,
    PrecisionExhausted,
)

__all__ = [
    "Certificate",
    "CertificateError",
    "EmbeddingStep",
    "HypothesisFailure",
    "VolumeObstruction",
    "certificate_from_json",
    "general_chain",
    "main_chain",
    "pack_balls_step",
    "pack_ellipsoids_step",
    "rebalance",
    "s_constant",
    "verify_certificate",
]


class HypothesisFailure(EllipackError):
    """A chain construction's certified precondition failed."""

    def __init__(self, reason: str, check: Optional[Check] = None):
        self.reason = reason
        self.check = check
        detail = f"{reason}: {check.lhs} {check.op} {check.rhs}" if check else reason
        super().__init__(detail)


class VolumeObstruction(HypothesisFailure):
    """The domain's volume exceeds the target's: no embedding can exist."""


class CertificateError(EllipackError):
    """A certificate failed independent re-verification."""


@dataclass(frozen=True, eq=False)
class EmbeddingStep:
    """One embedding in a chain.

    ``pair`` marks suspension steps: the four-dimensional sub-embedding acts
    on the two indexed source factors and the justification's parameters
    record its source and target pairs.  ``copies > 1`` means the source is
    that many disjoint copies (packing steps only).
    """

    source: Ellipsoid
    target: Ellipsoid
    rule: Justification
    pair: Optional[Tuple[int, int]] = None
    copies: int = 1

    def as_json(self) -> dict:
        doc = self.rule.as_json()
        return {
            "rule": doc["rule"],
            "pair": list(self.pair) if self.pair is not None else None,
            "copies": self.copies,
            "source": self.source.as_json(),
            "target": self.target.as_json(),
            "params": doc["parameters"],
            "checks": doc["checks"],
        }


@dataclass(frozen=True, eq=False)
class Certificate:
    """A composable chain of embedding steps from ``source`` into ``target``."""

    source: Ellipsoid
    target: Ellipsoid
    steps: Tuple[EmbeddingStep, ...]

    @property
    def source_copies(self) -> int:
        return self.steps[0].copies if self.steps else 1

    def as_json(self) -> dict:
        src = self.source.as_json()
        if self.source_copies != 1:
            src["copies"] = self.source_copies
        return {
            "source": src,
            "target": self.target.as_json(),
            "steps": [s.as_json() for s in self.steps],
        }


# ---------------------------------------------------------------------------
# Threshold constant

def s_constant(factors: Sequence[RadicalLike]) -> Radical:
    """Thinness threshold for a target factor list: chains are guaranteed
    once the domain's extreme factor ratio exceeds this value.

    Computed exactly; rational whenever the half-integer power of 20 is
    (even n), a canonical radical otherwise.
    """
    b = [Radical.of(f) for f in factors]
    n = len(b)
    if n < 2:
        raise DomainError("the threshold constant needs at least two factors")
    for i in range(n - 1):
        if b[i + 1] < b[i]:
            raise DomainError("factors must be sorted nondecreasing")
    prod = Radical.of(1)
    for f in b:
        prod = prod * f
    twenty = Radical.of(20)
    best = None
    for k in range(1, n + 1):
        term = twenty ** Fraction(k * (k - 1), 2) * prod / b[k - 1] ** n
        if best is None or best < term:
            best = term
    root = Radical.of(2) ** (n + 6) / 3 * twenty ** Fraction(n - 2, 2) * best
    return root ** (n - 1)


# ---------------------------------------------------------------------------
# Rebalancing

_RATIO_CAP = Fraction(20)


def _require(check: Check, failure: str):
    if check.result is Cmp3.UNKNOWN:
        raise PrecisionExhausted(f"{failure}: {check.lhs} {check.op} {check.rhs}")
    if not check.passed:
        raise HypothesisFailure(failure, check)


def rebalance(ellipsoid: Ellipsoid,
              ctx: Precision = DEFAULT_PRECISION) -> Tuple[Ellipsoid, Certificate]:
    """Flatten the factor profile: keep the largest factor fixed and replace
    consecutive pairs among the rest whose ratio reaches 20 by the equal
    product pair (t, 16t/5), until all those ratios are below 20.

    The product of the first n-1 factors is preserved exactly; each
    replacement multiplies the smaller pair element by at least 5/2, which
    bounds the number of steps.
    """
    if ellipsoid.n < 3:
        raise DomainError("rebalancing needs at least three factors")
    if not ellipsoid.is_exact:
        raise DomainError("rebalancing needs exact factors")

    spread = ellipsoid.factors[-1] / ellipsoid.factors[0]
    log2_spread = max(
        (spread.radicand.numerator.bit_length()
         - spread.radicand.denominator.bit_length() + 1) / spread.index, 1.0)
    max_steps = ellipsoid.n * (math.ceil(log2_spread / math.log2(2.5)) + 1)

    current = ellipsoid
    steps: List[EmbeddingStep] = []
    while True:
        prefix = current.factors[:current.n - 1]
        hit = None
        for i in range(1, len(prefix)):
            if prefix[i] >= prefix[i - 1] * _RATIO_CAP:
                hit = i
                break
        if hit is None:
            break
        if len(steps) >= max_steps:
            raise EllipackError("rebalancing exceeded its termination bound")
        x, y = prefix[hit - 1], prefix[hit]
        t = (x * y * Fraction(5, 16)).sqrt()
        # nested replacements square the canonical radicand; fail loudly
        # instead of stalling when a pathological profile blows it up
        if t.radicand.numerator.bit_length() > (1 << 22):
            raise PrecisionExhausted(
                "rebalancing factors outgrew any practical exact representation")
        u, v = t, t * Fraction(16, 5)
        checks = (
            certified_check("pair_ratio_reaches_20", [(Fraction(1), y)], ">=",
                            [(_RATIO_CAP, x)], ctx),
            volume_relation_check(x, y, u, v, "==", ctx, "pair_product_preserved"),
            certified_check("new_factor_below_largest", [(Fraction(1), v)], "<=",
                            [(Fraction(1), current.factors[-1])], ctx),
            ratio_threshold_check(x, y, u, v, ctx),
        )
        for c in checks:
            _require(c, "rebalancing step")
        target = current.replace((hit - 1, hit), (u, v))
        steps.append(EmbeddingStep(
            current, target,
            Justification(Rule.THEOREM_ONE,
                          {"pair_source": (x, y), "pair_target": (u, v)},
                          checks),
            pair=(hit - 1, hit)))
        current = target
    return current, Certificate(ellipsoid, current, tuple(steps))


# ---------------------------------------------------------------------------
# The general chain

def _positions(ell: Ellipsoid, small, large) -> Tuple[int, int]:
    factors = ell.factors
    i = factors.index(small)
    j = len(factors) - 1 - tuple(reversed(factors)).index(large)
    if i == j:
        raise DomainError("suspension needs two distinct factor positions")
    return i, j


def general_chain(domain: Ellipsoid, target: Ellipsoid,
                  ctx: Precision = DEFAULT_PRECISION, *,
                  skip_thinness_gate: bool = False) -> Certificate:
    """Volume-preserving chain from a sufficiently thin domain to the target.

    After rebalancing, one suspension step per target factor replaces the
    current smallest untouched factor and the running largest factor through
    the d-splitting corollary; the final largest factor then matches the
    target's automatically.  Every precondition is certified; failures raise
    with the failing inequality.
    """
    if domain.n != target.n:
        raise DomainError("domain and target must have the same dimension")
    if domain.n < 2:
        raise DomainError("chains need at least two factors")
    if not (domain.is_exact and target.is_exact):
        raise DomainError("chains need exact factors")

    if domain.volume() != target.volume():
        raise HypothesisFailure(
            "volume", Check("volume_products_equal", str(domain.volume()),
                            "==", str(target.volume()),
                            Cmp3.CERTAINLY_FALSE))
    threshold = s_constant(target.factors)
    ratio = domain.factors[-1] / domain.factors[0]
    if not ratio > threshold:
        gate = Check("thinness", str(ratio), ">", str(threshold),
                     Cmp3.CERTAINLY_FALSE)
        if not skip_thinness_gate:
            raise HypothesisFailure("thinness", gate)

    if domain.n >= 3:
        current, reb = rebalance(domain, ctx)
        steps: List[EmbeddingStep] = list(reb.steps)
    else:
        current, steps = domain, []

    remaining = list(current.factors[:-1])
    running = current.factors[-1]
    for k, bk in enumerate(target.factors[:-1]):
        ak = remaining.pop(0)
        checks = onecor_checks(ak, running, bk, ctx)
        for c in checks:
            _require(c, f"chain step {k + 1} ({c.label})")
        new_running = running * ak / bk
        vol = volume_relation_check(ak, running, bk, new_running, "==", ctx,
                                    "pair_product_preserved")
        i, j = _positions(current, ak, running)
        nxt = current.replace((i, j), (bk, new_running))
        steps.append(EmbeddingStep(
            current, nxt,
            Justification(Rule.COROLLARY_ONECOR,
                          {"pair_source": (ak, running),
                           "pair_target": (bk, new_running), "d": bk},
                          (vol, *checks)),
            pair=(i, j)))
        current = nxt
        running = new_running

    if running != target.factors[-1] or current != target:
        raise HypothesisFailure(
            "final factor", Check("final_factor_matches", str(running), "==",
                                  str(target.factors[-1]),
                                  Cmp3.CERTAINLY_FALSE))
    return Certificate(domain, target, tuple(steps))


def main_chain(domain: Ellipsoid, target: Ellipsoid,
               ctx: Precision = DEFAULT_PRECISION, *,
               skip_thinness_gate: bool = False) -> Certificate:
    """Chain allowing a volume deficit: enlarge the last factor to match the
    target volume (an inclusion step), then run the volume-preserving chain."""
    if domain.n != target.n:
        raise DomainError("domain and target must have the same dimension")
    if not (domain.is_exact and target.is_exact):
        raise DomainError("chains need exact factors")
    vol_d, vol_t = domain.volume(), target.volume()
    if vol_d > vol_t:
        raise VolumeObstruction(
            "volume", Check("volume_fits", str(vol_d), "<=", str(vol_t),
                            Cmp3.CERTAINLY_FALSE))
    if vol_d == vol_t:
        return general_chain(domain, target, ctx,
                             skip_thinness_gate=skip_thinness_gate)
    head = Radical.of(1)
    for f in domain.factors[:-1]:
        head = head * f
    enlarged_last = vol_t / head
    enlarged = Ellipsoid([*domain.factors[:-1], enlarged_last])
    checks = []
    for idx, (x, u) in enumerate(zip(domain.factors, enlarged.factors)):
        c = certified_check(f"factor_{idx}_le", [(Fraction(1), x)], "<=",
                            [(Fraction(1), u)], ctx)
        _require(c, "inclusion step")
        checks.append(c)
    inclusion = EmbeddingStep(domain, enlarged,
                              Justification(Rule.INCLUSION, {}, tuple(checks)))
    rest = general_chain(enlarged, target, ctx,
                         skip_thinness_gate=skip_thinness_gate)
    return Certificate(domain, target, (inclusion, *rest.steps))


# ---------------------------------------------------------------------------
# Packing reductions (axiom-labelled existence results)

_BALL_FILL_STATEMENT = ("k disjoint balls B(c) admit a full filling of "
                        "E(c, ..., c, k*c)")
_ELLIPSOID_FILL_STATEMENT = ("k disjoint copies of E(a_1, ..., a_n) admit a "
                             "full filling of E(a_1, ..., a_{n-1}, k*a_n)")


def _axiom_step(source: Ellipsoid, copies: int, statement: str,
                ctx: Precision) -> EmbeddingStep:
    scaled_last = source.factors[-1] * copies
    target = Ellipsoid([*source.factors[:-1], scaled_last])
    vol = certified_check("volume_ratio_is_one",
                          [(Fraction(copies), source.volume())], "==",
                          [(Fraction(1), target.volume())], ctx)
    _require(vol, "packing step")
    just = Justification(Rule.AXIOM_FULL_FILL,
                         {"copies": copies, "statement": statement}, (vol,))
    return EmbeddingStep(source, target, just, copies=copies)


def pack_balls_step(k: int, n: int = 2,
                    ctx: Precision = DEFAULT_PRECISION) -> EmbeddingStep:
    """Axiom step: k disjoint unit balls fully fill E(1, ..., 1, k)."""
    if k < 1:
        raise DomainError("the number of balls must be positive")
    if n < 2:
        raise DomainError("packing steps need at least two factors")
    return _axiom_step(Ellipsoid.ball(1, n), k, _BALL_FILL_STATEMENT, ctx)


def pack_ellipsoids_step(shape: Ellipsoid, k: int,
                         ctx: Precision = DEFAULT_PRECISION) -> EmbeddingStep:
    """Axiom step: k disjoint copies of the shape fully fill the shape with
    its last factor multiplied by k."""
    if k < 1:
        raise DomainError("the number of copies must be positive")
    if not shape.is_exact:
        raise DomainError("packing steps need exact factors")
    return _axiom_step(shape, k, _ELLIPSOID_FILL_STATEMENT, ctx)


# ---------------------------------------------------------------------------
# Independent verification

def _param_values(step: EmbeddingStep, key: str) -> Tuple:
    try:
        raw = step.rule.parameters[key]
    except KeyError:
        raise CertificateError(f"step is missing parameter {key!r}") from None
    return tuple(raw) if isinstance(raw, (tuple, list)) else (raw,)


def _verify_pair_step(step: EmbeddingStep, ctx: Precision) -> List[Check]:
    x, y = _param_values(step, "pair_source")
    u, v = _param_values(step, "pair_target")
    i, j = step.pair
    factors = step.source.factors
    if not (0 <= i < len(factors) and 0 <= j < len(factors) and i != j):
        raise CertificateError("suspension indices out of range")
    if factors[i] != x or factors[j] != y:
        raise CertificateError("suspension pair does not match the source")
    if step.source.replace((i, j), (u, v)) != step.target:
        raise CertificateError("suspension target does not match the replacement")

    rule = step.rule.rule
    if rule in (Rule.THEOREM_ONE, Rule.THEOREM_ONE_EMB):
        checks = [volume_relation_check(x, y, u, v, "==", ctx),
                  ratio_threshold_check(x, y, u, v, ctx)]
    elif rule is Rule.COROLLARY_ONECOR:
        (d,) = _param_values(step, "d")
        if u != d or v != x * y / d:
            raise CertificateError("split pair does not match its parameter")
        checks = [volume_relation_check(x, y, u, v, "==", ctx)]
        checks += onecor_checks(x, y, d, ctx)
    elif rule is Rule.MS_THRESHOLD:
        exceptions = step.rule.parameters.get("exceptions")
        table = None
        if exceptions:
            table = [(Fraction(lo), Fraction(hi)) for lo, hi in exceptions]
        checks = ms_checks(x, y, u, v, ctx, table)
    else:
        raise CertificateError(f"rule {rule.value} cannot justify a suspension")
    return checks


def _verify_whole_step(step: EmbeddingStep, ctx: Precision) -> List[Check]:
    rule = step.rule.rule
    if rule is Rule.INCLUSION:
        if step.source.n != step.target.n:
            raise CertificateError("inclusion changes the number of factors")
        checks = []
        for idx, (a, b) in enumerate(zip(step.source.factors,
                                         step.target.factors)):
            checks.append(certified_check(f"factor_{idx}_le",
                                          [(Fraction(1), a)], "<=",
                                          [(Fraction(1), b)], ctx))
        return checks
    if rule is Rule.AXIOM_FULL_FILL:
        (copies,) = _param_values(step, "copies")
        copies = int(copies)
        if copies != step.copies or copies < 1:
            raise CertificateError("packing step copies are inconsistent")
        expected = Ellipsoid([*step.source.factors[:-1],
                              step.source.factors[-1] * copies])
        if expected != step.target:
            raise CertificateError("packing step target is not the k-fold stretch")
        return [certified_check("volume_ratio_is_one",
                                [(Fraction(copies), step.source.volume())],
                                "==", [(Fraction(1), step.target.volume())],
                                ctx)]
    raise CertificateError(f"rule {rule.value} needs a factor pair")


def verify_certificate(cert: Certificate,
                       ctx: Precision = DEFAULT_PRECISION) -> List[Check]:
    """Re-derive every step's checks from its rule and parameters.

    Returns the full list of re-derived checks (all CertainlyTrue) or raises
    CertificateError / PrecisionExhausted.  Stored check records are ignored:
    verification trusts nothing but the step parameters.
    """
    if not cert.steps:
        if cert.source != cert.target:
            raise CertificateError("empty certificate with distinct endpoints")
        return []
    if cert.steps[0].source != cert.source:
        raise CertificateError("first step does not start at the source")
    out: List[Check] = []
    previous: Optional[Ellipsoid] = None
    for idx, step in enumerate(cert.steps):
        if idx > 0:
            if step.copies != 1:
                raise CertificateError("only the first step may carry copies")
            if step.source != previous:
                raise CertificateError(f"step {idx} does not compose with its "
                                       "predecessor")
        checks = (_verify_pair_step(step, ctx) if step.pair is not None
                  else _verify_whole_step(step, ctx))
        for c in checks:
            if c.result is Cmp3.UNKNOWN:
                raise PrecisionExhausted(
                    f"step {idx}: {c.label} stayed unknown at the precision cap")
            if not c.passed:
                raise CertificateError(
                    f"step {idx}: {c.label} failed: {c.lhs} {c.op} {c.rhs}")
        out.extend(checks)
        previous = step.target
    if previous != cert.target:
        raise CertificateError("last step does not reach the target")
    return out


# ---------------------------------------------------------------------------
# JSON round trip

def _scalar_from_json(value) -> Radical:
    if isinstance(value, str):
        return parse_scalar(value)
    raise CertificateError(f"expected an exact scalar string, got {value!r}")


def _ellipsoid_from_json(doc: dict) -> Ellipsoid:
    return Ellipsoid([_scalar_from_json(f) for f in doc["factors"]])


def _params_from_json(raw: dict) -> dict:
    params = {}
    for key, value in raw.items():
        if key in ("pair_source", "pair_target"):
            params[key] = tuple(_scalar_from_json(v) for v in value)
        elif key == "d":
            params[key] = _scalar_from_json(value)
        elif key == "exceptions":
            params[key] = [(Fraction(lo), Fraction(hi)) for lo, hi in value]
        else:
            params[key] = value
    return params


def certificate_from_json(doc: dict) -> Certificate:
    """Rebuild a certificate from its JSON document (checks are re-derived
    at verification time, not trusted)."""
    try:
        source = _ellipsoid_from_json(doc["source"])
        target = _ellipsoid_from_json(doc["target"])
        steps = []
        for raw in doc["steps"]:
            rule = Rule(raw["rule"])
            pair = tuple(raw["pair"]) if raw.get("pair") is not None else None
            checks = tuple(
                Check(c["label"], c["lhs"], c["op"], c["rhs"], Cmp3(c["result"]))
                for c in raw.get("checks", ()))
            steps.append(EmbeddingStep(
                source=_ellipsoid_from_json(raw["source"]),
                target=_ellipsoid_from_json(raw["target"]),
                rule=Justification(rule, _params_from_json(raw.get("params", {})),
                                   checks),
                pair=pair,
                copies=int(raw.get("copies", 1))))
        return Certificate(source, target, tuple(steps))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CertificateError):
            raise
        raise CertificateError(f"malformed certificate document: {exc}") from exc
