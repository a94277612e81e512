"""Packing-stability bounds and the chains that witness them.

For complex projective space the bound is the ceiling of (8 + 1/36)^(n/2);
for degree-d hypersurfaces the analogous ceiling with d-dependent terms.  A
bound is only reported together with the certified inequalities that make the
witnessing chain work at that packing number, and the chains themselves are
built as certificates, one suspension step per stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .decide4d import (
    Justification,
    Rule,
    ms_checks,
    ratio_threshold_check,
    volume_relation_check,
)
from .ech import Ellipsoid
from .planner import (
    Certificate,
    EmbeddingStep,
    pack_balls_step,
)
from .radicals import Check, Radical, certified_check
from .scalar import (
    DEFAULT_PRECISION,
    Cmp3,
    DomainError,
    EllipackError,
    Precision,
    PrecisionExhausted,
    XReal,
    nth_root,
)

__all__ = [
    "CPn",
    "GenericFilling",
    "Hypersurface",
    "StabReport",
    "ThresholdFailure",
    "chain_condition",
    "chain_condition_hyp",
    "cpn_chain",
    "hnd_chain",
    "nstab_cpn",
    "nstab_filling",
    "nstab_hnd",
]

ExceptionTable = Sequence[Tuple[Fraction, Fraction]]

_BALL_THRESHOLD = Fraction(289, 36)
_EXC_WINDOW = (Fraction(64, 9), Fraction(8))


class ThresholdFailure(EllipackError):
    """The packing number is below a chain's certified threshold."""

    def __init__(self, reason: str, check: Optional[Check] = None):
        self.reason = reason
        self.check = check
        detail = f"{reason}: {check.lhs} {check.op} {check.rhs}" if check else reason
        super().__init__(detail)


@dataclass(frozen=True)
class CPn:
    n: int

    def as_json(self) -> dict:
        return {"kind": "CPn", "n": self.n}


@dataclass(frozen=True)
class Hypersurface:
    n: int
    d: int

    def as_json(self) -> dict:
        return {"kind": "Hnd", "n": self.n, "d": self.d}


@dataclass(frozen=True)
class GenericFilling:
    filling: Ellipsoid

    def as_json(self) -> dict:
        return {"kind": "GenericFilling", "filling": self.filling.as_json()}


@dataclass(frozen=True, eq=False)
class StabReport:
    """A stability bound plus the certified inequalities backing it."""

    manifold: Union[CPn, Hypersurface, GenericFilling]
    bound: int
    checks: Tuple[Check, ...]
    chain: Optional[Certificate] = None

    def as_json(self) -> dict:
        return {
            "manifold": self.manifold.as_json(),
            "bound": self.bound,
            "checks": [c.as_json() for c in self.checks],
            "chain": self.chain.as_json() if self.chain is not None else None,
        }


# ---------------------------------------------------------------------------
# Per-stage chain inequalities

def chain_condition(n: int, i: int, k: int,
                    ctx: Precision = DEFAULT_PRECISION) -> Check:
    """The stage-i condition of the ball chain, normalized to <= 1:

    25/16 k^(-2/n) + 10 k^(-(n-i)/n) + 16 k^(-2(n-i-1)/n) <= 1.

    Nondecreasing in i, so i = n-3 is the binding stage.
    """
    if not (0 <= i <= n - 3):
        raise DomainError("stage index must satisfy 0 <= i <= n-3")
    kk = Radical.of(k)
    lhs = [(Fraction(25, 16), kk ** Fraction(-2, n)),
           (Fraction(10), kk ** Fraction(-(n - i), n)),
           (Fraction(16), kk ** Fraction(-2 * (n - i - 1), n))]
    return certified_check(f"chain_condition(n={n},i={i},k={k})",
                           lhs, "<=", Fraction(1), ctx)


def chain_condition_hyp(n: int, d: int, i: int, k: int,
                        ctx: Precision = DEFAULT_PRECISION) -> Check:
    """The stage-i condition of the degree-d chain, normalized to <= 1:

    25/16 k^(-2/n) d^((i+2)/n) + 10 k^(-(n-i)/n) d^(-i/n)
        + 16 k^(-2(n-i-1)/n) d^(-2(i+1)/n) <= 1.

    For k >= d it is nondecreasing in i, so i = n-2 is the binding stage.
    """
    if not (0 <= i <= n - 2):
        raise DomainError("stage index must satisfy 0 <= i <= n-2")
    kk, dd = Radical.of(k), Radical.of(d)
    lhs = [(Fraction(25, 16),
            kk ** Fraction(-2, n) * dd ** Fraction(i + 2, n)),
           (Fraction(10),
            kk ** Fraction(-(n - i), n) * dd ** Fraction(-i, n)),
           (Fraction(16),
            kk ** Fraction(-2 * (n - i - 1), n) * dd ** Fraction(-2 * (i + 1), n))]
    return certified_check(f"chain_condition_hyp(n={n},d={d},i={i},k={k})",
                           lhs, "<=", Fraction(1), ctx)


def _ball_stage_checks(n: int, k: int, ctx: Precision,
                       exceptions: Optional[ExceptionTable]) -> List[Check]:
    """All certified inequalities needed by the ball chain at packing number k."""
    checks: List[Check] = []
    ratio = Radical.of(k) ** Fraction(2, n)
    direct = certified_check(f"ball_threshold(k={k},n={n})", ratio, ">=",
                             _BALL_THRESHOLD, ctx)
    if direct.passed or exceptions is None:
        checks.append(direct)
    else:
        checks.append(certified_check(f"staircase_window_low(k={k})", ratio,
                                      ">=", _EXC_WINDOW[0], ctx))
        checks.append(certified_check(f"staircase_window_high(k={k})", ratio,
                                      "<=", _EXC_WINDOW[1], ctx))
        for lo, hi in exceptions:
            below = certified_check(f"avoids_[{lo},{hi}]_below", ratio, "<=",
                                    Fraction(lo), ctx)
            if below.passed:
                checks.append(below)
                continue
            checks.append(certified_check(f"avoids_[{lo},{hi}]_above", ratio,
                                          ">=", Fraction(hi), ctx))
    if n >= 3:
        checks.append(chain_condition(n, n - 3, k, ctx))
    return checks


def _all_pass(checks: Sequence[Check]) -> bool:
    return all(c.passed for c in checks)


# ---------------------------------------------------------------------------
# Bounds

def nstab_cpn(n: int, exceptions: Optional[ExceptionTable] = None,
              chain_k: Optional[int] = None,
              ctx: Precision = DEFAULT_PRECISION) -> StabReport:
    """Packing-stability bound for complex projective n-space:
    ceil((8 + 1/36)^(n/2)), with every stage inequality certified at the
    reported bound.

    An exception-interval table (ratios the four-dimensional staircase
    excludes on [64/9, 8]) lets the bound drop below the ceiling; without
    one the ceiling is reported as-is.
    """
    if n < 2:
        raise DomainError("projective space needs n >= 2")
    bound = (Radical.of(_BALL_THRESHOLD) ** Fraction(n, 2)).ceil()
    if exceptions is not None:
        k = bound - 1
        while k >= 1 and _all_pass(_ball_stage_checks(n, k, ctx, exceptions)):
            bound = k
            k -= 1
    checks = _ball_stage_checks(n, bound, ctx, exceptions)
    for c in checks:
        if not c.passed:
            raise ThresholdFailure("stage inequality failed at the bound", c)
    chain = cpn_chain(n, chain_k, ctx, exceptions=exceptions) \
        if chain_k is not None else None
    return StabReport(CPn(n), bound, tuple(checks), chain)


def _hyp_base_terms(n: int, d: int):
    dd = Radical.of(d)
    return [(Fraction(25, 16) * d, None),
            (Fraction(10), dd ** Fraction(-(n - 2), n)),
            (Fraction(16), dd ** Fraction(-2 * (n - 1), n))]


def _certified_ceil_power(terms, n: int, ctx: Precision) -> int:
    """ceil((sum of terms)^(n/2)) with a certified, non-guessing ceiling."""
    rational = Fraction(0)
    for coef, val in terms:
        if val is not None and not val.is_rational:
            rational = None
            break
        rational += coef * (val.as_fraction() if val is not None else 1)
    if rational is not None:
        return (Radical.of(rational) ** Fraction(n, 2)).ceil()
    for bits in ctx.ladder():
        total = XReal.exact(0)
        for coef, val in terms:
            piece = XReal.exact(coef) if val is None else val.eval(bits) * coef
            total = total + piece
        power = nth_root(total.pow_int(n), 2, bits)
        lo, hi = math.ceil(power.lo), math.ceil(power.hi)
        if lo == hi:
            return lo
    raise PrecisionExhausted("ceiling stayed ambiguous at the precision cap")


def nstab_hnd(n: int, d: int, chain_k: Optional[int] = None,
              ctx: Precision = DEFAULT_PRECISION) -> StabReport:
    """Packing-stability bound for a smooth degree-d hypersurface:
    ceil((25d/16 + 10 d^(-(n-2)/n) + 16 d^(-2(n-1)/n))^(n/2))."""
    if n < 2 or d < 1:
        raise DomainError("hypersurface bounds need integers n >= 2, d >= 1")
    terms = _hyp_base_terms(n, d)
    bound = _certified_ceil_power(terms, n, ctx)
    checks = [chain_condition_hyp(n, d, n - 2, bound, ctx)]
    for c in checks:
        if not c.passed:
            raise ThresholdFailure("stage inequality failed at the bound", c)
    chain = hnd_chain(n, d, chain_k, ctx) if chain_k is not None else None
    return StabReport(Hypersurface(n, d), bound, tuple(checks), chain)


def nstab_filling(filling: Ellipsoid,
                  ctx: Precision = DEFAULT_PRECISION) -> StabReport:
    """Stability bound for a manifold fully filled by the given ellipsoid:
    the first integer strictly past its thinness threshold."""
    from .planner import s_constant
    threshold = s_constant(filling.factors)
    bound = max(threshold.floor() + 1, 1)
    gate = certified_check("bound_exceeds_threshold", Radical.of(bound), ">",
                           threshold, ctx)
    if not gate.passed:
        raise ThresholdFailure("bound does not clear the threshold", gate)
    return StabReport(GenericFilling(filling), bound, (gate,))


# ---------------------------------------------------------------------------
# Chains

def _cpn_stage(n: int, k: int, i: int) -> Ellipsoid:
    root = Radical.of(k) ** Fraction(1, n)
    return Ellipsoid([Radical.of(1)] * (n - 1 - i) + [root] * i
                     + [Radical.of(k) ** Fraction(n - i, n)])


def cpn_chain(n: int, k: int, ctx: Precision = DEFAULT_PRECISION, *,
              with_packing: bool = False,
              exceptions: Optional[ExceptionTable] = None) -> Certificate:
    """Certificate for E(1, ..., 1, k) into the ball of capacity k^(1/n).

    n-1 suspension steps: the first n-2 trade a unit factor against the
    largest factor (equal-volume threshold rule), the last lands in the ball
    through the staircase threshold.  Optionally prepends the k-ball packing
    axiom step.
    """
    if n < 2:
        raise DomainError("chains need n >= 2")
    if k < 1:
        raise DomainError("the packing number must be a positive integer")
    gate_checks = _ball_stage_checks(n, k, ctx, exceptions)
    for c in gate_checks:
        if c.result is Cmp3.UNKNOWN:
            raise PrecisionExhausted(f"{c.label} stayed unknown")
        if not c.passed:
            raise ThresholdFailure("packing number below the chain threshold", c)

    kk = Radical.of(k)
    root = kk ** Fraction(1, n)
    steps: List[EmbeddingStep] = []
    if with_packing:
        steps.append(pack_balls_step(k, n, ctx))
    for i in range(n - 1):
        source = _cpn_stage(n, k, i)
        x, y = Radical.of(1), kk ** Fraction(n - i, n)
        u, v = root, kk ** Fraction(n - i - 1, n)
        pair = (source.factors.index(x),
                len(source.factors) - 1 - tuple(reversed(source.factors)).index(y))
        target = source.replace(pair, (u, v))
        if i < n - 2:
            checks = (volume_relation_check(x, y, u, v, "==", ctx),
                      ratio_threshold_check(x, y, u, v, ctx),
                      chain_condition(n, i, k, ctx))
            rule = Justification(Rule.THEOREM_ONE,
                                 {"pair_source": (x, y), "pair_target": (u, v)},
                                 checks)
        else:
            checks = tuple(ms_checks(x, y, u, v, ctx, exceptions))
            params = {"pair_source": (x, y), "pair_target": (u, v)}
            if exceptions is not None and any(
                    c.label.startswith("ratio_avoids") or
                    c.label.startswith("ratio_ge_64") for c in checks):
                params["exceptions"] = [[str(lo), str(hi)]
                                        for lo, hi in exceptions]
            rule = Justification(Rule.MS_THRESHOLD, params, checks)
        for c in checks:
            if c.result is Cmp3.UNKNOWN:
                raise PrecisionExhausted(f"{c.label} stayed unknown")
            if not c.passed:
                raise ThresholdFailure(f"stage {i} inequality failed", c)
        steps.append(EmbeddingStep(source, target, rule, pair=pair))
    source = steps[0].source if with_packing else _cpn_stage(n, k, 0)
    return Certificate(source, Ellipsoid.ball(root, n), tuple(steps))


def _hnd_stage(n: int, d: int, k: int, i: int) -> Ellipsoid:
    kk, dd = Radical.of(k), Radical.of(d)
    small = (kk / dd) ** Fraction(1, n)
    big = kk ** Fraction(n - i, n) * dd ** Fraction(i, n)
    return Ellipsoid([small] * i + [Radical.of(1)] * (n - 1 - i) + [big])


def hnd_chain(n: int, d: int, k: int,
              ctx: Precision = DEFAULT_PRECISION) -> Certificate:
    """Certificate for E(1, ..., 1, k) into the (k/d)^(1/n)-scaled
    E(1, ..., 1, d): n-1 equal-volume suspension steps, each with its stage
    inequality certified."""
    if n < 2:
        raise DomainError("chains need n >= 2")
    if k < 1 or d < 1:
        raise DomainError("packing number and degree must be positive integers")
    binding = chain_condition_hyp(n, d, n - 2, k, ctx)
    if binding.result is Cmp3.UNKNOWN:
        raise PrecisionExhausted(f"{binding.label} stayed unknown")
    if not binding.passed:
        raise ThresholdFailure("packing number below the chain threshold (i=n-2)",
                               binding)

    kk, dd = Radical.of(k), Radical.of(d)
    small = (kk / dd) ** Fraction(1, n)
    steps: List[EmbeddingStep] = []
    for i in range(n - 1):
        source = _hnd_stage(n, d, k, i)
        x = Radical.of(1)
        y = kk ** Fraction(n - i, n) * dd ** Fraction(i, n)
        u = small
        v = kk ** Fraction(n - i - 1, n) * dd ** Fraction(i + 1, n)
        stage = chain_condition_hyp(n, d, i, k, ctx)
        checks = (volume_relation_check(x, y, u, v, "==", ctx),
                  ratio_threshold_check(x, y, u, v, ctx),
                  stage)
        for c in checks:
            if c.result is Cmp3.UNKNOWN:
                raise PrecisionExhausted(f"{c.label} stayed unknown")
            if not c.passed:
                raise ThresholdFailure(f"stage {i} inequality failed", c)
        pair = (source.factors.index(x),
                len(source.factors) - 1 - tuple(reversed(source.factors)).index(y))
        target = source.replace(pair, (u, v))
        steps.append(EmbeddingStep(
            source, target,
            Justification(Rule.THEOREM_ONE,
                          {"pair_source": (x, y), "pair_target": (u, v)},
                          checks),
            pair=pair))
    return Certificate(_hnd_stage(n, d, k, 0), _hnd_stage(n, d, k, n - 1),
                       tuple(steps))
