"""Exact rational scalars and certified dyadic interval arithmetic.

Every value handled by this package is a nonnegative real.  It is represented
either exactly (an arbitrary-precision rational) or by a closed interval with
dyadic endpoints that is guaranteed to contain it.  Interval endpoints are
always rounded outward, so enclosures stay sound under every operation.
Comparisons are three-valued and answer only when the representation proves
the answer.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, Union

# Arbitrary-precision exact rationals; nonnegativity is enforced at the
# construction boundaries (parsing, XReal), not by a wrapper type.
Rat = Fraction

ScalarLike = Union["XReal", Fraction, int]

__all__ = [
    "Cmp3",
    "DEFAULT_PRECISION",
    "DomainError",
    "EllipackError",
    "NegativeResultError",
    "Precision",
    "PrecisionExhausted",
    "Rat",
    "ScalarParseError",
    "XReal",
    "cmp",
    "exact_root",
    "integer_root",
    "nth_root",
    "rat_parse",
    "root_down",
    "root_up",
]


class EllipackError(Exception):
    """Base class for every error this package raises deliberately."""


class ScalarParseError(EllipackError, ValueError):
    """Text does not belong to the scalar grammar, or encodes an invalid value."""


class DomainError(EllipackError, ValueError):
    """An operand lies outside the domain an operation is defined on."""


class NegativeResultError(DomainError):
    """A subtraction cannot be certified nonnegative."""


class PrecisionExhausted(EllipackError):
    """A certified check stayed Unknown at the configured precision cap."""


class Cmp3(Enum):
    """Outcome of a certified three-valued comparison."""

    CERTAINLY_TRUE = "certainly_true"
    CERTAINLY_FALSE = "certainly_false"
    UNKNOWN = "unknown"

    def __bool__(self) -> bool:
        raise TypeError("Cmp3 is three-valued; test against its members explicitly")


@dataclass(frozen=True)
class Precision:
    """Escalation policy for certified checks: start at ``start`` bits, double
    on Unknown, give up past ``cap``."""

    start: int = 64
    cap: int = 4096

    def __post_init__(self) -> None:
        if self.start < 1:
            raise DomainError("starting precision must be positive")
        if self.cap < self.start:
            raise DomainError("precision cap below starting precision")

    def ladder(self) -> Iterator[int]:
        bits = self.start
        while True:
            yield bits
            if bits >= self.cap:
                return
            bits <<= 1


DEFAULT_PRECISION = Precision()


def ensure_digit_capacity(digits: int) -> None:
    """Raise the interpreter's int/str conversion guard when exact values
    outgrow it.

    The guard protects against quadratic blowup on untrusted input; the exact
    rationals this package prints and re-reads are its own values, so the cap
    is lifted (monotonically, never lowered) as far as they need.
    """
    import sys
    current = sys.get_int_max_str_digits()
    if 0 < current < digits + 16:
        sys.set_int_max_str_digits(digits + 16)


# ---------------------------------------------------------------------------
# Parsing

_FRACTION_RE = re.compile(r"(\d+)\s*/\s*(\d+)\Z")
_DECIMAL_RE = re.compile(r"(\d+)(\.\d+)?\Z")


def rat_parse(text: str) -> Fraction:
    """Parse ``p/q`` or a terminating decimal into an exact nonnegative rational.

    Decimals convert exactly ("1.2" becomes 6/5); results are in lowest terms.
    """
    s = text.strip()
    ensure_digit_capacity(len(s))
    if s.startswith("-"):
        raise ScalarParseError(f"negative value not allowed: {text!r}")
    m = _FRACTION_RE.match(s)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise ScalarParseError(f"zero denominator: {text!r}")
        return Fraction(num, den)
    if _DECIMAL_RE.match(s):
        return Fraction(s)
    raise ScalarParseError(f"not a rational literal: {text!r}")


# ---------------------------------------------------------------------------
# Integer and dyadic root helpers

def integer_root(value: int, index: int) -> int:
    """``floor(value ** (1/index))`` for a nonnegative integer, exactly."""
    if value < 0:
        raise DomainError("integer_root of a negative value")
    if index < 1:
        raise DomainError("root index must be positive")
    if value == 0 or index == 1:
        return value
    if index == 2:
        return math.isqrt(value)
    if value.bit_length() <= index:
        return 1
    x = 1 << -(-value.bit_length() // index)  # >= true root
    while True:
        y = ((index - 1) * x + value // x ** (index - 1)) // index
        if y >= x:
            break
        x = y
    while x ** index > value:
        x -= 1
    return x


def exact_root(x: Fraction, index: int) -> Fraction | None:
    """``x ** (1/index)`` when that is rational, else None."""
    rn = integer_root(x.numerator, index)
    if rn ** index != x.numerator:
        return None
    rd = integer_root(x.denominator, index)
    if rd ** index != x.denominator:
        return None
    return Fraction(rn, rd)


def root_down(x: Fraction, index: int, bits: int) -> Fraction:
    """Largest multiple of 2**-bits that is <= x ** (1/index)."""
    if x < 0:
        raise DomainError("root of a negative value")
    m = integer_root((x.numerator << (index * bits)) // x.denominator, index)
    return Fraction(m, 1 << bits)


def root_up(x: Fraction, index: int, bits: int) -> Fraction:
    """Smallest multiple of 2**-bits that is >= x ** (1/index)."""
    lo = root_down(x, index, bits)
    if lo ** index == x:
        return lo
    return lo + Fraction(1, 1 << bits)


def _round_down(x: Fraction, bits: int) -> Fraction:
    return Fraction((x.numerator << bits) // x.denominator, 1 << bits)


def _round_up(x: Fraction, bits: int) -> Fraction:
    return Fraction(-((-x.numerator << bits) // x.denominator), 1 << bits)


# ---------------------------------------------------------------------------
# XReal

@dataclass(frozen=True, eq=False)
class XReal:
    """A nonnegative real: exact rational, or a dyadic enclosure of one.

    ``lo == hi`` means the value is known exactly.  Otherwise the true value
    lies in ``[lo, hi]`` and ``precision`` records the rounding grid the
    endpoints live on.  Instances are immutable; every operation returns a new
    value with outward rounding, so enclosures never lie.
    """

    lo: Fraction
    hi: Fraction
    precision: int | None = None

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise DomainError("interval endpoints out of order")
        if self.lo < 0:
            raise DomainError("scalars are nonnegative by construction")

    @classmethod
    def exact(cls, value: ScalarLike) -> "XReal":
        if isinstance(value, XReal):
            if not value.is_exact:
                raise DomainError("cannot treat a proper interval as exact")
            return value
        v = Fraction(value)
        if v < 0:
            raise DomainError("scalars are nonnegative by construction")
        return cls(v, v, None)

    @classmethod
    def interval(cls, lo: Fraction, hi: Fraction, precision: int) -> "XReal":
        if precision < 1:
            raise DomainError("precision must be positive")
        lo_r = max(Fraction(0), _round_down(Fraction(lo), precision))
        hi_r = _round_up(Fraction(hi), precision)
        return cls(lo_r, hi_r, precision)

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def value(self) -> Fraction:
        if not self.is_exact:
            raise DomainError("value of a proper interval is not determined")
        return self.lo

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def _bits(self, other: "XReal") -> int:
        return max(self.precision or 0, other.precision or 0) or DEFAULT_PRECISION.start

    def __add__(self, other: ScalarLike) -> "XReal":
        o = _as_xreal(other)
        if self.is_exact and o.is_exact:
            return XReal.exact(self.lo + o.lo)
        return XReal.interval(self.lo + o.lo, self.hi + o.hi, self._bits(o))

    __radd__ = __add__

    def __sub__(self, other: ScalarLike) -> "XReal":
        o = _as_xreal(other)
        lo = self.lo - o.hi
        if lo < 0:
            raise NegativeResultError("subtraction cannot be certified nonnegative")
        if self.is_exact and o.is_exact:
            return XReal.exact(lo)
        return XReal.interval(lo, self.hi - o.lo, self._bits(o))

    def __rsub__(self, other: ScalarLike) -> "XReal":
        return _as_xreal(other) - self

    def __mul__(self, other: ScalarLike) -> "XReal":
        o = _as_xreal(other)
        if self.is_exact and o.is_exact:
            return XReal.exact(self.lo * o.lo)
        # factors are nonnegative, so endpoint products are monotone
        return XReal.interval(self.lo * o.lo, self.hi * o.hi, self._bits(o))

    __rmul__ = __mul__

    def __truediv__(self, other: ScalarLike) -> "XReal":
        o = _as_xreal(other)
        if o.lo == 0:
            raise DomainError("division by a value not certified positive")
        if self.is_exact and o.is_exact:
            return XReal.exact(self.lo / o.lo)
        return XReal.interval(self.lo / o.hi, self.hi / o.lo, self._bits(o))

    def __rtruediv__(self, other: ScalarLike) -> "XReal":
        return _as_xreal(other) / self

    def pow_int(self, exponent: int) -> "XReal":
        if exponent < 0:
            raise DomainError("negative powers go through division")
        if exponent == 0:
            return XReal.exact(1)
        if self.is_exact:
            return XReal.exact(self.lo ** exponent)
        return XReal.interval(self.lo ** exponent, self.hi ** exponent,
                              self.precision or DEFAULT_PRECISION.start)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, XReal):
            return (self.lo, self.hi) == (other.lo, other.hi)
        if isinstance(other, (int, Fraction)):
            return self.is_exact and self.lo == other
        return NotImplemented

    def __hash__(self) -> int:
        if self.is_exact:
            return hash(self.lo)
        return hash((self.lo, self.hi))

    def __str__(self) -> str:
        if self.is_exact:
            return str(self.lo)
        return f"[{self.lo}, {self.hi}]@{self.precision}"

    def __repr__(self) -> str:
        if self.is_exact:
            return f"XReal.exact({self.lo})"
        return f"XReal({self.lo}, {self.hi}, {self.precision})"


def _as_xreal(value: ScalarLike) -> XReal:
    if isinstance(value, XReal):
        return value
    return XReal.exact(value)


def nth_root(x: ScalarLike, index: int, precision_bits: int = 64) -> XReal:
    """Certified ``index``-th root.

    Exact when x is a perfect ``index``-th power of a rational; otherwise an
    interval of width at most ``2**-precision_bits`` (for exact input) that
    certainly contains the root.
    """
    if index < 1:
        raise DomainError("root index must be positive")
    if precision_bits < 1:
        raise DomainError("precision must be positive")
    v = _as_xreal(x)
    if v.is_exact:
        r = exact_root(v.lo, index)
        if r is not None:
            return XReal.exact(r)
        lo = root_down(v.lo, index, precision_bits)
        return XReal(lo, lo + Fraction(1, 1 << precision_bits), precision_bits)
    return XReal(root_down(v.lo, index, precision_bits),
                 root_up(v.hi, index, precision_bits), precision_bits)


# ---------------------------------------------------------------------------
# Comparison

_OP_CANON = {
    "<": "<", "<=": "<=", "≤": "<=",
    ">": ">", ">=": ">=", "≥": ">=",
    "=": "==", "==": "==",
}


def _canon_op(op: str) -> str:
    try:
        return _OP_CANON[op]
    except KeyError:
        raise DomainError(f"unknown comparison operator: {op!r}") from None


def cmp(lhs: ScalarLike, op: str, rhs: ScalarLike) -> Cmp3:
    """Certified comparison; CertainlyTrue/False only when provable.

    Exact operands never produce Unknown.  Interval operands produce Unknown
    exactly when the enclosures overlap the comparison boundary.
    """
    x, y = _as_xreal(lhs), _as_xreal(rhs)
    sym = _canon_op(op)
    if x.is_exact and y.is_exact:
        a, b = x.lo, y.lo
        truth = {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b, "==": a == b}[sym]
        return Cmp3.CERTAINLY_TRUE if truth else Cmp3.CERTAINLY_FALSE
    if sym == "==":
        if x.hi < y.lo or y.hi < x.lo:
            return Cmp3.CERTAINLY_FALSE
        return Cmp3.UNKNOWN
    if sym == ">":
        return cmp(rhs, "<", lhs)
    if sym == ">=":
        return cmp(rhs, "<=", lhs)
    if sym == "<":
        if x.hi < y.lo:
            return Cmp3.CERTAINLY_TRUE
        if x.lo >= y.hi:
            return Cmp3.CERTAINLY_FALSE
        return Cmp3.UNKNOWN
    # "<="
    if x.hi <= y.lo:
        return Cmp3.CERTAINLY_TRUE
    if x.lo > y.hi:
        return Cmp3.CERTAINLY_FALSE
    return Cmp3.UNKNOWN
