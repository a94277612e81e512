"""Exact positive scalars of the form (p/q) ** (1/m), plus certified checks.

Every scalar the chain constructions produce is a product of rational powers
of rationals: rational factors, the square roots introduced by rebalancing
replacement pairs, and the fractional powers ``k**(i/n)`` of stability
chains.  That class is closed under multiplication, division and rational
powers, and admits a unique canonical form ``radicand ** (1/index)`` with
minimal index.  Canonicity makes equality structural and lets order be
decided exactly by comparing ``index``-th powers, so pure products never need
interval arithmetic at all.

Sums of such scalars (threshold inequalities) are compared through escalating
interval evaluation instead; ``compare_terms`` implements the ladder.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Optional, Tuple, Union

from .scalar import (
    DEFAULT_PRECISION,
    Cmp3,
    DomainError,
    Precision,
    ScalarParseError,
    XReal,
    cmp,
    ensure_digit_capacity,
    exact_root,
    integer_root,
    nth_root,
    rat_parse,
)

RadicalLike = Union["Radical", Fraction, int]

__all__ = [
    "Check",
    "Radical",
    "RadicalLike",
    "Term",
    "certified_check",
    "compare_terms",
    "format_terms",
    "format_value",
    "parse_scalar",
]


def _distinct_primes(n: int):
    p = 2
    while p * p <= n:
        if n % p == 0:
            yield p
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        yield n


@total_ordering
@dataclass(frozen=True, eq=False)
class Radical:
    """The positive real ``radicand ** (1/index)``, in canonical form.

    Canonical means the index is minimal: the radicand is not a perfect p-th
    power for any prime p dividing the index.  Construction normalizes, so two
    Radicals are equal as reals exactly when their fields coincide.
    """

    radicand: Fraction
    index: int

    def __post_init__(self) -> None:
        q, m = Fraction(self.radicand), int(self.index)
        if q <= 0:
            raise DomainError("radicand must be positive")
        if m < 1:
            raise DomainError("root index must be positive")
        if q != 1:
            for p in list(_distinct_primes(m)):
                while m % p == 0:
                    r = exact_root(q, p)
                    if r is None:
                        break
                    q, m = r, m // p
        else:
            m = 1
        object.__setattr__(self, "radicand", q)
        object.__setattr__(self, "index", m)

    @staticmethod
    def of(value: RadicalLike) -> "Radical":
        if isinstance(value, Radical):
            return value
        if isinstance(value, float):
            raise DomainError("floats are not exact; pass a Fraction or string")
        return Radical(Fraction(value), 1)

    @property
    def is_rational(self) -> bool:
        return self.index == 1

    def as_fraction(self) -> Fraction:
        if self.index != 1:
            raise DomainError(f"{self} is irrational")
        return self.radicand

    # -- arithmetic (multiplicative group only; sums go through Terms) ------

    def __mul__(self, other: RadicalLike) -> "Radical":
        if not isinstance(other, (Radical, Fraction, int)):
            return NotImplemented
        o = Radical.of(other)
        m = math.lcm(self.index, o.index)
        return Radical(self.radicand ** (m // self.index)
                       * o.radicand ** (m // o.index), m)

    __rmul__ = __mul__

    def __truediv__(self, other: RadicalLike) -> "Radical":
        if not isinstance(other, (Radical, Fraction, int)):
            return NotImplemented
        o = Radical.of(other)
        m = math.lcm(self.index, o.index)
        return Radical(self.radicand ** (m // self.index)
                       / o.radicand ** (m // o.index), m)

    def __rtruediv__(self, other: RadicalLike) -> "Radical":
        return Radical.of(other) / self

    def __pow__(self, exponent: Union[Fraction, int]) -> "Radical":
        e = Fraction(exponent)
        if e == 0:
            return Radical(Fraction(1), 1)
        return Radical(self.radicand ** e.numerator, self.index * e.denominator)

    def root(self, n: int) -> "Radical":
        return self ** Fraction(1, n)

    def sqrt(self) -> "Radical":
        return self.root(2)

    # -- exact order ---------------------------------------------------------

    def _compare(self, other: "Radical") -> int:
        m = math.lcm(self.index, other.index)
        a = self.radicand ** (m // self.index)
        b = other.radicand ** (m // other.index)
        return (a > b) - (a < b)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Radical):
            return (self.radicand, self.index) == (other.radicand, other.index)
        if isinstance(other, (int, Fraction)):
            return self.index == 1 and self.radicand == other
        return NotImplemented

    def __lt__(self, other: RadicalLike) -> bool:
        if not isinstance(other, (Radical, Fraction, int)):
            return NotImplemented
        return self._compare(Radical.of(other)) < 0

    def __hash__(self) -> int:
        if self.index == 1:
            return hash(self.radicand)
        return hash((self.radicand, self.index))

    def floor(self) -> int:
        if self.index == 1:
            return math.floor(self.radicand)
        return integer_root(self.radicand.numerator // self.radicand.denominator,
                            self.index)

    def ceil(self) -> int:
        if self.index == 1:
            return math.ceil(self.radicand)
        # canonical irrational roots are never integers
        return self.floor() + 1

    # -- numeric enclosure ----------------------------------------------------

    def eval(self, precision_bits: int = 64) -> XReal:
        if self.index == 1:
            return XReal.exact(self.radicand)
        return _eval_root(self.radicand, self.index, precision_bits)

    def __str__(self) -> str:
        bits = max(self.radicand.numerator.bit_length(),
                   self.radicand.denominator.bit_length())
        ensure_digit_capacity(bits // 3 + 1)
        if self.index == 1:
            return str(self.radicand)
        return f"{self.radicand}^(1/{self.index})"

    def __repr__(self) -> str:
        return f"Radical({str(self)!r})"


@lru_cache(maxsize=1024)
def _eval_root(radicand: Fraction, index: int, bits: int) -> XReal:
    return nth_root(XReal.exact(radicand), index, bits)


# ---------------------------------------------------------------------------
# Scalar grammar: rational | rational^(p/q) | scalar '*' scalar

_ATOM_RE = re.compile(
    r"\s*(?P<base>\d+(?:\.\d+)?(?:\s*/\s*\d+)?)\s*"
    r"(?:\^\(\s*(?P<en>-?\d+)\s*/\s*(?P<ed>\d+)\s*\))?\s*\Z")


def _parse_atom(text: str) -> Radical:
    m = _ATOM_RE.match(text)
    if m is None:
        raise ScalarParseError(f"not a scalar atom: {text!r}")
    base = rat_parse(m.group("base"))
    if m.group("en") is None:
        exponent = Fraction(1)
    else:
        den = int(m.group("ed"))
        if den == 0:
            raise ScalarParseError(f"zero exponent denominator: {text!r}")
        exponent = Fraction(int(m.group("en")), den)
    if base == 0:
        if exponent != 1:
            raise ScalarParseError("zero cannot carry an exponent")
        raise ScalarParseError("scalar grammar values must be positive")
    return Radical.of(base) ** exponent


def parse_scalar(text: str) -> Radical:
    """Parse the scalar grammar ``rational | rational^(p/q) | scalar*scalar``.

    Parsing is bit-exact: decimals convert to exact rationals and powers stay
    symbolic, so formatted values round-trip.
    """
    parts = text.split("*")
    if not parts or any(not p.strip() for p in parts):
        raise ScalarParseError(f"not a scalar expression: {text!r}")
    value = _parse_atom(parts[0])
    for part in parts[1:]:
        value = value * _parse_atom(part)
    return value


def format_value(value) -> Union[str, dict]:
    """Render a scalar for JSON payloads: exact string, or a dyadic pair."""
    if isinstance(value, Radical):
        return str(value)
    if isinstance(value, (int, Fraction)):
        return str(Fraction(value))
    if isinstance(value, XReal):
        if value.is_exact:
            return str(value.lo)
        return {"lo": str(value.lo), "hi": str(value.hi),
                "precision": value.precision}
    raise TypeError(f"not a scalar: {value!r}")


# ---------------------------------------------------------------------------
# Certified comparisons of nonnegative linear combinations

# (coefficient, value); value None stands for 1, so (c, None) is the constant c.
Term = Tuple[Fraction, Optional[Union[Radical, XReal]]]


def _as_terms(side) -> Tuple[Term, ...]:
    if isinstance(side, (Radical, XReal)):
        return ((Fraction(1), side),)
    if isinstance(side, (int, Fraction)):
        return ((Fraction(side), None),)
    out = []
    for coef, val in side:
        c = Fraction(coef)
        if c < 0:
            raise DomainError("term coefficients are nonnegative by construction")
        out.append((c, val))
    return tuple(out)


def _eval_terms(terms: Tuple[Term, ...], bits: int) -> XReal:
    total = XReal.exact(0)
    for coef, val in terms:
        if val is None:
            piece = XReal.exact(coef)
        elif isinstance(val, XReal):
            piece = val * coef
        else:
            piece = val.eval(bits) * coef
        total = total + piece
    return total


def _refinable(terms: Tuple[Term, ...]) -> bool:
    return any(isinstance(v, Radical) and not v.is_rational for _, v in terms)


def _as_single_radical(terms: Tuple[Term, ...]) -> Optional[Radical]:
    """A one-term side collapses to an exact scalar; sums do not."""
    if len(terms) != 1:
        return None
    coef, val = terms[0]
    if val is None:
        return Radical.of(coef) if coef > 0 else None
    if isinstance(val, Radical):
        return val * coef if coef > 0 else None
    return None


def compare_terms(lhs, op: str, rhs, ctx: Precision = DEFAULT_PRECISION) -> Cmp3:
    """Certified comparison of sums of nonnegative terms.

    Each side is a scalar or a sequence of ``(coefficient, value)`` terms.
    Single-product sides compare exactly (radical order is decidable), so
    only genuine sums need the interval ladder; those escalate through the
    precision policy and report Unknown only at the cap.
    """
    left, right = _as_terms(lhs), _as_terms(rhs)
    lv, rv = _as_single_radical(left), _as_single_radical(right)
    if lv is not None and rv is not None:
        verdict = {"<": lv < rv, "<=": lv <= rv, ">": lv > rv,
                   ">=": lv >= rv, "=": lv == rv, "==": lv == rv,
                   "≤": lv <= rv, "≥": lv >= rv}[op]
        return Cmp3.CERTAINLY_TRUE if verdict else Cmp3.CERTAINLY_FALSE
    refinable = _refinable(left) or _refinable(right)
    for bits in ctx.ladder():
        result = cmp(_eval_terms(left, bits), op, _eval_terms(right, bits))
        if result is not Cmp3.UNKNOWN:
            return result
        if not refinable:
            break
    return Cmp3.UNKNOWN


def format_terms(side) -> str:
    terms = _as_terms(side)
    pieces = []
    for coef, val in terms:
        if val is None:
            pieces.append(str(coef))
        elif coef == 1:
            pieces.append(str(val))
        else:
            pieces.append(f"{coef}*{val}")
    return " + ".join(pieces) if pieces else "0"


@dataclass(frozen=True)
class Check:
    """One certified inequality, recorded so it can be re-run later."""

    label: str
    lhs: str
    op: str
    rhs: str
    result: Cmp3

    @property
    def passed(self) -> bool:
        return self.result is Cmp3.CERTAINLY_TRUE

    def as_json(self) -> dict:
        return {"label": self.label, "lhs": self.lhs, "op": self.op,
                "rhs": self.rhs, "result": self.result.value}


def certified_check(label: str, lhs, op: str, rhs,
                    ctx: Precision = DEFAULT_PRECISION) -> Check:
    result = compare_terms(lhs, op, rhs, ctx)
    return Check(label, format_terms(lhs), op, format_terms(rhs), result)
