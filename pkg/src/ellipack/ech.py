"""Capacity sequences of four-dimensional ellipsoids and lattice-point counts.

The capacity sequence of E(a, b) lists the values ``a*l + b*p`` over
nonnegative integers l, p in nondecreasing order with multiplicity.  The dual
counting function returns how many such values are <= y, which equals the
number of lattice points under the line ``a*l + b*p = y`` in the closed first
quadrant.  Both are computed exactly; quadratic bounds sandwich the count.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Iterable, Iterator, List, Sequence, Tuple, Union

from .radicals import Radical, RadicalLike, format_value
from .scalar import DomainError, XReal

FactorLike = Union[RadicalLike, XReal]

__all__ = [
    "CapSeq",
    "Ellipsoid",
    "cap_sequence",
    "caps_csv",
    "lattice_count",
    "merged_progressions",
    "parabola_lower",
    "parabola_upper",
]


def _coerce_factor(value: FactorLike):
    if isinstance(value, XReal):
        if value.is_exact:
            return Radical.of(value.value)
        return value
    return Radical.of(value)


def _factor_order(x, y) -> int:
    if isinstance(x, Radical) and isinstance(y, Radical):
        return -1 if x < y else (0 if x == y else 1)
    # intervals order by their enclosures; ties are a representation artifact
    xl = x.eval(64) if isinstance(x, Radical) else x
    yl = y.eval(64) if isinstance(y, Radical) else y
    return -1 if (xl.lo, xl.hi) < (yl.lo, yl.hi) else (
        0 if (xl.lo, xl.hi) == (yl.lo, yl.hi) else 1)


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """E(a_1, ..., a_n) with positive factors kept sorted nondecreasing.

    Factors are exact scalars (rationals or radicals) whenever possible;
    certified intervals are accepted but route only through the comparisons
    that can still be certified.
    """

    factors: tuple

    def __init__(self, factors: Iterable[FactorLike]):
        values = [_coerce_factor(f) for f in factors]
        if not values:
            raise DomainError("an ellipsoid needs at least one factor")
        for v in values:
            positive = v.radicand > 0 if isinstance(v, Radical) else v.lo > 0
            if not positive:
                raise DomainError("ellipsoid factors must be certainly positive")
        values.sort(key=cmp_to_key(_factor_order))
        object.__setattr__(self, "factors", tuple(values))

    @classmethod
    def of(cls, *factors: FactorLike) -> "Ellipsoid":
        return cls(factors)

    @classmethod
    def ball(cls, capacity: FactorLike, n: int = 2) -> "Ellipsoid":
        if n < 1:
            raise DomainError("a ball needs a positive dimension")
        return cls([capacity] * n)

    @classmethod
    def from_strings(cls, texts: Sequence[str]) -> "Ellipsoid":
        from .radicals import parse_scalar
        return cls([parse_scalar(t) for t in texts])

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def dimension(self) -> int:
        return 2 * len(self.factors)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(f, Radical) for f in self.factors)

    @property
    def is_rational(self) -> bool:
        return all(isinstance(f, Radical) and f.is_rational for f in self.factors)

    def as_fractions(self) -> Tuple[Fraction, ...]:
        if not self.is_rational:
            raise DomainError("ellipsoid has irrational factors")
        return tuple(f.as_fraction() for f in self.factors)

    def volume(self) -> Radical:
        """Product of the factors (the volume up to the dimensional constant)."""
        if not self.is_exact:
            raise DomainError("exact factors required for the exact volume")
        prod = Radical.of(1)
        for f in self.factors:
            prod = prod * f
        return prod

    def volume_enclosure(self, bits: int = 64) -> XReal:
        total = XReal.exact(1)
        for f in self.factors:
            total = total * (f.eval(bits) if isinstance(f, Radical) else f)
        return total

    def replace(self, indices: Tuple[int, int],
                values: Tuple[FactorLike, FactorLike]) -> "Ellipsoid":
        """New ellipsoid with the two indexed factors swapped out, re-sorted."""
        i, j = indices
        if i == j or not (0 <= i < self.n and 0 <= j < self.n):
            raise DomainError("replacement needs two distinct factor positions")
        rest = [f for k, f in enumerate(self.factors) if k not in (i, j)]
        return Ellipsoid(rest + [values[0], values[1]])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Ellipsoid):
            return NotImplemented
        return self.factors == other.factors

    def __hash__(self) -> int:
        return hash(self.factors)

    def __str__(self) -> str:
        return "E(" + ", ".join(str(f) for f in self.factors) + ")"

    def __repr__(self) -> str:
        return f"Ellipsoid({list(self.factors)!r})"

    def as_json(self) -> dict:
        return {"factors": [format_value(f) for f in self.factors]}


# ---------------------------------------------------------------------------
# Capacity sequences

def merged_progressions(a, b) -> Iterator:
    """Yield ``a*l + b*p`` over nonnegative integers l, p in nondecreasing order.

    Ordered merge over the rows p = 0, 1, 2, ...; a new row enters the heap
    when the head of the previous row is consumed, so at most
    ``floor(y/b) + 1`` rows are live while values <= y are produced.
    """
    zero = a - a
    heap: list = [(zero, 0)]
    while True:
        value, row = heapq.heappop(heap)
        yield value
        heapq.heappush(heap, (value + a, row))
        if value == b * row:  # row head: open the next row
            heapq.heappush(heap, (b * (row + 1), row + 1))


class CapSeq:
    """Nondecreasing values ``a*l + b*p`` with multiplicity, extended lazily.

    ``value(k)`` is the (k+1)-smallest element of the multiset; the capacity
    of index k >= 1 of E(a, b) is ``value(k - 1)``.  Extension mutates the
    instance, so keep a single writer; reads of materialized prefixes are
    safe anywhere.
    """

    def __init__(self, a: Union[Fraction, int], b: Union[Fraction, int]):
        a, b = Fraction(a), Fraction(b)
        if a <= 0 or b <= 0:
            raise DomainError("capacity sequences need positive factors")
        if b < a:
            a, b = b, a
        self.a = a
        self.b = b
        self._stream = merged_progressions(a, b)
        self._values: List[Fraction] = []

    def value(self, k: int) -> Fraction:
        if k < 0:
            raise DomainError("sequence index must be nonnegative")
        while len(self._values) <= k:
            self._values.append(next(self._stream))
        return self._values[k]

    def prefix(self, count: int) -> List[Fraction]:
        if count < 0:
            raise DomainError("prefix length must be nonnegative")
        if count:
            self.value(count - 1)
        return self._values[:count]

    @property
    def values(self) -> Tuple[Fraction, ...]:
        return tuple(self._values)

    def __repr__(self) -> str:
        return f"CapSeq({self.a}, {self.b}, materialized={len(self._values)})"


def cap_sequence(a, b, k_max: int) -> CapSeq:
    """The first ``k_max + 1`` capacity values of E(a, b), exactly."""
    if k_max < 0:
        raise DomainError("k_max must be nonnegative")
    seq = CapSeq(a, b)
    seq.prefix(k_max + 1)
    return seq


def lattice_count(a, b, y) -> int:
    """Number of pairs (l, p) of nonnegative integers with ``a*l + b*p <= y``.

    Row-sum formula: sum over rows p of ``floor((y - p*b)/a) + 1``.  Equals
    the number of capacity values <= y.
    """
    a, b, y = Fraction(a), Fraction(b), Fraction(y)
    if a <= 0 or b <= 0:
        raise DomainError("lattice counts need positive factors")
    if y < 0:
        raise DomainError("lattice counts need a nonnegative bound")
    if b < a:
        a, b = b, a  # iterate over the sparser rows
    total = 0
    for p in range(math.floor(y / b) + 1):
        total += math.floor((y - p * b) / a) + 1
    return total


def _require_sorted_pair(a, b) -> Tuple[Fraction, Fraction]:
    a, b = Fraction(a), Fraction(b)
    if a <= 0 or not a <= b:
        raise DomainError("bounds are stated for 0 < a <= b")
    return a, b


def parabola_lower(a, b, y) -> Fraction:
    """Quadratic lower bound on the lattice count: y^2/2ab + y/2a."""
    a, b = _require_sorted_pair(a, b)
    y = Fraction(y)
    return y * y / (2 * a * b) + y / (2 * a)


def parabola_upper(a, b, y) -> Fraction:
    """Quadratic upper bound on the lattice count:
    y^2/2ab + y/2a + y/b + b/8a + 1."""
    a, b = _require_sorted_pair(a, b)
    y = Fraction(y)
    return (y * y / (2 * a * b) + y / (2 * a)
            + y / b + b / (8 * a) + 1)


def caps_csv(seq: CapSeq, count: int) -> str:
    """CSV dump of the first ``count`` capacity values: k,value_num,value_den."""
    lines = ["k,value_num,value_den"]
    for k, v in enumerate(seq.prefix(count)):
        lines.append(f"{k},{v.numerator},{v.denominator}")
    return "\n".join(lines) + "\n"
