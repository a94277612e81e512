import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipack.scalar import (
    Cmp3,
    DomainError,
    NegativeResultError,
    Precision,
    ScalarParseError,
    XReal,
    cmp,
    integer_root,
    nth_root,
    rat_parse,
)


class TestRatParse:
    def test_fraction_literal(self):
        assert rat_parse("16/5") == Fraction(16, 5)

    def test_decimal_is_exact(self):
        assert rat_parse("1.2") == Fraction(6, 5)
        assert rat_parse("0.125") == Fraction(1, 8)

    def test_zero_denominator(self):
        with pytest.raises(ScalarParseError, match="zero denominator"):
            rat_parse("3/0")

    def test_negative_rejected(self):
        with pytest.raises(ScalarParseError, match="negative"):
            rat_parse("-1/2")

    @pytest.mark.parametrize("bad", ["", "x", "1.2.3", "1/2/3", "1e3", "1/-2"])
    def test_malformed(self, bad):
        with pytest.raises(ScalarParseError):
            rat_parse(bad)

    def test_roundtrip_random(self):
        rng = random.Random(20260809)
        for _ in range(1000):
            value = Fraction(rng.randint(0, 10**9), rng.randint(1, 10**9))
            assert rat_parse(str(value)) == value


class TestIntegerRoot:
    @pytest.mark.parametrize("value,index,expected", [
        (0, 3, 0), (1, 5, 1), (31, 5, 1), (32, 5, 2),
        (10**18, 2, 10**9), (2**300 - 1, 3, 2**100 - 1),
    ])
    def test_exact_floors(self, value, index, expected):
        assert integer_root(value, index) == expected

    def test_random_against_definition(self):
        rng = random.Random(7)
        for _ in range(300):
            v = rng.randint(0, 10**24)
            k = rng.randint(1, 7)
            r = integer_root(v, k)
            assert r ** k <= v < (r + 1) ** k


class TestNthRoot:
    def test_perfect_cube(self):
        r = nth_root(27, 3, 64)
        assert r.is_exact and r.value == 3

    def test_perfect_cube_of_rational(self):
        r = nth_root(Fraction(125, 8), 3, 64)
        assert r.is_exact and r.value == Fraction(5, 2)

    def test_sqrt2_enclosure(self):
        r = nth_root(2, 2, 64)
        assert not r.is_exact
        assert r.lo ** 2 <= 2 <= r.hi ** 2
        assert r.width <= Fraction(1, 2**64)

    def test_interval_input_contains_root(self):
        x = XReal.interval(Fraction(3, 2), Fraction(5, 2), 16)
        r = nth_root(x, 2, 32)
        assert r.lo ** 2 <= Fraction(3, 2) and Fraction(5, 2) <= r.hi ** 2

    @given(num=st.integers(1, 10**6), den=st.integers(1, 10**6),
           index=st.sampled_from([2, 3, 5]))
    @settings(max_examples=60, deadline=None)
    def test_containment_property(self, num, den, index):
        x = Fraction(num, den)
        r = nth_root(x, index, 64)
        assert r.lo ** index <= x <= r.hi ** index

    def test_monotone_refinement(self):
        rng = random.Random(99)
        for _ in range(50):
            x = Fraction(rng.randint(1, 10**6), rng.randint(1, 10**6))
            for n in (2, 3, 5):
                for bits in (16, 32, 64):
                    wide = nth_root(x, n, bits)
                    tight = nth_root(x, n, bits + 8)
                    assert tight.width <= wide.width
                    assert wide.lo <= tight.lo and tight.hi <= wide.hi

    def test_agrees_with_exact_on_perfect_powers(self):
        rng = random.Random(5)
        for _ in range(100):
            base = Fraction(rng.randint(1, 50), rng.randint(1, 50))
            n = rng.randint(2, 4)
            r = nth_root(base ** n, n, 64)
            assert r.is_exact and r.value == base


class TestCmp:
    def test_exact_never_unknown(self):
        rng = random.Random(11)
        for _ in range(200):
            x = Fraction(rng.randint(0, 100), rng.randint(1, 100))
            y = Fraction(rng.randint(0, 100), rng.randint(1, 100))
            for op in ("<", "<=", ">", ">=", "="):
                assert cmp(x, op, y) is not Cmp3.UNKNOWN

    def test_examples(self):
        assert cmp(Fraction(1, 2), "<", Fraction(2, 3)) is Cmp3.CERTAINLY_TRUE
        assert cmp(nth_root(2, 2, 8), "<", Fraction(3, 2)) is Cmp3.CERTAINLY_TRUE
        low = nth_root(2, 2, 2)
        assert cmp(low, "=", nth_root(2, 2, 2)) is Cmp3.UNKNOWN

    def test_unicode_operators(self):
        assert cmp(1, "≤", 1) is Cmp3.CERTAINLY_TRUE
        assert cmp(2, "≥", 3) is Cmp3.CERTAINLY_FALSE

    def test_interval_certainly_false(self):
        r = nth_root(2, 2, 64)
        assert cmp(r, ">", 2) is Cmp3.CERTAINLY_FALSE
        assert cmp(r, "<", 1) is Cmp3.CERTAINLY_FALSE

    def test_cmp3_is_not_a_bool(self):
        with pytest.raises(TypeError):
            bool(cmp(1, "<", 2))


class TestXRealArithmetic:
    def test_exact_ops_stay_exact(self):
        x = XReal.exact(Fraction(3, 4))
        y = XReal.exact(Fraction(1, 4))
        assert (x + y).value == 1
        assert (x - y).value == Fraction(1, 2)
        assert (x * y).value == Fraction(3, 16)
        assert (x / y).value == 3

    def test_interval_ops_contain_truth(self):
        rng = random.Random(3)
        for _ in range(200):
            a = Fraction(rng.randint(1, 1000), rng.randint(1, 1000))
            b = Fraction(rng.randint(1, 1000), rng.randint(1, 1000))
            xa = XReal.interval(a, a, 24)
            xb = XReal.interval(b, b, 24)
            for op, truth in (("add", a + b), ("mul", a * b), ("div", a / b)):
                got = {"add": xa + xb, "mul": xa * xb, "div": xa / xb}[op]
                assert got.lo <= truth <= got.hi

    def test_subtraction_guards_negativity(self):
        with pytest.raises(NegativeResultError):
            XReal.exact(1) - XReal.exact(2)
        wide = XReal.interval(Fraction(1), Fraction(3), 8)
        with pytest.raises(NegativeResultError):
            XReal.exact(2) - wide  # could dip below zero

    def test_division_by_possible_zero(self):
        z = XReal.interval(Fraction(0), Fraction(1), 8)
        with pytest.raises(DomainError):
            XReal.exact(1) / z

    def test_negative_construction_rejected(self):
        with pytest.raises(DomainError):
            XReal.exact(Fraction(-1, 2))

    @given(st.fractions(min_value=0, max_value=1000),
           st.fractions(min_value=0, max_value=1000))
    @settings(max_examples=80, deadline=None)
    def test_exact_roundtrip_matches_fraction_arithmetic(self, a, b):
        assert (XReal.exact(a) + XReal.exact(b)).value == a + b
        assert (XReal.exact(a) * XReal.exact(b)).value == a * b


class TestPrecisionPolicy:
    def test_ladder_doubles_to_cap(self):
        assert list(Precision(64, 512).ladder()) == [64, 128, 256, 512]

    def test_ladder_always_yields_start(self):
        assert list(Precision(64, 64).ladder()) == [64]

    def test_invalid_policies(self):
        with pytest.raises(DomainError):
            Precision(0, 64)
        with pytest.raises(DomainError):
            Precision(128, 64)
