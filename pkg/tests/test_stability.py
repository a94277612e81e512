from fractions import Fraction

import pytest

from ellipack.decide4d import Rule, m_of
from ellipack.ech import Ellipsoid
from ellipack.planner import verify_certificate
from ellipack.radicals import Radical
from ellipack.scalar import Cmp3, DomainError
from ellipack.stability import (
    CPn,
    Hypersurface,
    ThresholdFailure,
    chain_condition,
    chain_condition_hyp,
    cpn_chain,
    hnd_chain,
    nstab_cpn,
    nstab_filling,
    nstab_hnd,
)


class TestProjectiveBounds:
    @pytest.mark.parametrize("n,expected", [(2, 9), (3, 23), (4, 65)])
    def test_bounds(self, n, expected):
        report = nstab_cpn(n)
        assert report.bound == expected
        assert report.manifold == CPn(n)
        assert all(c.passed for c in report.checks)

    def test_ceiling_is_exact(self):
        # (8 + 1/36)^(n/2) = (17/6)^n, rational for every n
        for n in range(2, 9):
            assert nstab_cpn(n).bound == \
                -((-Fraction(17, 6) ** n).numerator
                  // Fraction(17, 6).denominator ** n)

    def test_checks_keep_passing_above_bound(self):
        for n in range(2, 7):
            bound = nstab_cpn(n).bound
            for k in (bound, bound + 1, bound + 7):
                if n >= 3:
                    assert chain_condition(n, n - 3, k).passed
                ratio = Radical.of(k) ** Fraction(2, n)
                assert ratio >= Fraction(289, 36)

    def test_validation(self):
        with pytest.raises(DomainError):
            nstab_cpn(1)


class TestHypersurfaceBounds:
    def test_degree_one_plane(self):
        report = nstab_hnd(2, 1)
        assert report.bound == 28  # ceil(25/16 + 10 + 16) = ceil(441/16)
        assert report.manifold == Hypersurface(2, 1)

    def test_certified_irrational_ceiling(self):
        report = nstab_hnd(3, 2)
        base_terms = [Fraction(25, 8), 10 * 2 ** (-1 / 3), 16 * 2 ** (-4 / 3)]
        approx = sum(float(t) for t in base_terms) ** 1.5
        assert report.bound - 1 < approx <= report.bound

    def test_degree_profile(self):
        # the base expression trades decaying d^(-...) terms against the
        # linear 25d/16 term, so bounds dip to a minimum near d=4 and then
        # grow; they are not monotone from d=1
        for n in (2, 3, 4):
            bounds = [nstab_hnd(n, d).bound for d in range(1, 11)]
            tail = bounds[3:]
            assert tail == sorted(tail)
            assert bounds[0] > min(bounds)

    def test_specialization_comparison(self):
        # the projective constant is sharper than the degree-1 hypersurface one
        assert Fraction(289, 36) < Fraction(441, 16)
        assert nstab_cpn(2).bound <= nstab_hnd(2, 1).bound

    def test_validation(self):
        with pytest.raises(DomainError):
            nstab_hnd(1, 1)
        with pytest.raises(DomainError):
            nstab_hnd(3, 0)


class TestChainConditions:
    @pytest.mark.parametrize("k", [21, 22])
    def test_holds_at_lowered_packing_numbers(self, k):
        assert chain_condition(3, 0, k).result is Cmp3.CERTAINLY_TRUE

    def test_nondecreasing_in_stage_index(self):
        for n in (4, 5, 6):
            for k in (70, 200):
                values = []
                for i in range(n - 2):
                    terms = [(Fraction(25, 16),
                              Radical.of(k) ** Fraction(-2, n)),
                             (Fraction(10),
                              Radical.of(k) ** Fraction(-(n - i), n)),
                             (Fraction(16),
                              Radical.of(k) ** Fraction(-2 * (n - i - 1), n))]
                    total = sum(c * v.eval(96).hi for c, v in terms)
                    values.append(total)
                assert values == sorted(values)

    def test_hyp_condition_binding_stage(self):
        assert chain_condition_hyp(3, 2, 1, 73).passed
        assert not chain_condition_hyp(3, 2, 1, 2).passed

    def test_stage_index_validation(self):
        with pytest.raises(DomainError):
            chain_condition(3, 1, 30)
        with pytest.raises(DomainError):
            chain_condition_hyp(3, 1, 2, 30)


class TestProjectiveChains:
    def test_worked_chain(self):
        cert = cpn_chain(3, 27)
        assert len(cert.steps) == 2
        assert cert.source == Ellipsoid.of(1, 1, 27)
        assert cert.target == Ellipsoid.ball(3, 3)
        first, last = cert.steps
        assert first.rule.rule is Rule.THEOREM_ONE
        assert first.target == Ellipsoid.of(1, 3, 9)
        assert last.rule.rule is Rule.MS_THRESHOLD
        # the first step's threshold value is m(3) = 961/48 <= 27
        assert m_of(3) == Fraction(961, 48)
        assert Fraction(961, 48) <= 27
        # the last step's ratio clears the ball threshold: 9 >= 289/36
        assert Fraction(9) >= Fraction(289, 36)
        verify_certificate(cert)

    def test_below_threshold(self):
        with pytest.raises(ThresholdFailure):
            cpn_chain(3, 8)  # 8^(2/3) = 4 < 289/36

    def test_two_dimensional_single_step(self):
        cert = cpn_chain(2, 9)
        assert len(cert.steps) == 1
        assert cert.steps[0].rule.rule is Rule.MS_THRESHOLD
        verify_certificate(cert)

    def test_intermediate_volumes_equal_k(self):
        for n, k in ((3, 27), (4, 100), (5, 2000)):
            cert = cpn_chain(n, k)
            for step in cert.steps:
                assert step.source.volume() == k
                assert step.target.volume() == k
            verify_certificate(cert)

    def test_packing_prefix(self):
        cert = cpn_chain(3, 27, with_packing=True)
        assert cert.steps[0].copies == 27
        assert cert.steps[0].rule.rule is Rule.AXIOM_FULL_FILL
        assert cert.source == Ellipsoid.ball(1, 3)
        verify_certificate(cert)

    def test_chain_at_bound_for_each_n(self):
        for n in (2, 3, 4, 5):
            bound = nstab_cpn(n).bound
            verify_certificate(cpn_chain(n, bound))


class TestHypersurfaceChains:
    def test_chains_at_bounds(self):
        for n in (2, 3, 4):
            for d in (1, 2, 3, 4, 5):
                report = nstab_hnd(n, d)
                cert = hnd_chain(n, d, report.bound)
                assert len(cert.steps) == n - 1
                for step in cert.steps:
                    assert step.rule.rule is Rule.THEOREM_ONE
                verify_certificate(cert)

    def test_target_shape(self):
        cert = hnd_chain(3, 2, 73)
        scale = (Radical.of(73) / 2) ** Fraction(1, 3)
        assert cert.target == Ellipsoid([scale, scale, scale * 2])

    def test_below_threshold(self):
        with pytest.raises(ThresholdFailure):
            hnd_chain(3, 2, 2)

    def test_degree_one_matches_projective_shape(self):
        ours = hnd_chain(2, 1, 28)
        theirs = cpn_chain(2, 28)
        assert len(ours.steps) == len(theirs.steps) == 1
        assert ours.source == theirs.source
        assert ours.target == theirs.target


class TestExceptionTable:
    # a synthetic staircase-exclusion table: one interval covering 20^(2/3)
    # but avoiding 21^(2/3) and 22^(2/3); real tables are caller-supplied
    TABLE = [(Fraction(36, 5), Fraction(15, 2))]

    def test_without_table_reports_ceiling(self):
        assert nstab_cpn(3).bound == 23

    def test_table_lowers_bound(self):
        report = nstab_cpn(3, exceptions=self.TABLE)
        assert report.bound == 21

    def test_chain_usable_at_lowered_bound(self):
        cert = cpn_chain(3, 21, exceptions=self.TABLE)
        verify_certificate(cert)
        with pytest.raises(ThresholdFailure):
            cpn_chain(3, 21)  # without the table, 21^(2/3) < 289/36

    def test_chain_embeds_table_for_reverification(self):
        cert = cpn_chain(3, 21, exceptions=self.TABLE)
        last = cert.steps[-1]
        assert last.rule.parameters.get("exceptions") == [["36/5", "15/2"]]


class TestGenericFilling:
    def test_bound_clears_threshold(self):
        report = nstab_filling(Ellipsoid.of(1, 1))
        assert report.bound == Fraction(5120, 3).__ceil__()
        assert report.bound > Fraction(5120, 3)

    def test_integer_threshold_goes_strictly_past(self):
        # the [1, 6] threshold is exactly 512; the bound must step past it
        from ellipack.planner import s_constant
        assert s_constant([1, 6]) == 512
        report = nstab_filling(Ellipsoid.of(1, 6))
        assert report.bound == 513


class TestReportJson:
    def test_shape(self):
        doc = nstab_cpn(3, chain_k=27).as_json()
        assert doc["manifold"] == {"kind": "CPn", "n": 3}
        assert doc["bound"] == 23
        assert doc["chain"]["steps"]
        assert all(c["result"] == "certainly_true" for c in doc["checks"])
        doc = nstab_hnd(3, 2).as_json()
        assert doc["manifold"] == {"kind": "Hnd", "n": 3, "d": 2}
        assert doc["chain"] is None
