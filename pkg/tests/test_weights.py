import pytest
from hypothesis import given
from hypothesis import strategies as st

from klafate.errors import InvalidParameterError
from klafate.fmea import MemberProfile
from klafate.weights import (
    CriterionUndefinedError,
    KpiEntry,
    RuleWeight,
    accumulate,
    kpi_compliance,
    member_weight,
    panel_weight,
    prior_rule_weight,
    rule_weight,
    user_rating_weight,
    workbook_panel_weight,
)

unit_floats = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


class TestMemberWeight:
    def test_experienced_operator(self, bgs_workbook):
        profile = bgs_workbook.profiles[0]
        assert profile.name == "Operator 1"
        w = member_weight(profile, bgs_workbook.weight_update, bgs_workbook.settings.team)
        assert w == pytest.approx(0.88)

    def test_apprentice(self, bgs_workbook):
        profile = bgs_workbook.profiles[2]
        w = member_weight(profile, bgs_workbook.weight_update, bgs_workbook.settings.team)
        assert w == pytest.approx(0.5)

    def test_all_high_clauses(self, bgs_workbook):
        star_profile = MemberProfile("ace", e_g=20, e_m=20, waste=0.01, production=3.0)
        w = member_weight(star_profile, bgs_workbook.weight_update, bgs_workbook.settings.team)
        assert w == pytest.approx(0.95)

    def test_sentinel_raises_naming_the_member(self, bgs_workbook):
        # zero production falls through every KPI clause
        idle = MemberProfile("idle", e_g=3, e_m=3, waste=0.05, production=0.0)
        with pytest.raises(CriterionUndefinedError) as err:
            member_weight(idle, bgs_workbook.weight_update, bgs_workbook.settings.team)
        assert err.value.member == "idle"
        assert err.value.criterion == "w_ka"


class TestPanelWeight:
    def test_worked_panel(self):
        assert panel_weight([0.88, 0.75, 0.5]) == pytest.approx(0.71)

    def test_single_member(self):
        assert panel_weight([0.62]) == 0.62

    def test_unanimous(self):
        assert panel_weight([1.0, 1.0, 1.0]) == 1.0

    def test_empty_panel(self):
        with pytest.raises(InvalidParameterError):
            panel_weight([])

    def test_workbook_panel(self, bgs_workbook):
        assert workbook_panel_weight(bgs_workbook) == pytest.approx(0.71, abs=1e-9)


class TestKpiCompliance:
    def test_solved_fault(self):
        assert kpi_compliance([KpiEntry(current=1.0, target=1.0, weight=1.0)]) == 1.0

    def test_unsolved_fault(self):
        assert kpi_compliance([KpiEntry(current=0.0, target=1.0, weight=1.0)]) == 0.0

    def test_partial_ratio(self):
        assert kpi_compliance([KpiEntry(current=3.4, target=4.0)]) == pytest.approx(0.85)

    def test_clamped_above_target(self):
        assert kpi_compliance([KpiEntry(current=5.0, target=4.0)]) == 1.0

    def test_nonpositive_target(self):
        with pytest.raises(InvalidParameterError):
            KpiEntry(current=1.0, target=0.0)

    def test_empty(self):
        with pytest.raises(InvalidParameterError):
            kpi_compliance([])


class TestUserRating:
    @pytest.mark.parametrize("stars,expected", [(1, 0.2), (2, 0.4), (4, 0.8), (5, 1.0)])
    def test_linear_mapping(self, stars, expected):
        assert user_rating_weight(stars) == pytest.approx(expected)

    @pytest.mark.parametrize("bad", [0, 6, -1, 2.5, True])
    def test_out_of_range(self, bad):
        with pytest.raises(InvalidParameterError):
            user_rating_weight(bad)


class TestRuleWeight:
    def test_three_criteria(self):
        w = rule_weight({"w_p": 0.71, "w_k": 1.0, "w_u": 0.8})
        assert w == pytest.approx(0.8367, abs=5e-5)

    def test_unanimous(self):
        assert rule_weight({"w_p": 1.0, "w_k": 1.0, "w_u": 1.0}) == 1.0

    def test_prior_only(self):
        assert rule_weight({"w_p": 0.71}) == 0.71

    def test_empty(self):
        with pytest.raises(InvalidParameterError):
            rule_weight({})

    @given(st.dictionaries(st.sampled_from(["w_p", "w_k", "w_u"]), unit_floats, min_size=1))
    def test_always_in_unit_interval(self, criteria):
        assert 0.0 <= rule_weight(criteria) <= 1.0

    @given(
        a=unit_floats, b=unit_floats, c=unit_floats, bump=unit_floats
    )
    def test_monotone_and_permutation_invariant(self, a, b, c, bump):
        base = rule_weight({"w_p": a, "w_k": b, "w_u": c})
        permuted = rule_weight({"w_p": b, "w_k": c, "w_u": a})
        assert base == pytest.approx(permuted)
        raised = rule_weight({"w_p": min(1.0, a + bump), "w_k": b, "w_u": c})
        assert raised >= base - 1e-12


class TestAccumulate:
    def test_two_point_mean(self):
        rw = RuleWeight("LQ", current=0.8, history=((0.0, 0.8),))
        updated = accumulate(rw, 0.6, timestamp=1.0)
        assert updated.current == 0.6
        assert updated.accumulated == pytest.approx(0.7)

    def test_fresh_rule(self):
        rw = prior_rule_weight("LQ", 0.71)
        assert rw.accumulated == 0.71
        updated = accumulate(rw, 0.84, timestamp=1.0)
        assert updated.accumulated == pytest.approx(0.84)

    def test_constant_history_accumulates_to_constant(self):
        rw = prior_rule_weight("LQ", 0.6)
        for ts in range(10):
            rw = accumulate(rw, 0.6, timestamp=float(ts))
        assert rw.accumulated == pytest.approx(0.6)

    def test_accumulated_is_smoother_than_current(self):
        # A year of monthly updates with two disturbance dips: the accumulated
        # weight must move less month-over-month than the raw weight does.
        monthly = [0.84, 0.84, 0.83, 0.55, 0.82, 0.84, 0.85, 0.84, 0.5, 0.83, 0.84, 0.85]
        rw = prior_rule_weight("R", monthly[0])
        currents, accumulated = [], []
        for ts, w in enumerate(monthly):
            rw = accumulate(rw, w, timestamp=float(ts))
            currents.append(rw.current)
            accumulated.append(rw.accumulated)
        # independent recomputation of the running means
        for i in range(len(monthly)):
            assert accumulated[i] == pytest.approx(sum(monthly[: i + 1]) / (i + 1))
        raw_delta = max(abs(b - a) for a, b in zip(currents, currents[1:]))
        smooth_delta = max(abs(b - a) for a, b in zip(accumulated, accumulated[1:]))
        assert smooth_delta < raw_delta

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            accumulate(prior_rule_weight("R", 0.5), 1.2)
