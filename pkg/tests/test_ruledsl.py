import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klafate.errors import (
    CapacityError,
    EvaluationError,
    RuleSyntaxError,
    TypeMismatchError,
    UnknownOperatorError,
    UnresolvedNameError,
)
from klafate.ruledsl import (
    And,
    BoolLiteral,
    Comparison,
    Not,
    NumberLiteral,
    Or,
    Select,
    Snapshot,
    ThresholdSet,
    VarRef,
    check_mutual_exclusivity,
    check_rules_exclusive,
    eval_bool,
    eval_real,
    parse_rule,
    print_rule,
    typecheck,
)

NO_VACUUM_PUMP = "(C1 and C2 and C3) or (C1 and C2 and (not C3) and C4)"


class TestParser:
    def test_or_not(self):
        assert parse_rule("C1 or not C2") == Or(VarRef("C1"), Not(VarRef("C2")))

    def test_nested_and_or(self):
        expr = parse_rule(NO_VACUUM_PUMP)
        left = And(And(VarRef("C1"), VarRef("C2")), VarRef("C3"))
        right = And(
            And(And(VarRef("C1"), VarRef("C2")), Not(VarRef("C3"))), VarRef("C4")
        )
        assert expr == Or(left, right)

    def test_chained_select_is_right_associative(self):
        expr = parse_rule("0.95 if C1 else 0.75 if C2 else 0.5 if C3 else -1")
        assert expr == Select(
            NumberLiteral(0.95),
            VarRef("C1"),
            Select(
                NumberLiteral(0.75),
                VarRef("C2"),
                Select(NumberLiteral(0.5), VarRef("C3"), NumberLiteral(-1.0)),
            ),
        )

    def test_comparison(self):
        assert parse_rule("pressure < LOWEST_PRESSURE") == Comparison(
            VarRef("pressure"), "<", VarRef("LOWEST_PRESSURE")
        )

    def test_precedence_and_binds_tighter_than_or(self):
        assert parse_rule("a or b and c") == Or(
            VarRef("a"), And(VarRef("b"), VarRef("c"))
        )

    def test_not_binds_tighter_than_and(self):
        assert parse_rule("not a and b") == And(Not(VarRef("a")), VarRef("b"))

    def test_dotted_identifiers(self):
        assert parse_rule("loading.pressure > 5") == Comparison(
            VarRef("loading.pressure"), ">", NumberLiteral(5.0)
        )

    def test_syntax_error_carries_position(self):
        with pytest.raises(RuleSyntaxError) as err:
            parse_rule("a and (b or")
        assert err.value.line == 1
        assert err.value.column == 12
        assert err.value.expected

    def test_empty_text(self):
        with pytest.raises(RuleSyntaxError):
            parse_rule("   ")

    def test_unknown_operator(self):
        with pytest.raises(UnknownOperatorError):
            parse_rule("a && b")
        with pytest.raises(UnknownOperatorError) as err:
            parse_rule("pressure = 5")
        assert "==" in str(err.value)

    def test_comparisons_do_not_chain(self):
        with pytest.raises(RuleSyntaxError):
            parse_rule("1 < x < 5")

    def test_dangling_else_required(self):
        with pytest.raises(RuleSyntaxError) as err:
            parse_rule("1 if C1")
        assert "'else'" in err.value.expected


class TestTypecheck:
    def test_comparison_is_boolean_kind(self):
        typed = typecheck(
            parse_rule("pressure < LOWEST_PRESSURE"),
            variables={"pressure"},
            thresholds={"LOWEST_PRESSURE"},
        )
        assert typed.kind == "bool"
        assert typed.variables == {"pressure"}
        assert typed.thresholds == {"LOWEST_PRESSURE"}

    def test_unresolved_name(self):
        with pytest.raises(UnresolvedNameError) as err:
            typecheck(
                parse_rule("pressure < UNDECLARED"),
                variables={"pressure"},
                thresholds=set(),
            )
        assert err.value.name == "UNDECLARED"

    def test_boolean_branch_in_select_is_rejected(self):
        expr = Select(BoolLiteral(True), VarRef("C1"), NumberLiteral(1.0))
        with pytest.raises(TypeMismatchError):
            typecheck(expr, variables={"C1"}, thresholds=set())

    def test_select_kind_is_real(self):
        typed = typecheck(
            parse_rule("0.9 if C1 else 0.1"), variables={"C1"}, thresholds=set()
        )
        assert typed.kind == "real"

    def test_variable_cannot_be_both_kinds(self):
        with pytest.raises(TypeMismatchError):
            typecheck(parse_rule("x and y < 1"), variables={"x", "y"}, thresholds=set())
            typecheck(parse_rule("x and x < 1"), variables={"x"}, thresholds=set())

    def test_threshold_in_condition_position_is_rejected(self):
        with pytest.raises(TypeMismatchError):
            typecheck(parse_rule("LIMIT or C1"), variables={"C1"}, thresholds={"LIMIT"})


class TestEvaluation:
    def test_threshold_comparison(self):
        thresholds = ThresholdSet({"LOWEST_PRESSURE": 5.0})
        snapshot = Snapshot({"pressure": 4.0})
        assert eval_bool(parse_rule("pressure < LOWEST_PRESSURE"), snapshot, thresholds)
        assert not eval_bool(
            parse_rule("pressure < LOWEST_PRESSURE"), Snapshot({"pressure": 6.0}), thresholds
        )

    def test_literals(self):
        assert eval_bool(parse_rule("true and not false"), Snapshot({}))

    def test_no_vacuum_pump_truth_table(self):
        # Exhaustive oracle: hand-computed boolean formula over all 16 inputs.
        expr = parse_rule(NO_VACUUM_PUMP)
        for c1, c2, c3, c4 in itertools.product([False, True], repeat=4):
            snapshot = Snapshot({"C1": c1, "C2": c2, "C3": c3, "C4": c4})
            expected = (c1 and c2 and c3) or (c1 and c2 and (not c3) and c4)
            assert eval_bool(expr, snapshot) == expected

    def test_select_returns_branch_value(self):
        expr = parse_rule("0.95 if C1 else 0.5 if C2 else -1")
        assert eval_real(expr, Snapshot({"C1": True, "C2": False})) == 0.95
        assert eval_real(expr, Snapshot({"C1": False, "C2": True})) == 0.5
        assert eval_real(expr, Snapshot({"C1": False, "C2": False})) == -1.0

    def test_missing_variable_names_the_variable(self):
        with pytest.raises(EvaluationError) as err:
            eval_bool(parse_rule("a and b"), Snapshot({"a": True}))
        assert err.value.name == "b"

    def test_short_circuit_skips_missing_variable(self):
        snapshot = Snapshot({"a": False})
        assert eval_bool(parse_rule("a and missing"), snapshot) is False
        assert eval_bool(parse_rule("not a or missing"), Snapshot({"a": False})) is True

    def test_toleranced_equality(self):
        snapshot = Snapshot({"x": 1.0 + 1e-12})
        assert eval_bool(parse_rule("x == 1"), snapshot)
        assert not eval_bool(parse_rule("x != 1"), snapshot)
        assert eval_bool(parse_rule("x != 1.1"), snapshot)

    def test_boolean_compares_as_number(self):
        assert eval_bool(parse_rule("motor_on == 1"), Snapshot({"motor_on": True}))

    def test_non_boolean_rule_result_is_an_error(self):
        with pytest.raises(EvaluationError):
            eval_bool(parse_rule("1 if C1 else 0"), Snapshot({"C1": True}))

    def test_determinism(self):
        expr = parse_rule("(a or b) and not (a and b)")
        snapshot = Snapshot({"a": True, "b": False})
        results = {eval_bool(expr, snapshot) for _ in range(50)}
        assert results == {True}


# Independent brute-force interpreter: deliberately written in a different
# style from the package evaluator (no short-circuit, table-driven).
def _oracle_eval(expr, env):
    name = type(expr).__name__
    if name == "BoolLiteral":
        return expr.value
    if name == "VarRef":
        return env[expr.name]
    if name == "Not":
        return not _oracle_eval(expr.operand, env)
    if name == "And":
        results = [_oracle_eval(expr.left, env), _oracle_eval(expr.right, env)]
        return all(results)
    if name == "Or":
        results = [_oracle_eval(expr.left, env), _oracle_eval(expr.right, env)]
        return any(results)
    raise AssertionError(f"oracle cannot evaluate {name}")


def random_bool_expr(rng, variables, depth):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.12:
            return BoolLiteral(rng.random() < 0.5)
        return VarRef(rng.choice(variables))
    pick = rng.random()
    if pick < 0.2:
        return Not(random_bool_expr(rng, variables, depth - 1))
    left = random_bool_expr(rng, variables, depth - 1)
    right = random_bool_expr(rng, variables, depth - 1)
    return And(left, right) if pick < 0.6 else Or(left, right)


def random_value_expr(rng, variables, depth):
    if depth == 0 or rng.random() < 0.4:
        return NumberLiteral(round(rng.uniform(-5, 5), 3))
    if rng.random() < 0.5:
        left = random_value_expr(rng, variables, 0)
        right = random_value_expr(rng, variables, 0)
        op = rng.choice(["<", "<=", ">", ">=", "==", "!="])
        return Select(
            NumberLiteral(1.0),
            Comparison(left, op, right),
            random_value_expr(rng, variables, depth - 1),
        )
    return Select(
        random_value_expr(rng, variables, depth - 1),
        random_bool_expr(rng, variables, depth - 1),
        random_value_expr(rng, variables, depth - 1),
    )


class TestOracleEquivalence:
    def test_random_expressions_match_truth_table_oracle(self):
        rng = random.Random(1105)
        variables = ["C1", "C2", "C3", "C4"]
        for _ in range(300):
            expr = random_bool_expr(rng, variables, depth=4)
            for assignment in itertools.product([False, True], repeat=4):
                env = dict(zip(variables, assignment))
                assert eval_bool(expr, Snapshot(env)) == _oracle_eval(expr, env)

    def test_de_morgan(self):
        rng = random.Random(7)
        variables = ["a", "b"]
        for _ in range(100):
            left = random_bool_expr(rng, variables, 3)
            right = random_bool_expr(rng, variables, 3)
            for assignment in itertools.product([False, True], repeat=2):
                snapshot = Snapshot(dict(zip(variables, assignment)))
                assert eval_bool(Not(And(left, right)), snapshot) == eval_bool(
                    Or(Not(left), Not(right)), snapshot
                )


class TestRoundTrip:
    def test_boolean_round_trip(self):
        rng = random.Random(42)
        for _ in range(300):
            expr = random_bool_expr(rng, ["C1", "C2", "C3", "C4"], depth=5)
            assert parse_rule(print_rule(expr)) == expr

    def test_value_round_trip(self):
        rng = random.Random(43)
        for _ in range(300):
            expr = random_value_expr(rng, ["x", "y"], depth=4)
            assert parse_rule(print_rule(expr)) == expr

    @given(st.floats(allow_nan=False, allow_infinity=False, width=64))
    @settings(max_examples=200)
    def test_number_literal_round_trip(self, value):
        expr = NumberLiteral(value)
        reparsed = parse_rule(print_rule(expr))
        assert reparsed == expr or (
            isinstance(reparsed, NumberLiteral) and reparsed.value == value
        )

    def test_canonical_text_is_stable(self):
        text = print_rule(parse_rule(NO_VACUUM_PUMP))
        assert print_rule(parse_rule(text)) == text


class TestMutualExclusivity:
    def test_complementary_rules_are_exclusive(self):
        report = check_mutual_exclusivity(
            [parse_rule("C1"), parse_rule("not C1")], ["C1"]
        )
        assert report.exclusive
        assert report.witness is None

    def test_overlap_yields_witness(self):
        report = check_mutual_exclusivity(
            [parse_rule("C1 or C2"), parse_rule("C1 and C2")], ["C1", "C2"]
        )
        assert not report.exclusive
        assert report.witness == {"C1": True, "C2": True}
        assert report.conflicting == (0, 1)

    def test_witness_actually_satisfies_both_rules(self):
        rules = [parse_rule("C1 or C2"), parse_rule("C1 and C2")]
        report = check_mutual_exclusivity(rules, ["C1", "C2"])
        snapshot = Snapshot(report.witness)
        assert all(eval_bool(rule, snapshot) for rule in rules)

    def test_capacity_bound(self):
        names = [f"c{i}" for i in range(21)]
        with pytest.raises(CapacityError):
            check_mutual_exclusivity([parse_rule("c0")], names)

    def test_abstracted_comparisons_share_atoms(self):
        rules = [
            parse_rule("pressure < LIMIT"),
            parse_rule("not (pressure < LIMIT) and rate < FLOOR"),
        ]
        report = check_rules_exclusive(rules)
        assert report.exclusive
        assert report.condition_vars == ("pressure < LIMIT", "rate < FLOOR")

    def test_abstracted_overlap(self):
        rules = [parse_rule("pressure < LIMIT"), parse_rule("rate < FLOOR")]
        report = check_rules_exclusive(rules)
        assert not report.exclusive
        assert report.witness == {"pressure < LIMIT": True, "rate < FLOOR": True}
