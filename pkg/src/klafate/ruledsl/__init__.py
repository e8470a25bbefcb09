"""Rule expression language: parsing, typechecking, evaluation, exclusivity."""

from .evaluate import (
    EMPTY_THRESHOLDS,
    EQUALITY_TOLERANCE,
    Snapshot,
    Threshold,
    ThresholdSet,
    eval_bool,
    eval_real,
)
from .exclusivity import (
    ExclusivityReport,
    check_mutual_exclusivity,
    check_rules_exclusive,
    propositional_abstraction,
)
from .nodes import (
    And,
    BoolLiteral,
    Comparison,
    Not,
    NumberLiteral,
    Or,
    RuleExpr,
    Select,
    ThresholdRef,
    VarRef,
    print_rule,
    referenced_names,
    substitute,
)
from .parser import parse_rule
from .typecheck import BOOL, REAL, TypedRule, typecheck

__all__ = [
    "And",
    "BOOL",
    "BoolLiteral",
    "Comparison",
    "EMPTY_THRESHOLDS",
    "EQUALITY_TOLERANCE",
    "ExclusivityReport",
    "Not",
    "NumberLiteral",
    "Or",
    "REAL",
    "RuleExpr",
    "Select",
    "Snapshot",
    "Threshold",
    "ThresholdRef",
    "ThresholdSet",
    "TypedRule",
    "VarRef",
    "check_mutual_exclusivity",
    "check_rules_exclusive",
    "eval_bool",
    "eval_real",
    "parse_rule",
    "print_rule",
    "propositional_abstraction",
    "referenced_names",
    "substitute",
    "typecheck",
]
