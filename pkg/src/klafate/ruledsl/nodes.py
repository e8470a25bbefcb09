"""AST node types for the rule expression language, plus printing and substitution.

Rules are boolean predicates over process variables and named thresholds;
weight-update criteria reuse the same language but produce a real number via
chained ``value if condition else value`` selections.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

COMPARATORS = ("<", "<=", ">", ">=", "==", "!=")


@dataclass(frozen=True)
class NumberLiteral:
    value: float


@dataclass(frozen=True)
class BoolLiteral:
    value: bool


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class ThresholdRef:
    name: str


@dataclass(frozen=True)
class Comparison:
    left: "RuleExpr"
    op: str
    right: "RuleExpr"


@dataclass(frozen=True)
class Not:
    operand: "RuleExpr"


@dataclass(frozen=True)
class And:
    left: "RuleExpr"
    right: "RuleExpr"


@dataclass(frozen=True)
class Or:
    left: "RuleExpr"
    right: "RuleExpr"


@dataclass(frozen=True)
class Select:
    """``value if condition else orelse``; chains right-associatively."""

    value: "RuleExpr"
    condition: "RuleExpr"
    orelse: "RuleExpr"


RuleExpr = Union[
    NumberLiteral, BoolLiteral, VarRef, ThresholdRef, Comparison, Not, And, Or, Select
]

# Binding strength, loosest first. Printing adds parentheses whenever a child
# binds more loosely than its slot requires, so parse(print(ast)) == ast.
_PREC_SELECT = 0
_PREC_OR = 1
_PREC_AND = 2
_PREC_CMP = 3
_PREC_NOT = 4
_PREC_ATOM = 5


def _precedence(expr: RuleExpr) -> int:
    if isinstance(expr, Select):
        return _PREC_SELECT
    if isinstance(expr, Or):
        return _PREC_OR
    if isinstance(expr, And):
        return _PREC_AND
    if isinstance(expr, Comparison):
        return _PREC_CMP
    if isinstance(expr, Not):
        return _PREC_NOT
    return _PREC_ATOM


def _format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _wrap(expr: RuleExpr, min_prec: int) -> str:
    text = print_rule(expr)
    if _precedence(expr) < min_prec:
        return f"({text})"
    return text


def print_rule(expr: RuleExpr) -> str:
    """Render an AST back to canonical rule text."""
    if isinstance(expr, NumberLiteral):
        return _format_number(expr.value)
    if isinstance(expr, BoolLiteral):
        return "true" if expr.value else "false"
    if isinstance(expr, (VarRef, ThresholdRef)):
        return expr.name
    if isinstance(expr, Not):
        return "not " + _wrap(expr.operand, _PREC_NOT)
    if isinstance(expr, Comparison):
        return f"{_wrap(expr.left, _PREC_NOT)} {expr.op} {_wrap(expr.right, _PREC_NOT)}"
    if isinstance(expr, And):
        return f"{_wrap(expr.left, _PREC_AND)} and {_wrap(expr.right, _PREC_CMP)}"
    if isinstance(expr, Or):
        return f"{_wrap(expr.left, _PREC_OR)} or {_wrap(expr.right, _PREC_AND)}"
    if isinstance(expr, Select):
        return (
            f"{_wrap(expr.value, _PREC_OR)} if {_wrap(expr.condition, _PREC_OR)}"
            f" else {_wrap(expr.orelse, _PREC_SELECT)}"
        )
    raise TypeError(f"not a rule expression: {expr!r}")


def substitute(expr: RuleExpr, definitions: dict[str, RuleExpr]) -> RuleExpr:
    """Replace named references with their defining expressions.

    Used to expand per-row condition aliases (``C1 := ...``) before
    typechecking and evaluation. Substitution is not recursive; definitions
    must already be fully expanded.
    """
    if isinstance(expr, (VarRef, ThresholdRef)) and expr.name in definitions:
        return definitions[expr.name]
    if isinstance(expr, Not):
        return Not(substitute(expr.operand, definitions))
    if isinstance(expr, Comparison):
        return Comparison(
            substitute(expr.left, definitions), expr.op, substitute(expr.right, definitions)
        )
    if isinstance(expr, And):
        return And(substitute(expr.left, definitions), substitute(expr.right, definitions))
    if isinstance(expr, Or):
        return Or(substitute(expr.left, definitions), substitute(expr.right, definitions))
    if isinstance(expr, Select):
        return Select(
            substitute(expr.value, definitions),
            substitute(expr.condition, definitions),
            substitute(expr.orelse, definitions),
        )
    return expr


def referenced_names(expr: RuleExpr) -> set[str]:
    """All identifiers the expression mentions (variables and thresholds alike)."""
    if isinstance(expr, (VarRef, ThresholdRef)):
        return {expr.name}
    if isinstance(expr, Not):
        return referenced_names(expr.operand)
    if isinstance(expr, Comparison):
        return referenced_names(expr.left) | referenced_names(expr.right)
    if isinstance(expr, (And, Or)):
        return referenced_names(expr.left) | referenced_names(expr.right)
    if isinstance(expr, Select):
        return (
            referenced_names(expr.value)
            | referenced_names(expr.condition)
            | referenced_names(expr.orelse)
        )
    return set()
