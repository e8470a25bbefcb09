"""Name resolution and boolean/real kind checking for rule ASTs."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import TypeMismatchError, UnresolvedNameError
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
)

BOOL = "bool"
REAL = "real"
_ANY = "any"


@dataclass(frozen=True)
class TypedRule:
    """Validated expression together with its result kind and resolved names."""

    expr: RuleExpr
    kind: str  # BOOL or REAL
    variables: frozenset[str]
    thresholds: frozenset[str]


class _Checker:
    def __init__(self, variables, thresholds):
        self.variables = set(variables)
        self.thresholds = set(thresholds)
        self.seen_vars: set[str] = set()
        self.seen_thresholds: set[str] = set()
        self.var_kinds: dict[str, str] = {}

    def check(self, expr: RuleExpr, expected: str) -> str:
        if isinstance(expr, NumberLiteral):
            return self._produce(REAL, expected, "number literal")
        if isinstance(expr, BoolLiteral):
            return self._produce(BOOL, expected, "boolean literal")
        if isinstance(expr, (VarRef, ThresholdRef)):
            return self._check_name(expr.name, expected)
        if isinstance(expr, Comparison):
            self.check(expr.left, REAL)
            self.check(expr.right, REAL)
            return self._produce(BOOL, expected, "comparison")
        if isinstance(expr, Not):
            self.check(expr.operand, BOOL)
            return self._produce(BOOL, expected, "'not'")
        if isinstance(expr, (And, Or)):
            self.check(expr.left, BOOL)
            self.check(expr.right, BOOL)
            return self._produce(BOOL, expected, "'and'/'or'")
        if isinstance(expr, Select):
            self.check(expr.condition, BOOL)
            self.check(expr.value, REAL)
            self.check(expr.orelse, REAL)
            return self._produce(REAL, expected, "if/else selection")
        raise TypeError(f"not a rule expression: {expr!r}")

    def _produce(self, kind: str, expected: str, what: str) -> str:
        if expected != _ANY and expected != kind:
            raise TypeMismatchError(f"{what} produces {kind} where {expected} is required")
        return kind

    def _check_name(self, name: str, expected: str) -> str:
        if name in self.variables:
            # A variable's kind is fixed by how the expression uses it; using
            # the same name as both condition and number is rejected.
            kind = BOOL if expected in (_ANY, BOOL) else REAL
            previous = self.var_kinds.setdefault(name, kind)
            if previous != kind:
                raise TypeMismatchError(
                    f"variable {name!r} used as both {previous} and {kind}"
                )
            self.seen_vars.add(name)
            return self._produce(kind, expected, f"variable {name!r}")
        if name in self.thresholds:
            self.seen_thresholds.add(name)
            return self._produce(REAL, expected, f"threshold {name!r}")
        raise UnresolvedNameError(name, context="not a declared variable or threshold")


def typecheck(expr: RuleExpr, variables, thresholds) -> TypedRule:
    """Resolve every name and verify boolean/real positions.

    Returns a descriptor whose ``kind`` is the expression's result kind.
    Raises UnresolvedNameError for unknown names and TypeMismatchError when a
    boolean expression sits in a value slot or vice versa.
    """
    checker = _Checker(variables, thresholds)
    kind = checker.check(expr, _ANY)
    return TypedRule(
        expr=expr,
        kind=kind,
        variables=frozenset(checker.seen_vars),
        thresholds=frozenset(checker.seen_thresholds),
    )
