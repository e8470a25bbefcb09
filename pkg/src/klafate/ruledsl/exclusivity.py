"""Mutual-exclusivity checking by exhaustive enumeration of condition assignments.

Ordered rule dispatch is only order-independent when at most one rule can fire
for any input. The check enumerates all boolean assignments of the condition
variables and reports the first assignment under which two rules fire.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

from ..errors import CapacityError
from .evaluate import EMPTY_THRESHOLDS, Snapshot, eval_bool
from .nodes import (
    And,
    BoolLiteral,
    Comparison,
    Not,
    Or,
    RuleExpr,
    Select,
    ThresholdRef,
    VarRef,
    print_rule,
)

MAX_CONDITION_VARS = 20


@dataclass(frozen=True)
class ExclusivityReport:
    exclusive: bool
    witness: Optional[dict[str, bool]]
    conflicting: Optional[tuple[int, int]]  # indices of two rules active together
    condition_vars: tuple[str, ...]


def check_mutual_exclusivity(
    rules: Sequence[RuleExpr], condition_vars: Sequence[str]
) -> ExclusivityReport:
    """Exhaustively check that no assignment satisfies two rules at once.

    ``condition_vars`` are treated as free booleans; rules must be
    propositional over them (see :func:`propositional_abstraction` for rules
    that still contain comparisons).
    """
    names = tuple(condition_vars)
    if len(names) > MAX_CONDITION_VARS:
        raise CapacityError(
            f"{len(names)} condition variables exceed the exhaustive bound of "
            f"{MAX_CONDITION_VARS}; split the rule set or reduce shared conditions"
        )
    for assignment in itertools.product((False, True), repeat=len(names)):
        snapshot = Snapshot(dict(zip(names, assignment)), timestamp=0.0)
        active = [
            i for i, rule in enumerate(rules) if eval_bool(rule, snapshot, EMPTY_THRESHOLDS)
        ]
        if len(active) > 1:
            return ExclusivityReport(
                exclusive=False,
                witness=dict(zip(names, assignment)),
                conflicting=(active[0], active[1]),
                condition_vars=names,
            )
    return ExclusivityReport(
        exclusive=True, witness=None, conflicting=None, condition_vars=names
    )


def propositional_abstraction(
    rules: Sequence[RuleExpr],
) -> tuple[list[RuleExpr], list[str]]:
    """Rewrite rules over shared boolean atoms.

    Every comparison (and every bare name in boolean position) becomes a
    synthetic condition variable named by its canonical text, shared across
    rules, so the whole set can be fed to :func:`check_mutual_exclusivity`.
    Structurally identical atoms in different rules map to the same variable;
    logically related but distinct atoms (``x < 5`` vs ``x >= 5``) stay
    independent, which makes the check conservative.
    """
    atoms: dict[str, str] = {}
    order: list[str] = []

    def atom_var(expr: RuleExpr) -> VarRef:
        key = print_rule(expr)
        if key not in atoms:
            atoms[key] = key
            order.append(key)
        return VarRef(key)

    def rewrite(expr: RuleExpr) -> RuleExpr:
        if isinstance(expr, (VarRef, ThresholdRef, Comparison)):
            return atom_var(expr)
        if isinstance(expr, BoolLiteral):
            return expr
        if isinstance(expr, Not):
            return Not(rewrite(expr.operand))
        if isinstance(expr, And):
            return And(rewrite(expr.left), rewrite(expr.right))
        if isinstance(expr, Or):
            return Or(rewrite(expr.left), rewrite(expr.right))
        if isinstance(expr, Select):
            raise CapacityError(
                "if/else selections are real-valued and cannot appear in "
                "boolean rules under exclusivity checking"
            )
        raise TypeError(f"not a rule expression: {expr!r}")

    rewritten = [rewrite(rule) for rule in rules]
    return rewritten, order


def check_rules_exclusive(rules: Sequence[RuleExpr]) -> ExclusivityReport:
    """Abstract comparisons to shared atoms, then run the exhaustive check."""
    rewritten, condition_vars = propositional_abstraction(rules)
    return check_mutual_exclusivity(rewritten, condition_vars)
