"""Evaluation of rule ASTs against a variable snapshot and a threshold set."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional, Union

from ..errors import EvaluationError, InvalidParameterError
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

# Equality on measured values is toleranced; exact float equality on live
# process data would be meaningless.
EQUALITY_TOLERANCE = 1e-9

Value = Union[float, int, bool]


@dataclass(frozen=True)
class Snapshot:
    """Immutable name -> value map of process variables at one instant."""

    values: Mapping[str, Value]
    timestamp: float = 0.0

    def __post_init__(self):
        frozen = {}
        for name, value in dict(self.values).items():
            if not name:
                raise InvalidParameterError("snapshot variable names must be non-empty")
            if isinstance(value, bool):
                frozen[name] = value
            elif isinstance(value, (int, float)):
                if not math.isfinite(value):
                    raise InvalidParameterError(f"snapshot value {name}={value!r} is not finite")
                frozen[name] = float(value)
            else:
                raise InvalidParameterError(
                    f"snapshot value {name}={value!r} must be numeric or boolean"
                )
        object.__setattr__(self, "values", MappingProxyType(frozen))

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def get(self, name: str):
        return self.values[name]


@dataclass(frozen=True)
class Threshold:
    value: float
    unit: Optional[str] = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidParameterError(f"threshold value {self.value!r} is not finite")


@dataclass(frozen=True)
class ThresholdSet:
    """Immutable name -> numeric constant map, each with an optional unit."""

    entries: Mapping[str, Threshold] = field(default_factory=dict)

    def __post_init__(self):
        frozen = {}
        for name, entry in dict(self.entries).items():
            if not name:
                raise InvalidParameterError("threshold names must be non-empty")
            if not isinstance(entry, Threshold):
                entry = Threshold(float(entry))
            frozen[name] = entry
        object.__setattr__(self, "entries", MappingProxyType(frozen))

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def names(self) -> frozenset[str]:
        return frozenset(self.entries)

    def value(self, name: str) -> float:
        return self.entries[name].value

    def unit(self, name: str) -> Optional[str]:
        return self.entries[name].unit

    def merged(self, *others: "ThresholdSet") -> "ThresholdSet":
        combined = dict(self.entries)
        for other in others:
            combined.update(other.entries)
        return ThresholdSet(combined)


EMPTY_THRESHOLDS = ThresholdSet({})


def _lookup(expr, snapshot: Snapshot, thresholds: ThresholdSet):
    name = expr.name
    if isinstance(expr, ThresholdRef):
        if name in thresholds:
            return thresholds.value(name)
        raise EvaluationError(f"threshold {name!r} is not defined", name=name)
    if name in snapshot:
        return snapshot.get(name)
    if name in thresholds:
        return thresholds.value(name)
    raise EvaluationError(f"variable {name!r} missing from snapshot", name=name)


def _as_number(value, context: str) -> float:
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, (int, float)):
        return float(value)
    raise EvaluationError(f"{context} is not numeric: {value!r}")


def _as_bool(value, context: str) -> bool:
    if isinstance(value, bool):
        return value
    raise EvaluationError(f"{context} is not boolean: {value!r}")


def _compare(op: str, left: float, right: float) -> bool:
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    if op == "==":
        return abs(left - right) <= EQUALITY_TOLERANCE
    if op == "!=":
        return abs(left - right) > EQUALITY_TOLERANCE
    raise EvaluationError(f"unsupported comparator {op!r}")


def _eval(expr: RuleExpr, snapshot: Snapshot, thresholds: ThresholdSet):
    if isinstance(expr, NumberLiteral):
        return expr.value
    if isinstance(expr, BoolLiteral):
        return expr.value
    if isinstance(expr, (VarRef, ThresholdRef)):
        return _lookup(expr, snapshot, thresholds)
    if isinstance(expr, Comparison):
        left = _as_number(_eval(expr.left, snapshot, thresholds), "comparison operand")
        right = _as_number(_eval(expr.right, snapshot, thresholds), "comparison operand")
        return _compare(expr.op, left, right)
    if isinstance(expr, Not):
        return not _as_bool(_eval(expr.operand, snapshot, thresholds), "'not' operand")
    # and/or short-circuit: a variable missing from the right operand is only
    # reported if that operand is actually reached.
    if isinstance(expr, And):
        if not _as_bool(_eval(expr.left, snapshot, thresholds), "'and' operand"):
            return False
        return _as_bool(_eval(expr.right, snapshot, thresholds), "'and' operand")
    if isinstance(expr, Or):
        if _as_bool(_eval(expr.left, snapshot, thresholds), "'or' operand"):
            return True
        return _as_bool(_eval(expr.right, snapshot, thresholds), "'or' operand")
    if isinstance(expr, Select):
        if _as_bool(_eval(expr.condition, snapshot, thresholds), "selection condition"):
            return _eval(expr.value, snapshot, thresholds)
        return _eval(expr.orelse, snapshot, thresholds)
    raise TypeError(f"not a rule expression: {expr!r}")


def eval_bool(expr: RuleExpr, snapshot: Snapshot, thresholds: ThresholdSet = EMPTY_THRESHOLDS) -> bool:
    """Evaluate a boolean-kind rule; strict boolean semantics."""
    result = _eval(expr, snapshot, thresholds)
    return _as_bool(result, "rule result")


def eval_real(expr: RuleExpr, snapshot: Snapshot, thresholds: ThresholdSet = EMPTY_THRESHOLDS) -> float:
    """Evaluate a real-kind criteria formula; -1 is the usual no-clause sentinel."""
    result = _eval(expr, snapshot, thresholds)
    return _as_number(result, "formula result")
